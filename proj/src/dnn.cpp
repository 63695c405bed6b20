#include "epf/dnn.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "epf/error.hpp"
#include "epf/rng.hpp"

namespace epf::dnn {

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::tanh:
      return z.array().tanh();
    case Activation::sigmoid:
      return (1.0 / (1.0 + (-z.array()).exp())).matrix();
  }
  return z;
}

// derivative expressed through the activation value
Eigen::MatrixXd activate_grad(const Eigen::MatrixXd& a_val, Activation a) {
  switch (a) {
    case Activation::relu:
      return (a_val.array() > 0.0).cast<double>();
    case Activation::tanh:
      return (1.0 - a_val.array().square()).matrix();
    case Activation::sigmoid:
      return (a_val.array() * (1.0 - a_val.array())).matrix();
  }
  return Eigen::MatrixXd::Ones(a_val.rows(), a_val.cols());
}

Eigen::MatrixXd init_matrix(int rows, int cols, Init kind, CounterRng& rng) {
  Eigen::MatrixXd w(rows, cols);
  double fan = double(rows + cols);
  if (kind == Init::scaled_uniform) {
    double limit = std::sqrt(6.0 / fan);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i)
        w(i, j) = limit * (2.0 * rng.uniform() - 1.0);
  } else {
    double sd = std::sqrt(2.0 / fan);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) w(i, j) = sd * rng.normal();
  }
  return w;
}

struct ForwardCache {
  Eigen::MatrixXd h1, a1; // post-activation, post-dropout
  Eigen::MatrixXd h2, a2;
  Eigen::MatrixXd out;
};

ForwardCache forward_cached(const MlpParams& p, const Eigen::MatrixXd& x,
                            Mode mode, const DropoutMask* mask) {
  if (x.cols() != p.W1.cols())
    fail(Errc::invalid_argument,
         "forward: input width " + std::to_string(x.cols()) +
             " does not match W1 (" + std::to_string(p.W1.cols()) + ")");
  bool drop = mode == Mode::train && p.config.dropout > 0.0;
  if (drop && !mask)
    fail(Errc::invalid_argument, "forward: train mode needs a dropout mask");
  double keep = 1.0 - p.config.dropout;
  ForwardCache c;
  c.h1 = activate((x * p.W1.transpose()).rowwise() + p.b1.transpose(),
                  p.config.activation);
  c.a1 = drop ? (c.h1.cwiseProduct(mask->m1) / keep).eval() : c.h1;
  c.h2 = activate((c.a1 * p.W2.transpose()).rowwise() + p.b2.transpose(),
                  p.config.activation);
  c.a2 = drop ? (c.h2.cwiseProduct(mask->m2) / keep).eval() : c.h2;
  c.out = (c.a2 * p.W3.transpose()).rowwise() + p.b3.transpose();
  return c;
}

std::uint64_t config_tag(const HyperConfig& c) {
  std::string s = std::to_string(c.n1) + "|" + std::to_string(c.n2) + "|" +
                  to_string(c.activation) + "|" + to_string(c.init);
  for (const auto& [k, v] : c.include_variable) s += "|" + k + (v ? "1" : "0");
  return fnv1a64(s);
}

std::vector<int> selected_columns(const features::DesignMatrix& design,
                                  const HyperConfig& config,
                                  std::vector<std::string>* names) {
  // day-level inputs: everything before the hour block, minus switched-off
  // base-variable lag groups
  std::vector<int> cols;
  int shared = design.hour_block_begin();
  for (int j = 0; j < shared; ++j) {
    const std::string& col = design.columns[std::size_t(j)];
    bool keep = true;
    for (const auto& [variable, on] : config.include_variable) {
      if (on) continue;
      if (col.rfind(variable + "_", 0) == 0) {
        keep = false;
        break;
      }
    }
    if (keep) cols.push_back(j);
  }
  if (cols.empty())
    fail(Errc::invalid_argument, "dnn: feature selection removed every input");
  if (names) {
    names->clear();
    for (int j : cols) names->push_back(design.columns[std::size_t(j)]);
  }
  return cols;
}

} // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
  }
  return "relu";
}

std::string to_string(Init i) {
  return i == Init::scaled_uniform ? "scaled_uniform" : "scaled_normal";
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "sigmoid") return Activation::sigmoid;
  fail(Errc::parse, "unknown activation '" + s + "'");
}

Init init_from_string(const std::string& s) {
  if (s == "scaled_uniform") return Init::scaled_uniform;
  if (s == "scaled_normal") return Init::scaled_normal;
  fail(Errc::parse, "unknown init '" + s + "'");
}

Eigen::MatrixXd forward(const MlpParams& params, const Eigen::MatrixXd& x,
                        Mode mode, const DropoutMask* mask) {
  return forward_cached(params, x, mode, mask).out;
}

std::pair<double, Gradients> loss_and_gradient(const MlpParams& p,
                                               const Eigen::MatrixXd& x,
                                               const Eigen::MatrixXd& y,
                                               const DropoutMask* mask) {
  if (x.rows() == 0) fail(Errc::invalid_argument, "loss_and_gradient: empty batch");
  if (y.rows() != x.rows() || y.cols() != 24)
    fail(Errc::invalid_argument, "loss_and_gradient: target shape mismatch");
  Mode mode = mask ? Mode::train : Mode::eval;
  bool drop = mode == Mode::train && p.config.dropout > 0.0;
  double keep = 1.0 - p.config.dropout;
  ForwardCache c = forward_cached(p, x, mode, mask);

  const double denom = double(x.rows()) * 24.0;
  Eigen::MatrixXd diff = c.out - y;
  double mse = diff.squaredNorm() / denom;

  Gradients g;
  Eigen::MatrixXd delta3 = 2.0 * diff / denom; // n x 24
  g.W3 = delta3.transpose() * c.a2;
  g.b3 = delta3.colwise().sum();

  Eigen::MatrixXd d_a2 = delta3 * p.W3; // n x n2
  if (drop) d_a2 = d_a2.cwiseProduct(mask->m2) / keep;
  Eigen::MatrixXd delta2 =
      d_a2.cwiseProduct(activate_grad(c.h2, p.config.activation));
  g.W2 = delta2.transpose() * c.a1;
  g.b2 = delta2.colwise().sum();

  Eigen::MatrixXd d_a1 = delta2 * p.W2; // n x n1
  if (drop) d_a1 = d_a1.cwiseProduct(mask->m1) / keep;
  Eigen::MatrixXd delta1 =
      d_a1.cwiseProduct(activate_grad(c.h1, p.config.activation));
  g.W1 = delta1.transpose() * x;
  g.b1 = delta1.colwise().sum();
  return {mse, std::move(g)};
}

TrainResult train(const features::DesignMatrix& design,
                  const HyperConfig& config, std::uint64_t seed) {
  if (config.n1 < 1 || config.n2 < 1)
    fail(Errc::invalid_argument, "train: hidden widths must be >= 1");
  if (config.dropout < 0.0 || config.dropout > 0.5)
    fail(Errc::invalid_argument, "train: dropout must be in [0, 0.5]");

  MlpParams p;
  p.config = config;
  p.scaler = design.scaler;
  std::vector<int> cols = selected_columns(design, config, &p.input_columns);
  p.input_indices = cols;

  const int n_days = design.n_days();
  const int n_val = std::max(1, int(std::lround(0.1 * n_days)));
  const int n_train = n_days - n_val;
  if (n_train < 1)
    fail(Errc::invalid_argument, "train: calibration window too short");

  auto day_matrix = [&](int first_day, int count) {
    Eigen::MatrixXd x(count, cols.size());
    Eigen::MatrixXd y(count, 24);
    for (int d = 0; d < count; ++d) {
      Eigen::VectorXd full = design.day_input(first_day + d);
      for (std::size_t j = 0; j < cols.size(); ++j)
        x(d, Eigen::Index(j)) = full[cols[j]];
      y.row(d) = design.day_targets(first_day + d).transpose();
    }
    return std::make_pair(std::move(x), std::move(y));
  };
  auto [x_train, y_train] = day_matrix(0, n_train);
  auto [x_val, y_val] = day_matrix(n_train, n_val);

  CounterRng init_rng(seed, config_tag(config));
  const int in = int(cols.size());
  p.W1 = init_matrix(config.n1, in, config.init, init_rng);
  p.b1 = Eigen::VectorXd::Zero(config.n1);
  p.W2 = init_matrix(config.n2, config.n1, config.init, init_rng);
  p.b2 = Eigen::VectorXd::Zero(config.n2);
  p.W3 = init_matrix(24, config.n2, config.init, init_rng);
  p.b3 = Eigen::VectorXd::Zero(24);

  // Adam state
  auto zeros_like = [](const MlpParams& q) {
    Gradients g;
    g.W1 = Eigen::MatrixXd::Zero(q.W1.rows(), q.W1.cols());
    g.W2 = Eigen::MatrixXd::Zero(q.W2.rows(), q.W2.cols());
    g.W3 = Eigen::MatrixXd::Zero(q.W3.rows(), q.W3.cols());
    g.b1 = Eigen::VectorXd::Zero(q.b1.size());
    g.b2 = Eigen::VectorXd::Zero(q.b2.size());
    g.b3 = Eigen::VectorXd::Zero(q.b3.size());
    return g;
  };
  Gradients m = zeros_like(p), v = zeros_like(p);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  CounterRng mask_rng(seed, config_tag(config) ^ fnv1a64("dropout"));
  TrainResult result;
  result.params = p;
  result.best_validation_mse = std::numeric_limits<double>::infinity();
  int no_improve = 0;

  for (int epoch = 1; epoch <= config.epochs_max; ++epoch) {
    DropoutMask mask;
    const DropoutMask* mask_ptr = nullptr;
    if (config.dropout > 0.0) {
      mask.m1.resize(x_train.rows(), config.n1);
      mask.m2.resize(x_train.rows(), config.n2);
      for (int i = 0; i < mask.m1.rows(); ++i)
        for (int j = 0; j < mask.m1.cols(); ++j)
          mask.m1(i, j) = mask_rng.bernoulli(1.0 - config.dropout) ? 1.0 : 0.0;
      for (int i = 0; i < mask.m2.rows(); ++i)
        for (int j = 0; j < mask.m2.cols(); ++j)
          mask.m2(i, j) = mask_rng.bernoulli(1.0 - config.dropout) ? 1.0 : 0.0;
      mask_ptr = &mask;
    }

    auto [loss, g] = loss_and_gradient(p, x_train, y_train, mask_ptr);
    if (!std::isfinite(loss))
      fail(Errc::numeric,
           "train: loss diverged at epoch " + std::to_string(epoch));

    double corr1 = 1.0 - std::pow(beta1, epoch);
    double corr2 = 1.0 - std::pow(beta2, epoch);
    auto adam = [&](Eigen::MatrixXd& w, Eigen::MatrixXd& mw,
                    Eigen::MatrixXd& vw, const Eigen::MatrixXd& gw) {
      mw = beta1 * mw + (1.0 - beta1) * gw;
      vw = beta2 * vw + (1.0 - beta2) * gw.cwiseProduct(gw);
      w.array() -= config.learning_rate * (mw.array() / corr1) /
                   ((vw.array() / corr2).sqrt() + eps);
    };
    auto adam_v = [&](Eigen::VectorXd& w, Eigen::VectorXd& mw,
                      Eigen::VectorXd& vw, const Eigen::VectorXd& gw) {
      mw = beta1 * mw + (1.0 - beta1) * gw;
      vw = beta2 * vw + (1.0 - beta2) * gw.cwiseProduct(gw);
      w.array() -= config.learning_rate * (mw.array() / corr1) /
                   ((vw.array() / corr2).sqrt() + eps);
    };
    adam(p.W1, m.W1, v.W1, g.W1);
    adam(p.W2, m.W2, v.W2, g.W2);
    adam(p.W3, m.W3, v.W3, g.W3);
    adam_v(p.b1, m.b1, v.b1, g.b1);
    adam_v(p.b2, m.b2, v.b2, g.b2);
    adam_v(p.b3, m.b3, v.b3, g.b3);

    Eigen::MatrixXd val_out = forward(p, x_val, Mode::eval);
    double val_mse = (val_out - y_val).squaredNorm() /
                     (double(x_val.rows()) * 24.0);
    if (!std::isfinite(val_mse))
      fail(Errc::numeric,
           "train: validation loss diverged at epoch " + std::to_string(epoch));
    result.epochs_run = epoch;
    if (val_mse < result.best_validation_mse) {
      result.best_validation_mse = val_mse;
      result.params = p;
      no_improve = 0;
    } else {
      ++no_improve;
    }
    if (no_improve >= config.patience) break;
  }
  return result;
}

Eigen::VectorXd predict_dnn(const MlpParams& params,
                            const Eigen::MatrixXd& day_rows) {
  if (day_rows.rows() != 24)
    fail(Errc::invalid_argument, "predict_dnn: expected 24 rows");
  if (day_rows.cols() != params.scaler.x_min.size())
    fail(Errc::invalid_argument,
         "predict_dnn: rows have " + std::to_string(day_rows.cols()) +
             " columns, params were fitted on " +
             std::to_string(params.scaler.x_min.size()));
  // the non-hour columns are shared across the day's 24 rows
  Eigen::MatrixXd x(1, params.input_indices.size());
  for (std::size_t j = 0; j < params.input_indices.size(); ++j) {
    int idx = params.input_indices[j];
    if (idx < 0 || idx >= int(day_rows.cols()))
      fail(Errc::invalid_argument, "predict_dnn: input index out of range");
    x(0, Eigen::Index(j)) = day_rows(0, idx);
  }
  Eigen::MatrixXd out = forward(params, x, Mode::eval);
  Eigen::VectorXd prices(24);
  for (int h = 0; h < 24; ++h)
    prices[h] = features::inverse_target(out(0, h), params.scaler);
  return prices;
}

const features::DesignMatrix& DesignPair::pick(features::ScalerKind kind) const {
  const features::DesignMatrix* d =
      kind == features::ScalerKind::norm ? norm : norm1;
  if (!d) fail(Errc::invalid_argument, "design pair is missing a variant");
  return *d;
}

namespace {

std::vector<double> flat(const Eigen::MatrixXd& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

Eigen::MatrixXd unflat(const std::vector<double>& v, int rows, int cols) {
  if (int(v.size()) != rows * cols)
    fail(Errc::parse, "params json: weight block has wrong length");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

} // namespace

std::string params_to_json(const MlpParams& p) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["kind"] = "dnn_params";
  doc["shapes"] = {int(p.W1.cols()), p.config.n1, p.config.n2, 24};
  doc["W1"] = flat(p.W1);
  doc["b1"] = flat(p.b1);
  doc["W2"] = flat(p.W2);
  doc["b2"] = flat(p.b2);
  doc["W3"] = flat(p.W3);
  doc["b3"] = flat(p.b3);
  nlohmann::json inc = nlohmann::json::object();
  for (const auto& [k, v] : p.config.include_variable) inc[k] = v;
  doc["config"] = {{"n1", p.config.n1},
                   {"n2", p.config.n2},
                   {"activation", to_string(p.config.activation)},
                   {"init", to_string(p.config.init)},
                   {"learning_rate", p.config.learning_rate},
                   {"dropout", p.config.dropout},
                   {"transform", features::to_string(p.config.transform)},
                   {"include_variable", inc},
                   {"epochs_max", p.config.epochs_max},
                   {"patience", p.config.patience}};
  doc["scaler"] = {{"kind", features::to_string(p.scaler.kind)},
                   {"x_min", flat(p.scaler.x_min)},
                   {"x_max", flat(p.scaler.x_max)},
                   {"y_min", p.scaler.y_min},
                   {"y_max", p.scaler.y_max}};
  doc["input_columns"] = p.input_columns;
  doc["input_indices"] = p.input_indices;
  return doc.dump(2);
}

MlpParams params_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("params json: ") + e.what());
  }
  if (doc.value("kind", "") != "dnn_params")
    fail(Errc::parse, "params json: not a dnn_params document");
  MlpParams p;
  const auto& jc = doc.at("config");
  p.config.n1 = jc.at("n1").get<int>();
  p.config.n2 = jc.at("n2").get<int>();
  p.config.activation =
      activation_from_string(jc.at("activation").get<std::string>());
  p.config.init = init_from_string(jc.at("init").get<std::string>());
  p.config.learning_rate = jc.at("learning_rate").get<double>();
  p.config.dropout = jc.at("dropout").get<double>();
  p.config.transform =
      features::scaler_kind_from_string(jc.at("transform").get<std::string>());
  for (auto it = jc.at("include_variable").begin();
       it != jc.at("include_variable").end(); ++it)
    p.config.include_variable[it.key()] = it.value().get<bool>();
  p.config.epochs_max = jc.at("epochs_max").get<int>();
  p.config.patience = jc.at("patience").get<int>();

  auto shapes = doc.at("shapes").get<std::vector<int>>();
  if (shapes.size() != 4 || shapes[3] != 24)
    fail(Errc::parse, "params json: bad shapes");
  int in = shapes[0];
  p.W1 = unflat(doc.at("W1").get<std::vector<double>>(), p.config.n1, in);
  p.W2 = unflat(doc.at("W2").get<std::vector<double>>(), p.config.n2,
                p.config.n1);
  p.W3 = unflat(doc.at("W3").get<std::vector<double>>(), 24, p.config.n2);
  auto vec = [&](const char* key, int len) {
    auto v = doc.at(key).get<std::vector<double>>();
    if (int(v.size()) != len)
      fail(Errc::parse, "params json: bias block has wrong length");
    return Eigen::Map<const Eigen::VectorXd>(v.data(), len).eval();
  };
  p.b1 = vec("b1", p.config.n1);
  p.b2 = vec("b2", p.config.n2);
  p.b3 = vec("b3", 24);

  const auto& js = doc.at("scaler");
  p.scaler.kind =
      features::scaler_kind_from_string(js.at("kind").get<std::string>());
  auto x_min = js.at("x_min").get<std::vector<double>>();
  auto x_max = js.at("x_max").get<std::vector<double>>();
  p.scaler.x_min =
      Eigen::Map<const Eigen::VectorXd>(x_min.data(), Eigen::Index(x_min.size()));
  p.scaler.x_max =
      Eigen::Map<const Eigen::VectorXd>(x_max.data(), Eigen::Index(x_max.size()));
  p.scaler.y_min = js.at("y_min").get<double>();
  p.scaler.y_max = js.at("y_max").get<double>();
  p.input_columns = doc.at("input_columns").get<std::vector<std::string>>();
  p.input_indices = doc.at("input_indices").get<std::vector<int>>();
  return p;
}

} // namespace epf::dnn
