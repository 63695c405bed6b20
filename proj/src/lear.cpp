#include "epf/lear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "epf/error.hpp"
#include "epf/rng.hpp"

namespace epf::lear {

namespace {

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

// Gram-form solver state: everything coordinate descent touches is
// expressed through G = X'X, Xy = X'y, s = X'1.
struct GramProblem {
  Eigen::MatrixXd G;
  Eigen::VectorXd Xy;
  Eigen::VectorXd col_sum; // X'1
  double y_sum = 0.0;
  double y_sq = 0.0;
  int n = 0;

  static GramProblem build(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    GramProblem g;
    g.G.noalias() = X.transpose() * X;
    g.Xy.noalias() = X.transpose() * y;
    g.col_sum = X.colwise().sum();
    g.y_sum = y.sum();
    g.y_sq = y.squaredNorm();
    g.n = int(X.rows());
    return g;
  }

  void subtract(const Eigen::MatrixXd& Xout, const Eigen::VectorXd& yout) {
    G.noalias() -= Xout.transpose() * Xout;
    Xy.noalias() -= Xout.transpose() * yout;
    col_sum -= Xout.colwise().sum();
    y_sum -= yout.sum();
    y_sq -= yout.squaredNorm();
    n -= int(Xout.rows());
  }
};

class CdSolver {
public:
  explicit CdSolver(const GramProblem& g) : g_(g), p_(int(g.G.cols())) {
    beta_ = Eigen::VectorXd::Zero(p_);
    g_beta_ = Eigen::VectorXd::Zero(p_);
    intercept_ = g_.n > 0 ? g_.y_sum / g_.n : 0.0;
  }

  void warm_start(const Eigen::VectorXd& beta) {
    beta_ = beta;
    g_beta_.noalias() = g_.G * beta_;
    update_intercept();
  }

  // 2 X_j' r for all j, with r = y - X beta - intercept
  Eigen::VectorXd gradient() const {
    return 2.0 * (g_.Xy - g_beta_ - intercept_ * g_.col_sum);
  }

  void solve(double lambda, const CdOptions& opts) {
    int sweeps = 0;
    while (true) {
      sweep_all(lambda);
      // polish the active set before paying for a full KKT check
      for (int inner = 0; inner < 100; ++inner)
        if (sweep_active(lambda) < 0.1 * opts.tol) break;
      ++sweeps;
      if (kkt_violation(lambda) <= opts.tol) return;
      if (sweeps >= opts.max_iter)
        fail(Errc::numeric,
             "coordinate descent did not converge after " +
                 std::to_string(sweeps) + " sweeps (duality gap " +
                 std::to_string(duality_gap(lambda)) + ")");
    }
  }

  double kkt_violation(double lambda) const {
    Eigen::VectorXd grad = gradient();
    double worst = 0.0;
    for (int j = 0; j < p_; ++j) {
      if (g_.G(j, j) <= 0.0) continue; // constant-zero column stays at 0
      double v = beta_[j] != 0.0
                     ? std::abs(grad[j] - lambda * (beta_[j] > 0 ? 1.0 : -1.0))
                     : std::max(0.0, std::abs(grad[j]) - lambda);
      worst = std::max(worst, v);
    }
    worst = std::max(worst, 2.0 * std::abs(mean_residual()) * g_.n);
    return worst;
  }

  double duality_gap(double lambda) const {
    // primal on the intercept-centered problem; the dual point is the
    // residual scaled into the feasible set
    double rss = residual_sq();
    double primal = rss + lambda * beta_.lpNorm<1>();
    Eigen::VectorXd grad = gradient(); // 2 X' r
    double inf_norm = grad.lpNorm<Eigen::Infinity>();
    double scale = inf_norm > lambda && inf_norm > 0.0 ? lambda / inf_norm : 1.0;
    // D(theta) = theta' y_c - |theta|^2 / 4 with theta = 2 c r
    double r_yc = rss + beta_.dot(grad) / 2.0; // r'(y - b) = r'r + r'X beta
    double dual = 2.0 * scale * r_yc - scale * scale * rss;
    return primal - dual;
  }

  double residual_sq() const {
    double v = g_.y_sq + beta_.dot(g_beta_) +
               double(g_.n) * intercept_ * intercept_ -
               2.0 * beta_.dot(g_.Xy) - 2.0 * intercept_ * g_.y_sum +
               2.0 * intercept_ * g_.col_sum.dot(beta_);
    return std::max(v, 0.0);
  }

  const Eigen::VectorXd& beta() const { return beta_; }
  double intercept() const { return intercept_; }

private:
  double mean_residual() const {
    if (g_.n == 0) return 0.0;
    return (g_.y_sum - g_.col_sum.dot(beta_) - g_.n * intercept_) / g_.n;
  }

  void update_intercept() {
    double next = g_.n > 0
                      ? (g_.y_sum - g_.col_sum.dot(beta_)) / g_.n
                      : 0.0;
    intercept_ = next;
  }

  double update_one(int j, double lambda) {
    double diag = g_.G(j, j);
    if (diag <= 0.0) return 0.0;
    double old = beta_[j];
    // rho = X_j' (r + X_j beta_j)
    double rho = g_.Xy[j] - g_beta_[j] + diag * old -
                 intercept_ * g_.col_sum[j];
    double next = soft_threshold(2.0 * rho, lambda) / (2.0 * diag);
    if (next != old) {
      g_beta_ += g_.G.col(j) * (next - old);
      beta_[j] = next;
    }
    return std::abs(next - old) * diag;
  }

  void sweep_all(double lambda) {
    for (int j = 0; j < p_; ++j) update_one(j, lambda);
    update_intercept();
  }

  double sweep_active(double lambda) {
    double max_move = 0.0;
    for (int j = 0; j < p_; ++j)
      if (beta_[j] != 0.0) max_move = std::max(max_move, update_one(j, lambda));
    update_intercept();
    return max_move;
  }

  const GramProblem& g_;
  int p_;
  Eigen::VectorXd beta_;
  Eigen::VectorXd g_beta_; // G * beta, maintained incrementally
  double intercept_ = 0.0;
};

std::vector<Date> distinct_days(const std::vector<DayHourIndex>& rows) {
  std::vector<Date> days;
  for (const auto& r : rows)
    if (days.empty() || days.back() != r.day) days.push_back(r.day);
  return days;
}

} // namespace

double lambda_max(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Eigen::VectorXd centered = y.array() - y.mean();
  return (2.0 * (X.transpose() * centered)).lpNorm<Eigen::Infinity>();
}

double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& beta, double intercept,
                       double lambda) {
  Eigen::VectorXd r = y - X * beta;
  r.array() -= intercept;
  return r.squaredNorm() + lambda * beta.lpNorm<1>();
}

CdSolution coordinate_descent(const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y, double lambda,
                              const CdOptions& opts) {
  if (X.rows() != y.size())
    fail(Errc::invalid_argument, "coordinate_descent: X and y disagree on n");
  if (lambda < 0.0)
    fail(Errc::invalid_argument, "coordinate_descent: lambda must be >= 0");
  GramProblem g = GramProblem::build(X, y);
  CdSolver solver(g);
  solver.solve(lambda, opts);
  return CdSolution{solver.beta(), solver.intercept()};
}

CvPlan make_cv_plan(const std::vector<Date>& days, int k, std::uint64_t seed,
                    const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (k < 2) fail(Errc::invalid_argument, "make_cv_plan: k must be >= 2");
  if (int(days.size()) < k)
    fail(Errc::invalid_argument,
         "make_cv_plan: " + std::to_string(days.size()) + " days for " +
             std::to_string(k) + " folds");
  CvPlan plan;
  plan.k = k;
  plan.seed = seed;

  std::vector<Date> shuffled = days;
  CounterRng rng(seed, fnv1a64("cv-folds"));
  for (std::size_t i = shuffled.size(); i > 1; --i)
    std::swap(shuffled[i - 1], shuffled[rng.below(i)]);
  for (std::size_t i = 0; i < shuffled.size(); ++i)
    plan.fold_assignment[shuffled[i]] = int(i % std::size_t(k));

  double lmax = lambda_max(X, y);
  if (!(lmax > 0.0)) lmax = 1.0; // degenerate flat target
  const int n_grid = 100;
  plan.lambda_grid.resize(n_grid);
  double ratio = std::pow(1e-3, 1.0 / (n_grid - 1));
  double lam = lmax;
  for (int i = 0; i < n_grid; ++i, lam *= ratio) plan.lambda_grid[i] = lam;
  return plan;
}

CvResult cv_select_lambda(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          const std::vector<DayHourIndex>& row_index,
                          const CvPlan& plan, const CdOptions& opts) {
  if (int(row_index.size()) != X.rows())
    fail(Errc::invalid_argument, "cv_select_lambda: row index size mismatch");
  const int n_grid = int(plan.lambda_grid.size());
  std::vector<double> sum_mse(std::size_t(n_grid), 0.0);
  std::vector<int> fold_sizes(std::size_t(plan.k), 0);

  GramProblem full = GramProblem::build(X, y);

  for (int fold = 0; fold < plan.k; ++fold) {
    std::vector<int> held_rows;
    for (int i = 0; i < int(row_index.size()); ++i) {
      auto it = plan.fold_assignment.find(row_index[std::size_t(i)].day);
      if (it == plan.fold_assignment.end())
        fail(Errc::invalid_argument,
             "cv_select_lambda: day " +
                 row_index[std::size_t(i)].day.to_string() +
                 " has no fold assignment");
      if (it->second == fold) held_rows.push_back(i);
    }
    if (held_rows.empty())
      fail(Errc::invalid_argument,
           "cv_select_lambda: fold " + std::to_string(fold) + " is empty");
    fold_sizes[std::size_t(fold)] = int(held_rows.size());

    Eigen::MatrixXd X_out(held_rows.size(), X.cols());
    Eigen::VectorXd y_out(held_rows.size());
    for (std::size_t r = 0; r < held_rows.size(); ++r) {
      X_out.row(Eigen::Index(r)) = X.row(held_rows[r]);
      y_out[Eigen::Index(r)] = y[held_rows[r]];
    }

    GramProblem train = full;
    train.subtract(X_out, y_out);
    CdSolver solver(train);
    for (int gi = 0; gi < n_grid; ++gi) {
      try {
        solver.solve(plan.lambda_grid[std::size_t(gi)], opts);
      } catch (const Error& e) {
        fail(e.code(), "cv fold " + std::to_string(fold) + ", lambda " +
                           std::to_string(plan.lambda_grid[std::size_t(gi)]) +
                           ": " + e.what());
      }
      Eigen::VectorXd pred = X_out * solver.beta();
      pred.array() += solver.intercept();
      sum_mse[std::size_t(gi)] += (pred - y_out).squaredNorm();
    }
  }

  CvResult result;
  result.cv_curve.resize(std::size_t(n_grid));
  double total_rows = double(std::accumulate(fold_sizes.begin(),
                                             fold_sizes.end(), 0));
  for (int gi = 0; gi < n_grid; ++gi)
    result.cv_curve[std::size_t(gi)] = sum_mse[std::size_t(gi)] / total_rows;

  // ties break toward the larger lambda: first index wins on the
  // descending grid
  std::size_t best = 0;
  for (std::size_t gi = 1; gi < result.cv_curve.size(); ++gi)
    if (result.cv_curve[gi] < result.cv_curve[best]) best = gi;
  result.lambda_index = best;
  result.lambda_star = plan.lambda_grid[best];
  return result;
}

LassoFit fit_lear(const features::DesignMatrix& design, const CvPlan& plan,
                  const CdOptions& opts) {
  CvResult cv = cv_select_lambda(design.X, design.y, design.row_index, plan,
                                 opts);
  GramProblem g = GramProblem::build(design.X, design.y);
  CdSolver solver(g);
  // warm along the grid down to the selected point
  for (std::size_t gi = 0; gi <= cv.lambda_index; ++gi)
    solver.solve(plan.lambda_grid[gi], opts);

  LassoFit fit;
  fit.beta = solver.beta();
  fit.intercept = solver.intercept();
  fit.lambda = cv.lambda_star;
  for (int j = 0; j < fit.beta.size(); ++j)
    if (fit.beta[j] != 0.0) fit.active_set.push_back(j);
  fit.scaler = design.scaler;
  fit.columns = design.columns;
  fit.groups = design.groups;
  return fit;
}

Eigen::VectorXd predict_lear(const LassoFit& fit,
                             const Eigen::MatrixXd& day_rows) {
  if (day_rows.cols() != fit.beta.size())
    fail(Errc::invalid_argument,
         "predict_lear: fit has " + std::to_string(fit.beta.size()) +
             " columns, rows have " + std::to_string(day_rows.cols()));
  Eigen::VectorXd normalized = day_rows * fit.beta;
  normalized.array() += fit.intercept;
  Eigen::VectorXd out(normalized.size());
  for (int i = 0; i < out.size(); ++i)
    out[i] = features::inverse_target(normalized[i], fit.scaler);
  return out;
}

std::string fit_to_json(const LassoFit& fit,
                        const std::vector<Date>& served_days) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["kind"] = "lear_fit";
  doc["label"] = fit.config_label;
  doc["lambda"] = fit.lambda;
  doc["intercept"] = fit.intercept;
  doc["columns"] = fit.columns;
  doc["groups"] = fit.groups;
  doc["beta"] = std::vector<double>(fit.beta.data(),
                                    fit.beta.data() + fit.beta.size());
  doc["scaler"] = {
      {"kind", features::to_string(fit.scaler.kind)},
      {"x_min", std::vector<double>(fit.scaler.x_min.data(),
                                    fit.scaler.x_min.data() +
                                        fit.scaler.x_min.size())},
      {"x_max", std::vector<double>(fit.scaler.x_max.data(),
                                    fit.scaler.x_max.data() +
                                        fit.scaler.x_max.size())},
      {"y_min", fit.scaler.y_min},
      {"y_max", fit.scaler.y_max}};
  doc["covariates"] = {{"target_zone", fit.covariates.target_zone},
                       {"base_variables", fit.covariates.base_variables},
                       {"neighbor_zones", fit.covariates.neighbor_price_zones},
                       {"label", fit.covariates.label}};
  std::vector<std::string> days;
  days.reserve(served_days.size());
  for (Date d : served_days) days.push_back(d.to_string());
  doc["served_days"] = days;
  return doc.dump(2);
}

LassoFit fit_from_json(const std::string& json_text,
                       std::vector<Date>* served_days) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("fit json: ") + e.what());
  }
  if (doc.value("kind", "") != "lear_fit")
    fail(Errc::parse, "fit json: not a lear_fit document");
  LassoFit fit;
  fit.config_label = doc.value("label", "");
  fit.lambda = doc.at("lambda").get<double>();
  fit.intercept = doc.at("intercept").get<double>();
  fit.columns = doc.at("columns").get<std::vector<std::string>>();
  fit.groups = doc.at("groups").get<std::vector<std::string>>();
  auto beta = doc.at("beta").get<std::vector<double>>();
  if (beta.size() != fit.columns.size() ||
      fit.groups.size() != fit.columns.size())
    fail(Errc::parse, "fit json: beta/columns/groups lengths disagree");
  fit.beta = Eigen::Map<Eigen::VectorXd>(beta.data(), Eigen::Index(beta.size()));
  for (int j = 0; j < fit.beta.size(); ++j)
    if (fit.beta[j] != 0.0) fit.active_set.push_back(j);
  const auto& js = doc.at("scaler");
  fit.scaler.kind =
      features::scaler_kind_from_string(js.at("kind").get<std::string>());
  auto x_min = js.at("x_min").get<std::vector<double>>();
  auto x_max = js.at("x_max").get<std::vector<double>>();
  fit.scaler.x_min =
      Eigen::Map<Eigen::VectorXd>(x_min.data(), Eigen::Index(x_min.size()));
  fit.scaler.x_max =
      Eigen::Map<Eigen::VectorXd>(x_max.data(), Eigen::Index(x_max.size()));
  fit.scaler.y_min = js.at("y_min").get<double>();
  fit.scaler.y_max = js.at("y_max").get<double>();
  const auto& jc = doc.at("covariates");
  fit.covariates.target_zone = jc.at("target_zone").get<std::string>();
  fit.covariates.base_variables =
      jc.at("base_variables").get<std::vector<std::string>>();
  fit.covariates.neighbor_price_zones =
      jc.at("neighbor_zones").get<std::vector<std::string>>();
  fit.covariates.label = jc.at("label").get<std::string>();
  if (served_days) {
    served_days->clear();
    for (const auto& s : doc.value("served_days", std::vector<std::string>{})) {
      auto d = Date::parse(s);
      if (!d) fail(Errc::parse, "fit json: bad served day '" + s + "'");
      served_days->push_back(*d);
    }
  }
  return fit;
}

} // namespace epf::lear
