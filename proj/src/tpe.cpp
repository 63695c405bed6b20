#include <algorithm>
#include <cmath>
#include <limits>

#include "epf/dnn.hpp"
#include "epf/error.hpp"
#include "epf/rng.hpp"

namespace epf::dnn {

namespace {

constexpr double kLog2 = 0.69314718055994530942;

// continuous search coordinates: log2(n1), log2(n2), log10(lr), dropout
struct Point {
  double c[4];
  int activation;
  int init;
  int transform;
  std::vector<int> include; // 0/1 per selectable variable
};

struct Bounds {
  double lo[4], hi[4];
};

Bounds bounds_of(const TpeSpace& s) {
  Bounds b;
  b.lo[0] = std::log2(double(s.n_min));
  b.hi[0] = std::log2(double(s.n_max));
  b.lo[1] = b.lo[0];
  b.hi[1] = b.hi[0];
  b.lo[2] = std::log10(s.lr_min);
  b.hi[2] = std::log10(s.lr_max);
  b.lo[3] = 0.0;
  b.hi[3] = s.dropout_max;
  return b;
}

Point random_point(const TpeSpace& s, const Bounds& b, CounterRng& rng) {
  Point p;
  for (int d = 0; d < 4; ++d)
    p.c[d] = b.lo[d] + (b.hi[d] - b.lo[d]) * rng.uniform();
  p.activation = int(rng.below(s.activations.size()));
  p.init = int(rng.below(s.inits.size()));
  p.transform = int(rng.below(s.transforms.size()));
  p.include.resize(s.selectable_variables.size());
  bool any = false;
  for (auto& bit : p.include) {
    bit = rng.bernoulli(0.5) ? 1 : 0;
    any = any || bit;
  }
  if (!p.include.empty() && !any)
    p.include[rng.below(p.include.size())] = 1;
  return p;
}

HyperConfig to_config(const Point& p, const TpeSpace& s) {
  HyperConfig c;
  c.n1 = std::clamp(int(std::lround(std::exp2(p.c[0]))), s.n_min, s.n_max);
  c.n2 = std::clamp(int(std::lround(std::exp2(p.c[1]))), s.n_min, s.n_max);
  c.learning_rate = std::pow(10.0, p.c[2]);
  c.dropout = p.c[3];
  c.activation = s.activations[std::size_t(p.activation)];
  c.init = s.inits[std::size_t(p.init)];
  c.transform = s.transforms[std::size_t(p.transform)];
  for (std::size_t i = 0; i < s.selectable_variables.size(); ++i)
    c.include_variable[s.selectable_variables[i]] = p.include[i] != 0;
  c.epochs_max = s.epochs_max;
  c.patience = s.patience;
  return c;
}

// kernel density over one continuous dimension, bandwidth from the
// observed spread with a floor tied to the range
struct Kde {
  std::vector<double> centers;
  double bandwidth = 1.0;

  static Kde fit(const std::vector<double>& xs, double range) {
    Kde k;
    k.centers = xs;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= double(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= double(xs.size());
    double sd = std::sqrt(var);
    k.bandwidth = std::max(1.06 * sd * std::pow(double(xs.size()), -0.2),
                           0.05 * range);
    return k;
  }

  double density(double x) const {
    double sum = 0.0;
    for (double c : centers) {
      double z = (x - c) / bandwidth;
      sum += std::exp(-0.5 * z * z);
    }
    return sum / (double(centers.size()) * bandwidth * 2.50662827463100050242);
  }

  double sample(CounterRng& rng, double lo, double hi) const {
    double c = centers[rng.below(centers.size())];
    double x = c + bandwidth * rng.normal();
    return std::clamp(x, lo, hi);
  }
};

// category frequencies with Laplace smoothing
struct Categorical {
  std::vector<double> prob;

  static Categorical fit(const std::vector<int>& xs, int k) {
    Categorical c;
    c.prob.assign(std::size_t(k), 1.0); // +1 smoothing
    for (int x : xs) c.prob[std::size_t(x)] += 1.0;
    double total = 0.0;
    for (double p : c.prob) total += p;
    for (double& p : c.prob) p /= total;
    return c;
  }

  double density(int x) const { return prob[std::size_t(x)]; }

  int sample(CounterRng& rng) const {
    double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < prob.size(); ++i) {
      acc += prob[i];
      if (u < acc) return int(i);
    }
    return int(prob.size()) - 1;
  }
};

struct DensityModel {
  Kde cont[4];
  Categorical activation, init, transform;
  std::vector<Categorical> include;

  static DensityModel fit(const std::vector<Point>& points, const TpeSpace& s,
                          const Bounds& b) {
    DensityModel m;
    for (int d = 0; d < 4; ++d) {
      std::vector<double> xs;
      xs.reserve(points.size());
      for (const auto& p : points) xs.push_back(p.c[d]);
      m.cont[d] = Kde::fit(xs, b.hi[d] - b.lo[d]);
    }
    auto cats = [&](auto getter, int k) {
      std::vector<int> xs;
      xs.reserve(points.size());
      for (const auto& p : points) xs.push_back(getter(p));
      return Categorical::fit(xs, k);
    };
    m.activation = cats([](const Point& p) { return p.activation; },
                        int(s.activations.size()));
    m.init = cats([](const Point& p) { return p.init; }, int(s.inits.size()));
    m.transform = cats([](const Point& p) { return p.transform; },
                       int(s.transforms.size()));
    m.include.resize(s.selectable_variables.size());
    for (std::size_t i = 0; i < m.include.size(); ++i) {
      std::vector<int> xs;
      xs.reserve(points.size());
      for (const auto& p : points) xs.push_back(p.include[i]);
      m.include[i] = Categorical::fit(xs, 2);
    }
    return m;
  }

  double log_density(const Point& p) const {
    double ld = 0.0;
    for (int d = 0; d < 4; ++d)
      ld += std::log(std::max(cont[d].density(p.c[d]), 1e-300));
    ld += std::log(activation.density(p.activation));
    ld += std::log(init.density(p.init));
    ld += std::log(transform.density(p.transform));
    for (std::size_t i = 0; i < include.size(); ++i)
      ld += std::log(include[i].density(p.include[i]));
    return ld;
  }

  Point sample(const TpeSpace& s, const Bounds& b, CounterRng& rng) const {
    Point p;
    for (int d = 0; d < 4; ++d)
      p.c[d] = cont[d].sample(rng, b.lo[d], b.hi[d]);
    p.activation = activation.sample(rng);
    p.init = init.sample(rng);
    p.transform = transform.sample(rng);
    p.include.resize(include.size());
    bool any = include.empty();
    for (std::size_t i = 0; i < include.size(); ++i) {
      p.include[i] = include[i].sample(rng);
      any = any || p.include[i] != 0;
    }
    if (!any) p.include[rng.below(p.include.size())] = 1;
    return p;
  }
};

} // namespace

TpeResult tpe_optimize(const DesignPair& designs, const TpeSpace& space,
                       int n_trials, std::uint64_t seed) {
  if (n_trials < 10)
    fail(Errc::invalid_argument, "tpe_optimize: need at least 10 trials");
  const Bounds bounds = bounds_of(space);
  const int n_warmup = std::max(10, n_trials / 4);
  const double gamma = 0.25;
  const int n_candidates = 24;

  // warmup candidates are drawn up front so their set does not depend
  // on evaluation order
  CounterRng warmup_rng(seed, fnv1a64("tpe-warmup"));
  std::vector<Point> points;
  points.reserve(std::size_t(n_trials));
  for (int t = 0; t < std::min(n_warmup, n_trials); ++t)
    points.push_back(random_point(space, bounds, warmup_rng));

  TpeResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> losses;
  int diverged = 0;

  CounterRng propose_rng(seed, fnv1a64("tpe-propose"));
  for (int t = 0; t < n_trials; ++t) {
    if (t >= int(points.size())) {
      // split history into good/bad by the gamma quantile of losses
      std::vector<std::size_t> order(losses.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) {
                         return losses[a] < losses[b];
                       });
      std::size_t n_good =
          std::max<std::size_t>(1, std::size_t(gamma * double(losses.size())));
      std::vector<Point> good, bad;
      for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_good ? good : bad).push_back(points[order[i]]);
      if (bad.empty()) bad = good;

      DensityModel good_model = DensityModel::fit(good, space, bounds);
      DensityModel bad_model = DensityModel::fit(bad, space, bounds);
      Point best_candidate;
      double best_score = -std::numeric_limits<double>::infinity();
      for (int c = 0; c < n_candidates; ++c) {
        Point cand = good_model.sample(space, bounds, propose_rng);
        double score =
            good_model.log_density(cand) - bad_model.log_density(cand);
        if (score > best_score) {
          best_score = score;
          best_candidate = cand;
        }
      }
      points.push_back(best_candidate);
    }

    HyperConfig config = to_config(points[std::size_t(t)], space);
    double loss = std::numeric_limits<double>::infinity();
    try {
      const features::DesignMatrix& design = designs.pick(config.transform);
      TrainResult trained =
          train(design, config, CounterRng::mix(seed) + std::uint64_t(t));
      loss = trained.best_validation_mse;
    } catch (const Error& e) {
      if (e.code() != Errc::numeric) throw;
      ++diverged; // divergent trial: keep searching
    }
    losses.push_back(loss);
    result.trials.push_back(TpeTrial{config, loss});
    if (loss < result.best_loss) { // strict: ties keep the earliest trial
      result.best_loss = loss;
      result.best = config;
    }
  }
  if (diverged == n_trials)
    fail(Errc::numeric, "tpe_optimize: all " + std::to_string(n_trials) +
                            " trials diverged");
  return result;
}

} // namespace epf::dnn
