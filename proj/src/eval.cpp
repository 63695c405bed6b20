#include "epf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "epf/error.hpp"

namespace epf::eval {

namespace {

void check_lengths(const std::vector<double>& a, const std::vector<double>& b,
                   const char* what) {
  if (a.size() != b.size())
    fail(Errc::invalid_argument,
         std::string(what) + ": lengths differ (" + std::to_string(a.size()) +
             " vs " + std::to_string(b.size()) + ")");
  if (a.empty())
    fail(Errc::invalid_argument, std::string(what) + ": empty input");
}

} // namespace

double mae(const std::vector<double>& p, const std::vector<double>& p_hat) {
  check_lengths(p, p_hat, "mae");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - p_hat[i]);
  return sum / double(p.size());
}

double rmse(const std::vector<double>& p, const std::vector<double>& p_hat) {
  check_lengths(p, p_hat, "rmse");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double e = p[i] - p_hat[i];
    sum += e * e;
  }
  return std::sqrt(sum / double(p.size()));
}

double rmae(const std::vector<double>& p, const std::vector<double>& p_hat,
            const std::vector<double>& p_naive) {
  double denom = mae(p, p_naive);
  if (denom == 0.0)
    fail(Errc::numeric, "rmae: naive benchmark has zero MAE (undefined)");
  return mae(p, p_hat) / denom;
}

double smape(const std::vector<double>& p, const std::vector<double>& p_hat) {
  check_lengths(p, p_hat, "smape");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double denom = (std::abs(p[i]) + std::abs(p_hat[i])) / 2.0;
    double num = std::abs(p[i] - p_hat[i]);
    if (denom == 0.0) continue; // p == p_hat == 0 contributes 0
    sum += num / denom;
  }
  return 100.0 * sum / double(p.size());
}

double r2(const std::vector<double>& p, const std::vector<double>& p_hat) {
  check_lengths(p, p_hat, "r2");
  if (p.size() < 2) fail(Errc::invalid_argument, "r2: need at least 2 cells");
  double mean = 0.0;
  for (double v : p) mean += v;
  mean /= double(p.size());
  double ssr = 0.0, sst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    ssr += (p[i] - p_hat[i]) * (p[i] - p_hat[i]);
    sst += (p[i] - mean) * (p[i] - mean);
  }
  if (sst == 0.0)
    fail(Errc::numeric, "r2: actual prices have zero variance (undefined)");
  return 1.0 - ssr / sst;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  check_lengths(a, b, "pearson");
  if (a.size() < 2)
    fail(Errc::invalid_argument, "pearson: need at least 2 points");
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= double(a.size());
  mb /= double(b.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0)
    fail(Errc::numeric, "pearson: constant input (undefined)");
  return sab / std::sqrt(saa * sbb);
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) fail(Errc::invalid_argument, "quantile: empty sample");
  std::sort(values.begin(), values.end());
  double pos = q * double(values.size() - 1);
  std::size_t lo = std::size_t(std::floor(pos));
  if (lo + 1 >= values.size()) return values.back();
  double frac = pos - double(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

std::string to_string(Slice s) {
  switch (s) {
    case Slice::all: return "all";
    case Slice::bottom5: return "bottom5";
    case Slice::top5: return "top5";
  }
  return "all";
}

std::vector<bool> percentile_slice(const std::vector<double>& actual,
                                   Slice which) {
  std::vector<bool> mask(actual.size(), true);
  if (which == Slice::all) return mask;
  double threshold = quantile(actual, which == Slice::bottom5 ? 0.05 : 0.95);
  for (std::size_t i = 0; i < actual.size(); ++i)
    mask[i] = which == Slice::bottom5 ? actual[i] <= threshold
                                      : actual[i] >= threshold;
  return mask;
}

MetricsReport evaluate(const std::vector<double>& forecast,
                       const std::vector<double>& actual,
                       const std::vector<double>& naive,
                       const std::vector<bool>* mask, Slice slice) {
  check_lengths(forecast, actual, "evaluate");
  check_lengths(naive, actual, "evaluate(naive)");
  std::vector<double> f, a, n;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    f.push_back(forecast[i]);
    a.push_back(actual[i]);
    n.push_back(naive[i]);
  }
  if (a.empty()) fail(Errc::invalid_argument, "evaluate: empty slice");
  MetricsReport r;
  r.mae = mae(a, f);
  r.rmse = rmse(a, f);
  r.rmae = rmae(a, f, n);
  r.smape_percent = smape(a, f);
  r.r2 = r2(a, f);
  r.n_hours = a.size();
  r.slice = to_string(slice);
  return r;
}

GwResult gw_test(const std::vector<double>& err_a,
                 const std::vector<double>& err_b) {
  check_lengths(err_a, err_b, "gw_test");
  if (err_a.size() % 24 != 0)
    fail(Errc::invalid_argument,
         "gw_test: errors must come in 24-hour days, got " +
             std::to_string(err_a.size()) + " cells");
  int n_days = int(err_a.size() / 24);
  if (n_days < 30)
    fail(Errc::invalid_argument, "gw_test: need at least 30 days, got " +
                                     std::to_string(n_days));

  // daily loss differential: absolute losses summed over the 24 hours
  std::vector<double> d(std::size_t(n_days), 0.0);
  for (int day = 0; day < n_days; ++day)
    for (int h = 0; h < 24; ++h) {
      std::size_t i = std::size_t(day) * 24 + std::size_t(h);
      d[std::size_t(day)] += std::abs(err_a[i]) - std::abs(err_b[i]);
    }

  GwResult result;
  result.instrument_dim = 2;
  result.n = n_days - 1;

  // z_t = X_{t-1} * d_t with instruments [1, d_{t-1}]
  const int n = n_days - 1;
  Eigen::Vector2d z_bar = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> z(std::size_t(n));
  for (int t = 1; t < n_days; ++t) {
    Eigen::Vector2d inst(1.0, d[std::size_t(t - 1)]);
    z[std::size_t(t - 1)] = inst * d[std::size_t(t)];
    z_bar += z[std::size_t(t - 1)];
  }
  z_bar /= double(n);

  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& zt : z) {
    Eigen::Vector2d c = zt - z_bar;
    cov += c * c.transpose();
  }
  cov /= double(n);

  double det = cov(0, 0) * cov(1, 1) - cov(0, 1) * cov(1, 0);
  double scale = std::max(cov(0, 0) * cov(1, 1), 1e-300);
  if (!(det > 1e-12 * scale) || !(cov(0, 0) > 0.0)) {
    result.degenerate = true;
    result.p_one_sided = 1.0;
    return result;
  }

  Eigen::Matrix2d inv;
  inv << cov(1, 1), -cov(0, 1), -cov(1, 0), cov(0, 0);
  inv /= det;
  double t_stat = double(n) * z_bar.dot(inv * z_bar);
  result.statistic = t_stat;

  double p_two = std::exp(-t_stat / 2.0); // chi-squared survival, 2 dof
  double mean_d = 0.0;
  for (double v : d) mean_d += v;
  mean_d /= double(n_days);
  result.p_one_sided = mean_d > 0.0 ? p_two / 2.0 : 1.0 - p_two / 2.0;
  return result;
}

GwMatrix gw_matrix(const std::vector<std::vector<double>>& errors,
                   const std::vector<std::string>& labels) {
  if (errors.size() < 2)
    fail(Errc::invalid_argument, "gw_matrix: need at least 2 forecasts");
  if (errors.size() != labels.size())
    fail(Errc::invalid_argument, "gw_matrix: labels/errors size mismatch");
  GwMatrix m;
  m.labels = labels;
  const int k = int(errors.size());
  m.p = Eigen::MatrixXd::Constant(k, k,
                                  std::numeric_limits<double>::quiet_NaN());
  for (int r = 0; r < k; ++r)
    for (int c = 0; c < k; ++c) {
      if (r == c) continue;
      m.p(r, c) = gw_test(errors[std::size_t(r)], errors[std::size_t(c)])
                      .p_one_sided;
    }
  return m;
}

std::string gw_table(const GwMatrix& m) {
  std::size_t width = 8;
  for (const auto& l : m.labels) width = std::max(width, l.size() + 2);
  std::ostringstream out;
  out << std::string(width, ' ');
  for (const auto& l : m.labels)
    out << std::string(width - l.size(), ' ') << l;
  out << '\n';
  for (int r = 0; r < m.p.rows(); ++r) {
    const std::string& label = m.labels[std::size_t(r)];
    out << label << std::string(width - label.size(), ' ');
    for (int c = 0; c < m.p.cols(); ++c) {
      char cell[32];
      if (r == c)
        std::snprintf(cell, sizeof(cell), "%s", ".");
      else {
        double p = m.p(r, c);
        std::snprintf(cell, sizeof(cell), "%.3f%s", p,
                      p < 0.05 ? "*" : "");
      }
      std::string s(cell);
      out << std::string(width - s.size(), ' ') << s;
    }
    out << '\n';
  }
  out << "\n* column model significantly more accurate than row model (p < 0.05)\n";
  return out.str();
}

AncReport anc(const std::vector<AncSample>& samples) {
  if (samples.empty()) fail(Errc::invalid_argument, "anc: no samples");
  const lear::LassoFit* first = samples.front().fit;
  std::map<std::string, double> sums;
  std::size_t n_hours = 0;
  double max_err = 0.0;

  for (const auto& sample : samples) {
    const lear::LassoFit& fit = *sample.fit;
    if (fit.columns != first->columns || fit.groups != first->groups)
      fail(Errc::invalid_argument,
           "anc: fits disagree on the column/group layout");
    if (sample.day_rows.cols() != fit.beta.size())
      fail(Errc::invalid_argument, "anc: day rows do not match fit columns");

    // group -> column indices, same for all rows of this fit
    std::map<std::string, std::vector<int>> group_cols;
    for (int j = 0; j < int(fit.groups.size()); ++j)
      group_cols[fit.groups[std::size_t(j)]].push_back(j);

    for (int r = 0; r < sample.day_rows.rows(); ++r, ++n_hours) {
      double reconstructed = fit.intercept;
      for (const auto& [group, cols] : group_cols) {
        double contribution = 0.0;
        for (int j : cols)
          contribution += sample.day_rows(r, j) * fit.beta[j];
        sums[group] += std::abs(contribution);
        reconstructed += contribution;
      }
      double direct = sample.day_rows.row(r).dot(fit.beta) + fit.intercept;
      max_err = std::max(max_err, std::abs(direct - reconstructed));
    }
  }

  AncReport report;
  report.n_hours = n_hours;
  report.max_reconstruction_error = max_err;
  for (const auto& [group, sum] : sums)
    report.ranking.push_back(AncEntry{group, sum / double(n_hours)});
  std::stable_sort(report.ranking.begin(), report.ranking.end(),
                   [](const AncEntry& a, const AncEntry& b) {
                     return a.anc > b.anc;
                   });
  return report;
}

} // namespace epf::eval
