#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "epf/lear.hpp"
#include "epf/timeseries.hpp"

namespace epf::eval {

struct MetricsReport {
  double mae = 0.0;
  double rmse = 0.0;
  double rmae = 0.0;
  double smape_percent = 0.0;
  double r2 = 0.0;
  std::size_t n_hours = 0;
  std::string slice = "all"; // all | bottom5 | top5
};

double mae(const std::vector<double>& p, const std::vector<double>& p_hat);
double rmse(const std::vector<double>& p, const std::vector<double>& p_hat);
double rmae(const std::vector<double>& p, const std::vector<double>& p_hat,
            const std::vector<double>& p_naive);
double smape(const std::vector<double>& p, const std::vector<double>& p_hat);
double r2(const std::vector<double>& p, const std::vector<double>& p_hat);
double pearson(const std::vector<double>& a, const std::vector<double>& b);

// linear-interpolation empirical quantile of a sample, q in [0,1]
double quantile(std::vector<double> values, double q);

enum class Slice { all, bottom5, top5 };
std::string to_string(Slice s);

// cell mask over the test-range actuals: bottom5 keeps p <= 5th
// percentile, top5 keeps p >= 95th
std::vector<bool> percentile_slice(const std::vector<double>& actual,
                                   Slice which);

MetricsReport evaluate(const std::vector<double>& forecast,
                       const std::vector<double>& actual,
                       const std::vector<double>& naive,
                       const std::vector<bool>* mask = nullptr,
                       Slice slice = Slice::all);

struct GwResult {
  double statistic = 0.0;
  double p_one_sided = 1.0;
  int n = 0; // days entering the regression
  int instrument_dim = 2;
  bool degenerate = false;
};

// Conditional predictive ability, daily absolute losses summed over the
// 24 hours, instruments [1, d_{t-1}]. Small p: model A (first) is worse.
GwResult gw_test(const std::vector<double>& err_a,
                 const std::vector<double>& err_b);

struct GwMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd p; // (r,c): p-value that model c beats model r; diag NaN
};

GwMatrix gw_matrix(const std::vector<std::vector<double>>& errors,
                   const std::vector<std::string>& labels);

// aligned text rendering with a star on p < 0.05
std::string gw_table(const GwMatrix& m);

struct AncEntry {
  std::string group;
  double anc = 0.0;
};

struct AncReport {
  std::vector<AncEntry> ranking; // descending by anc
  std::size_t n_hours = 0;
  double max_reconstruction_error = 0.0;
};

// Per-hour rows paired with the fit active when that hour was predicted.
struct AncSample {
  const lear::LassoFit* fit = nullptr;
  Eigen::MatrixXd day_rows; // 24 x p, built with fit->scaler
};

AncReport anc(const std::vector<AncSample>& samples);

} // namespace epf::eval
