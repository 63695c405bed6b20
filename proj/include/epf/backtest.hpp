#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epf/dnn.hpp"
#include "epf/lear.hpp"
#include "epf/timeseries.hpp"

namespace epf::backtest {

enum class Model { lear, dnn };
enum class Recalibration { daily, weekly, monthly, once };

std::string to_string(Model m);
std::string to_string(Recalibration r);
Model model_from_string(const std::string& s);
Recalibration rf_from_string(const std::string& s);

struct DnnSettings {
  int n_trials = 12; // TPE budget, spent at the first recalibration
  int epochs_max = 300;
  int patience = 20;
};

struct BacktestConfig {
  Model model = Model::lear;
  int cw_days = 56;
  Recalibration rf = Recalibration::daily;
  features::CovariateConfig covariates;
  DateRange test_range;
  std::uint64_t seed = 0;
  DnnSettings dnn;
  std::string label; // defaults to "<model>_cw<days>_<covariates.label>"
};

struct RuntimeReport {
  double total_wall_seconds = 0.0;
  double per_day_average_seconds = 0.0;
  double sum_wall_seconds = 0.0; // equals total except for ensembles
  int recalibration_count = 0;
};

struct ForecastSet {
  std::string label;
  std::vector<Date> days;      // contiguous, ascending
  std::vector<double> values;  // days x 24, day-major
  RuntimeReport runtime;

  double at(int day_pos, int hour) const {
    return values[std::size_t(day_pos) * 24 + std::size_t(hour)];
  }
};

ForecastSet make_forecast_set(std::string label, std::vector<Date> days,
                              std::vector<double> values);

// recalibration days fired by a schedule over a test range:
// daily = every day; weekly = Mondays plus the first day; monthly =
// the 1st of each month plus the first day; once = the first day
std::vector<Date> recalibration_days(Recalibration rf, const DateRange& range);

struct FitRecord {
  lear::LassoFit fit;
  std::vector<Date> served_days;
};

struct BacktestResult {
  ForecastSet forecast;
  std::vector<FitRecord> lear_fits; // one per recalibration (LEAR only)
};

// Rolling-origin run: recalibrate on [D - cw, D - 1] whenever the
// schedule fires, then predict day D with the stored model and scaler.
// Wall time covers recalibration, input transformation and prediction.
BacktestResult run_backtest(const MarketDataset& dataset,
                            const BacktestConfig& config);

// p_hat(d, h) = p(d - 7, h)
ForecastSet naive_forecast(const MarketDataset& dataset,
                           const std::string& zone, const DateRange& range);

// actual prices packaged for evaluation
ForecastSet actual_prices(const MarketDataset& dataset,
                          const std::string& zone, const DateRange& range);

// pointwise arithmetic mean; strict mode demands exactly 8 members
ForecastSet ensemble(const std::vector<ForecastSet>& members,
                     bool strict = false);

std::string default_label(const BacktestConfig& config);

void write_forecast_csv(const ForecastSet& fs, const std::string& path);
ForecastSet read_forecast_csv(const std::string& path);

} // namespace epf::backtest
