#include "epf/backtest.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>

#include "epf/error.hpp"
#include "epf/rng.hpp"

namespace epf::backtest {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<Date> window_days(Date first, Date last) {
  std::vector<Date> days;
  for (Date d = first; d <= last; ++d) days.push_back(d);
  return days;
}

struct LearState {
  lear::LassoFit fit;
};

struct DnnState {
  dnn::MlpParams params;
  bool tuned = false;
  dnn::HyperConfig config;
};

} // namespace

std::string to_string(Model m) { return m == Model::lear ? "lear" : "dnn"; }

std::string to_string(Recalibration r) {
  switch (r) {
    case Recalibration::daily: return "daily";
    case Recalibration::weekly: return "weekly";
    case Recalibration::monthly: return "monthly";
    case Recalibration::once: return "once";
  }
  return "daily";
}

Model model_from_string(const std::string& s) {
  if (s == "lear") return Model::lear;
  if (s == "dnn") return Model::dnn;
  fail(Errc::parse, "unknown model '" + s + "' (expected lear or dnn)");
}

Recalibration rf_from_string(const std::string& s) {
  if (s == "daily") return Recalibration::daily;
  if (s == "weekly") return Recalibration::weekly;
  if (s == "monthly") return Recalibration::monthly;
  if (s == "once") return Recalibration::once;
  fail(Errc::parse, "unknown recalibration frequency '" + s + "'");
}

std::string default_label(const BacktestConfig& c) {
  return to_string(c.model) + "_cw" + std::to_string(c.cw_days) + "_" +
         c.covariates.label;
}

std::vector<Date> recalibration_days(Recalibration rf,
                                     const DateRange& range) {
  std::vector<Date> days;
  for (Date d = range.first; d <= range.last; ++d) {
    bool fires = false;
    switch (rf) {
      case Recalibration::daily: fires = true; break;
      case Recalibration::weekly:
        fires = d == range.first || d.day_of_week() == 0;
        break;
      case Recalibration::monthly:
        fires = d == range.first || d.day() == 1;
        break;
      case Recalibration::once: fires = d == range.first; break;
    }
    if (fires) days.push_back(d);
  }
  return days;
}

ForecastSet make_forecast_set(std::string label, std::vector<Date> days,
                              std::vector<double> values) {
  if (days.empty()) fail(Errc::invalid_argument, "forecast set: no days");
  if (values.size() != days.size() * 24)
    fail(Errc::invalid_argument, "forecast set: values must be days x 24");
  for (std::size_t i = 1; i < days.size(); ++i)
    if (days[i] - days[i - 1] != 1)
      fail(Errc::invalid_argument, "forecast set: days are not contiguous");
  for (double v : values)
    if (!std::isfinite(v))
      fail(Errc::invalid_argument, "forecast set: non-finite value");
  ForecastSet fs;
  fs.label = std::move(label);
  fs.days = std::move(days);
  fs.values = std::move(values);
  return fs;
}

BacktestResult run_backtest(const MarketDataset& dataset,
                            const BacktestConfig& config) {
  if (config.cw_days < 8)
    fail(Errc::invalid_argument, "backtest: calibration window too short");
  Date earliest_needed = config.test_range.first - config.cw_days - 7;
  if (earliest_needed < dataset.span.first)
    fail(Errc::invalid_argument,
         "backtest: test range needs data from " +
             earliest_needed.to_string() + " but dataset starts " +
             dataset.span.first.to_string());
  if (config.test_range.last > dataset.span.last)
    fail(Errc::invalid_argument,
         "backtest: test range ends " + config.test_range.last.to_string() +
             " after dataset end " + dataset.span.last.to_string());

  std::vector<Date> recal_days =
      recalibration_days(config.rf, config.test_range);
  std::string label = config.label.empty() ? default_label(config)
                                           : config.label;

  BacktestResult result;
  std::vector<double> values;
  values.reserve(std::size_t(config.test_range.size()) * 24);

  LearState lear_state;
  DnnState dnn_state;
  dnn_state.config.epochs_max = config.dnn.epochs_max;
  dnn_state.config.patience = config.dnn.patience;
  bool calibrated = false;
  int recal_index = 0;
  double wall = 0.0;

  std::size_t next_recal = 0;
  for (Date day = config.test_range.first; day <= config.test_range.last;
       ++day) {
    const bool fires = next_recal < recal_days.size() &&
                       recal_days[next_recal] == day;
    try {
      if (fires) {
        ++next_recal;
        Clock::time_point t0 = Clock::now();
        DateRange window{day - config.cw_days, day - 1};
        std::uint64_t recal_seed =
            CounterRng::mix(config.seed ^ fnv1a64(label)) +
            std::uint64_t(recal_index);

        if (config.model == Model::lear) {
          features::DesignMatrix design = features::build_design(
              dataset, config.covariates, window, features::ScalerKind::norm);
          lear::CvPlan plan =
              lear::make_cv_plan(window_days(window.first, window.last), 7,
                                 recal_seed, design.X, design.y);
          lear::LassoFit fit = lear::fit_lear(design, plan);
          fit.covariates = config.covariates;
          fit.config_label = label;
          lear_state.fit = std::move(fit);
          result.lear_fits.push_back(FitRecord{lear_state.fit, {}});
        } else {
          features::DesignMatrix design_norm1 = features::build_design(
              dataset, config.covariates, window, features::ScalerKind::norm1);
          features::DesignMatrix design_norm;
          bool have_norm = false;
          if (!dnn_state.tuned) {
            // the hyper search runs once, on the first window; later
            // recalibrations retrain weights with the chosen config
            design_norm = features::build_design(
                dataset, config.covariates, window, features::ScalerKind::norm);
            have_norm = true;
            dnn::TpeSpace space;
            space.selectable_variables = config.covariates.base_variables;
            space.epochs_max = config.dnn.epochs_max;
            space.patience = config.dnn.patience;
            dnn::DesignPair pair{&design_norm, &design_norm1};
            dnn::TpeResult tpe = dnn::tpe_optimize(pair, space,
                                                   config.dnn.n_trials,
                                                   recal_seed);
            dnn_state.config = tpe.best;
            dnn_state.tuned = true;
          }
          bool wants_norm =
              dnn_state.config.transform == features::ScalerKind::norm;
          if (wants_norm && !have_norm)
            design_norm = features::build_design(
                dataset, config.covariates, window, features::ScalerKind::norm);
          const features::DesignMatrix& chosen =
              wants_norm ? design_norm : design_norm1;
          dnn_state.params =
              dnn::train(chosen, dnn_state.config, recal_seed).params;
        }
        ++recal_index;
        wall += seconds_since(t0);
        calibrated = true;
      }
      if (!calibrated)
        fail(Errc::internal, "backtest: no calibration before first test day");

      Clock::time_point t1 = Clock::now();
      const features::ScalerState& scaler = config.model == Model::lear
                                                ? lear_state.fit.scaler
                                                : dnn_state.params.scaler;
      Eigen::MatrixXd rows = features::build_day_rows(
          dataset, config.covariates, day, scaler);
      Eigen::VectorXd prices = config.model == Model::lear
                                   ? lear::predict_lear(lear_state.fit, rows)
                                   : dnn::predict_dnn(dnn_state.params, rows);
      wall += seconds_since(t1);
      for (int h = 0; h < 24; ++h) values.push_back(prices[h]);
      if (config.model == Model::lear)
        result.lear_fits.back().served_days.push_back(day);
    } catch (const Error& e) {
      fail(e.code(), "backtest '" + label + "' day " + day.to_string() +
                         ": " + e.what());
    }
  }

  std::vector<Date> days =
      window_days(config.test_range.first, config.test_range.last);
  result.forecast = make_forecast_set(label, std::move(days),
                                      std::move(values));
  result.forecast.runtime.total_wall_seconds = wall;
  result.forecast.runtime.sum_wall_seconds = wall;
  result.forecast.runtime.per_day_average_seconds =
      wall / double(config.test_range.size());
  result.forecast.runtime.recalibration_count = recal_index;
  return result;
}

ForecastSet naive_forecast(const MarketDataset& dataset,
                           const std::string& zone, const DateRange& range) {
  if (range.first - 7 < dataset.span.first)
    fail(Errc::invalid_argument,
         "naive forecast needs prices from " + (range.first - 7).to_string() +
             " but dataset starts " + dataset.span.first.to_string());
  const HourlySeries& price = dataset.at(zone, "price");
  std::vector<double> values;
  values.reserve(std::size_t(range.size()) * 24);
  for (Date d = range.first; d <= range.last; ++d)
    for (int h = 0; h < 24; ++h)
      values.push_back(dataset.value_at(price, d - 7, h));
  return make_forecast_set("naive", window_days(range.first, range.last),
                           std::move(values));
}

ForecastSet actual_prices(const MarketDataset& dataset,
                          const std::string& zone, const DateRange& range) {
  const HourlySeries& price = dataset.at(zone, "price");
  std::vector<double> values;
  values.reserve(std::size_t(range.size()) * 24);
  for (Date d = range.first; d <= range.last; ++d)
    for (int h = 0; h < 24; ++h)
      values.push_back(dataset.value_at(price, d, h));
  return make_forecast_set("actual", window_days(range.first, range.last),
                           std::move(values));
}

ForecastSet ensemble(const std::vector<ForecastSet>& members, bool strict) {
  if (members.empty()) fail(Errc::invalid_argument, "ensemble: no members");
  if (strict && members.size() != 8)
    fail(Errc::invalid_argument,
         "ensemble: strict mode needs exactly 8 members, got " +
             std::to_string(members.size()));
  const auto& first = members.front();
  for (const auto& m : members)
    if (m.days != first.days)
      fail(Errc::invalid_argument,
           "ensemble: member '" + m.label + "' covers different days than '" +
               first.label + "'");

  std::vector<double> values(first.values.size(), 0.0);
  double max_total = 0.0, sum_total = 0.0;
  int recals = 0;
  for (const auto& m : members) {
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += m.values[i];
    max_total = std::max(max_total, m.runtime.total_wall_seconds);
    sum_total += m.runtime.sum_wall_seconds;
    recals += m.runtime.recalibration_count;
  }
  for (double& v : values) v /= double(members.size());

  ForecastSet out = make_forecast_set("ensemble", first.days,
                                      std::move(values));
  // parallel-execution convention: the slowest member bounds the total
  out.runtime.total_wall_seconds = max_total;
  out.runtime.sum_wall_seconds = sum_total;
  out.runtime.per_day_average_seconds = max_total / double(first.days.size());
  out.runtime.recalibration_count = recals;
  return out;
}

void write_forecast_csv(const ForecastSet& fs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot write '" + path + "'");
  out << "day,hour,value,label\n";
  char num[64];
  for (std::size_t d = 0; d < fs.days.size(); ++d) {
    std::string day = fs.days[d].to_string();
    for (int h = 0; h < 24; ++h) {
      auto res = std::to_chars(num, num + sizeof(num), fs.at(int(d), h));
      out << day << ',' << h << ',';
      out.write(num, res.ptr - num);
      out << ',' << fs.label << '\n';
    }
  }
}

ForecastSet read_forecast_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::io, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line.rfind("day,hour,value,label", 0) != 0)
    fail(Errc::parse, "'" + path + "': expected header day,hour,value,label");
  std::vector<Date> days;
  std::vector<double> values;
  std::string label;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t c1 = line.find(',');
    std::size_t c2 = line.find(',', c1 + 1);
    std::size_t c3 = line.find(',', c2 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos ||
        c3 == std::string::npos)
      fail(Errc::parse, "'" + path + "' line " + std::to_string(line_no) +
                            ": expected 4 fields");
    auto day = Date::parse(line.substr(0, c1));
    if (!day)
      fail(Errc::parse, "'" + path + "' line " + std::to_string(line_no) +
                            ": bad date");
    int hour = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
    std::string raw = line.substr(c2 + 1, c3 - c2 - 1);
    double v = 0.0;
    auto res = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (res.ec != std::errc())
      fail(Errc::parse, "'" + path + "' line " + std::to_string(line_no) +
                            ": bad value '" + raw + "'");
    std::string row_label = line.substr(c3 + 1);
    if (!row_label.empty() && row_label.back() == '\r') row_label.pop_back();
    if (label.empty()) label = row_label;

    if (days.empty() || days.back() != *day) days.push_back(*day);
    int expected_hour = int(values.size() % 24);
    if (hour != expected_hour)
      fail(Errc::parse, "'" + path + "' line " + std::to_string(line_no) +
                            ": expected hour " + std::to_string(expected_hour));
    values.push_back(v);
  }
  return make_forecast_set(label, std::move(days), std::move(values));
}

} // namespace epf::backtest
