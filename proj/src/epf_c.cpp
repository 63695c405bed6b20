#include "epf/epf_c.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "epf/error.hpp"
#include "epf/runner.hpp"
#include "epf/version.hpp"

struct epf_dataset {
  epf::MarketDataset data;
};

struct epf_forecast {
  epf::backtest::ForecastSet data;
};

namespace {

thread_local std::string g_last_error;

int set_error(epf::Errc code, const std::string& message) {
  g_last_error = message;
  switch (code) {
    case epf::Errc::invalid_argument: return EPF_ERR_INVALID_ARGUMENT;
    case epf::Errc::io: return EPF_ERR_IO;
    case epf::Errc::parse: return EPF_ERR_PARSE;
    case epf::Errc::numeric: return EPF_ERR_NUMERIC;
    case epf::Errc::internal: return EPF_ERR_INTERNAL;
  }
  return EPF_ERR_INTERNAL;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return EPF_OK;
  } catch (const epf::Error& e) {
    return set_error(e.code(), e.what());
  } catch (const std::exception& e) {
    return set_error(epf::Errc::internal, e.what());
  } catch (...) {
    return set_error(epf::Errc::internal, "unknown error");
  }
}

int require(bool ok, const char* what) {
  if (ok) return EPF_OK;
  return set_error(epf::Errc::invalid_argument,
                   std::string("null argument: ") + what);
}

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) epf::fail(epf::Errc::io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

epf::DateRange parse_range(const char* first, const char* last) {
  auto f = epf::Date::parse(first);
  auto l = epf::Date::parse(last);
  if (!f || !l)
    epf::fail(epf::Errc::invalid_argument, "bad ISO date in range");
  return epf::DateRange{*f, *l};
}

epf::backtest::BacktestConfig backtest_config_from_json(
    const std::string& text, const epf_dataset* d) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    epf::fail(epf::Errc::parse, std::string("backtest config: ") + e.what());
  }
  epf::backtest::BacktestConfig bc;
  bc.model =
      epf::backtest::model_from_string(doc.at("model").get<std::string>());
  bc.cw_days = doc.at("cw_days").get<int>();
  bc.rf = epf::backtest::rf_from_string(doc.value("rf", "daily"));
  const auto& jc = doc.at("covariates");
  bc.covariates.target_zone = jc.at("target_zone").get<std::string>();
  bc.covariates.base_variables =
      jc.value("base_variables", std::vector<std::string>{});
  bc.covariates.neighbor_price_zones =
      jc.value("neighbor_zones", std::vector<std::string>{});
  bc.covariates.label = jc.value("label", "config");
  bc.test_range =
      parse_range(doc.at("test_range").at("first").get<std::string>().c_str(),
                  doc.at("test_range").at("last").get<std::string>().c_str());
  bc.seed = doc.value("seed", std::uint64_t(0));
  if (doc.contains("dnn")) {
    bc.dnn.n_trials = doc["dnn"].value("n_trials", bc.dnn.n_trials);
    bc.dnn.epochs_max = doc["dnn"].value("epochs_max", bc.dnn.epochs_max);
    bc.dnn.patience = doc["dnn"].value("patience", bc.dnn.patience);
  }
  bc.label = doc.value("label", "");
  (void)d;
  return bc;
}

} // namespace

extern "C" {

const char* epf_version(void) { return EPF_VERSION; }

const char* epf_last_error(void) { return g_last_error.c_str(); }

void epf_free_string(char* s) { delete[] s; }

int epf_dataset_from_manifest(const char* manifest_path, epf_dataset** out) {
  if (int rc = require(manifest_path && out, "manifest_path/out")) return rc;
  return guarded([&] {
    auto manifest = epf::ingest::manifest_from_json_file(manifest_path);
    *out = new epf_dataset{epf::ingest::load(manifest)};
  });
}

int epf_dataset_synthetic(const char* config_json, epf_dataset** out) {
  if (int rc = require(config_json && out, "config_json/out")) return rc;
  return guarded([&] {
    auto config = epf::ingest::synthetic_config_from_json(config_json);
    *out = new epf_dataset{epf::ingest::generate_synthetic(config)};
  });
}

int epf_dataset_series_count(const epf_dataset* d, size_t* out) {
  if (int rc = require(d && out, "dataset/out")) return rc;
  *out = d->data.series.size();
  return EPF_OK;
}

int epf_dataset_span(const epf_dataset* d, char* first, char* last) {
  if (int rc = require(d && first && last, "dataset/first/last")) return rc;
  std::string f = d->data.span.first.to_string();
  std::string l = d->data.span.last.to_string();
  std::memcpy(first, f.c_str(), f.size() + 1);
  std::memcpy(last, l.c_str(), l.size() + 1);
  return EPF_OK;
}

int epf_dataset_export_csv(const epf_dataset* d, const char* dir) {
  if (int rc = require(d && dir, "dataset/dir")) return rc;
  return guarded([&] { epf::ingest::export_dataset_csv(d->data, dir); });
}

void epf_dataset_free(epf_dataset* d) { delete d; }

int epf_forecast_read_csv(const char* path, epf_forecast** out) {
  if (int rc = require(path && out, "path/out")) return rc;
  return guarded(
      [&] { *out = new epf_forecast{epf::backtest::read_forecast_csv(path)}; });
}

int epf_forecast_write_csv(const epf_forecast* f, const char* path) {
  if (int rc = require(f && path, "forecast/path")) return rc;
  return guarded([&] { epf::backtest::write_forecast_csv(f->data, path); });
}

int epf_forecast_day_count(const epf_forecast* f, size_t* out) {
  if (int rc = require(f && out, "forecast/out")) return rc;
  *out = f->data.days.size();
  return EPF_OK;
}

int epf_forecast_values(const epf_forecast* f, double* buf, size_t capacity) {
  if (int rc = require(f && buf, "forecast/buf")) return rc;
  if (capacity < f->data.values.size())
    return set_error(epf::Errc::invalid_argument,
                     "buffer too small: need " +
                         std::to_string(f->data.values.size()) + " doubles");
  std::memcpy(buf, f->data.values.data(),
              f->data.values.size() * sizeof(double));
  return EPF_OK;
}

const char* epf_forecast_label(const epf_forecast* f) {
  return f ? f->data.label.c_str() : "";
}

void epf_forecast_free(epf_forecast* f) { delete f; }

int epf_backtest_run(const epf_dataset* d, const char* backtest_json,
                     epf_forecast** out) {
  if (int rc = require(d && backtest_json && out, "dataset/config/out"))
    return rc;
  return guarded([&] {
    auto config = backtest_config_from_json(backtest_json, d);
    auto result = epf::backtest::run_backtest(d->data, config);
    *out = new epf_forecast{std::move(result.forecast)};
  });
}

int epf_naive_forecast(const epf_dataset* d, const char* zone,
                       const char* first_day, const char* last_day,
                       epf_forecast** out) {
  if (int rc = require(d && zone && first_day && last_day && out,
                       "dataset/zone/range/out"))
    return rc;
  return guarded([&] {
    *out = new epf_forecast{epf::backtest::naive_forecast(
        d->data, zone, parse_range(first_day, last_day))};
  });
}

int epf_actual_prices(const epf_dataset* d, const char* zone,
                      const char* first_day, const char* last_day,
                      epf_forecast** out) {
  if (int rc = require(d && zone && first_day && last_day && out,
                       "dataset/zone/range/out"))
    return rc;
  return guarded([&] {
    *out = new epf_forecast{epf::backtest::actual_prices(
        d->data, zone, parse_range(first_day, last_day))};
  });
}

int epf_ensemble(const epf_forecast* const* members, size_t n, int strict,
                 epf_forecast** out) {
  if (int rc = require(members && out, "members/out")) return rc;
  return guarded([&] {
    std::vector<epf::backtest::ForecastSet> sets;
    sets.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      if (!members[i])
        epf::fail(epf::Errc::invalid_argument, "null ensemble member");
      sets.push_back(members[i]->data);
    }
    *out = new epf_forecast{epf::backtest::ensemble(sets, strict != 0)};
  });
}

int epf_evaluate_json(const epf_forecast* forecast, const epf_forecast* actual,
                      const epf_forecast* naive, const char* slice,
                      char** report_json) {
  if (int rc = require(forecast && actual && naive && report_json,
                       "forecast/actual/naive/out"))
    return rc;
  return guarded([&] {
    std::string s = slice ? slice : "all";
    epf::eval::Slice which = epf::eval::Slice::all;
    if (s == "bottom5")
      which = epf::eval::Slice::bottom5;
    else if (s == "top5")
      which = epf::eval::Slice::top5;
    else if (s != "all")
      epf::fail(epf::Errc::invalid_argument, "unknown slice '" + s + "'");
    auto mask = epf::eval::percentile_slice(actual->data.values, which);
    auto report =
        epf::eval::evaluate(forecast->data.values, actual->data.values,
                            naive->data.values, &mask, which);
    *report_json = dup_string(
        epf::run::metrics_to_json({report}, {forecast->data.label}));
  });
}

int epf_gw_matrix_json(const epf_forecast* const* forecasts, size_t n,
                       const epf_forecast* actual, char** matrix_json,
                       char** table_text) {
  if (int rc = require(forecasts && actual && matrix_json, "forecasts/actual"))
    return rc;
  return guarded([&] {
    std::vector<std::vector<double>> errors;
    std::vector<std::string> labels;
    for (size_t i = 0; i < n; ++i) {
      if (!forecasts[i])
        epf::fail(epf::Errc::invalid_argument, "null forecast in gw matrix");
      const auto& fc = forecasts[i]->data;
      if (fc.days != actual->data.days)
        epf::fail(epf::Errc::invalid_argument,
                  "forecast '" + fc.label + "' is not aligned to the actuals");
      std::vector<double> err(fc.values.size());
      for (std::size_t j = 0; j < err.size(); ++j)
        err[j] = fc.values[j] - actual->data.values[j];
      errors.push_back(std::move(err));
      labels.push_back(fc.label);
    }
    auto matrix = epf::eval::gw_matrix(errors, labels);
    *matrix_json = dup_string(epf::run::gw_to_json(matrix));
    if (table_text) *table_text = dup_string(epf::eval::gw_table(matrix));
  });
}

int epf_anc_json(const char* const* fit_paths, size_t n,
                 const char* run_config_path, char** report_json) {
  if (int rc = require(fit_paths && run_config_path && report_json,
                       "fit_paths/run_config/out"))
    return rc;
  return guarded([&] {
    if (n == 0) epf::fail(epf::Errc::invalid_argument, "no fit files given");
    auto config = epf::run::run_config_from_json_file(run_config_path);
    epf::MarketDataset dataset = epf::run::load_dataset(config);

    std::vector<epf::lear::LassoFit> fits;
    std::vector<std::vector<epf::Date>> served;
    fits.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      std::vector<epf::Date> days;
      fits.push_back(epf::lear::fit_from_json(read_file(fit_paths[i]), &days));
      served.push_back(std::move(days));
    }
    std::vector<epf::eval::AncSample> samples;
    for (size_t i = 0; i < fits.size(); ++i)
      for (epf::Date day : served[i])
        samples.push_back(epf::eval::AncSample{
            &fits[i], epf::features::build_day_rows(dataset,
                                                    fits[i].covariates, day,
                                                    fits[i].scaler)});
    auto report = epf::eval::anc(samples);
    *report_json = dup_string(
        epf::run::anc_to_json(report, fits.front().config_label));
  });
}

int epf_synth_to_dir(const char* synth_config_path, const char* out_dir) {
  if (int rc = require(synth_config_path && out_dir, "config/out_dir"))
    return rc;
  return guarded([&] {
    auto config =
        epf::ingest::synthetic_config_from_json(read_file(synth_config_path));
    epf::MarketDataset dataset = epf::ingest::generate_synthetic(config);
    epf::ingest::export_dataset_csv(dataset, out_dir);
  });
}

int epf_run(const char* run_config_path, const char* out_dir,
            long long seed_override) {
  if (int rc = require(run_config_path, "run_config_path")) return rc;
  return guarded([&] {
    auto config = epf::run::run_config_from_json_file(run_config_path);
    if (seed_override >= 0) {
      config.seed = std::uint64_t(seed_override);
      if (config.synthetic) config.synthetic->seed = config.seed;
    }
    std::string dir = out_dir ? out_dir : config.output_dir;
    epf::run::run_pipeline(config, dir);
  });
}

} // extern "C"
