#include "epf/runner.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "epf/error.hpp"
#include "epf/rng.hpp"
#include "epf/version.hpp"

namespace epf::run {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// write-temp-then-rename so concurrent runs never see partial files
void write_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(Errc::io, "cannot write '" + tmp.string() + "'");
    out << content;
  }
  fs::rename(tmp, path);
}

DateRange parse_range(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) fail(Errc::parse, std::string("run config: missing ") + key);
  auto first = Date::parse(j[key].at("first").get<std::string>());
  auto last = Date::parse(j[key].at("last").get<std::string>());
  if (!first || !last)
    fail(Errc::parse, std::string("run config: bad date in ") + key);
  if (*last < *first)
    fail(Errc::parse, std::string("run config: ") + key + " is reversed");
  return DateRange{*first, *last};
}

} // namespace

std::string sanitize_label(const std::string& label) {
  std::string out = label;
  for (char& c : out)
    if (!std::isalnum(unsigned(c)) && c != '-' && c != '_' && c != '.')
      c = '-';
  return out;
}

RunConfig run_config_from_json_file(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, "'" + path + "': " + e.what());
  }
  RunConfig cfg;
  if (!doc.contains("data"))
    fail(Errc::parse, "run config: missing 'data'");
  const auto& data = doc["data"];
  std::string kind = data.value("kind", "");
  if (kind == "synthetic") {
    cfg.synthetic =
        ingest::synthetic_config_from_json(data.at("config").dump());
  } else if (kind == "manifest") {
    fs::path mp(data.at("path").get<std::string>());
    if (mp.is_relative()) mp = fs::path(path).parent_path() / mp;
    cfg.manifest_path = mp.string();
  } else {
    fail(Errc::parse,
         "run config: data.kind must be 'synthetic' or 'manifest'");
  }

  cfg.target_zone = doc.at("target_zone").get<std::string>();
  std::vector<std::string> default_base;
  if (doc.contains("base_variables"))
    default_base = doc["base_variables"].get<std::vector<std::string>>();

  if (!doc.contains("covariate_configs") || doc["covariate_configs"].empty())
    fail(Errc::parse, "run config: needs at least one covariate config");
  for (const auto& jc : doc["covariate_configs"]) {
    features::CovariateConfig cc;
    cc.target_zone = cfg.target_zone;
    cc.label = jc.at("label").get<std::string>();
    cc.base_variables =
        jc.contains("base_variables")
            ? jc["base_variables"].get<std::vector<std::string>>()
            : default_base;
    if (jc.contains("neighbor_zones"))
      cc.neighbor_price_zones =
          jc["neighbor_zones"].get<std::vector<std::string>>();
    for (const auto& z : cc.neighbor_price_zones)
      if (z == cfg.target_zone)
        fail(Errc::parse, "run config '" + cc.label +
                              "': target zone listed as neighbor");
    cfg.covariate_configs.push_back(std::move(cc));
  }

  if (!doc.contains("models") || doc["models"].empty())
    fail(Errc::parse, "run config: needs a 'models' list");
  for (const auto& m : doc["models"])
    cfg.models.push_back(backtest::model_from_string(m.get<std::string>()));
  if (!doc.contains("cw_list") || doc["cw_list"].empty())
    fail(Errc::parse, "run config: needs a 'cw_list'");
  cfg.cw_list = doc["cw_list"].get<std::vector<int>>();
  cfg.rf = backtest::rf_from_string(doc.value("rf", "daily"));
  cfg.test_range = parse_range(doc, "test_range");
  cfg.seed = doc.value("seed", std::uint64_t(0));
  cfg.output_dir = doc.value("output_dir", "epf_out");
  cfg.save_fits = doc.value("save_fits", true);
  if (doc.contains("dnn")) {
    const auto& jd = doc["dnn"];
    cfg.dnn.n_trials = jd.value("n_trials", cfg.dnn.n_trials);
    cfg.dnn.epochs_max = jd.value("epochs_max", cfg.dnn.epochs_max);
    cfg.dnn.patience = jd.value("patience", cfg.dnn.patience);
  }
  return cfg;
}

MarketDataset load_dataset(const RunConfig& config) {
  if (config.synthetic) return ingest::generate_synthetic(*config.synthetic);
  if (config.manifest_path)
    return ingest::load(ingest::manifest_from_json_file(*config.manifest_path));
  fail(Errc::invalid_argument, "run config has no data source");
}

std::string metrics_to_json(const std::vector<eval::MetricsReport>& reports,
                            const std::vector<std::string>& labels) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["reports"] = nlohmann::json::array();
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    doc["reports"].push_back({{"label", labels[i]},
                              {"slice", r.slice},
                              {"mae", r.mae},
                              {"rmse", r.rmse},
                              {"rmae", r.rmae},
                              {"smape_percent", r.smape_percent},
                              {"r2", r.r2},
                              {"n_hours", r.n_hours}});
  }
  return doc.dump(2);
}

std::string gw_to_json(const eval::GwMatrix& m) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["labels"] = m.labels;
  doc["p_one_sided"] = nlohmann::json::array();
  for (int r = 0; r < m.p.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < m.p.cols(); ++c) {
      if (r == c)
        row.push_back(nullptr);
      else
        row.push_back(m.p(r, c));
    }
    doc["p_one_sided"].push_back(row);
  }
  return doc.dump(2);
}

std::string anc_to_json(const eval::AncReport& report,
                        const std::string& label) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["label"] = label;
  doc["n_hours"] = report.n_hours;
  doc["max_reconstruction_error"] = report.max_reconstruction_error;
  doc["groups"] = nlohmann::json::array();
  for (const auto& e : report.ranking)
    doc["groups"].push_back({{"group", e.group}, {"anc", e.anc}});
  return doc.dump(2);
}

namespace {

std::string metrics_csv(const std::vector<eval::MetricsReport>& reports,
                        const std::vector<std::string>& labels) {
  std::ostringstream out;
  out << "label,slice,mae,rmse,rmae,smape_percent,r2,n_hours\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    out << labels[i] << ',' << r.slice << ',' << num(r.mae) << ','
        << num(r.rmse) << ',' << num(r.rmae) << ',' << num(r.smape_percent)
        << ',' << num(r.r2) << ',' << r.n_hours << '\n';
  }
  return out.str();
}

std::string gw_csv(const eval::GwMatrix& m) {
  std::ostringstream out;
  out << "benchmark,competitor,p_one_sided\n";
  char buf[32];
  for (int r = 0; r < m.p.rows(); ++r)
    for (int c = 0; c < m.p.cols(); ++c) {
      if (r == c) continue;
      std::snprintf(buf, sizeof(buf), "%.6f", m.p(r, c));
      out << m.labels[std::size_t(r)] << ',' << m.labels[std::size_t(c)] << ','
          << buf << '\n';
    }
  return out.str();
}

std::vector<double> errors_of(const backtest::ForecastSet& fc,
                              const backtest::ForecastSet& actual) {
  std::vector<double> err(fc.values.size());
  for (std::size_t i = 0; i < err.size(); ++i)
    err[i] = fc.values[i] - actual.values[i];
  return err;
}

} // namespace

RunOutput run_pipeline(const RunConfig& config, const std::string& out_dir) {
  RunOutput output;
  fs::create_directories(out_dir);
  MarketDataset dataset = load_dataset(config);

  auto emit = [&](const std::string& name, const std::string& content) {
    write_atomic(fs::path(out_dir) / name, content);
    output.files.push_back(name);
  };
  auto emit_forecast = [&](const backtest::ForecastSet& fc,
                           const std::string& name) {
    fs::path tmp = fs::path(out_dir) / (name + ".tmp");
    backtest::write_forecast_csv(fc, tmp.string());
    fs::rename(tmp, fs::path(out_dir) / name);
    output.files.push_back(name);
  };

  backtest::ForecastSet actual =
      backtest::actual_prices(dataset, config.target_zone, config.test_range);
  backtest::ForecastSet naive =
      backtest::naive_forecast(dataset, config.target_zone, config.test_range);
  emit_forecast(actual, "actual.csv");
  emit_forecast(naive, "naive.csv");

  std::vector<backtest::ForecastSet> evaluated{naive};
  std::vector<backtest::ForecastSet> ensembles;
  nlohmann::json timing;
  timing["schema_version"] = 1;
  timing["runs"] = nlohmann::json::array();

  if (config.save_fits) fs::create_directories(fs::path(out_dir) / "fits");

  for (const auto& cc : config.covariate_configs) {
    std::vector<backtest::ForecastSet> members;
    for (backtest::Model model : config.models)
      for (int cw : config.cw_list) {
        backtest::BacktestConfig bc;
        bc.model = model;
        bc.cw_days = cw;
        bc.rf = config.rf;
        bc.covariates = cc;
        bc.test_range = config.test_range;
        bc.seed = config.seed;
        bc.dnn = config.dnn;
        backtest::BacktestResult result = backtest::run_backtest(dataset, bc);

        std::string fname =
            "forecast_" + sanitize_label(result.forecast.label) + ".csv";
        emit_forecast(result.forecast, fname);
        timing["runs"].push_back(
            {{"label", result.forecast.label},
             {"total_wall_seconds", result.forecast.runtime.total_wall_seconds},
             {"per_day_average_seconds",
              result.forecast.runtime.per_day_average_seconds},
             {"sum_wall_seconds", result.forecast.runtime.sum_wall_seconds},
             {"recalibration_count",
              result.forecast.runtime.recalibration_count}});

        if (config.save_fits && model == backtest::Model::lear) {
          int index = 0;
          for (const auto& record : result.lear_fits) {
            std::string fit_name =
                "fits/" + sanitize_label(result.forecast.label) + "_recal" +
                std::to_string(index++) + ".json";
            write_atomic(fs::path(out_dir) / fit_name,
                         lear::fit_to_json(record.fit, record.served_days));
            output.files.push_back(fit_name);
          }
        }
        members.push_back(std::move(result.forecast));
      }

    backtest::ForecastSet ens = backtest::ensemble(members);
    ens.label = "ensemble_" + cc.label;
    emit_forecast(ens, "ensemble_" + sanitize_label(cc.label) + ".csv");
    timing["runs"].push_back(
        {{"label", ens.label},
         {"total_wall_seconds", ens.runtime.total_wall_seconds},
         {"per_day_average_seconds", ens.runtime.per_day_average_seconds},
         {"sum_wall_seconds", ens.runtime.sum_wall_seconds},
         {"recalibration_count", ens.runtime.recalibration_count}});
    ensembles.push_back(ens);
    evaluated.push_back(std::move(ens));
  }

  // metrics over all three slices for naive + every ensemble
  std::vector<eval::MetricsReport> reports;
  std::vector<std::string> report_labels;
  for (eval::Slice slice :
       {eval::Slice::all, eval::Slice::bottom5, eval::Slice::top5}) {
    std::vector<bool> mask = eval::percentile_slice(actual.values, slice);
    for (const auto& fc : evaluated) {
      reports.push_back(eval::evaluate(fc.values, actual.values, naive.values,
                                       &mask, slice));
      report_labels.push_back(fc.label);
    }
  }
  emit("metrics.json", metrics_to_json(reports, report_labels));
  emit("metrics.csv", metrics_csv(reports, report_labels));

  if (evaluated.size() >= 2) {
    std::vector<std::vector<double>> errors;
    std::vector<std::string> labels;
    for (const auto& fc : evaluated) {
      errors.push_back(errors_of(fc, actual));
      labels.push_back(fc.label);
    }
    eval::GwMatrix gw = eval::gw_matrix(errors, labels);
    emit("gw.json", gw_to_json(gw));
    emit("gw.csv", gw_csv(gw));
    emit("gw.txt", eval::gw_table(gw));
  }

  // run manifest: no wall-clock content, stays byte-identical across runs
  {
    nlohmann::json manifest;
    manifest["schema_version"] = 1;
    std::string config_text;
    if (config.synthetic)
      config_text = ingest::synthetic_config_to_json(*config.synthetic);
    else
      config_text = *config.manifest_path;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  (unsigned long long)fnv1a64(config_text));
    manifest["config_hash"] = hash;
    manifest["seed"] = config.seed;
    manifest["epf_version"] = EPF_VERSION;
    manifest["target_zone"] = config.target_zone;
    manifest["rf"] = backtest::to_string(config.rf);
    manifest["test_range"] = {{"first", config.test_range.first.to_string()},
                              {"last", config.test_range.last.to_string()}};
    std::sort(output.files.begin(), output.files.end());
    manifest["outputs"] = output.files;
    emit("run_manifest.json", manifest.dump(2));
  }
  emit("timing.json", timing.dump(2)); // the run log; varies run to run
  return output;
}

} // namespace epf::run
