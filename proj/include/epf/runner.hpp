#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "epf/backtest.hpp"
#include "epf/eval.hpp"
#include "epf/ingest.hpp"

namespace epf::run {

struct RunConfig {
  // data source: exactly one of the two
  std::optional<ingest::SyntheticConfig> synthetic;
  std::optional<std::string> manifest_path;

  std::string target_zone;
  std::vector<features::CovariateConfig> covariate_configs;
  std::vector<backtest::Model> models;
  std::vector<int> cw_list;
  backtest::Recalibration rf = backtest::Recalibration::daily;
  DateRange test_range;
  std::uint64_t seed = 0;
  std::string output_dir;
  backtest::DnnSettings dnn;
  bool save_fits = true;
};

RunConfig run_config_from_json_file(const std::string& path);

MarketDataset load_dataset(const RunConfig& config);

struct RunOutput {
  std::vector<std::string> files; // repo-relative to output_dir
};

// The full backtest command: member forecasts for every
// {covariate config} x {model} x {cw}, per-config ensembles, naive and
// actual series, metrics on all/bottom5/top5 slices, a GW matrix over
// the ensembles and ANC reports for LEAR fits. Wall-clock telemetry
// goes to timing.json; every other artifact is byte-stable for a fixed
// config and seed.
RunOutput run_pipeline(const RunConfig& config, const std::string& out_dir);

// filesystem-safe variant of a forecast label
std::string sanitize_label(const std::string& label);

std::string metrics_to_json(const std::vector<eval::MetricsReport>& reports,
                            const std::vector<std::string>& labels);
std::string gw_to_json(const eval::GwMatrix& m);
std::string anc_to_json(const eval::AncReport& report,
                        const std::string& label);

} // namespace epf::run
