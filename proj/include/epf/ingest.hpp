#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "epf/timeseries.hpp"

namespace epf::ingest {

struct ManifestEntry {
  std::string path;
  std::string kind; // "entsoe-csv" | "openmeteo-json"
  std::string name;
  std::string zone;
  std::string unit;
  std::string variable; // openmeteo document key; defaults to name
};

struct IngestManifest {
  std::vector<ManifestEntry> entries;
  std::map<std::string, std::string> holiday_files; // zone -> path
};

IngestManifest manifest_from_json_file(const std::string& path);

// entsoe-csv: header `timestamp,value` (or `MTU;Value` with ';'),
// ISO-8601 timestamps with explicit offset, one row per interval start.
// Resolution is inferred from consecutive rows; skipped intervals
// become NaN slots.
HourlySeries parse_entsoe_csv(const std::string& path, const std::string& name,
                              const std::string& zone, const std::string& unit);

// openmeteo-json: {"hourly": {"time": [...], "<variable>": [...]},
// "hourly_units": {"<variable>": "..."}}; nulls become NaN.
HourlySeries parse_openmeteo_json(const std::string& path,
                                  const std::string& variable,
                                  const std::string& name,
                                  const std::string& zone);

std::set<Date> parse_holiday_file(const std::string& path);

// Parses every entry, resamples 15-minute series, fills short gaps
// (<= 3 hours) and aligns to the common day span.
MarketDataset load(const IngestManifest& manifest);

// ---------------------------------------------------------------------------
// Synthetic coupled-market generator

struct FundamentalsSpec {
  // load: multiplicative annual/daily shape + additive weekend drop + AR(1) anomaly
  double load_base = 10000.0;      // MW
  double load_annual_amp = 0.10;   // relative winter/summer swing
  double load_daily_amp = 0.20;    // relative day-shape swing
  double load_weekend_drop = 800.0; // MW, additive
  double load_anom_sd = 300.0;     // MW
  double load_anom_rho = 0.85;
  double load_price_weight = 0.008; // EUR/MWh per MW of load anomaly

  double wind_mean = 3000.0; // MW
  double wind_anom_sd = 700.0;
  double wind_anom_rho = 0.95;
  double wind_price_weight = 0.004;

  double solar_peak = 4000.0; // MW at full daylight, clear sky
  double solar_price_weight = 0.003;

  double temp_mean = 11.0; // degC
  double temp_annual_amp = 9.0;
  double temp_anom_sd = 2.5;
  double temp_anom_rho = 0.9;
  double temp_price_weight = 0.0;

  double humidity_mean = 70.0; // percent
  double humidity_sd = 8.0;
};

struct ZoneSpec {
  std::string name;
  double factor_loading = 1.0; // weight of the shared latent factor
  double noise_sd = 5.0;       // EUR/MWh
  double spike_prob = 0.0;     // per hour
  double spike_scale = 0.0;    // EUR/MWh
  double spike_attenuation = 1.0;
  double base_level = 50.0; // EUR/MWh
  FundamentalsSpec fundamentals;
};

struct RegimeShift {
  int day_index = 0;        // absolute day index within the dataset
  double level_delta = 0.0; // EUR/MWh added to every zone price from then on
};

struct SyntheticConfig {
  std::uint64_t seed = 0;
  int n_days = 0;
  Date start_day = Date::from_ymd(2023, 1, 1);
  std::vector<ZoneSpec> zones;
  // shared latent daily-shaped factor
  double factor_profile_amp = 1.0;
  double factor_weekend_offset = -0.3; // additive on weekend days
  double factor_rho = 0.7;
  double factor_sigma = 0.7;
  double spike_positive_share = 0.8;
  std::optional<RegimeShift> regime_shift;
};

SyntheticConfig synthetic_config_from_json(const std::string& json_text);
std::string synthetic_config_to_json(const SyntheticConfig& config);

// Deterministic in the config: equal configs give bit-identical datasets.
// Prices carry the shared factor and shared spikes, so neighbor-zone
// prices hold information a single zone's fundamentals cannot recover.
MarketDataset generate_synthetic(const SyntheticConfig& config);

// entsoe-csv writer used by the synth command; round-trips exactly.
void write_entsoe_csv(const HourlySeries& s, const std::string& path);

// Exports every series as entsoe-csv plus a manifest.json referencing them.
void export_dataset_csv(const MarketDataset& dataset, const std::string& dir);

} // namespace epf::ingest
