#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "epf/error.hpp"
#include "epf/ingest.hpp"
#include "epf/rng.hpp"

namespace epf::ingest {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

CounterRng stream(const SyntheticConfig& cfg, const std::string& tag) {
  return CounterRng(cfg.seed, fnv1a64(tag));
}

// mean-zero hourly shape with a morning and an evening peak
double hour_shape(int h) {
  double morning = std::exp(-0.5 * std::pow((h - 8.5) / 2.0, 2));
  double evening = std::exp(-0.5 * std::pow((h - 18.5) / 2.5, 2));
  double night = std::exp(-0.5 * std::pow((h - 3.0) / 3.0, 2));
  return 0.9 * morning + 1.1 * evening - 0.8 * night - 0.25;
}

int day_of_year(Date d) { return d - Date::from_ymd(d.year(), 1, 1); }

// daylight length in hours, longest near day 172 (late June)
double day_length(Date d) {
  return 12.0 + 4.0 * std::cos(kTwoPi * (day_of_year(d) - 172) / 365.25);
}

// 0 outside daylight, sinusoidal bell inside
double solar_elevation_factor(Date d, int h) {
  double len = day_length(d);
  double sunrise = 12.0 - len / 2.0;
  double x = (h + 0.5 - sunrise) / len;
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return std::sin(x * 3.14159265358979323846);
}

void validate(const SyntheticConfig& cfg) {
  if (cfg.n_days < 30)
    fail(Errc::invalid_argument, "synthetic config: n_days must be >= 30");
  if (cfg.zones.empty())
    fail(Errc::invalid_argument, "synthetic config: no zones");
  for (const auto& z : cfg.zones) {
    if (z.spike_prob < 0.0 || z.spike_prob > 1.0)
      fail(Errc::invalid_argument,
           "zone '" + z.name + "': spike_prob must be in [0,1]");
    if (z.noise_sd <= 0.0)
      fail(Errc::invalid_argument,
           "zone '" + z.name + "': noise_sd must be > 0");
  }
}

} // namespace

MarketDataset generate_synthetic(const SyntheticConfig& cfg) {
  validate(cfg);
  const int n_days = cfg.n_days;
  const std::size_t n_hours = std::size_t(n_days) * 24;

  // shared latent factor: profile + AR(1) daily level shock
  std::vector<double> factor(n_hours);
  {
    CounterRng rng = stream(cfg, "factor");
    double shock = 0.0;
    for (int d = 0; d < n_days; ++d) {
      shock = cfg.factor_rho * shock + cfg.factor_sigma * rng.normal();
      Date day = cfg.start_day + d;
      bool weekend = day.day_of_week() >= 5;
      for (int h = 0; h < 24; ++h)
        factor[std::size_t(d) * 24 + h] =
            cfg.factor_profile_amp * hour_shape(h) +
            (weekend ? cfg.factor_weekend_offset : 0.0) + shock;
    }
  }

  // shared spike events; a zone sees the event when its own spike_prob
  // exceeds the shared draw, so lower-probability zones see a subset
  std::vector<double> spike_u(n_hours), spike_mag(n_hours);
  {
    CounterRng rng = stream(cfg, "spikes");
    for (std::size_t i = 0; i < n_hours; ++i) {
      spike_u[i] = rng.uniform();
      double mag = 1.0 + std::abs(rng.normal());
      double sign = rng.uniform() < cfg.spike_positive_share ? 1.0 : -1.0;
      spike_mag[i] = sign * mag;
    }
  }

  MarketDataset out;
  out.span = DateRange{cfg.start_day, cfg.start_day + (n_days - 1)};
  std::int64_t start_s = cfg.start_day.epoch_seconds();

  for (const auto& z : cfg.zones) {
    const auto& f = z.fundamentals;
    std::vector<double> load(n_hours), wind(n_hours), solar(n_hours),
        temp(n_hours), humidity(n_hours), price(n_hours);
    std::vector<double> load_det(n_hours), wind_det(n_hours),
        solar_det(n_hours), temp_det(n_hours);

    CounterRng rng_load = stream(cfg, z.name + "/load");
    CounterRng rng_wind = stream(cfg, z.name + "/wind");
    CounterRng rng_cloud = stream(cfg, z.name + "/cloud");
    CounterRng rng_temp = stream(cfg, z.name + "/temp");
    CounterRng rng_hum = stream(cfg, z.name + "/humidity");
    CounterRng rng_noise = stream(cfg, z.name + "/noise");

    double load_anom = 0.0, wind_anom = 0.0, temp_anom = 0.0;
    constexpr double cloud_mean = 0.625;
    for (int d = 0; d < n_days; ++d) {
      Date day = cfg.start_day + d;
      int doy = day_of_year(day);
      bool weekend = day.day_of_week() >= 5;
      double season = std::cos(kTwoPi * (doy - 15) / 365.25); // winter peak
      double cloud = 0.25 + 0.75 * rng_cloud.uniform();       // per-day cover
      for (int h = 0; h < 24; ++h) {
        std::size_t i = std::size_t(d) * 24 + h;

        load_det[i] = f.load_base * (1.0 + f.load_annual_amp * season) *
                          (1.0 + f.load_daily_amp * hour_shape(h)) -
                      (weekend ? f.load_weekend_drop : 0.0);
        load_anom = f.load_anom_rho * load_anom +
                    f.load_anom_sd * std::sqrt(1.0 - f.load_anom_rho * f.load_anom_rho) *
                        rng_load.normal();
        load[i] = load_det[i] + load_anom;

        wind_det[i] = f.wind_mean;
        wind_anom = f.wind_anom_rho * wind_anom +
                    f.wind_anom_sd * std::sqrt(1.0 - f.wind_anom_rho * f.wind_anom_rho) *
                        rng_wind.normal();
        wind[i] = std::max(0.0, wind_det[i] + wind_anom);

        double elev = solar_elevation_factor(day, h);
        double season_amp = 0.6 + 0.4 * (1.0 - season) / 2.0;
        solar_det[i] = f.solar_peak * season_amp * elev * cloud_mean;
        solar[i] = f.solar_peak * season_amp * elev * cloud;

        temp_det[i] = f.temp_mean - f.temp_annual_amp * season +
                      2.0 * hour_shape(h);
        temp_anom = f.temp_anom_rho * temp_anom +
                    f.temp_anom_sd * std::sqrt(1.0 - f.temp_anom_rho * f.temp_anom_rho) *
                        rng_temp.normal();
        temp[i] = temp_det[i] + temp_anom;

        humidity[i] = std::clamp(
            f.humidity_mean + f.humidity_sd * rng_hum.normal(), 0.0, 100.0);

        // price is linear in the observable fundamental anomalies, so
        // zero coupling leaves zone prices cross-independent
        price[i] = z.base_level + z.factor_loading * factor[i] +
                   f.load_price_weight * (load[i] - load_det[i]) -
                   f.wind_price_weight * (wind[i] - wind_det[i]) -
                   f.solar_price_weight * (solar[i] - solar_det[i]) +
                   f.temp_price_weight * (temp[i] - temp_det[i]) +
                   z.noise_sd * rng_noise.normal() +
                   (spike_u[i] < z.spike_prob
                        ? z.spike_attenuation * z.spike_scale * spike_mag[i]
                        : 0.0);
        if (cfg.regime_shift && d >= cfg.regime_shift->day_index)
          price[i] += cfg.regime_shift->level_delta;
      }
    }

    auto put = [&](const std::string& name, const std::string& unit,
                   std::vector<double> values) {
      out.series.emplace(SeriesKey{z.name, name},
                         make_series(name, z.name, unit, start_s, 60,
                                     std::move(values)));
    };
    put("price", "EUR/MWh", std::move(price));
    put("load", "MW", std::move(load));
    put("wind", "MW", std::move(wind));
    put("solar", "MW", std::move(solar));
    put("temperature", "degC", std::move(temp));
    put("humidity", "%", std::move(humidity));
  }
  return out;
}

SyntheticConfig synthetic_config_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse, std::string("synthetic config: ") + e.what());
  }
  SyntheticConfig cfg;
  cfg.seed = doc.value("seed", std::uint64_t(0));
  cfg.n_days = doc.at("n_days").get<int>();
  if (doc.contains("start_day")) {
    auto d = Date::parse(doc["start_day"].get<std::string>());
    if (!d) fail(Errc::parse, "synthetic config: bad start_day");
    cfg.start_day = *d;
  }
  cfg.factor_profile_amp = doc.value("factor_profile_amp", cfg.factor_profile_amp);
  cfg.factor_weekend_offset =
      doc.value("factor_weekend_offset", cfg.factor_weekend_offset);
  cfg.factor_rho = doc.value("factor_rho", cfg.factor_rho);
  cfg.factor_sigma = doc.value("factor_sigma", cfg.factor_sigma);
  cfg.spike_positive_share =
      doc.value("spike_positive_share", cfg.spike_positive_share);
  if (doc.contains("regime_shift")) {
    RegimeShift rs;
    rs.day_index = doc["regime_shift"].at("day_index").get<int>();
    rs.level_delta = doc["regime_shift"].at("level_delta").get<double>();
    cfg.regime_shift = rs;
  }
  if (!doc.contains("zones") || !doc["zones"].is_array())
    fail(Errc::parse, "synthetic config: needs a 'zones' array");
  for (const auto& jz : doc["zones"]) {
    ZoneSpec z;
    z.name = jz.at("name").get<std::string>();
    z.factor_loading = jz.value("factor_loading", z.factor_loading);
    z.noise_sd = jz.value("noise_sd", z.noise_sd);
    z.spike_prob = jz.value("spike_prob", z.spike_prob);
    z.spike_scale = jz.value("spike_scale", z.spike_scale);
    z.spike_attenuation = jz.value("spike_attenuation", z.spike_attenuation);
    z.base_level = jz.value("base_level", z.base_level);
    if (jz.contains("fundamentals")) {
      const auto& jf = jz["fundamentals"];
      auto& f = z.fundamentals;
      f.load_base = jf.value("load_base", f.load_base);
      f.load_annual_amp = jf.value("load_annual_amp", f.load_annual_amp);
      f.load_daily_amp = jf.value("load_daily_amp", f.load_daily_amp);
      f.load_weekend_drop = jf.value("load_weekend_drop", f.load_weekend_drop);
      f.load_anom_sd = jf.value("load_anom_sd", f.load_anom_sd);
      f.load_anom_rho = jf.value("load_anom_rho", f.load_anom_rho);
      f.load_price_weight = jf.value("load_price_weight", f.load_price_weight);
      f.wind_mean = jf.value("wind_mean", f.wind_mean);
      f.wind_anom_sd = jf.value("wind_anom_sd", f.wind_anom_sd);
      f.wind_anom_rho = jf.value("wind_anom_rho", f.wind_anom_rho);
      f.wind_price_weight = jf.value("wind_price_weight", f.wind_price_weight);
      f.solar_peak = jf.value("solar_peak", f.solar_peak);
      f.solar_price_weight =
          jf.value("solar_price_weight", f.solar_price_weight);
      f.temp_mean = jf.value("temp_mean", f.temp_mean);
      f.temp_annual_amp = jf.value("temp_annual_amp", f.temp_annual_amp);
      f.temp_anom_sd = jf.value("temp_anom_sd", f.temp_anom_sd);
      f.temp_anom_rho = jf.value("temp_anom_rho", f.temp_anom_rho);
      f.temp_price_weight = jf.value("temp_price_weight", f.temp_price_weight);
      f.humidity_mean = jf.value("humidity_mean", f.humidity_mean);
      f.humidity_sd = jf.value("humidity_sd", f.humidity_sd);
    }
    cfg.zones.push_back(std::move(z));
  }
  validate(cfg);
  return cfg;
}

std::string synthetic_config_to_json(const SyntheticConfig& cfg) {
  nlohmann::json doc;
  doc["seed"] = cfg.seed;
  doc["n_days"] = cfg.n_days;
  doc["start_day"] = cfg.start_day.to_string();
  doc["factor_profile_amp"] = cfg.factor_profile_amp;
  doc["factor_weekend_offset"] = cfg.factor_weekend_offset;
  doc["factor_rho"] = cfg.factor_rho;
  doc["factor_sigma"] = cfg.factor_sigma;
  doc["spike_positive_share"] = cfg.spike_positive_share;
  if (cfg.regime_shift)
    doc["regime_shift"] = {{"day_index", cfg.regime_shift->day_index},
                           {"level_delta", cfg.regime_shift->level_delta}};
  doc["zones"] = nlohmann::json::array();
  for (const auto& z : cfg.zones) {
    const auto& f = z.fundamentals;
    doc["zones"].push_back(
        {{"name", z.name},
         {"factor_loading", z.factor_loading},
         {"noise_sd", z.noise_sd},
         {"spike_prob", z.spike_prob},
         {"spike_scale", z.spike_scale},
         {"spike_attenuation", z.spike_attenuation},
         {"base_level", z.base_level},
         {"fundamentals",
          {{"load_base", f.load_base},
           {"load_annual_amp", f.load_annual_amp},
           {"load_daily_amp", f.load_daily_amp},
           {"load_weekend_drop", f.load_weekend_drop},
           {"load_anom_sd", f.load_anom_sd},
           {"load_anom_rho", f.load_anom_rho},
           {"load_price_weight", f.load_price_weight},
           {"wind_mean", f.wind_mean},
           {"wind_anom_sd", f.wind_anom_sd},
           {"wind_anom_rho", f.wind_anom_rho},
           {"wind_price_weight", f.wind_price_weight},
           {"solar_peak", f.solar_peak},
           {"solar_price_weight", f.solar_price_weight},
           {"temp_mean", f.temp_mean},
           {"temp_annual_amp", f.temp_annual_amp},
           {"temp_anom_sd", f.temp_anom_sd},
           {"temp_anom_rho", f.temp_anom_rho},
           {"temp_price_weight", f.temp_price_weight},
           {"humidity_mean", f.humidity_mean},
           {"humidity_sd", f.humidity_sd}}}});
  }
  return doc.dump(2);
}

void write_entsoe_csv(const HourlySeries& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io, "cannot write '" + path + "'");
  out << "timestamp,value\n";
  char num[64];
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    std::int64_t t = s.time_at(i);
    Date day = Date::from_days(std::int32_t(t / 86400));
    int sec = int(t - day.epoch_seconds());
    char ts[32];
    std::snprintf(ts, sizeof(ts), "%sT%02d:%02d:00Z", day.to_string().c_str(),
                  sec / 3600, (sec % 3600) / 60);
    out << ts << ',';
    double v = s.values[i];
    if (std::isnan(v)) {
      out << '\n';
      continue;
    }
    auto res = std::to_chars(num, num + sizeof(num), v);
    out.write(num, res.ptr - num);
    out << '\n';
  }
}

void export_dataset_csv(const MarketDataset& dataset, const std::string& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["entries"] = nlohmann::json::array();
  for (const auto& [key, s] : dataset.series) {
    std::string file = key.zone + "_" + key.name + ".csv";
    write_entsoe_csv(s, (std::filesystem::path(dir) / file).string());
    manifest["entries"].push_back({{"path", file},
                                   {"kind", "entsoe-csv"},
                                   {"name", key.name},
                                   {"zone", key.zone},
                                   {"unit", s.unit}});
  }
  if (!dataset.holidays.empty()) {
    nlohmann::json hf;
    for (const auto& [zone, days] : dataset.holidays) {
      std::string file = "holidays_" + zone + ".txt";
      std::ofstream out(std::filesystem::path(dir) / file);
      for (Date d : days) out << d.to_string() << '\n';
      hf[zone] = file;
    }
    manifest["holiday_files"] = hf;
  }
  std::ofstream out(std::filesystem::path(dir) / "manifest.json");
  if (!out) fail(Errc::io, "cannot write manifest in '" + dir + "'");
  out << manifest.dump(2) << '\n';
}

} // namespace epf::ingest
