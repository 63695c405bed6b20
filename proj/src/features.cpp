#include "epf/features.hpp"

#include <algorithm>
#include <cmath>

#include "epf/error.hpp"

namespace epf::features {

namespace {

const int kPriceLags[] = {1, 2, 3, 7};
const int kExogDays[] = {0, 1, 7};

std::string pretty(const std::string& variable) {
  std::string out = variable;
  if (!out.empty()) out[0] = char(std::toupper(unsigned(out[0])));
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

std::string day_tag(int offset) {
  return offset == 0 ? "D" : "D-" + std::to_string(offset);
}

std::string hour_tag(int h) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "h%02d", h);
  return buf;
}

double raw_value(const MarketDataset& dataset, const HourlySeries& s,
                 Date day, int hour) {
  double v = dataset.value_at(s, day, hour);
  if (std::isnan(v))
    fail(Errc::invalid_argument, "NaN in series '" + s.key() + "' at " +
                                     day.to_string() + " hour " +
                                     std::to_string(hour));
  return v;
}

// unscaled feature row for one (day, hour) target
void fill_raw_row(const MarketDataset& dataset, const CovariateConfig& cfg,
                  Date day, int hour, Eigen::Ref<Eigen::RowVectorXd> row) {
  const HourlySeries& own_price = dataset.at(cfg.target_zone, "price");
  int c = 0;
  for (int lag : kPriceLags)
    for (int h = 0; h < 24; ++h)
      row[c++] = raw_value(dataset, own_price, day - lag, h);
  for (const auto& variable : cfg.base_variables) {
    const HourlySeries& s = dataset.at(cfg.target_zone, variable);
    for (int off : kExogDays)
      for (int h = 0; h < 24; ++h)
        row[c++] = raw_value(dataset, s, day - off, h);
  }
  for (const auto& zone : cfg.neighbor_price_zones) {
    const HourlySeries& s = dataset.at(zone, "price");
    for (int h = 0; h < 24; ++h) row[c++] = raw_value(dataset, s, day, h);
  }
  int dow = day.day_of_week();
  for (int d = 0; d < 7; ++d) row[c++] = d == dow ? 1.0 : 0.0;
  row[c++] = dataset.is_holiday(cfg.target_zone, day) ? 1.0 : 0.0;
  for (int h = 0; h < 24; ++h) row[c++] = h == hour ? 1.0 : 0.0;
}

void validate_config(const CovariateConfig& cfg) {
  for (const auto& zone : cfg.neighbor_price_zones)
    if (zone == cfg.target_zone)
      fail(Errc::invalid_argument,
           "covariate config '" + cfg.label +
               "': target zone listed as its own neighbor");
}

void check_history(const MarketDataset& dataset, const DateRange& days) {
  Date earliest_feasible = dataset.span.first + 7;
  if (days.first < earliest_feasible)
    fail(Errc::invalid_argument,
         "insufficient history: earliest feasible target day is " +
             earliest_feasible.to_string() + ", requested " +
             days.first.to_string());
  if (days.last > dataset.span.last)
    fail(Errc::invalid_argument,
         "dataset ends " + dataset.span.last.to_string() +
             ", requested target day " + days.last.to_string());
}

} // namespace

std::string to_string(ScalerKind kind) {
  return kind == ScalerKind::norm ? "norm" : "norm1";
}

ScalerKind scaler_kind_from_string(const std::string& text) {
  if (text == "norm") return ScalerKind::norm;
  if (text == "norm1") return ScalerKind::norm1;
  fail(Errc::parse, "unknown scaler kind '" + text + "'");
}

double norm_transform(double x, ScalerKind kind, double lo, double hi) {
  if (hi <= lo) return 0.0; // constant column
  double t = (x - lo) / (hi - lo);
  return kind == ScalerKind::norm ? t : 2.0 * t - 1.0;
}

double norm_inverse(double t, ScalerKind kind, double lo, double hi) {
  if (hi <= lo) return lo;
  double u = kind == ScalerKind::norm ? t : (t + 1.0) / 2.0;
  return lo + u * (hi - lo);
}

double transform_target(double y, const ScalerState& s) {
  return norm_transform(y, s.kind, s.y_min, s.y_max);
}

double inverse_target(double t, const ScalerState& s) {
  return norm_inverse(t, s.kind, s.y_min, s.y_max);
}

int feature_width(const CovariateConfig& config) {
  return 96 + 72 * int(config.base_variables.size()) +
         24 * int(config.neighbor_price_zones.size()) + 7 + 1 + 24;
}

void design_layout(const CovariateConfig& cfg,
                   std::vector<std::string>& columns,
                   std::vector<std::string>& groups) {
  columns.clear();
  groups.clear();
  columns.reserve(std::size_t(feature_width(cfg)));
  groups.reserve(columns.capacity());
  auto add = [&](const std::string& col, const std::string& group) {
    columns.push_back(col);
    groups.push_back(group);
  };
  for (int lag : kPriceLags) {
    std::string group = "Price " + day_tag(lag);
    for (int h = 0; h < 24; ++h)
      add("price_" + cfg.target_zone + "_" + day_tag(lag) + "_" + hour_tag(h),
          group);
  }
  for (const auto& variable : cfg.base_variables)
    for (int off : kExogDays) {
      std::string group = pretty(variable) + " " + day_tag(off);
      for (int h = 0; h < 24; ++h)
        add(variable + "_" + cfg.target_zone + "_" + day_tag(off) + "_" +
                hour_tag(h),
            group);
    }
  for (const auto& zone : cfg.neighbor_price_zones) {
    std::string group = "Price " + zone + " D";
    for (int h = 0; h < 24; ++h)
      add("price_" + zone + "_D_" + hour_tag(h), group);
  }
  for (int d = 0; d < 7; ++d) add("dow_" + std::to_string(d), "Calendar");
  add("holiday", "Holiday");
  for (int h = 0; h < 24; ++h) add("hour_" + hour_tag(h), "Hour");
}

DesignMatrix build_design(const MarketDataset& dataset,
                          const CovariateConfig& cfg, const DateRange& days,
                          ScalerKind kind) {
  validate_config(cfg);
  check_history(dataset, days);

  DesignMatrix d;
  design_layout(cfg, d.columns, d.groups);
  const int p = int(d.columns.size());
  const int n_days = days.size();
  const int n = n_days * 24;
  const HourlySeries& own_price = dataset.at(cfg.target_zone, "price");

  Eigen::MatrixXd raw(n, p);
  Eigen::VectorXd raw_y(n);
  d.row_index.reserve(std::size_t(n));
  int r = 0;
  for (Date day = days.first; day <= days.last; ++day)
    for (int h = 0; h < 24; ++h, ++r) {
      fill_raw_row(dataset, cfg, day, h, raw.row(r));
      raw_y[r] = raw_value(dataset, own_price, day, h);
      d.row_index.push_back(DayHourIndex{day, h});
    }

  d.scaler.kind = kind;
  d.scaler.x_min = raw.colwise().minCoeff();
  d.scaler.x_max = raw.colwise().maxCoeff();
  d.scaler.y_min = raw_y.minCoeff();
  d.scaler.y_max = raw_y.maxCoeff();

  d.X.resize(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i)
      d.X(i, j) =
          norm_transform(raw(i, j), kind, d.scaler.x_min[j], d.scaler.x_max[j]);
  d.y.resize(n);
  for (int i = 0; i < n; ++i) d.y[i] = transform_target(raw_y[i], d.scaler);
  return d;
}

Eigen::MatrixXd build_day_rows(const MarketDataset& dataset,
                               const CovariateConfig& cfg, Date day,
                               const ScalerState& scaler) {
  validate_config(cfg);
  check_history(dataset, DateRange{day, day});
  const int p = feature_width(cfg);
  if (scaler.x_min.size() != p)
    fail(Errc::invalid_argument,
         "scaler fitted for " + std::to_string(scaler.x_min.size()) +
             " columns, config '" + cfg.label + "' has " + std::to_string(p));
  Eigen::MatrixXd rows(24, p);
  for (int h = 0; h < 24; ++h) fill_raw_row(dataset, cfg, day, h, rows.row(h));
  for (int j = 0; j < p; ++j)
    for (int h = 0; h < 24; ++h)
      rows(h, j) = norm_transform(rows(h, j), scaler.kind, scaler.x_min[j],
                                  scaler.x_max[j]);
  return rows;
}

Eigen::VectorXd DesignMatrix::day_input(int day_pos) const {
  int shared = hour_block_begin();
  return X.row(day_pos * 24).head(shared);
}

Eigen::VectorXd DesignMatrix::day_targets(int day_pos) const {
  return y.segment(day_pos * 24, 24);
}

} // namespace epf::features
