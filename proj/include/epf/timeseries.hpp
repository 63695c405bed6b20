#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "epf/date.hpp"

namespace epf {

// A named, UTC-indexed, fixed-resolution series. Timestamps are implicit:
// t_i = start_epoch_s + i * step_minutes * 60. NaN marks a gap.
struct HourlySeries {
  std::string name;
  std::string zone;
  std::string unit;
  std::int64_t start_epoch_s = 0; // aligned to an hour boundary
  int step_minutes = 60;          // 60 or 15
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  bool hourly() const { return step_minutes == 60; }
  std::int64_t time_at(std::size_t i) const {
    return start_epoch_s + std::int64_t(i) * step_minutes * 60;
  }
  std::string key() const { return name + "@" + zone; }
};

// Validates the construction invariants (step, hour alignment).
HourlySeries make_series(std::string name, std::string zone, std::string unit,
                         std::int64_t start_epoch_s, int step_minutes,
                         std::vector<double> values);

struct DayHourIndex {
  Date day;
  int hour = 0; // 0..23
  auto operator<=>(const DayHourIndex&) const = default;
};

struct SeriesKey {
  std::string zone;
  std::string name;
  auto operator<=>(const SeriesKey&) const = default;
};

// Aligned, gap-free collection of hourly series over a common day span.
struct MarketDataset {
  std::map<SeriesKey, HourlySeries> series;
  DateRange span;
  std::map<std::string, std::set<Date>> holidays; // per zone

  const HourlySeries* find(const std::string& zone,
                           const std::string& name) const;
  const HourlySeries& at(const std::string& zone,
                         const std::string& name) const;
  // value at (day, hour) of an aligned hourly member series
  double value_at(const HourlySeries& s, Date day, int hour) const;
  bool is_holiday(const std::string& zone, Date day) const;
};

// 15-minute series to hourly by arithmetic mean of the 4 quarters;
// NaN in any quarter yields NaN for that hour.
HourlySeries resample_quarter_to_hour(const HourlySeries& s);

// Truncates all series to the common whole-day span and checks the
// result is gap-free.
MarketDataset align(const std::vector<HourlySeries>& series_list);

// Linear interpolation of interior NaN runs of length <= max_run.
HourlySeries fill_gaps(const HourlySeries& s, int max_run);

bool is_public_holiday(Date d, const std::set<Date>& calendar);

} // namespace epf
