#include "epf/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "epf/error.hpp"

namespace epf {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string time_string(std::int64_t epoch_s) {
  Date day = Date::from_days(std::int32_t(epoch_s / 86400 -
                                          (epoch_s % 86400 < 0 ? 1 : 0)));
  int sec = int(epoch_s - day.epoch_seconds());
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%sT%02d:%02dZ", day.to_string().c_str(),
                sec / 3600, (sec % 3600) / 60);
  return buf;
}
} // namespace

HourlySeries make_series(std::string name, std::string zone, std::string unit,
                         std::int64_t start_epoch_s, int step_minutes,
                         std::vector<double> values) {
  if (step_minutes != 60 && step_minutes != 15)
    fail(Errc::invalid_argument,
         "series '" + name + "': step must be 60 or 15 minutes, got " +
             std::to_string(step_minutes));
  if (start_epoch_s % 3600 != 0)
    fail(Errc::invalid_argument,
         "series '" + name + "': start is not aligned to an hour boundary");
  HourlySeries s;
  s.name = std::move(name);
  s.zone = std::move(zone);
  s.unit = std::move(unit);
  s.start_epoch_s = start_epoch_s;
  s.step_minutes = step_minutes;
  s.values = std::move(values);
  return s;
}

HourlySeries resample_quarter_to_hour(const HourlySeries& s) {
  if (s.step_minutes != 15)
    fail(Errc::invalid_argument,
         "resample: series '" + s.key() + "' is not 15-minute");
  if (s.values.size() % 4 != 0)
    fail(Errc::parse, "malformed series '" + s.key() + "': " +
                          std::to_string(s.values.size()) +
                          " quarter values is not divisible by 4");
  std::vector<double> hourly(s.values.size() / 4);
  for (std::size_t h = 0; h < hourly.size(); ++h) {
    double sum = 0.0;
    bool gap = false;
    for (int q = 0; q < 4; ++q) {
      double v = s.values[h * 4 + q];
      if (std::isnan(v)) gap = true;
      sum += v;
    }
    hourly[h] = gap ? kNaN : sum / 4.0;
  }
  HourlySeries out = s;
  out.step_minutes = 60;
  out.values = std::move(hourly);
  return out;
}

HourlySeries fill_gaps(const HourlySeries& s, int max_run) {
  if (!s.hourly())
    fail(Errc::invalid_argument, "fill_gaps: series '" + s.key() + "' is not hourly");
  HourlySeries out = s;
  auto& v = out.values;
  std::size_t i = 0;
  while (i < v.size()) {
    if (!std::isnan(v[i])) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < v.size() && std::isnan(v[run_end])) ++run_end;
    std::size_t run = run_end - i;
    bool interior = i > 0 && run_end < v.size();
    if (interior && run <= std::size_t(max_run)) {
      double lo = v[i - 1];
      double hi = v[run_end];
      for (std::size_t k = 0; k < run; ++k)
        v[i + k] = lo + (hi - lo) * double(k + 1) / double(run + 1);
    }
    i = run_end;
  }
  return out;
}

const HourlySeries* MarketDataset::find(const std::string& zone,
                                        const std::string& name) const {
  auto it = series.find(SeriesKey{zone, name});
  return it == series.end() ? nullptr : &it->second;
}

const HourlySeries& MarketDataset::at(const std::string& zone,
                                      const std::string& name) const {
  const HourlySeries* s = find(zone, name);
  if (!s)
    fail(Errc::invalid_argument,
         "dataset has no series '" + name + "' for zone '" + zone + "'");
  return *s;
}

double MarketDataset::value_at(const HourlySeries& s, Date day,
                               int hour) const {
  std::int64_t t = day.epoch_seconds() + std::int64_t(hour) * 3600;
  std::int64_t idx = (t - s.start_epoch_s) / 3600;
  if (idx < 0 || idx >= std::int64_t(s.values.size()))
    fail(Errc::invalid_argument,
         "series '" + s.key() + "' does not cover " + day.to_string() +
             " hour " + std::to_string(hour));
  return s.values[std::size_t(idx)];
}

bool MarketDataset::is_holiday(const std::string& zone, Date day) const {
  auto it = holidays.find(zone);
  return it != holidays.end() && it->second.count(day) > 0;
}

MarketDataset align(const std::vector<HourlySeries>& series_list) {
  if (series_list.empty())
    fail(Errc::invalid_argument, "align: no series given");
  std::int64_t begin = std::numeric_limits<std::int64_t>::min();
  std::int64_t end = std::numeric_limits<std::int64_t>::max();
  for (const auto& s : series_list) {
    if (!s.hourly())
      fail(Errc::invalid_argument,
           "align: series '" + s.key() + "' is not hourly (resample first)");
    begin = std::max(begin, s.start_epoch_s);
    end = std::min(end, s.time_at(s.size()));
  }
  // shrink to whole UTC days
  std::int64_t day_begin = (begin + 86399) / 86400 * 86400;
  std::int64_t day_end = end / 86400 * 86400;
  if (day_begin >= day_end) {
    std::ostringstream msg;
    msg << "align: no common full-day span;";
    for (const auto& s : series_list)
      msg << " " << s.key() << " covers [" << time_string(s.start_epoch_s)
          << ", " << time_string(s.time_at(s.size())) << ")";
    fail(Errc::invalid_argument, msg.str());
  }

  MarketDataset out;
  out.span = DateRange{Date::from_days(std::int32_t(day_begin / 86400)),
                       Date::from_days(std::int32_t(day_end / 86400 - 1))};
  for (const auto& s : series_list) {
    std::size_t from = std::size_t((day_begin - s.start_epoch_s) / 3600);
    std::size_t count = std::size_t((day_end - day_begin) / 3600);
    HourlySeries cut = s;
    cut.start_epoch_s = day_begin;
    cut.values.assign(s.values.begin() + from, s.values.begin() + from + count);
    for (std::size_t i = 0; i < cut.values.size(); ++i)
      if (std::isnan(cut.values[i]))
        fail(Errc::invalid_argument,
             "align: series '" + s.key() + "' has a gap at " +
                 time_string(cut.time_at(i)));
    SeriesKey key{cut.zone, cut.name};
    if (!out.series.emplace(key, std::move(cut)).second)
      fail(Errc::invalid_argument,
           "align: duplicate series '" + s.key() + "'");
  }
  return out;
}

bool is_public_holiday(Date d, const std::set<Date>& calendar) {
  return calendar.count(d) > 0;
}

} // namespace epf
