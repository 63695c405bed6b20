#include "epf/date.hpp"

#include <chrono>
#include <cstdio>

namespace epf {

namespace {

std::chrono::year_month_day to_ymd(std::int32_t days) {
  return std::chrono::year_month_day(
      std::chrono::sys_days(std::chrono::days(days)));
}

} // namespace

Date Date::from_ymd(int year, int month, int day) {
  std::chrono::year_month_day ymd{std::chrono::year(year),
                                  std::chrono::month(unsigned(month)),
                                  std::chrono::day(unsigned(day))};
  auto days = std::chrono::sys_days(ymd).time_since_epoch().count();
  return Date(static_cast<std::int32_t>(days));
}

std::optional<Date> Date::parse(std::string_view iso) {
  int y = 0, m = 0, d = 0;
  char trailing = 0;
  std::string buf(iso);
  if (std::sscanf(buf.c_str(), "%d-%d-%d%c", &y, &m, &d, &trailing) != 3)
    return std::nullopt;
  if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year(y),
                                  std::chrono::month(unsigned(m)),
                                  std::chrono::day(unsigned(d))};
  if (!ymd.ok()) return std::nullopt;
  return from_ymd(y, m, d);
}

int Date::year() const { return int(to_ymd(days_).year()); }
int Date::month() const { return int(unsigned(to_ymd(days_).month())); }
int Date::day() const { return int(unsigned(to_ymd(days_).day())); }

int Date::day_of_week() const {
  std::chrono::weekday wd{std::chrono::sys_days(std::chrono::days(days_))};
  return int(wd.iso_encoding()) - 1; // ISO: Mon=1..Sun=7
}

std::string Date::to_string() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year(), month(), day());
  return buf;
}

int day_of_week(Date d) { return d.day_of_week(); }

} // namespace epf
