#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace epf {

// Civil UTC date as a day count since 1970-01-01.
class Date {
public:
  Date() = default;
  static Date from_days(std::int32_t days) { return Date(days); }
  static Date from_ymd(int year, int month, int day);
  static std::optional<Date> parse(std::string_view iso); // "YYYY-MM-DD"

  std::int32_t days_since_epoch() const { return days_; }
  std::int64_t epoch_seconds() const { return std::int64_t(days_) * 86400; }

  int year() const;
  int month() const;
  int day() const;
  int day_of_week() const; // 0 = Monday .. 6 = Sunday

  std::string to_string() const;

  Date operator+(int days) const { return Date(days_ + days); }
  Date operator-(int days) const { return Date(days_ - days); }
  int operator-(Date other) const { return days_ - other.days_; }
  Date& operator++() { ++days_; return *this; }
  auto operator<=>(const Date&) const = default;

private:
  explicit Date(std::int32_t days) : days_(days) {}
  std::int32_t days_ = 0;
};

// Inclusive day range.
struct DateRange {
  Date first;
  Date last;

  int size() const { return last - first + 1; }
  bool contains(Date d) const { return d >= first && d <= last; }
  auto operator<=>(const DateRange&) const = default;
};

int day_of_week(Date d);

} // namespace epf
