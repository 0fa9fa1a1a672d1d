#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace linkvol {

// Calendar date at day resolution, proleptic Gregorian, no time zone.
// Stored as days since 1970-01-01 so ordering and arithmetic are cheap.
class Date {
 public:
  Date() = default;
  Date(int year, int month, int day);

  // Parses "YYYY-MM-DD". Throws std::invalid_argument on malformed input
  // or an impossible calendar date.
  static Date parse(const std::string& iso);
  static Date from_serial(std::int64_t days) {
    Date d;
    d.serial_ = days;
    return d;
  }

  std::int64_t serial() const { return serial_; }
  int year() const;
  int month() const;
  int day() const;

  // 0 = Monday .. 6 = Sunday.
  int weekday() const {
    return static_cast<int>(((serial_ % 7) + 10) % 7);
  }
  bool is_weekday() const { return weekday() < 5; }

  std::string to_string() const;  // ISO "YYYY-MM-DD"

  friend auto operator<=>(const Date&, const Date&) = default;

  Date operator+(std::int64_t days) const { return from_serial(serial_ + days); }
  Date operator-(std::int64_t days) const { return from_serial(serial_ - days); }
  std::int64_t operator-(const Date& other) const { return serial_ - other.serial_; }

 private:
  std::int64_t serial_ = 0;
};

}  // namespace linkvol
