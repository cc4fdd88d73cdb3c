#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace hfrisk {

/// Calendar day (proleptic Gregorian, no time of day).
class Date {
 public:
  constexpr Date() = default;
  constexpr explicit Date(std::chrono::sys_days day) : day_(day) {}

  static Date from_ymd(int year, unsigned month, unsigned day);
  static Date from_serial(int days_since_epoch) {
    return Date(std::chrono::sys_days(std::chrono::days(days_since_epoch)));
  }
  /// Strict YYYY-MM-DD. Throws std::invalid_argument.
  static Date parse(std::string_view iso);

  std::string iso() const;
  int serial() const { return static_cast<int>(day_.time_since_epoch().count()); }

  Date operator+(int days) const { return Date(day_ + std::chrono::days(days)); }
  Date operator-(int days) const { return Date(day_ - std::chrono::days(days)); }
  int operator-(Date other) const { return serial() - other.serial(); }
  Date& operator+=(int days) {
    day_ += std::chrono::days(days);
    return *this;
  }

  friend auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days day_{};
};

}  // namespace hfrisk
