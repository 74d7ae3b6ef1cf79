#pragma once

#include <cstdint>
#include <string>

namespace fkhom {

/// Positive rational lattice slope p = q/r, always stored in lowest terms.
///
/// Slopes are rational so that a finite twisted ring realizes the infinite
/// chain exactly: with N = n*r*cells particles and twist Q = q*cells we have
/// p = n*Q/N with no rounding anywhere.
class Slope {
 public:
  Slope() = default;
  Slope(std::int64_t q, std::int64_t r);

  /// Parses "q/r", "q" or a decimal such as "1.25" (converted to the closest
  /// fraction with denominator <= max_den, failing if that is not exact to 1e-12).
  static Slope parse(const std::string& text, std::int64_t max_den = 100000);

  /// Best rational approximation with bounded denominator (continued fractions).
  static Slope approximate(double value, std::int64_t max_den);

  std::int64_t q() const { return q_; }
  std::int64_t r() const { return r_; }
  double value() const { return static_cast<double>(q_) / static_cast<double>(r_); }
  std::string str() const;

  friend bool operator==(const Slope&, const Slope&) = default;

 private:
  std::int64_t q_ = 1;
  std::int64_t r_ = 1;
};

}  // namespace fkhom
