#include "fkhom/slope.hpp"

#include <cmath>
#include <cstdlib>
#include <numeric>

#include <fmt/format.h>

#include "fkhom/error.hpp"

namespace fkhom {

Slope::Slope(std::int64_t q, std::int64_t r) {
  if (q <= 0 || r <= 0) {
    throw ValidationError(fmt::format("slope {}/{} must have positive numerator and denominator", q, r));
  }
  const auto g = std::gcd(q, r);
  q_ = q / g;
  r_ = r / g;
}

Slope Slope::approximate(double value, std::int64_t max_den) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ValidationError(fmt::format("slope {} must be positive and finite", value));
  }
  // Convergents h/k of the continued fraction, stopped before k exceeds max_den.
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = value;
  for (int iter = 0; iter < 64; ++iter) {
    const double a_real = std::floor(x);
    const auto a = static_cast<std::int64_t>(a_real);
    const std::int64_t h2 = a * h1 + h0;
    const std::int64_t k2 = a * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1; h1 = h2; k0 = k1; k1 = k2;
    const double frac = x - a_real;
    if (frac < 1e-15) break;
    x = 1.0 / frac;
  }
  if (h1 <= 0) h1 = 1;
  return Slope(h1, k1);
}

Slope Slope::parse(const std::string& text, std::int64_t max_den) {
  const auto slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      std::size_t pos_q = 0, pos_r = 0;
      const auto num = text.substr(0, slash);
      const auto den = text.substr(slash + 1);
      const long long q = std::stoll(num, &pos_q);
      const long long r = std::stoll(den, &pos_r);
      if (pos_q != num.size() || pos_r != den.size()) throw std::invalid_argument(text);
      return Slope(q, r);
    }
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    if (pos != text.size()) throw std::invalid_argument(text);
    const Slope s = approximate(v, max_den);
    if (std::abs(s.value() - v) > 1e-12 * std::max(1.0, v)) {
      throw ValidationError(fmt::format("slope '{}' is not a rational with denominator <= {}", text, max_den));
    }
    return s;
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw ValidationError(fmt::format("cannot parse slope '{}'", text));
  }
}

std::string Slope::str() const { return fmt::format("{}/{}", q_, r_); }

}  // namespace fkhom
