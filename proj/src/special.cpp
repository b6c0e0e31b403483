#include "q2d/special.hpp"

#include <limits>

namespace q2d {

double exp_square(double x) {
  const double hi = x * x;
  const double lo = std::fma(x, x, -hi);
  return std::exp(hi) * (1.0 + lo);
}

namespace {

// erfc(x) is still a normal double for x < 26.5; beyond 25 the continued
// fraction needs fewer than a dozen levels for full precision.
constexpr double kCfSwitch = 25.0;

double erfcx_cf(double x) {
  // erfcx(x) = (1/sqrt(pi)) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
  constexpr int depth = 40;
  double tail = x;
  for (int n = depth; n >= 1; --n) {
    tail = x + 0.5 * n / tail;
  }
  return 1.0 / (kSqrtPi * tail);
}

}  // namespace

double erfcx(double x) {
  if (std::isnan(x)) return x;
  if (x < 0.0) {
    if (x < -26.6) return std::numeric_limits<double>::infinity();
    return 2.0 * exp_square(x) - erfcx(-x);
  }
  if (x < kCfSwitch) return exp_square(x) * std::erfc(x);
  return erfcx_cf(x);
}

}  // namespace q2d
