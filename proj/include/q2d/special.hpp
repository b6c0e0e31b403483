#pragma once

#include <cmath>
#include <numbers>

namespace q2d {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSqrtPi = 1.7724538509055160273;
inline constexpr double kTwoOverSqrtPi = 2.0 / kSqrtPi;

/// Scaled complementary error function erfcx(x) = exp(x^2) erfc(x).
///
/// For |x| below the erfc underflow threshold the product is formed from
/// libm's erfc and an exponential of the exactly split square x^2 = hi + lo,
/// so no precision is lost to the large exp(x^2) factor. Large arguments use
/// the Laplace continued fraction, which converges in a handful of terms
/// there. Negative arguments use the reflection erfcx(-x) = 2exp(x^2) - erfcx(x).
double erfcx(double x);

/// exp(x^2) with the square split into hi + lo parts (accurate to a few ulp).
double exp_square(double x);

/// Neumaier compensated accumulator.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      comp += (sum - t) + v;
    } else {
      comp += (v - t) + sum;
    }
    sum = t;
  }
  double value() const { return sum + comp; }
};

}  // namespace q2d
