#include "bayesclear/normal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace bayesclear::normal {

namespace {

constexpr double kTailCut = -8.0;
constexpr int kFractionTerms = 120;

const double kLogSqrt2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
const double kInvSqrt2 = 1.0 / std::numbers::sqrt2;

// For x > 8 returns s = x + 2/(x + 3/(x + ...)), so that the Mills ratio
// cdf(-x)/pdf(x) equals 1/(x + 1/s).
double mills_tail(double x) {
  double s = x;
  for (int k = kFractionTerms; k >= 2; --k) s = x + k / s;
  return s;
}

}  // namespace

double pdf(double z) { return std::exp(log_pdf(z)); }

double log_pdf(double z) { return -0.5 * z * z - kLogSqrt2Pi; }

double cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }

double log_cdf(double z) {
  if (std::isinf(z)) return z > 0 ? 0.0 : -INFINITY;
  if (z < kTailCut) {
    const double x = -z;
    return log_pdf(z) - std::log(x + 1.0 / mills_tail(x));
  }
  if (z > 0.0) return std::log1p(-0.5 * std::erfc(z * kInvSqrt2));
  return std::log(cdf(z));
}

double inverse_mills(double z) {
  if (z < kTailCut) {
    const double x = -z;
    if (std::isinf(x)) return INFINITY;
    return x + 1.0 / mills_tail(x);
  }
  return pdf(z) / cdf(z);
}

double inverse_mills_curvature(double z) {
  if (z < kTailCut) {
    const double x = -z;
    if (std::isinf(x)) return 1.0;
    const double s = mills_tail(x);
    // lambda = x + 1/s and z + lambda = 1/s, no cancellation.
    return std::clamp((x + 1.0 / s) / s, 0.0, 1.0);
  }
  const double lambda = inverse_mills(z);
  return std::clamp(lambda * (z + lambda), 0.0, 1.0);
}

}  // namespace bayesclear::normal
