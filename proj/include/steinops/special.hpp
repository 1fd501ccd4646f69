#pragma once

// Scalar special functions used by the built-in distribution families:
// standard normal pdf/cdf, regularized incomplete gamma and beta.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "steinops/errors.hpp"

namespace steinops::special {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSqrt2 = 1.414213562373095048801688724209698079;
inline constexpr double kSqrt2Pi = 2.506628274631000502415765284811045253;

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / kSqrt2Pi;
}

inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

// log Gamma via the standard library (thread-safe signature).
inline double lgamma(double x) {
  int sign = 0;
  return ::lgamma_r(x, &sign);
}

inline double lchoose(double n, double k) {
  return lgamma(n + 1.0) - lgamma(k + 1.0) - lgamma(n - k + 1.0);
}

namespace detail {

// Series expansion of P(a,x), valid for x < a+1.
inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 2000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-17) {
      return sum * std::exp(-x + a * std::log(x) - lgamma(a));
    }
  }
  throw NoConvergence("incomplete gamma series failed to converge");
}

// Continued fraction for Q(a,x), valid for x >= a+1 (modified Lentz).
inline double gamma_q_cf(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 2000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) {
      return h * std::exp(-x + a * std::log(x) - lgamma(a));
    }
  }
  throw NoConvergence("incomplete gamma continued fraction failed");
}

inline double beta_cf(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 2000; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) return h;
  }
  throw NoConvergence("incomplete beta continued fraction failed");
}

}  // namespace detail

// Regularized lower incomplete gamma P(a,x).
inline double gamma_p(double a, double x) {
  if (a <= 0.0) throw InvalidParameter("gamma_p: a must be positive");
  if (x < 0.0) throw InvalidParameter("gamma_p: x must be nonnegative");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_cf(a, x);
}

// Regularized upper incomplete gamma Q(a,x) = 1 - P(a,x).
inline double gamma_q(double a, double x) {
  if (a <= 0.0) throw InvalidParameter("gamma_q: a must be positive");
  if (x < 0.0) throw InvalidParameter("gamma_q: x must be nonnegative");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
  return detail::gamma_q_cf(a, x);
}

// Regularized incomplete beta I_x(a,b).
inline double beta_inc(double a, double b, double x) {
  if (a <= 0.0 || b <= 0.0) throw InvalidParameter("beta_inc: a,b > 0 required");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbeta = lgamma(a + b) - lgamma(a) - lgamma(b);
  const double front =
      std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * detail::beta_cf(a, b, x) / a;
  }
  return 1.0 - front * detail::beta_cf(b, a, 1.0 - x) / b;
}

}  // namespace steinops::special
