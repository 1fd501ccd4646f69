#pragma once

// Independent oracles: exact rational brute force over finite discrete
// supports (pmf, pseudo-inverse operator, Hoeffding kernel, spectra via
// certified char-poly bisection) and the numeric boundary/IBP condition
// checkers.  Arbitrary-precision rationals are confined to this header.

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "steinops/bounds.hpp"
#include "steinops/distribution.hpp"
#include "steinops/errors.hpp"
#include "steinops/stein.hpp"

namespace steinops::verify {

using Rational = mpq_class;

inline Rational rat_binom(unsigned long n, unsigned long k) {
  mpz_class z;
  mpz_bin_uiui(z.get_mpz_t(), n, k);
  return Rational(z);
}

inline Rational rat_pow(const Rational& q, unsigned long e) {
  Rational r(1);
  for (unsigned long i = 0; i < e; ++i) r *= q;
  return r;
}

/// Exact pmf table of a finite discrete built-in whose parameters are
/// exactly representable (every double is).  first = support lower end.
struct RationalPmf {
  long first = 0;
  std::vector<Rational> probs;

  long last() const { return first + static_cast<long>(probs.size()) - 1; }
  const Rational& at(long x) const {
    static const Rational zero(0);
    if (x < first || x > last()) return zero;
    return probs[static_cast<std::size_t>(x - first)];
  }
  Rational cdf(long x) const {
    Rational s(0);
    for (long j = first; j <= std::min(x, last()); ++j) s += at(j);
    return s;
  }
};

inline RationalPmf rational_pmf(const Distribution& d) {
  RationalPmf t;
  if (d.family == "binomial") {
    const unsigned long n = static_cast<unsigned long>(d.params[0]);
    const Rational th(d.params[1]);  // the double itself, exactly
    const Rational om = Rational(1) - th;
    t.first = 0;
    for (unsigned long x = 0; x <= n; ++x) {
      t.probs.push_back(rat_binom(n, x) * rat_pow(th, x) * rat_pow(om, n - x));
    }
    return t;
  }
  if (d.family == "hypergeom") {
    const long n = static_cast<long>(d.params[0]);
    const long K = static_cast<long>(d.params[1]);
    const long N = static_cast<long>(d.params[2]);
    t.first = std::max(0L, n + K - N);
    const Rational denom = rat_binom(N, n);
    for (long x = t.first; x <= std::min(n, K); ++x) {
      t.probs.push_back(rat_binom(K, x) * rat_binom(N - K, n - x) / denom);
    }
    return t;
  }
  if (d.family == "neghypergeom") {
    const long N = static_cast<long>(d.params[0]);
    const long K = static_cast<long>(d.params[1]);
    const long r = static_cast<long>(d.params[2]);
    t.first = 0;
    const Rational denom = rat_binom(N, K);
    for (long x = 0; x <= K; ++x) {
      t.probs.push_back(rat_binom(x + r - 1, x) * rat_binom(N - r - x, K - x) /
                        denom);
    }
    return t;
  }
  throw NotExact("rational_pmf: no exact table for family " + d.family);
}

inline Rational oracle_expect(const RationalPmf& t,
                              const std::function<double(double)>& h) {
  Rational s(0);
  for (long j = t.first; j <= t.last(); ++j) {
    s += Rational(h(static_cast<double>(j))) * t.at(j);
  }
  return s;
}

/// L_p h(x) by literal enumeration of the defining sum in exact
/// arithmetic.
inline Rational oracle_inverse_finite(const Distribution& d, Lattice ell,
                                      const std::function<double(double)>& h,
                                      long x) {
  if (ell == Lattice::continuous) {
    throw NotExact("oracle_inverse_finite: discrete lattices only");
  }
  const RationalPmf t = rational_pmf(d);
  if (x < t.first || x > t.last()) return Rational(0);
  const Rational eh = oracle_expect(t, h);
  const auto [a_l, b_l] = shifts(ell);
  (void)b_l;
  Rational s(0);
  for (long j = t.first; j <= x - a_l; ++j) {
    s += (Rational(h(static_cast<double>(j))) - eh) * t.at(j);
  }
  return s / t.at(x);
}

inline Rational oracle_tau(const Distribution& d, Lattice ell, long x) {
  return -oracle_inverse_finite(d, ell, [](double u) { return u; }, x);
}

/// Exact Hoeffding kernel through the factorized cdf form.
inline Rational oracle_k_kernel(const RationalPmf& t, Lattice ell, long x,
                                long xp) {
  const auto [a_l, b_l] = shifts(ell);
  (void)b_l;
  const long m = std::min(x, xp), M = std::max(x, xp);
  const auto [a_f, b_f] = shifts(negate(ell));
  (void)b_f;
  const Rational left = t.cdf(m - a_l);
  const Rational right = Rational(1) - t.cdf(M + a_f - 1);
  return left * right;
}

// --- certified spectra ----------------------------------------------------

/// Characteristic polynomial coefficients of an exact rational matrix via
/// Faddeev-LeVerrier: p(x) = x^n + c[0] x^{n-1} + ... + c[n-1].
inline std::vector<Rational> char_poly(
    const std::vector<std::vector<Rational>>& a) {
  const std::size_t n = a.size();
  std::vector<std::vector<Rational>> m(n, std::vector<Rational>(n, Rational(0)));
  std::vector<Rational> c;
  // m starts as A
  for (std::size_t i = 0; i < n; ++i) m[i] = a[i];
  for (std::size_t k = 1; k <= n; ++k) {
    Rational tr(0);
    for (std::size_t i = 0; i < n; ++i) tr += m[i][i];
    const Rational ck = -tr / static_cast<long>(k);
    c.push_back(ck);
    if (k == n) break;
    // m <- A (m + ck I)
    for (std::size_t i = 0; i < n; ++i) m[i][i] += ck;
    std::vector<std::vector<Rational>> next(n,
                                            std::vector<Rational>(n, Rational(0)));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        Rational s(0);
        for (std::size_t l = 0; l < n; ++l) s += a[i][l] * m[l][j];
        next[i][j] = s;
      }
    }
    m = std::move(next);
  }
  return c;
}

inline Rational poly_eval(const std::vector<Rational>& c, const Rational& x) {
  Rational v(1);
  for (const Rational& ci : c) v = v * x + ci;
  return v;
}

/// Certifies one real root of the char poly near a floating approximation
/// by exact-sign bisection; the returned interval midpoint is within
/// `width` of the true root.
inline double certify_root(const std::vector<Rational>& poly, double approx,
                           double width = 1e-15) {
  for (double radius : {1e-9, 1e-7, 1e-5, 1e-3}) {
    Rational lo(approx - radius), hi(approx + radius);
    Rational plo = poly_eval(poly, lo), phi = poly_eval(poly, hi);
    if (plo == 0) return lo.get_d();
    if (phi == 0) return hi.get_d();
    if (sgn(plo) * sgn(phi) > 0) continue;
    while (Rational(hi - lo) > Rational(width)) {
      Rational mid = (lo + hi) / 2;
      Rational pm = poly_eval(poly, mid);
      if (pm == 0) return mid.get_d();
      if (sgn(pm) == sgn(plo)) {
        lo = mid;
        plo = pm;
      } else {
        hi = mid;
      }
    }
    return Rational((lo + hi) / 2).get_d();
  }
  throw NotExact("certify_root: no sign change near " + std::to_string(approx));
}

/// Exact rational assembly of the clamped operator R_p over a finite
/// discrete support (same convention as assemble_r_matrix).
inline std::vector<std::vector<Rational>> oracle_r_matrix(const Distribution& d,
                                                          Lattice ell) {
  const RationalPmf t = rational_pmf(d);
  const std::size_t n = t.probs.size();
  const long lo = t.first, hi = t.last();
  const int e = ell_of(ell);
  if (e == 0) throw NotExact("oracle_r_matrix: discrete lattices only");
  std::vector<std::vector<Rational>> m(n, std::vector<Rational>(n, Rational(0)));
  for (std::size_t j = 0; j < n; ++j) {
    // clamped Delta^{-ell} of the basis indicator at support point lo + j
    std::vector<Rational> u(n, Rational(0));
    for (std::size_t i = 0; i < n; ++i) {
      const long x = lo + static_cast<long>(i);
      if (e == +1) {  // backward difference, clamped at lo
        if (x == lo) continue;
        u[i] = Rational((i == j) ? 1 : 0) - Rational((i - 1 == j) ? 1 : 0);
      } else {  // forward difference, clamped at hi
        if (x == hi) continue;
        u[i] = Rational((i + 1 == j) ? 1 : 0) - Rational((i == j) ? 1 : 0);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const long x = lo + static_cast<long>(i);
      const long x1 = x + e;
      Rational up1(0);
      if (x1 >= lo && x1 <= hi) {
        up1 = u[static_cast<std::size_t>(x1 - lo)] * t.at(x1);
      }
      m[i][j] = (up1 - u[i] * t.at(x)) / (Rational(e) * t.at(x));
    }
  }
  return m;
}

/// Certified spectrum of the exact R_p matrix, anchored at the floating
/// approximations (ascending).
inline std::vector<double> oracle_spectrum(const Distribution& d, Lattice ell,
                                           const std::vector<double>& approx) {
  const auto m = oracle_r_matrix(d, ell);
  const auto poly = char_poly(m);
  std::vector<double> out;
  out.reserve(approx.size());
  for (double a : approx) out.push_back(certify_root(poly, a));
  return out;
}

// --- boundary / IBP condition checkers ------------------------------------

struct ConditionReport {
  double v1_residual = 0.0;  // |E[(T f) g] + E[f Delta g]|
  bool v1_pass = true;
  double v2_residual = 0.0;  // |Cov[f,g] - E[-L f Delta g]|
  bool v2_pass = true;
  double boundary_left = 0.0;   // product toward the lower endpoint
  double boundary_right = 0.0;  // product toward the upper endpoint
  bool boundary_match = true;
  bool f_integrable = true;
  bool g_integrable = true;
  bool fg_integrable = true;
  bool lf_dg_integrable = true;
};


/// Numerically evaluates the boundary products and residuals of the two
/// Stein integration-by-parts formulas for an arbitrary pair (f, g).  All
/// findings are report entries; nothing throws on a failed condition.
inline ConditionReport boundary_conditions_check(const SteinContext& ctx,
                                                 const RealFn& f,
                                                 const RealFn& g,
                                                 double residual_tol = 1e-7) {
  ConditionReport r;
  const Distribution& d = ctx.dist;
  const int ell = ell_of(ctx.ell);
  const auto [a_l, b_l] = shifts(ctx.ell);
  const Lattice flip = negate(ctx.ell);

  auto probe = [&](const std::function<double(double)>& fn, bool& flag) {
    try {
      return expectation(d, fn, ctx.tol);
    } catch (const Error&) {
      flag = false;
      return std::nan("");
    }
  };

  r.f_integrable = true;
  probe([&](double x) { return std::fabs(f(x)); }, r.f_integrable);
  r.g_integrable = true;
  probe([&](double x) { return std::fabs(g(x)); }, r.g_integrable);
  r.fg_integrable = true;
  probe([&](double x) { return std::fabs(f(x) * g(x)); }, r.fg_integrable);

  // v1: E[(T f) g] = -E[f Delta^{-ell} g]
  {
    bool ok1 = true, ok2 = true;
    SteinContext c = ctx;
    const double lhs =
        probe([&, c](double x) { return canonical_apply(c, f, x) * g(x); }, ok1);
    const double rhs = probe([&](double x) { return f(x) * delta(flip, g, x); },
                             ok2);
    if (ok1 && ok2) {
      r.v1_residual = std::fabs(lhs + rhs);
      r.v1_pass = r.v1_residual <= residual_tol;
    } else {
      r.v1_residual = std::nan("");
      r.v1_pass = false;
    }
  }

  // v2: Cov[f,g] = E[-L f Delta^{-ell} g]
  {
    bool ok = true;
    double rhs = std::nan("");
    try {
      rhs = steinops::detail::mu_integral(ctx, [&](double x) {
        if (!d.in_support(x)) return 0.0;
        const double itd = inverse_times_density(ctx, f, x);
        return itd == 0.0 ? 0.0 : -itd * delta(flip, g, x);
      });
    } catch (const Error&) {
      ok = false;
    }
    r.lf_dg_integrable = ok;
    if (ok && r.fg_integrable) {
      const double cov = cov_exact(ctx, f, g);
      r.v2_residual = std::fabs(cov - rhs);
      r.v2_pass = r.v2_residual <= residual_tol;
    } else {
      r.v2_residual = std::nan("");
      r.v2_pass = false;
    }
  }

  // v1 boundary products f(x) g(x - ell) p(x) toward each endpoint
  auto product = [&](double x) {
    const double p = d.density(x);
    return p > 0.0 ? f(x) * g(x - ell) * p : 0.0;
  };
  if (d.discrete) {
    r.boundary_left = std::isfinite(d.lo) ? product(d.lo - b_l) : 0.0;
    r.boundary_right = std::isfinite(d.hi) ? product(d.hi + a_l) : 0.0;
    if (!std::isfinite(d.lo) || !std::isfinite(d.hi)) {
      std::vector<double> seq;
      for (double q : steinops::detail::kTailQuantiles) {
        const bool low = !std::isfinite(d.lo);
        seq.push_back(product(quantile_of(d, low ? q : 1.0 - q, ctx.tol)));
      }
      (std::isfinite(d.lo) ? r.boundary_right : r.boundary_left) =
          steinops::detail::limit_along(seq);
    }
  } else {
    std::vector<double> lo_seq, hi_seq;
    for (double q : steinops::detail::kTailQuantiles) {
      lo_seq.push_back(product(quantile_of(d, q, ctx.tol)));
      hi_seq.push_back(product(quantile_of(d, 1.0 - q, ctx.tol)));
    }
    r.boundary_left = steinops::detail::limit_along(lo_seq);
    r.boundary_right = steinops::detail::limit_along(hi_seq);
  }
  r.boundary_match =
      std::fabs(r.boundary_left - r.boundary_right) <= residual_tol;
  return r;
}

}  // namespace steinops::verify
