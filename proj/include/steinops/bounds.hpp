#pragma once

// Covariance identities and the bound zoo built on them: Cramer-Rao
// lower bounds, Klaassen covariance/variance bounds, Brascamp-Lieb
// (symmetric and asymmetric), Cacoullos specializations and the
// Lagrange-remainder diagnostic.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "steinops/errors.hpp"
#include "steinops/stein.hpp"

namespace steinops {

/// E[fg] - E[f]E[g].
inline double cov_exact(const SteinContext& ctx, const RealFn& f,
                        const RealFn& g) {
  const double ef = expectation_cached(ctx, f);
  const double eg = expectation_cached(ctx, g);
  const double efg = expectation(
      ctx.dist, [&](double x) { return f(x) * g(x); }, ctx.tol);
  return efg - ef * eg;
}

enum class CovForm {
  single,       // E[ -L_p f(X) * Delta^{-ell} g(X) ]
  double_form,  // E[ Delta f(X) K(X,X')/(p(X)p(X')) Delta g(X') ]
};

namespace detail {

// Integration window covering all but ~1e-13 of the mass.
inline std::pair<double, double> mass_window(const SteinContext& ctx) {
  const Distribution& d = ctx.dist;
  double lo = d.lo, hi = d.hi;
  if (std::isinf(lo)) lo = quantile_of(d, 1e-13, ctx.tol);
  if (std::isinf(hi)) hi = quantile_of(d, 1.0 - 1e-13, ctx.tol);
  return {lo, hi};
}

// Integral of f against the base measure (Lebesgue or counting) over the
// support.
inline double mu_integral(const SteinContext& ctx,
                          const std::function<double(double)>& f) {
  const Distribution& d = ctx.dist;
  if (d.discrete) {
    const double peak = d.mean ? *d.mean : std::nan("");
    return sum_interval(f, d.lo, d.hi, ctx.tol.tail_tol, peak);
  }
  return integrate_interval(f, d.lo, d.hi, ctx.tol);
}

// E[(Delta f)(Delta g) w] for the Klaassen weight of h, evaluated without
// ever dividing by the density: w(x) p(x) = -L_p h(x) p(x) / Delta h(x).
inline double weighted_delta_product(const SteinContext& ctx, const WeightFn& w,
                                     const RealFn& f, const RealFn& g) {
  const Lattice flip = negate(ctx.ell);
  if (w.closed_form) {
    return expectation(
        ctx.dist,
        [&](double x) { return delta(flip, f, x) * delta(flip, g, x) * w.weight(x); },
        ctx.tol);
  }
  return mu_integral(ctx, [&](double x) {
    if (!ctx.dist.in_support(x)) return 0.0;
    const double itd = inverse_times_density(ctx, w.h, x);
    if (itd == 0.0) return 0.0;
    return delta(flip, f, x) * delta(flip, g, x) * (-itd) /
           delta(flip, w.h, x);
  });
}

}  // namespace detail

/// Right-hand side of the first-order covariance identity, either as the
/// single expectation or as the Hoeffding-kernel double form.
inline double cov_identity_rhs(const SteinContext& ctx, const RealFn& f,
                               const RealFn& g, CovForm form) {
  const Lattice flip = negate(ctx.ell);
  if (form == CovForm::single) {
    return detail::mu_integral(ctx, [&](double x) {
      if (!ctx.dist.in_support(x)) return 0.0;
      const double itd = inverse_times_density(ctx, f, x);
      return itd == 0.0 ? 0.0 : -itd * delta(flip, g, x);
    });
  }
  const Distribution& d = ctx.dist;
  if (d.discrete) {
    const auto [lo, hi] = detail::mass_window(ctx);
    double s = 0.0;
    for (double x = lo; x <= hi; x += 1.0) {
      const double df = delta(flip, f, x);
      if (df == 0.0) continue;
      for (double xp = lo; xp <= hi; xp += 1.0) {
        s += df * k_kernel(ctx, x, xp) * delta(flip, g, xp);
      }
    }
    return s;
  }
  // continuous: per-axis adaptive panels with a split on the diagonal,
  // where the kernel K(x,x') = F(min)(1-F(max)) has a kink
  auto inner = [&](double xp) {
    auto row = [&](double x) {
      return k_kernel(ctx, x, xp) * delta(flip, f, x);
    };
    const double below = integrate_interval(row, d.lo, xp, ctx.tol);
    const double above = integrate_interval(row, xp, d.hi, ctx.tol);
    return (below + above) * delta(flip, g, xp);
  };
  const double left = integrate_interval(
      inner, d.lo, mean_of(d, ctx.tol), ctx.tol);
  const double right = integrate_interval(
      inner, mean_of(d, ctx.tol), d.hi, ctx.tol);
  return left + right;
}

/// Cramer-Rao type lower bound E[f Delta^{-ell} g]^2 / E[(T_p f)^2].
inline double lower_cramer_rao(const SteinContext& ctx, const RealFn& g,
                               const RealFn& f) {
  const Lattice flip = negate(ctx.ell);
  const double num = expectation(
      ctx.dist, [&](double x) { return f(x) * delta(flip, g, x); }, ctx.tol);
  SteinContext c = ctx;
  const double den = expectation(
      ctx.dist,
      [&, c](double x) {
        const double t = canonical_apply(c, f, x);
        return t * t;
      },
      ctx.tol);
  if (!(den > 0.0)) {
    throw ZeroDenominator("lower_cramer_rao: E[(T f)^2] vanishes");
  }
  return num * num / den;
}

/// Klaassen covariance upper bound
///   sqrt(E[(Delta f)^2 w]) * sqrt(E[(Delta g)^2 w]).
inline double upper_klaassen_cov(const SteinContext& ctx, const RealFn& f,
                                 const RealFn& g, const WeightFn& w) {
  const double a = detail::weighted_delta_product(ctx, w, f, f);
  const double b = detail::weighted_delta_product(ctx, w, g, g);
  if (a < 0.0 || b < 0.0) {
    throw NotDecreasing("upper_klaassen_cov: weight went negative");
  }
  return std::sqrt(a) * std::sqrt(b);
}

namespace detail {

/// Limit of a sequence approaching a support endpoint: Aitken
/// delta-squared acceleration, clamped by the final term whenever the
/// magnitudes shrink monotonically (the limit is then zero within
/// resolution).
inline double limit_along(const std::vector<double>& v) {
  double best = v.back();
  for (std::size_t i = 0; i + 2 < v.size(); ++i) {
    const double d1 = v[i + 1] - v[i];
    const double d2 = v[i + 2] - v[i + 1];
    const double den = d2 - d1;
    best = std::fabs(den) > 1e-300 ? v[i + 2] - d2 * d2 / den : v[i + 2];
  }
  bool shrinking = true;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    shrinking = shrinking && std::fabs(v[i + 1]) <= std::fabs(v[i]) + 1e-300;
  }
  if (shrinking && std::fabs(v.back()) <= 1e-2 * std::fabs(v.front())) {
    return std::fabs(best) < std::fabs(v.back()) ? best : v.back();
  }
  return best;
}

inline constexpr double kTailQuantiles[5] = {1e-4, 1e-6, 1e-8, 1e-10, 1e-12};

}  // namespace detail

struct BoundaryProbe {
  double left = 0.0;   // boundary product toward the lower endpoint
  double right = 0.0;  // boundary product toward the upper endpoint
  bool pass = true;
  std::string details;
};

/// Light check of the IBP boundary products (L_p h)(x) g(x - ell) p(x)
/// toward both support endpoints, extrapolated along the quantile grid.
inline BoundaryProbe boundary_probe(const SteinContext& ctx, const RealFn& h,
                                    const RealFn& g) {
  BoundaryProbe out;
  const Distribution& d = ctx.dist;
  const int ell = ell_of(ctx.ell);
  const auto [a_l, b_l] = shifts(ctx.ell);
  auto product = [&](double x) {
    if (!d.in_support(x)) return 0.0;
    return inverse_times_density(ctx, h, x) * g(x - ell);
  };
  // paper boundary points: b^- + a_ell and a^+ - b_ell
  if (d.discrete && std::isfinite(d.lo)) {
    out.left = product(d.lo - b_l);
  } else {
    std::vector<double> seq;
    for (double q : detail::kTailQuantiles) {
      seq.push_back(product(quantile_of(d, q, ctx.tol)));
    }
    out.left = detail::limit_along(seq);
  }
  if (d.discrete && std::isfinite(d.hi)) {
    out.right = product(d.hi + a_l);
  } else {
    std::vector<double> seq;
    for (double q : detail::kTailQuantiles) {
      seq.push_back(product(quantile_of(d, 1.0 - q, ctx.tol)));
    }
    out.right = detail::limit_along(seq);
  }
  const double mismatch = std::fabs(out.left - out.right);
  out.pass = mismatch <= 1e-6;
  if (!out.pass) {
    out.details = "boundary products differ by " + std::to_string(mismatch);
  }
  return out;
}

struct BoundReport {
  double lower = 0.0;
  double center = 0.0;  // exact/estimated variance or covariance
  double upper = 0.0;
  std::string weight_provenance;  // "closed-form" | "numeric"
  std::string boundary_status;    // "pass" | "warn"
  std::string boundary_details;
  Tolerance tolerances_achieved;
};

/// Klaassen variance sandwich for a test function g and decreasing h:
///   E[-L_p h Delta g]^2 / Var[h]  <=  Var[g]  <=  E[(Delta g)^2 (-L_p h /
///   Delta h)].
/// With h = -Id this is the Cacoullos/Chernoff form with weight tau_p.
inline BoundReport variance_sandwich(const SteinContext& ctx, const RealFn& g,
                                     const RealFn& h, bool strict = false) {
  const WeightFn w = make_klaassen_weight(ctx, h);

  const double eh = expectation_cached(ctx, h);
  const double eh2 = expectation(
      ctx.dist, [&](double x) { return h(x) * h(x); }, ctx.tol);
  const double var_h = eh2 - eh * eh;
  if (!(var_h > 0.0)) throw ZeroDenominator("variance_sandwich: Var[h] = 0");

  // E[-L_p h Delta g] = E[w Delta h Delta g]; the weight route reuses the
  // closed-form kernel when h = -Id
  const double num = detail::weighted_delta_product(ctx, w, h, g);

  BoundReport r;
  r.lower = num * num / var_h;
  r.upper = detail::weighted_delta_product(ctx, w, g, g);
  const double eg = expectation_cached(ctx, g);
  r.center = expectation(
      ctx.dist, [&](double x) { const double v = g(x) - eg; return v * v; },
      ctx.tol);
  r.weight_provenance = w.closed_form ? "closed-form" : "numeric";
  const BoundaryProbe bp = boundary_probe(ctx, h, g);
  r.boundary_status = bp.pass ? "pass" : "warn";
  r.boundary_details = bp.details;
  r.tolerances_achieved = ctx.tol;
  if (strict && !bp.pass) {
    throw BoundaryViolation("variance_sandwich: " + bp.details);
  }
  return r;
}

namespace detail {
inline RealFn require_log_concave(const SteinContext& ctx) {
  const RealFn s = score_fn(ctx);
  const auto grid = quantile_grid(ctx.dist, 1e-6, 1.0 - 1e-6, 128, ctx.tol);
  for (double x : grid) {
    if (!(-score_difference(ctx, s, x) > 0.0)) {
      throw NotLogConcave("score not strictly decreasing at x = " +
                          std::to_string(x));
    }
  }
  return s;
}
}  // namespace detail

/// Brascamp-Lieb upper bound E[(Delta g)^2 / (-Delta score)] for strictly
/// log-concave laws.
inline double brascamp_lieb_upper(const SteinContext& ctx, const RealFn& g) {
  const RealFn s = detail::require_log_concave(ctx);
  const Lattice flip = negate(ctx.ell);
  return expectation(
      ctx.dist,
      [&](double x) {
        const double dg = delta(flip, g, x);
        return dg * dg / (-score_difference(ctx, s, x));
      },
      ctx.tol);
}

struct AsymmetricBlBound {
  double bound = 0.0;     // grid_sup * E|Delta g|, +inf when divergent
  double grid_sup = 0.0;  // sup over the quantile grid of |Delta f / Delta s|
  bool divergent = false; // sup attained at the grid edge of an unbounded support
  double cov_abs = 0.0;   // |Cov[f,g]| for comparison
};

/// Asymmetric Brascamp-Lieb bound sup|Delta f / Delta score| * E|Delta g|.
/// The sup is a grid sup; when it is attained at the edge of an unbounded
/// support the bound is reported as +infinity.
inline AsymmetricBlBound asymmetric_bl_bound(const SteinContext& ctx,
                                             const RealFn& f, const RealFn& g) {
  const RealFn s = detail::require_log_concave(ctx);
  const Lattice flip = negate(ctx.ell);
  const auto grid = quantile_grid(ctx.dist, 1e-6, 1.0 - 1e-6, 512, ctx.tol);

  AsymmetricBlBound out;
  double sup_interior = 0.0, sup_edge = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double ratio =
        std::fabs(delta(flip, f, grid[i]) / score_difference(ctx, s, grid[i]));
    const bool edge = (i == 0 && std::isinf(ctx.dist.lo)) ||
                      (i + 1 == grid.size() && std::isinf(ctx.dist.hi));
    (edge ? sup_edge : sup_interior) =
        std::max(edge ? sup_edge : sup_interior, ratio);
  }
  out.grid_sup = std::max(sup_interior, sup_edge);
  out.divergent = sup_edge > sup_interior * (1.0 + 1e-9);
  const double edg = expectation(
      ctx.dist, [&](double x) { return std::fabs(delta(flip, g, x)); },
      ctx.tol);
  out.bound = out.divergent ? std::numeric_limits<double>::infinity()
                            : out.grid_sup * edg;
  out.cov_abs = std::fabs(cov_exact(ctx, f, g));
  return out;
}

/// Monte Carlo estimate of half the Lagrange remainder R(f,g,h)/2, the
/// exact gap  (upper Klaassen bound)^2 - Cov[f,g]^2.
inline McEstimate lagrange_gap(const SteinContext& ctx, const RealFn& f,
                               const RealFn& g, const RealFn& h, std::size_t n,
                               const RngState& rng) {
  const Lattice flip = negate(ctx.ell);
  const auto draws = sample(ctx.dist, 4 * n, rng, ctx.tol);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = draws[4 * i], x2 = draws[4 * i + 1];
    const double x3 = draws[4 * i + 2], x4 = draws[4 * i + 3];
    const double h1 = delta(flip, h, x1), h2 = delta(flip, h, x2);
    const double h3 = delta(flip, h, x3), h4 = delta(flip, h, x4);
    const double ratio = (h1 * h4) / (h2 * h3);
    const double a = delta(flip, f, x1) * delta(flip, g, x4) -
                     delta(flip, f, x3) * delta(flip, g, x2) * ratio;
    const double kk = k_kernel(ctx, x1, x2) * k_kernel(ctx, x3, x4) /
                      (ctx.dist.density(x1) * ctx.dist.density(x2) *
                       ctx.dist.density(x3) * ctx.dist.density(x4));
    const double v = a * a / ratio * kk;
    sum += v;
    sumsq += v * v;
  }
  McEstimate out;
  out.n = n;
  const double mean = sum / n;
  out.value = 0.5 * mean;
  const double var = std::max(0.0, sumsq / n - mean * mean);
  out.std_error = 0.5 * std::sqrt(var / n);
  return out;
}

}  // namespace steinops
