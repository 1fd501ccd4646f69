#pragma once

// The operator core: canonical Stein operator T_p, its pseudo-inverse
// L_p, the Stein kernel tau_p, the Hoeffding kernel K_p, the solution of
// the Stein equation, standardized operators, score/Fisher information
// and the Menz-Otto reweighted density.

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "steinops/distribution.hpp"
#include "steinops/errors.hpp"
#include "steinops/lattice.hpp"
#include "steinops/numerics.hpp"
#include "steinops/special.hpp"

namespace steinops {

namespace detail {
struct EhCache {
  std::mutex mu;
  std::map<std::uint64_t, double> values;
};
}  // namespace detail

/// A distribution paired with the matching lattice operator and the
/// tolerances every internal expectation uses.
struct SteinContext {
  Distribution dist;
  Lattice ell = Lattice::continuous;
  Tolerance tol;
  std::shared_ptr<detail::EhCache> eh_cache =
      std::make_shared<detail::EhCache>();
};

inline SteinContext make_context(Distribution d, Lattice ell,
                                 Tolerance tol = {}) {
  const bool cont = ell == Lattice::continuous;
  if (cont == d.discrete) {
    throw InvalidParameter(
        "SteinContext: ell = 0 pairs with continuous laws, ell = +/-1 with "
        "discrete ones");
  }
  return SteinContext{std::move(d), ell, tol};
}

/// E[h(X)] memoized per (context, function identity).
inline double expectation_cached(const SteinContext& ctx, const RealFn& h) {
  auto& cache = *ctx.eh_cache;
  {
    std::lock_guard<std::mutex> lock(cache.mu);
    auto it = cache.values.find(h.id());
    if (it != cache.values.end()) return it->second;
  }
  double v;
  try {
    v = expectation(ctx.dist, h, ctx.tol);
  } catch (const NoConvergence& e) {
    throw NotIntegrable(std::string("E[h] does not converge: ") + e.what());
  } catch (const NonFiniteValue& e) {
    throw NotIntegrable(std::string("E[h] is not finite: ") + e.what());
  }
  std::lock_guard<std::mutex> lock(cache.mu);
  return cache.values.emplace(h.id(), v).first->second;
}

/// E[chi^ell(X, y)] = P[X <= y - a_ell].
inline double chi_mean(const SteinContext& ctx, double y) {
  const auto [a, b] = shifts(ctx.ell);
  (void)b;
  return cdf_of(ctx.dist, y - a, ctx.tol);
}

/// E[chi^{-ell}(z, X)] = P[X >= z + a_{-ell}].
inline double chi_mean_flip(const SteinContext& ctx, double z) {
  const auto [a, b] = shifts(negate(ctx.ell));
  (void)b;
  if (ctx.dist.discrete) return sf_of(ctx.dist, z + a - 1.0, ctx.tol);
  return sf_of(ctx.dist, z, ctx.tol);
}

/// Canonical Stein operator: T_p f(x) = Delta^ell (f p)(x) / p(x) on the
/// support, 0 outside.
inline double canonical_apply(const SteinContext& ctx, const RealFn& f,
                              double x) {
  const Distribution& d = ctx.dist;
  if (!d.in_support(x)) return 0.0;
  const double px = d.density(x);
  if (!(px > 0.0)) {
    throw NonFiniteValue("canonical_apply: p(x) = 0 inside declared support");
  }
  const int ell = ell_of(ctx.ell);
  if (ell != 0) {
    const double x1 = x + ell;
    const double fp1 = d.in_support(x1) ? f(x1) * d.density(x1) : 0.0;
    const double v = (fp1 - f(x) * px) / (ell * px);
    if (!std::isfinite(v)) throw NonFiniteValue("canonical_apply: non-finite");
    return v;
  }
  if (d.score) return delta(Lattice::continuous, f, x) + f(x) * d.score(x);
  // no analytic score: differentiate the product f*p directly
  const double h = detail::fd_step(x);
  const double v =
      (f(x + h) * d.density(x + h) - f(x - h) * d.density(x - h)) /
      (2.0 * h * px);
  if (!std::isfinite(v)) throw NonFiniteValue("canonical_apply: non-finite");
  return v;
}

/// p(x) * L_p h(x): the signed accumulated integral
///   int_a^{x-a_ell} (h - E[h]) dP = int_{x+b_ell}^{b} (E[h] - h) dP,
/// evaluated from whichever side of the median has the smaller range.
/// Never divides by p(x), so it is safe arbitrarily deep in the tails.
inline double inverse_times_density(const SteinContext& ctx, const RealFn& h,
                                    double x) {
  const Distribution& d = ctx.dist;
  if (!d.in_support(x)) return 0.0;
  const double eh = expectation_cached(ctx, h);
  const auto [a_l, b_l] = shifts(ctx.ell);
  const bool lower_side = cdf_of(d, x, ctx.tol) <= 0.5;
  const double px = d.density(x);

  if (!d.discrete) {
    auto weighted = [&](double u) {
      const double p = d.density(u);
      return p > 0.0 ? (h(u) - eh) * p : 0.0;
    };
    if (lower_side) return integrate_interval(weighted, d.lo, x, ctx.tol);
    return -integrate_interval(weighted, x, d.hi, ctx.tol);
  }

  auto term = [&](double j) {
    const double p = d.density(j);
    return p > 0.0 ? (h(j) - eh) * p : 0.0;
  };
  // the caller divides by p(x); scale the tail threshold so the quotient
  // keeps tail_tol accuracy even at deep-tail grid points
  const double tail = ctx.tol.tail_tol * std::max(px, 1e-300);
  if (lower_side) {
    const double hi_j = x - a_l;
    if (hi_j < d.lo) return 0.0;
    return sum_interval(term, d.lo, hi_j, tail, std::min(hi_j, x));
  }
  const double lo_j = x + b_l;
  if (lo_j > d.hi) return 0.0;
  return -sum_interval(term, lo_j, d.hi, tail, std::max(lo_j, x));
}

/// Pseudo-inverse Stein operator
///   L_p h(x) = p(x)^{-1} int_a^{x-a_ell} (h - E[h]) dP
///            = p(x)^{-1} int_{x+b_ell}^{b} (E[h] - h) dP,
/// evaluated from whichever side of the median has the smaller range; 0
/// outside the support.
inline double inverse_apply(const SteinContext& ctx, const RealFn& h,
                            double x) {
  const Distribution& d = ctx.dist;
  if (!d.in_support(x)) return 0.0;
  const double px = d.density(x);
  if (!(px > 0.0)) {
    if (!d.discrete) {
      throw TailUnderflow("inverse_apply: p(x) underflows at x = " +
                          std::to_string(x));
    }
    throw NonFiniteValue("inverse_apply: p(x) = 0 inside declared support");
  }
  if (px < 1e-280) {
    throw TailUnderflow("inverse_apply: p(x) underflows at x = " +
                        std::to_string(x));
  }
  const double v = inverse_times_density(ctx, h, x) / px;
  if (!std::isfinite(v)) throw NonFiniteValue("inverse_apply: non-finite");
  return v;
}

/// L_p h as a function value; shares the context caches.
inline RealFn inverse_fn(const SteinContext& ctx, const RealFn& h) {
  return RealFn("Lp[" + h.name() + "]",
                [ctx, h](double x) { return inverse_apply(ctx, h, x); });
}

struct KernelResult {
  RealFn fn;
  bool closed_form = false;
};

/// Stein kernel tau_p = -L_p(Id); closed form when the family table has
/// one, numeric otherwise (flagged in .closed_form).
inline KernelResult stein_kernel(const SteinContext& ctx) {
  if (auto cf = closed_form_kernel(ctx.dist, ctx.ell)) {
    return {*cf, true};
  }
  SteinContext c = ctx;
  return {RealFn("tau[numeric]",
                 [c](double x) { return -inverse_apply(c, fn::identity(), x); }),
          false};
}

/// Hoeffding kernel
///   K_p(x,x') = E[chi(X,x) chi(X,x')] - E[chi(X,x)] E[chi(X,x')],
/// computed through the factorized form
///   E[chi^ell(X, min)] * E[chi^{-ell}(max, X)].
inline double k_kernel(const SteinContext& ctx, double x, double xp) {
  const double m = std::min(x, xp), M = std::max(x, xp);
  return chi_mean(ctx, m) * chi_mean_flip(ctx, M);
}

/// Phi^ell_p(u, x, v) = chi^ell(u,x) chi^{-ell}(x,v) / p(x); 0 outside the
/// support.
inline double phi_factor(const SteinContext& ctx, double u, double x,
                         double v) {
  if (!ctx.dist.in_support(x)) return 0.0;
  const double num =
      chi(ctx.ell, u, x) * chi(negate(ctx.ell), x, v);
  if (num == 0.0) return 0.0;
  return num / ctx.dist.density(x);
}

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

/// Monte Carlo evaluation of -L_p f(x) through the pair representation
///   -L_p f(x) = E[(f(X2) - f(X1)) Phi^ell_p(X1, x, X2)].
inline McEstimate repr_one_mc(const SteinContext& ctx, const RealFn& f,
                              double x, std::size_t n, const RngState& rng) {
  const auto draws = sample(ctx.dist, 2 * n, rng, ctx.tol);
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x1 = draws[2 * i], x2 = draws[2 * i + 1];
    const double v = (f(x2) - f(x1)) * phi_factor(ctx, x1, x, x2);
    sum += v;
    sumsq += v * v;
  }
  McEstimate out;
  out.n = n;
  out.value = sum / n;
  const double var = std::max(0.0, sumsq / n - out.value * out.value);
  out.std_error = std::sqrt(var / n);
  return out;
}

/// Deterministic evaluation of -L_p f(x) through the kernel representation
///   -L_p f(x) = E[ K_p(X,x) / (p(X) p(x)) Delta^{-ell} f(X) ].
inline double repr_two(const SteinContext& ctx, const RealFn& f, double x) {
  const Distribution& d = ctx.dist;
  if (!d.in_support(x)) return 0.0;
  const double px = d.density(x);
  const Lattice flip = negate(ctx.ell);
  if (d.discrete) {
    auto term = [&](double u) {
      if (!d.in_support(u)) return 0.0;
      return k_kernel(ctx, u, x) * delta(flip, f, u);
    };
    return sum_interval(term, d.lo, d.hi, ctx.tol.tail_tol, x) / px;
  }
  auto integrand = [&](double u) {
    return k_kernel(ctx, u, x) * delta(flip, f, u);
  };
  // split at x: K has a kink across the diagonal
  const double left = integrate_interval(integrand, d.lo, x, ctx.tol);
  const double right = integrate_interval(integrand, x, d.hi, ctx.tol);
  return (left + right) / px;
}

/// Solution g_h(x) = L_p h(x+ell) / L_p eta(x+ell) of the eta-standardized
/// Stein equation for h; 0 when x+ell falls outside the support.
inline double stein_solution(const SteinContext& ctx, const RealFn& h,
                             const RealFn& eta, double x) {
  const double y = x + ell_of(ctx.ell);
  if (!ctx.dist.in_support(y)) return 0.0;
  const double den = inverse_apply(ctx, eta, y);
  if (den == 0.0) {
    throw DivisionByZeroWeight("stein_solution: L eta vanishes at x + ell = " +
                               std::to_string(y));
  }
  return inverse_apply(ctx, h, y) / den;
}

/// eta-standardized operator
///   A g(x) = (eta(x) - E[eta]) g(x) + L_p eta(x) Delta^{-ell} g(x).
inline double standardized_apply(const SteinContext& ctx, const RealFn& eta,
                                 const RealFn& g, double x) {
  const double eeta = expectation_cached(ctx, eta);
  return (eta(x) - eeta) * g(x) +
         inverse_apply(ctx, eta, x) * delta(negate(ctx.ell), g, x);
}

/// Generalized score T_p 1 = Delta^ell p / p.
inline RealFn score_fn(const SteinContext& ctx) {
  if (!ctx.dist.discrete && ctx.dist.score) {
    auto s = ctx.dist.score;
    if (ctx.dist.score_deriv) {
      auto sd = ctx.dist.score_deriv;
      return RealFn("score", [s](double x) { return s(x); },
                    [sd](double x) { return sd(x); });
    }
    return RealFn("score", [s](double x) { return s(x); });
  }
  SteinContext c = ctx;
  static const RealFn one = fn::constant(1.0);
  return RealFn("score", [c](double x) { return canonical_apply(c, one, x); });
}

/// Generalized Fisher information E[(T_p 1)^2].
inline double fisher_info(const SteinContext& ctx) {
  const RealFn s = score_fn(ctx);
  return expectation(ctx.dist, [&s](double x) { return s(x) * s(x); },
                     ctx.tol);
}

/// Delta^{-ell} of the score at x.
inline double score_difference(const SteinContext& ctx, const RealFn& score,
                               double x) {
  return delta(negate(ctx.ell), score, x);
}

/// Menz-Otto reweighted law p*_{x'}(x) = K_p(x,x')/p(x') * (-Delta^{-ell}
/// score(x)); a density whenever the score is strictly decreasing.
inline RealFn menz_otto_density(const SteinContext& ctx, double xp) {
  if (!ctx.dist.in_support(xp)) {
    throw InvalidRange("menz_otto_density: x' outside support");
  }
  const RealFn s = score_fn(ctx);
  const auto grid = quantile_grid(ctx.dist, 1e-6, 1.0 - 1e-6, 128, ctx.tol);
  for (double x : grid) {
    if (!(-score_difference(ctx, s, x) > 0.0)) {
      throw NotLogConcave(
          "menz_otto_density: -Delta^{-ell} score not positive at x = " +
          std::to_string(x));
    }
  }
  SteinContext c = ctx;
  const double pxp = ctx.dist.density(xp);
  return RealFn("menz-otto", [c, s, xp, pxp](double x) {
    if (!c.dist.in_support(x)) return 0.0;
    return k_kernel(c, x, xp) / pxp * (-score_difference(c, s, x));
  });
}

// --- Gaussian Mill's-ratio envelope -------------------------------------

/// Phi(x)(1 - Phi(x)) / phi(x) for the standard normal; the tail factor
/// is evaluated as Phi(-x) to avoid cancellation.
inline double gauss_mills_product(double x) {
  return special::norm_cdf(x) * special::norm_cdf(-x) / special::norm_pdf(x);
}

/// Lower envelope 1 / (sqrt(x^2+4) + x), valid for x >= 0.
inline double gauss_mills_lower(double x) {
  return 1.0 / (std::sqrt(x * x + 4.0) + x);
}

/// Upper envelope 4 / (sqrt(x^2+8) + 3x), valid for x >= 0.
inline double gauss_mills_upper(double x) {
  return 4.0 / (std::sqrt(x * x + 8.0) + 3.0 * x);
}

// --- Klaassen weights ----------------------------------------------------

/// The weight -L_p h / Delta^{-ell} h attached to a decreasing h.
struct WeightFn {
  RealFn h;
  RealFn weight;
  bool closed_form = false;  // true when realized by a table kernel
};

/// Builds the Klaassen weight for a decreasing h; monotonicity is checked
/// on the quantile grid.  h = -Id yields the Stein kernel itself (closed
/// form when the family has one).
inline WeightFn make_klaassen_weight(const SteinContext& ctx, const RealFn& h,
                                     int grid_points = 64) {
  const auto grid = quantile_grid(ctx.dist, 1e-6, 1.0 - 1e-6, grid_points,
                                  ctx.tol);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (h(grid[i]) > h(grid[i - 1]) + 1e-12) {
      throw NotDecreasing("make_klaassen_weight: h increases at x = " +
                          std::to_string(grid[i]));
    }
  }
  if (h.name() == "neg-id") {
    auto k = stein_kernel(ctx);
    return {h, k.fn, k.closed_form};
  }
  SteinContext c = ctx;
  RealFn w("klaassen[" + h.name() + "]", [c, h](double x) {
    const double den = delta(negate(c.ell), h, x);
    if (den == 0.0) {
      throw DivisionByZeroWeight("klaassen weight: Delta h = 0 at x = " +
                                 std::to_string(x));
    }
    return -inverse_apply(c, h, x) / den;
  });
  return {h, w, false};
}

}  // namespace steinops
