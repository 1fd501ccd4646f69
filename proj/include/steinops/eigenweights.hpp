#pragma once

// Eigenfunctions of the adjoint operator R_p h = T_p(Delta^{-ell} h) and
// the constant Klaassen weights they induce.  On a finite discrete
// support R_p is assembled as an explicit matrix, self-adjoint with
// respect to the pmf weights once the difference is clamped at the inner
// support edge (the discrete Neumann convention); its nonzero modes have
// -L_p h / Delta^{-ell} h constant equal to -1/mu.

#include <cmath>
#include <string>
#include <vector>

#include "steinops/errors.hpp"
#include "steinops/stein.hpp"

namespace steinops {

/// Delta^{-ell} f with the difference clamped to zero at the support edge
/// where it would otherwise reference a point outside the support.
inline double clamped_flip_delta(const SteinContext& ctx, const RealFn& f,
                                 double x) {
  const Distribution& d = ctx.dist;
  if (!d.discrete) return delta(Lattice::continuous, f, x);
  if (ctx.ell == Lattice::forward) {   // flip = backward difference
    if (x == d.lo) return 0.0;
    return f(x) - f(x - 1.0);
  }
  // ell = backward, flip = forward difference
  if (x == d.hi) return 0.0;
  return f(x + 1.0) - f(x);
}

/// R_p f(x) = T_p(Delta^{-ell} f)(x) with the clamped difference.
inline double r_apply(const SteinContext& ctx, const RealFn& f, double x) {
  SteinContext c = ctx;
  RealFn u("flipdelta", [c, f](double y) { return clamped_flip_delta(c, f, y); });
  return canonical_apply(ctx, u, x);
}

/// |E[(R f) g] - E[f (R g)]|.
inline double eigen_selfadjoint_check(const SteinContext& ctx, const RealFn& f,
                                      const RealFn& g) {
  const double lhs = expectation(
      ctx.dist, [&](double x) { return r_apply(ctx, f, x) * g(x); }, ctx.tol);
  const double rhs = expectation(
      ctx.dist, [&](double x) { return f(x) * r_apply(ctx, g, x); }, ctx.tol);
  return std::fabs(lhs - rhs);
}

struct SteinOperatorMatrix {
  std::vector<double> points;                // support points, ascending
  std::vector<double> weights;               // pmf at the support points
  std::vector<std::vector<double>> matrix;   // matrix[i][j] = (R e_j)(x_i)
};

/// Assembles R_p as an explicit matrix over a finite discrete support.
inline SteinOperatorMatrix assemble_r_matrix(const SteinContext& ctx) {
  const Distribution& d = ctx.dist;
  if (!d.discrete || !std::isfinite(d.lo) || !std::isfinite(d.hi)) {
    throw InfiniteSupport("assemble_r_matrix: finite discrete support required");
  }
  const long lo = static_cast<long>(d.lo), hi = static_cast<long>(d.hi);
  const std::size_t n = static_cast<std::size_t>(hi - lo + 1);
  SteinOperatorMatrix out;
  out.points.resize(n);
  out.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.points[i] = static_cast<double>(lo) + i;
    out.weights[i] = d.density(out.points[i]);
  }
  out.matrix.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    const double pj = out.points[j];
    RealFn ej("basis", [pj](double x) { return x == pj ? 1.0 : 0.0; });
    for (std::size_t i = 0; i < n; ++i) {
      out.matrix[i][j] = r_apply(ctx, ej, out.points[i]);
    }
  }
  return out;
}

struct EigenWeightAnalysis {
  std::vector<double> points;
  std::vector<double> eigenvalues;                 // ascending, incl. the 0 mode
  std::vector<std::vector<double>> eigenfunctions; // on the support points
  // for each nonzero mode: the constant weight -1/mu and the worst
  // deviation of -L h / Delta^{-ell} h from it over the support interior
  std::vector<double> weight_constants;
  std::vector<double> weight_residuals;
  std::vector<int> mode_index;  // positions into eigenvalues
};

/// -L_p h(x) / Delta^{-ell} h(x), the Klaassen weight of h at x.
inline double weight_ratio(const SteinContext& ctx, const RealFn& h, double x) {
  const double den = clamped_flip_delta(ctx, h, x);
  if (den == 0.0) {
    throw DivisionByZeroWeight("weight_ratio: Delta h = 0 at x = " +
                               std::to_string(x));
  }
  return -inverse_apply(ctx, h, x) / den;
}

/// Full spectrum of R_p over a finite discrete support, with the constant
/// weight verification for every nonzero mode.  The constant mode (R h =
/// 0) is excluded from the weight table.
inline EigenWeightAnalysis eigen_weight_analysis(const SteinContext& ctx) {
  const SteinOperatorMatrix rm = assemble_r_matrix(ctx);
  const EigenSystem es = weighted_eigensystem(rm.matrix, rm.weights);
  EigenWeightAnalysis out;
  out.points = rm.points;
  out.eigenvalues = es.values;
  out.eigenfunctions = es.vectors;

  double scale = 0.0;
  for (double v : es.values) scale = std::max(scale, std::fabs(v));
  const std::size_t n = rm.points.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double mu = es.values[k];
    if (std::fabs(mu) <= 1e-9 * std::max(1.0, scale)) continue;  // zero mode
    const auto& vec = es.vectors[k];
    RealFn h("eigmode", [pts = rm.points, vec](double x) {
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i] == x) return vec[i];
      }
      return 0.0;
    });
    const double target = -1.0 / mu;
    double worst = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {  // support interior
      const double den = clamped_flip_delta(ctx, h, rm.points[i]);
      if (std::fabs(den) < 1e-12) continue;
      worst = std::max(worst,
                       std::fabs(weight_ratio(ctx, h, rm.points[i]) - target));
    }
    out.weight_constants.push_back(target);
    out.weight_residuals.push_back(worst);
    out.mode_index.push_back(static_cast<int>(k));
  }
  return out;
}

}  // namespace steinops
