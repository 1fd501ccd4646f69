#pragma once

// Expectation engine (adaptive quadrature for continuous laws, exact or
// tail-truncated summation for discrete ones), reproducible sampling,
// quantiles, and a weighted symmetric eigensolver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "steinops/distribution.hpp"
#include "steinops/errors.hpp"
#include "steinops/lattice.hpp"
#include "steinops/quadrature.hpp"

namespace steinops {

struct Tolerance {
  double abs = 1e-10;
  double rel = 1e-8;
  int max_subdiv = 2000;
  double tail_tol = 1e-12;

  Tolerance() = default;
  Tolerance(double abs_, double rel_, int max_subdiv_ = 2000,
            double tail_tol_ = 1e-12)
      : abs(abs_), rel(rel_), max_subdiv(max_subdiv_), tail_tol(tail_tol_) {
    if (!(abs > 0.0) && !(rel > 0.0)) {
      throw InvalidParameter("Tolerance: abs or rel must be positive");
    }
  }
};

/// Reproducible RNG state: identical (seed, algorithm, call sequence)
/// gives identical streams.
struct RngState {
  std::uint64_t seed = 0;
  static constexpr const char* algorithm = "mt19937_64/u53/v1";

  std::mt19937_64 engine() const { return std::mt19937_64(seed); }

  /// Deterministic stream split for parallel shards.
  RngState split(std::uint64_t shard) const {
    return RngState{seed ^ (0x9e3779b97f4a7c15ull * (shard + 1))};
  }
};

namespace detail {

inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline double normal_draw(std::mt19937_64& eng) {
  double u1 = uniform01(eng);
  while (u1 <= 0.0) u1 = uniform01(eng);
  const double u2 = uniform01(eng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
}

}  // namespace detail

/// Integral of f over (lo, hi); open rule near the endpoints.
inline double integrate_interval(const std::function<double(double)>& f,
                                 double lo, double hi, const Tolerance& tol) {
  return integrate_adaptive(f, lo, hi, tol.abs, tol.rel, tol.max_subdiv).value;
}

/// Sum of f(j) over integers lo..hi.  Exact when both endpoints are
/// finite; truncated with tail bound <= tail_tol otherwise.  peak_hint
/// locates the bulk of the mass for infinite-side walks.
inline double sum_interval(const std::function<double(double)>& f, double lo,
                           double hi, double tail_tol,
                           double peak_hint = std::nan("")) {
  if (lo > hi) throw InvalidRange("sum_interval: lo > hi");
  const bool lo_inf = std::isinf(lo), hi_inf = std::isinf(hi);
  // Kahan-compensated accumulation throughout.
  double s = 0.0, comp = 0.0;
  auto add = [&](double v) {
    const double y = v - comp;
    const double t = s + y;
    comp = (t - s) - y;
    s = t;
  };
  if (!lo_inf && !hi_inf) {
    for (long j = static_cast<long>(lo); j <= static_cast<long>(hi); ++j) {
      const double v = f(static_cast<double>(j));
      if (!std::isfinite(v)) throw NonFiniteValue("sum_interval: term non-finite");
      add(v);
    }
    return s;
  }
  // Walk outward from the peak in both directions; stop a side once the
  // terms have stayed below the running tail threshold long enough.
  double start = peak_hint;
  if (!std::isfinite(start)) start = lo_inf ? (hi_inf ? 0.0 : hi) : lo;
  start = std::floor(start);
  start = std::max(start, lo);
  start = std::min(start, hi);

  constexpr int kStreakNeeded = 12;
  constexpr long kMaxTerms = 4000000;
  long terms = 0;
  auto threshold = [&]() { return tail_tol * std::max(1.0, std::fabs(s)) / 64.0; };

  for (int dir : {+1, -1}) {
    double j = (dir > 0) ? start : start - 1.0;
    if (dir < 0 && j < lo) continue;
    int streak = 0;
    while ((dir > 0 ? j <= hi : j >= lo)) {
      const double v = f(j);
      if (!std::isfinite(v)) throw NonFiniteValue("sum_interval: term non-finite");
      add(v);
      if (++terms > kMaxTerms) {
        throw NoConvergence("sum_interval: tail bound stalled");
      }
      streak = (std::fabs(v) < threshold()) ? streak + 1 : 0;
      const bool infinite_side = (dir > 0) ? hi_inf : lo_inf;
      if (infinite_side && streak >= kStreakNeeded) break;
      j += dir;
    }
  }
  return s;
}

/// Lazy mean with single-assignment caching.
double mean_of(const Distribution& d, const Tolerance& tol = {});
/// Lazy variance with single-assignment caching.
double variance_of(const Distribution& d, const Tolerance& tol = {});

/// E[f(X)] for X ~ d.
inline double expectation(const Distribution& d,
                          const std::function<double(double)>& f,
                          const Tolerance& tol = {}) {
  if (d.discrete) {
    auto term = [&](double j) {
      const double p = d.density(j);
      return p > 0.0 ? f(j) * p : 0.0;
    };
    double peak = d.mean ? *d.mean : std::nan("");
    return sum_interval(term, d.lo, d.hi, tol.tail_tol, peak);
  }
  auto integrand = [&](double x) {
    const double p = d.density(x);
    return p > 0.0 ? f(x) * p : 0.0;
  };
  return integrate_interval(integrand, d.lo, d.hi, tol);
}

inline double expectation(const Distribution& d, const RealFn& f,
                          const Tolerance& tol = {}) {
  return expectation(d, [&f](double x) { return f(x); }, tol);
}

inline double mean_of(const Distribution& d, const Tolerance& tol) {
  if (d.mean) return *d.mean;
  auto& c = *d.cache;
  std::call_once(c.mean_once, [&] {
    c.mean = expectation(d, [](double x) { return x; }, tol);
    c.mean_set = true;
  });
  return c.mean;
}

inline double variance_of(const Distribution& d, const Tolerance& tol) {
  if (d.variance) return *d.variance;
  auto& c = *d.cache;
  std::call_once(c.var_once, [&] {
    const double m = mean_of(d, tol);
    c.variance =
        expectation(d, [m](double x) { return (x - m) * (x - m); }, tol);
    c.var_set = true;
  });
  return c.variance;
}

/// P[X <= x], via the stored cdf when present, else by summation or
/// quadrature.  Discrete cdfs are evaluated at floor(x).
inline double cdf_of(const Distribution& d, double x, const Tolerance& tol = {}) {
  if (x < d.lo) return 0.0;
  if (x >= d.hi) return 1.0;
  if (d.cdf) return d.cdf(x);
  if (d.discrete) {
    return sum_interval([&](double j) { return d.density(j); }, d.lo,
                        std::floor(x), tol.tail_tol);
  }
  return integrate_interval([&](double u) { return d.density(u); }, d.lo, x,
                            tol);
}

/// P[X > x], computed without cancellation when a survival function is
/// attached.
inline double sf_of(const Distribution& d, double x, const Tolerance& tol = {}) {
  if (x < d.lo) return 1.0;
  if (x >= d.hi) return 0.0;
  if (d.sf) return d.sf(x);
  if (d.discrete) {
    return sum_interval([&](double j) { return d.density(j); },
                        std::floor(x) + 1.0, d.hi, tol.tail_tol);
  }
  return integrate_interval([&](double u) { return d.density(u); }, x, d.hi,
                            tol);
}

/// Smallest support point x with P[X <= x] >= q.
inline double quantile_of(const Distribution& d, double q,
                          const Tolerance& tol = {}) {
  if (!(q > 0.0 && q < 1.0)) throw InvalidRange("quantile: q in (0,1) required");
  if (d.discrete) {
    double j = std::isfinite(d.lo) ? d.lo : std::floor(mean_of(d, tol));
    // ensure we start at or below the target quantile
    while (j > d.lo && cdf_of(d, j - 1.0, tol) >= q) j -= 1.0;
    while (j < d.hi && cdf_of(d, j, tol) < q) j += 1.0;
    return j;
  }
  // bracket then bisect
  double lo = std::isfinite(d.lo) ? d.lo : -1.0;
  double hi = std::isfinite(d.hi) ? d.hi : 1.0;
  if (!std::isfinite(d.lo)) {
    while (cdf_of(d, lo, tol) > q) lo = lo * 2.0 - 1.0;
  }
  if (!std::isfinite(d.hi)) {
    while (cdf_of(d, hi, tol) < q) hi = hi * 2.0 + 1.0;
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (cdf_of(d, mid, tol) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// n i.i.d. draws, reproducible from the RngState.  Falls back to
/// bisection inversion of the cdf when no sampler is attached.
inline std::vector<double> sample(const Distribution& d, std::size_t n,
                                  const RngState& rng,
                                  const Tolerance& tol = {}) {
  std::vector<double> out;
  out.reserve(n);
  auto eng = rng.engine();
  if (d.sampler) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(d.sampler(eng));
    return out;
  }
  if (!d.cdf) {
    throw NotSampleable("distribution has neither sampler nor cdf");
  }
  for (std::size_t i = 0; i < n; ++i) {
    double u = detail::uniform01(eng);
    while (u <= 0.0 || u >= 1.0) u = detail::uniform01(eng);
    out.push_back(quantile_of(d, u, tol));
  }
  return out;
}

/// Evaluation grid spanning quantiles [lo_q, hi_q]; for discrete laws the
/// image is deduplicated to distinct support points.
inline std::vector<double> quantile_grid(const Distribution& d, double lo_q,
                                         double hi_q, int n,
                                         const Tolerance& tol = {}) {
  if (n < 2) throw InvalidParameter("quantile_grid: need n >= 2");
  if (!(lo_q > 0.0 && hi_q < 1.0 && lo_q < hi_q)) {
    throw InvalidRange("quantile_grid: need 0 < lo_q < hi_q < 1");
  }
  std::vector<double> xs;
  xs.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double q = lo_q + (hi_q - lo_q) * i / (n - 1.0);
    xs.push_back(quantile_of(d, q, tol));
  }
  if (d.discrete) {
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  }
  return xs;
}

struct ValidationReport {
  double mass_error = 0.0;          // |total mass - 1|
  double worst_negative_pdf = 0.0;  // most negative pdf value seen
  double worst_cdf_mismatch = 0.0;  // |cdf increment - mass| on the grid
  bool cdf_monotone = true;
  bool pass = true;
  std::string note;
};

/// Numeric sanity checks of a distribution: total mass, positivity,
/// cdf/pdf consistency on a quantile grid.  Never mutates d.
inline ValidationReport validate(const Distribution& d, double tol_mass,
                                 const Tolerance& tol = {}) {
  if (tol_mass < 0.0) throw InvalidParameter("validate: tol must be >= 0");
  ValidationReport r;
  const double mass = expectation(d, [](double) { return 1.0; }, tol);
  r.mass_error = std::fabs(mass - 1.0);

  std::vector<double> grid;
  try {
    grid = quantile_grid(d, 1e-6, 1.0 - 1e-6, 64, tol);
  } catch (const Error&) {
    grid = {};  // cdf grid unavailable; mass check still stands
  }
  double prev_cdf = 0.0;
  bool have_prev = false;
  for (double x : grid) {
    const double p = d.pdf(x);
    if (p < r.worst_negative_pdf) r.worst_negative_pdf = p;
    if (d.cdf) {
      const double c = d.cdf(x);
      if (have_prev && c < prev_cdf - 1e-12) r.cdf_monotone = false;
      if (d.discrete) {
        const double inc = c - (x - 1.0 < d.lo ? 0.0 : d.cdf(x - 1.0));
        r.worst_cdf_mismatch =
            std::max(r.worst_cdf_mismatch, std::fabs(inc - d.density(x)));
      }
      prev_cdf = c;
      have_prev = true;
    }
  }
  const double tol_eff = std::max(tol_mass, 4.0 * tol.abs + 4.0 * tol.rel);
  r.pass = r.mass_error <= tol_eff && r.worst_negative_pdf >= 0.0 &&
           r.cdf_monotone && r.worst_cdf_mismatch <= std::max(tol_eff, 1e-9);
  if (!r.pass) r.note = "validation failed";
  return r;
}

struct EigenSystem {
  std::vector<double> values;               // ascending
  std::vector<std::vector<double>> vectors; // vectors[k] pairs with values[k]
};

/// Eigen decomposition of a matrix that is self-adjoint with respect to
/// the weighted inner product <u,v> = sum_i w_i u_i v_i.  Eigenvalues
/// ascending; eigenvectors orthonormal in that inner product.
inline EigenSystem weighted_eigensystem(
    const std::vector<std::vector<double>>& m, const std::vector<double>& w) {
  const std::size_t n = m.size();
  if (n == 0) throw DimensionMismatch("weighted_eigensystem: empty matrix");
  for (const auto& row : m) {
    if (row.size() != n) throw DimensionMismatch("matrix is not square");
  }
  if (w.size() != n) throw DimensionMismatch("weights size mismatch");
  for (double wi : w) {
    if (!(wi > 0.0)) throw InvalidParameter("weights must be positive");
  }

  // Similarity transform B = W^{1/2} M W^{-1/2} must be symmetric.
  std::vector<double> sw(n);
  for (std::size_t i = 0; i < n; ++i) sw[i] = std::sqrt(w[i]);
  std::vector<std::vector<double>> b(n, std::vector<double>(n));
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      b[i][j] = sw[i] * m[i][j] / sw[j];
      scale = std::max(scale, std::fabs(b[i][j]));
    }
  }
  double asym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      asym = std::max(asym, std::fabs(b[i][j] - b[j][i]));
    }
  }
  if (asym > 1e-10 * std::max(1.0, scale)) {
    throw NotSelfAdjoint("weighted asymmetry " + std::to_string(asym));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (b[i][j] + b[j][i]);
      b[i][j] = b[j][i] = avg;
    }
  }

  // Cyclic Jacobi on the symmetrized matrix.
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 128; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) off += b[i][j] * b[i][j];
    }
    if (off <= 1e-300 || std::sqrt(off) <= 1e-15 * std::max(1.0, scale)) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (b[p][q] == 0.0) continue;
        const double theta = (b[q][q] - b[p][p]) / (2.0 * b[p][q]);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double bkp = b[k][p], bkq = b[k][q];
          b[k][p] = c * bkp - s * bkq;
          b[k][q] = s * bkp + c * bkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double bpk = b[p][k], bqk = b[q][k];
          b[p][k] = c * bpk - s * bqk;
          b[q][k] = s * bpk + c * bqk;
          const double vpk = v[p][k], vqk = v[q][k];
          v[p][k] = c * vpk - s * vqk;
          v[q][k] = s * vpk + c * vqk;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return b[i][i] < b[j][j]; });

  EigenSystem out;
  out.values.resize(n);
  out.vectors.assign(n, std::vector<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = b[order[k]][order[k]];
    // undo the similarity: eigenvector of M is W^{-1/2} times B's
    auto& vec = out.vectors[k];
    for (std::size_t i = 0; i < n; ++i) vec[i] = v[order[k]][i] / sw[i];
    // weighted normalization and a deterministic sign
    double nrm = 0.0;
    std::size_t imax = 0;
    for (std::size_t i = 0; i < n; ++i) {
      nrm += w[i] * vec[i] * vec[i];
      if (std::fabs(vec[i]) > std::fabs(vec[imax])) imax = i;
    }
    nrm = std::sqrt(nrm);
    const double sgn = vec[imax] < 0.0 ? -1.0 : 1.0;
    for (double& x : vec) x *= sgn / nrm;
  }
  return out;
}

}  // namespace steinops
