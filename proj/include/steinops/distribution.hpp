#pragma once

// The distribution abstraction: a univariate law given by a density or
// pmf on an interval support, with optional cdf, moments, score and
// sampler.  Values are immutable after construction; the lazy moment
// cache is single-assignment so concurrent readers see either "absent"
// or the final value.

#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "steinops/errors.hpp"
#include "steinops/lattice.hpp"

namespace steinops {

/// Coefficients of tau(x) = delta x^2 + beta x + gamma.  For discrete
/// families the triple describes the backward kernel tau^-, for
/// continuous families the kernel tau.
struct PearsonOrdTriple {
  double delta = 0.0;
  double beta = 0.0;
  double gamma = 0.0;

  double operator()(double x) const { return (delta * x + beta) * x + gamma; }
};

namespace detail {
struct MomentCache {
  std::once_flag mean_once, var_once;
  double mean = 0.0, variance = 0.0;
  bool mean_set = false, var_set = false;
};
}  // namespace detail

struct Distribution {
  bool discrete = false;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  std::function<double(double)> pdf;       // required
  std::function<double(double)> cdf;       // optional
  std::function<double(double)> sf;        // optional: P[X > x], tail-accurate
  std::function<double(double)> log_pdf;   // optional
  std::function<double(double)> score;       // optional, continuous: (log p)'
  std::function<double(double)> score_deriv; // optional, continuous: (log p)''
  std::function<double(std::mt19937_64&)> sampler;  // optional single draw

  std::optional<double> mean;      // closed form when known
  std::optional<double> variance;  // closed form when known
  std::optional<PearsonOrdTriple> triple;

  // Closed-form Stein kernels where the family tables list one; all of
  // them are quadratics, stored by coefficients.
  std::optional<PearsonOrdTriple> kernel_backward;    // discrete tau^-
  std::optional<PearsonOrdTriple> kernel_forward;     // discrete tau^+
  std::optional<PearsonOrdTriple> kernel_continuous;  // continuous tau

  std::string family = "custom";
  std::vector<double> params;

  std::shared_ptr<detail::MomentCache> cache =
      std::make_shared<detail::MomentCache>();

  bool has_infinite_support() const { return std::isinf(lo) || std::isinf(hi); }

  /// Density/pmf, zero outside the declared support.
  double density(double x) const {
    if (x < lo || x > hi) return 0.0;
    if (discrete && !is_integer(x)) return 0.0;
    const double v = pdf(x);
    if (!std::isfinite(v)) {
      throw NonFiniteValue("pdf non-finite at x = " + std::to_string(x));
    }
    return v;
  }

  bool in_support(double x) const {
    if (discrete) return is_integer(x) && x >= lo && x <= hi;
    return x > lo && x < hi;
  }
};

/// Closed-form Stein kernel tau^ell when the family tables list one;
/// carries its exact derivative.
inline std::optional<RealFn> closed_form_kernel(const Distribution& d,
                                                Lattice l) {
  const std::optional<PearsonOrdTriple>* tau = nullptr;
  switch (l) {
    case Lattice::backward: tau = &d.kernel_backward; break;
    case Lattice::forward: tau = &d.kernel_forward; break;
    case Lattice::continuous: tau = &d.kernel_continuous; break;
  }
  if (!tau->has_value()) return std::nullopt;
  const PearsonOrdTriple t = **tau;
  return RealFn(
      "tau[" + d.family + "]", [t](double x) { return t(x); },
      [t](double x) { return 2.0 * t.delta * x + t.beta; });
}

}  // namespace steinops
