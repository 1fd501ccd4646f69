#pragma once

// The ell-indexed difference/derivative calculus: the three operators
// Delta^ell (backward difference, derivative, forward difference), the
// shift constants a_ell/b_ell, generalized indicators chi^ell and
// probabilistic integration.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>

#include "steinops/errors.hpp"
#include "steinops/quadrature.hpp"

namespace steinops {

enum class Lattice : int {
  backward = -1,   // Delta^- on the integers
  continuous = 0,  // d/dx on the reals
  forward = +1,    // Delta^+ on the integers
};

inline int ell_of(Lattice l) { return static_cast<int>(l); }

inline Lattice lattice_from_ell(int ell) {
  switch (ell) {
    case -1: return Lattice::backward;
    case 0: return Lattice::continuous;
    case +1: return Lattice::forward;
  }
  throw InvalidParameter("ell must be one of {-1, 0, +1}");
}

/// Shift constants: a_ell = 1 iff ell = +1, b_ell = 1 iff ell = -1.
inline std::pair<int, int> shifts(Lattice l) {
  return {l == Lattice::forward ? 1 : 0, l == Lattice::backward ? 1 : 0};
}

inline Lattice negate(Lattice l) { return lattice_from_ell(-ell_of(l)); }

inline bool is_integer(double x) {
  return std::isfinite(x) && x == std::floor(x);
}

/// An evaluable real function of one real variable, optionally carrying
/// its own analytic derivative (used for ell = 0; the discrete
/// differences are always the exact quotients).  Copies share identity,
/// which downstream caches key on.
class RealFn {
 public:
  RealFn() = default;

  explicit RealFn(std::function<double(double)> eval)
      : impl_(std::make_shared<const Impl>(std::move(eval), nullptr, "")) {}

  RealFn(std::function<double(double)> eval, std::function<double(double)> diff)
      : impl_(std::make_shared<const Impl>(std::move(eval), std::move(diff),
                                           "")) {}

  RealFn(std::string name, std::function<double(double)> eval,
         std::function<double(double)> diff = nullptr)
      : impl_(std::make_shared<const Impl>(std::move(eval), std::move(diff),
                                           std::move(name))) {}

  explicit operator bool() const { return static_cast<bool>(impl_); }

  double operator()(double x) const {
    const double v = impl_->eval(x);
    return v;
  }

  bool has_diff() const { return impl_ && impl_->diff != nullptr; }
  double diff(double x) const { return impl_->diff(x); }

  /// Stable identity shared by copies, never reused.
  std::uint64_t id() const { return impl_->uid; }
  const std::string& name() const { return impl_->name; }

 private:
  struct Impl {
    Impl(std::function<double(double)> e, std::function<double(double)> d,
         std::string n)
        : eval(std::move(e)), diff(std::move(d)), name(std::move(n)) {}
    std::function<double(double)> eval;
    std::function<double(double)> diff;
    std::string name;
    std::uint64_t uid = next_uid();
    static std::uint64_t next_uid() {
      static std::atomic<std::uint64_t> counter{1};
      return counter.fetch_add(1, std::memory_order_relaxed);
    }
  };
  std::shared_ptr<const Impl> impl_;
};

namespace fn {

inline RealFn identity() {
  static const RealFn f("id", [](double x) { return x; },
                        [](double) { return 1.0; });
  return f;
}

inline RealFn constant(double c) {
  return RealFn("const", [c](double) { return c; }, [](double) { return 0.0; });
}

inline RealFn square() {
  static const RealFn f("square", [](double x) { return x * x; },
                        [](double x) { return 2.0 * x; });
  return f;
}

inline RealFn neg_identity() {
  static const RealFn f("neg-id", [](double x) { return -x; },
                        [](double) { return -1.0; });
  return f;
}

inline RealFn exp_neg() {
  static const RealFn f("exp-neg", [](double x) { return std::exp(-x); },
                        [](double x) { return -std::exp(-x); });
  return f;
}

inline RealFn sine() {
  static const RealFn f("sin", [](double x) { return std::sin(x); },
                        [](double x) { return std::cos(x); });
  return f;
}

}  // namespace fn

namespace detail {
// Central-difference step: cbrt(machine eps) scaled to |x|.
inline double fd_step(double x) {
  static const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  return h0 * std::max(1.0, std::fabs(x));
}

inline void require_lattice_point(double x, const char* who) {
  if (!is_integer(x)) {
    throw InvalidParameter(std::string(who) +
                           ": x must be an integer lattice point, got " +
                           std::to_string(x));
  }
}
}  // namespace detail

/// Delta^ell f at x: f'(x) when ell = 0 (analytic derivative when the
/// function carries one, else central finite difference), the exact
/// difference quotient (f(x+ell)-f(x))/ell otherwise.
inline double delta(Lattice l, const RealFn& f, double x) {
  const int ell = ell_of(l);
  if (ell == 0) {
    if (f.has_diff()) {
      const double d = f.diff(x);
      if (!std::isfinite(d)) throw NonFiniteValue("delta: derivative non-finite");
      return d;
    }
    const double h = detail::fd_step(x);
    const double fp = f(x + h), fm = f(x - h);
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NonFiniteValue("delta: f non-finite near x = " + std::to_string(x));
    }
    return (fp - fm) / (2.0 * h);
  }
  detail::require_lattice_point(x, "delta");
  const double f1 = f(x + ell), f0 = f(x);
  if (!std::isfinite(f1) || !std::isfinite(f0)) {
    throw NonFiniteValue("delta: f non-finite at lattice point");
  }
  return (f1 - f0) / ell;
}

/// Generalized indicator chi^ell(x,y) = 1[x <= y - a_ell].
inline double chi(Lattice l, double x, double y) {
  const auto [a, b] = shifts(l);
  (void)b;
  return x <= y - a ? 1.0 : 0.0;
}

/// Re-accumulates a Delta^{-ell} image df over [x1, x2]:
///   ell =  0:  integral of df over (x1, x2)
///   ell = -1:  sum_{j=x1}^{x2-1} df(j)
///   ell = +1:  sum_{j=x1+1}^{x2} df(j)
/// Equals f(x2) - f(x1) whenever df = Delta^{-ell} f.
inline double prob_integrate(Lattice l, const RealFn& df, double x1, double x2,
                             double abs_tol = 1e-10, double rel_tol = 1e-8,
                             int max_subdiv = 2000) {
  if (x1 > x2) throw InvalidRange("prob_integrate: x1 > x2");
  const int ell = ell_of(l);
  if (ell == 0) {
    return integrate_adaptive([&df](double u) { return df(u); }, x1, x2,
                              abs_tol, rel_tol, max_subdiv)
        .value;
  }
  detail::require_lattice_point(x1, "prob_integrate");
  detail::require_lattice_point(x2, "prob_integrate");
  const long lo = ell < 0 ? static_cast<long>(x1) : static_cast<long>(x1) + 1;
  const long hi = ell < 0 ? static_cast<long>(x2) - 1 : static_cast<long>(x2);
  double s = 0.0;
  for (long j = lo; j <= hi; ++j) {
    const double v = df(static_cast<double>(j));
    if (!std::isfinite(v)) throw NonFiniteValue("prob_integrate: df non-finite");
    s += v;
  }
  return s;
}

}  // namespace steinops
