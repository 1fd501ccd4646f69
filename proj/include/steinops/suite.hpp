#pragma once

// The registered cross-module invariant suite: every identity, bound and
// property the library promises, runnable over a chosen set of
// distributions, deterministic under a seed.  Case ids are canonical
// (reports are sorted by id).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "steinops/bounds.hpp"
#include "steinops/eigenweights.hpp"
#include "steinops/families.hpp"
#include "steinops/stein.hpp"
#include "steinops/verify.hpp"

namespace steinops {

struct SuiteCase {
  std::string id;
  double residual = 0.0;
  double threshold = 0.0;
  bool pass = false;
  bool skipped = false;
  std::string note;
};

struct SuiteReport {
  std::vector<SuiteCase> cases;

  int failures() const {
    int n = 0;
    for (const auto& c : cases) {
      if (!c.skipped && !c.pass) ++n;
    }
    return n;
  }
  bool all_pass() const { return failures() == 0; }
};

struct SuiteEntry {
  std::string name;
  Distribution dist;
};

/// The built-in families at their reference parameters.
inline std::vector<SuiteEntry> default_scope() {
  return {
      {"normal", make_normal(0.0, 1.0)},
      {"beta", make_beta(2.0, 2.0)},
      {"gamma", make_gamma(1.3, 2.4)},
      {"student", make_student(3.0)},
      {"fdist", make_fdist(5.0, 8.0)},
      {"poisson", make_poisson(2.0)},
      {"binomial", make_binomial(10.0, 0.4)},
      {"negbinomial", make_negbinomial(2.0, 0.3)},
      {"hypergeom", make_hypergeom(5.0, 4.0, 10.0)},
      {"neghypergeom", make_neghypergeom(10.0, 4.0, 2.0)},
  };
}

inline std::vector<SuiteEntry> scope_from_names(
    const std::vector<std::string>& names) {
  std::vector<SuiteEntry> out;
  const auto all = default_scope();
  for (const auto& n : names) {
    bool found = false;
    for (const auto& e : all) {
      if (e.name == n) {
        out.push_back(e);
        found = true;
        break;
      }
    }
    if (!found) throw InvalidParameter("unknown suite scope entry: " + n);
  }
  return out;
}

namespace detail {

class SuiteBuilder {
 public:
  explicit SuiteBuilder(std::uint64_t seed) : seed_(seed) {}

  void check(const std::string& id, double residual, double threshold,
             std::string note = "") {
    SuiteCase c;
    c.id = id;
    c.residual = residual;
    c.threshold = threshold;
    c.pass = std::isfinite(residual) && residual <= threshold;
    c.note = std::move(note);
    rep_.cases.push_back(std::move(c));
  }

  void check_flag(const std::string& id, bool ok, std::string note = "") {
    check(id, ok ? 0.0 : 1.0, 0.5, std::move(note));
  }

  void skip(const std::string& id, std::string note) {
    SuiteCase c;
    c.id = id;
    c.skipped = true;
    c.note = std::move(note);
    rep_.cases.push_back(std::move(c));
  }

  /// Runs the body; any library error becomes a failed case.
  template <class F>
  void guarded(const std::string& id, F&& body) {
    try {
      body();
    } catch (const Error& e) {
      check(id + ".error", 1.0, 0.0, e.what());
    }
  }

  RngState rng_for(std::size_t salt) const {
    return RngState{seed_}.split(salt);
  }

  SuiteReport take() {
    std::sort(rep_.cases.begin(), rep_.cases.end(),
              [](const SuiteCase& a, const SuiteCase& b) { return a.id < b.id; });
    return std::move(rep_);
  }

 private:
  std::uint64_t seed_;
  SuiteReport rep_;
};

struct Battery {
  std::vector<RealFn> hs;        // test functions h for inverse identities
  std::vector<RealFn> gs;        // test functions g for bounds
  std::vector<RealFn> dec_hs;    // decreasing weights h
};

// Integrability-aware batteries.  Heavy-tailed families drop e^{-x}
// (student) and fourth-moment test functions (student nu<=4, fdist d2<=8).
inline Battery battery_for(const SuiteEntry& e) {
  Battery b;
  b.hs = {fn::identity(), fn::square(), fn::exp_neg()};
  b.gs = {fn::identity(), fn::square(), fn::exp_neg()};
  b.dec_hs = {fn::neg_identity(), fn::exp_neg()};
  const std::string& f = e.dist.family;
  const auto& p = e.dist.params;
  double max_moment = 1e9;
  bool expneg_ok = true;
  if (f == "student") {
    max_moment = p[0];
    expneg_ok = false;  // e^{-x} explodes on the left tail
  } else if (f == "fdist") {
    max_moment = p[1] / 2.0;
  }
  // e^{-x} is a valid Klaassen weight only when its weight stays
  // integrable: the ratio -L h / Delta h grows like e^{+x}, which
  // subexponential right tails (gamma, F, negative binomial) cannot absorb
  const bool expneg_weight_ok =
      expneg_ok && f != "gamma" && f != "fdist" && f != "negbinomial";
  auto strip = [&](std::vector<RealFn>& v, bool allow_expneg) {
    std::vector<RealFn> keep;
    for (const auto& fn_ : v) {
      if (fn_.name() == "exp-neg" && !allow_expneg) continue;
      if (fn_.name() == "square" && !(max_moment > 4.0)) continue;
      keep.push_back(fn_);
    }
    v = std::move(keep);
  };
  strip(b.hs, expneg_ok);
  strip(b.gs, expneg_ok);
  strip(b.dec_hs, expneg_weight_ok);
  return b;
}

inline std::vector<Lattice> lattices_for(const Distribution& d) {
  if (d.discrete) return {Lattice::backward, Lattice::forward};
  return {Lattice::continuous};
}

inline std::string ell_tag(Lattice l) {
  switch (l) {
    case Lattice::backward: return ".b";
    case Lattice::forward: return ".f";
    default: return "";
  }
}

// In-class f for the boundary checks: vanishes where the class requires.
inline RealFn inclass_f(const Distribution& d, Lattice ell) {
  if (!d.discrete) return fn::identity();
  if (ell == Lattice::forward) {
    const double lo = d.lo;
    if (lo == 0.0) return fn::identity();
    return RealFn("x-lo", [lo](double x) { return x - lo; });
  }
  if (std::isfinite(d.hi)) {
    const double hi = d.hi;
    return RealFn("hi-x", [hi](double x) { return hi - x; });
  }
  return fn::identity();
}

inline void run_entry_cases(SuiteBuilder& sb, const SuiteEntry& e,
                            std::size_t entry_idx) {
  const std::string& nm = e.name;
  const ValidationReport vr = validate(e.dist, 1e-8);
  sb.check(nm + ".mass", vr.mass_error, 1e-8, vr.note);
  if (!vr.pass) {
    sb.skip(nm + ".downstream", "validation failed; entry skipped");
    return;
  }

  const Battery bat = battery_for(e);
  const Tolerance tight{1e-14, 1e-13};

  for (Lattice ell : lattices_for(e.dist)) {
    const std::string tag = nm + ell_tag(ell);
    const SteinContext ctx = make_context(e.dist, ell);
    const SteinContext ctx_tight = make_context(e.dist, ell, tight);
    const Lattice flip = negate(ell);
    const auto grid = quantile_grid(e.dist, 1e-6, 1.0 - 1e-6, 64);
    const bool disc = e.dist.discrete;

    // closed-form kernel == -L(Id) on the grid
    sb.guarded(tag + ".kernel_closed", [&] {
      if (auto cf = closed_form_kernel(e.dist, ell)) {
        // residuals scaled by 1 + |tau|: the pmf itself carries a relative
        // rounding floor which unbounded kernels amplify
        double worst = 0.0;
        for (double x : grid) {
          const double c = (*cf)(x);
          const double r =
              std::fabs(-inverse_apply(ctx_tight, fn::identity(), x) - c);
          worst = std::max(worst, r / (1.0 + std::fabs(c)));
        }
        sb.check(tag + ".kernel_closed", worst, disc ? 1e-12 : 1e-8);
      } else {
        sb.skip(tag + ".kernel_closed", "no table kernel for this lattice");
      }
    });

    // Pearson/Ord triple consistency (backward/continuous kernels)
    if (ell != Lattice::forward && e.dist.triple) {
      sb.guarded(tag + ".triple", [&] {
        if (auto cf = closed_form_kernel(e.dist, ell)) {
          double worst = 0.0;
          for (double x : grid) {
            worst = std::max(worst, std::fabs((*cf)(x) - (*e.dist.triple)(x)));
          }
          sb.check(tag + ".triple", worst, 1e-10);
        }
      });
    }

    // E[tau] = Var
    sb.guarded(tag + ".etau_var", [&] {
      const auto kr = stein_kernel(ctx_tight);
      const double etau = expectation(e.dist, kr.fn, tight);
      sb.check(tag + ".etau_var", std::fabs(etau - variance_of(e.dist)), 1e-8);
    });

    // inverse identity T(L h) = h - E[h] on the grid
    for (const auto& h : bat.hs) {
      sb.guarded(tag + ".inverse_identity." + h.name(), [&] {
        const double eh = expectation_cached(ctx_tight, h);
        const RealFn lh = inverse_fn(ctx_tight, h);
        double worst = 0.0;
        for (double x : grid) {
          const double got = canonical_apply(ctx_tight, lh, x);
          worst = std::max(worst, std::fabs(got - (h(x) - eh)));
        }
        sb.check(tag + ".inverse_identity." + h.name(), worst, 1e-8);
      });
    }

    // representation II agrees with the defining form
    sb.guarded(tag + ".repr_two_agree", [&] {
      double worst = 0.0;
      for (std::size_t i = 0; i < grid.size(); i += grid.size() / 5 + 1) {
        const double x = grid[i];
        worst = std::max(worst,
                         std::fabs(repr_two(ctx_tight, fn::identity(), x) +
                                   inverse_apply(ctx_tight, fn::identity(), x)));
      }
      sb.check(tag + ".repr_two_agree", worst, 1e-7);
    });

    // Hoeffding kernel: positivity, symmetry against the covariance
    // definition, domination by the diagonal
    sb.guarded(tag + ".kkernel", [&] {
      double worst = 0.0;
      const std::size_t step = grid.size() / 6 + 1;
      for (std::size_t i = 0; i < grid.size(); i += step) {
        for (std::size_t j = 0; j < grid.size(); j += step) {
          const double x = grid[i], xp = grid[j];
          const double k = k_kernel(ctx, x, xp);
          worst = std::max(worst, -k);  // positivity
          worst = std::max(worst, std::fabs(k - k_kernel(ctx, xp, x)));
          const double m = std::min(x, xp);
          worst = std::max(worst, k - k_kernel(ctx, m, m));
          // covariance-definition cross-check; the indicator regions are
          // integrated explicitly (quadrature over a kink is unreliable)
          const auto [a_l, b_l] = shifts(ell);
          auto region_mass = [&](double y) {
            const double top = y - a_l;
            if (disc) {
              return top < e.dist.lo
                         ? 0.0
                         : sum_interval([&](double u) { return e.dist.density(u); },
                                        e.dist.lo, top, ctx.tol.tail_tol,
                                        std::min(top, mean_of(e.dist)));
            }
            return integrate_interval(
                [&](double u) { return e.dist.density(u); }, e.dist.lo, top,
                ctx.tol);
          };
          const double direct = region_mass(std::min(x, xp)) -
                                region_mass(x) * region_mass(xp);
          worst = std::max(worst, std::fabs(k - direct));
        }
      }
      sb.check(tag + ".kkernel", worst, disc ? 1e-12 : 1e-7);
    });

    // standardized operator has p-mean zero; integrated in the
    // tail-robust form (eta - E eta) g p + (L eta p) Delta g
    sb.guarded(tag + ".standardized_mean_zero", [&] {
      const RealFn g = bat.gs.back();
      const RealFn eta = fn::identity();
      const double eeta = expectation_cached(ctx_tight, eta);
      auto integrand = [&](double x) {
        if (!e.dist.in_support(x)) return 0.0;
        const double p = e.dist.density(x);
        if (p == 0.0) return 0.0;
        const double first = (eta(x) - eeta) * g(x) * p;
        const double itd = inverse_times_density(ctx_tight, eta, x);
        return itd == 0.0 ? first : first + itd * delta(flip, g, x);
      };
      double v;
      if (disc) {
        v = sum_interval(integrand, e.dist.lo, e.dist.hi, tight.tail_tol,
                         mean_of(e.dist));
      } else {
        v = integrate_interval(integrand, e.dist.lo, e.dist.hi, tight);
      }
      sb.check(tag + ".standardized_mean_zero", std::fabs(v), 1e-7);
    });

    // covariance identity closure, single and double form
    for (std::size_t i = 0; i + 1 < bat.gs.size() + 1 && i < 2; ++i) {
      const RealFn& f = fn::identity();
      const RealFn& g = bat.gs[std::min(i, bat.gs.size() - 1)];
      const std::string pair = f.name() + "," + g.name();
      sb.guarded(tag + ".cov_identity(" + pair + ")", [&] {
        const double cov = cov_exact(ctx, f, g);
        const double single = cov_identity_rhs(ctx, f, g, CovForm::single);
        const double dbl = cov_identity_rhs(ctx, f, g, CovForm::double_form);
        const double thr = 1e-6 * (1.0 + std::fabs(cov));
        sb.check(tag + ".cov_identity_single(" + pair + ")",
                 std::fabs(cov - single), thr);
        sb.check(tag + ".cov_identity_double(" + pair + ")",
                 std::fabs(cov - dbl), thr);
      });
    }

    // variance sandwich and its saturation
    for (const auto& h : bat.dec_hs) {
      for (const auto& g : bat.gs) {
        sb.guarded(tag + ".sandwich(" + g.name() + ";" + h.name() + ")", [&] {
          const BoundReport r = variance_sandwich(ctx, g, h);
          const double slack = 1e-9 * (1.0 + r.center);
          const double viol =
              std::max(r.lower - r.center - slack, r.center - r.upper - slack);
          sb.check(tag + ".sandwich(" + g.name() + ";" + h.name() + ")",
                   std::max(viol, 0.0), 0.0,
                   r.boundary_status == "pass" ? "" : r.boundary_details);
        });
      }
      sb.guarded(tag + ".saturation(" + h.name() + ")", [&] {
        RealFn g2("2h+1", [h](double x) { return 2.0 * h(x) + 1.0; },
                  h.has_diff() ? std::function<double(double)>(
                                     [h](double x) { return 2.0 * h.diff(x); })
                               : nullptr);
        const BoundReport r = variance_sandwich(ctx, g2, h);
        sb.check(tag + ".saturation(" + h.name() + ")",
                 std::fabs(r.upper - r.center), 1e-8 * (1.0 + r.center));
      });
    }

    // Cramer-Rao equality at f = tau
    sb.guarded(tag + ".cramer_rao_equality", [&] {
      if (auto cf = closed_form_kernel(e.dist, ell)) {
        const double lcr = lower_cramer_rao(ctx_tight, fn::identity(), *cf);
        const double var = variance_of(e.dist);
        sb.check(tag + ".cramer_rao_equality", std::fabs(lcr - var),
                 1e-8 * (1.0 + var));
      } else {
        sb.skip(tag + ".cramer_rao_equality", "no table kernel");
      }
    });

    // in-class boundary pairs
    sb.guarded(tag + ".boundary_inclass", [&] {
      const RealFn f = inclass_f(e.dist, ell);
      double worst = 0.0;
      for (const auto& g : bat.gs) {
        const auto cr = verify::boundary_conditions_check(ctx_tight, f, g);
        worst = std::max(worst, std::max(cr.v1_residual, cr.v2_residual));
      }
      sb.check(tag + ".boundary_inclass", worst, 1e-7);
    });

    // monotone f has sign-constant L f
    sb.guarded(tag + ".sign_constancy", [&] {
      double hi = -1e300, lo = 1e300;
      for (double x : grid) {
        const double v = inverse_apply(ctx, fn::identity(), x);
        hi = std::max(hi, v);
        lo = std::min(lo, v);
      }
      // all values on one side of zero (up to rounding)
      const double viol = std::min(std::max(hi, 0.0), std::max(-lo, 0.0));
      sb.check(tag + ".sign_constancy", viol, 1e-10);
    });
  }

  // Monte Carlo representation I against representation II
  sb.guarded(nm + ".repr_mc", [&] {
    const Lattice ell = e.dist.discrete ? Lattice::forward : Lattice::continuous;
    const SteinContext ctx = make_context(e.dist, ell);
    const auto g5 = quantile_grid(e.dist, 0.1, 0.9, 5);
    double worst_sigmas = 0.0;
    for (std::size_t i = 0; i < g5.size(); ++i) {
      const auto mc =
          repr_one_mc(ctx, fn::identity(), g5[i], 20000, sb.rng_for(entry_idx * 16 + i));
      const double ref = repr_two(ctx, fn::identity(), g5[i]);
      worst_sigmas = std::max(
          worst_sigmas, std::fabs(mc.value - ref) / std::max(mc.std_error, 1e-12));
    }
    sb.check(nm + ".repr_mc", worst_sigmas, 3.0);
  });
}

inline void run_normal_extras(SuiteBuilder& sb) {
  const SteinContext ctx = make_context(make_normal(0.0, 1.0),
                                        Lattice::continuous, Tolerance{1e-13, 1e-12});
  const auto grid = quantile_grid(ctx.dist, 1e-6, 1.0 - 1e-6, 256);

  // Chernoff endpoints
  sb.guarded("normal.chernoff", [&] {
    const BoundReport r = variance_sandwich(ctx, fn::square(), fn::neg_identity());
    const double worst = std::max({std::fabs(r.lower - 0.0),
                                   std::fabs(r.center - 2.0),
                                   std::fabs(r.upper - 4.0)});
    sb.check("normal.chernoff.x2", worst, 1e-8);
    const BoundReport r1 =
        variance_sandwich(ctx, fn::identity(), fn::neg_identity());
    const double worst1 = std::max({std::fabs(r1.lower - 1.0),
                                    std::fabs(r1.center - 1.0),
                                    std::fabs(r1.upper - 1.0)});
    sb.check("normal.chernoff.id", worst1, 1e-8);
  });

  // Mill's-ratio envelope on [0, 10]
  sb.guarded("normal.mills", [&] {
    double worst = 0.0;
    double maxratio = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double x = 10.0 * i / 199.0;
      const double r = gauss_mills_product(x);
      worst = std::max(worst, gauss_mills_lower(x) - r);
      worst = std::max(worst, r - gauss_mills_upper(x));
      maxratio = std::max(maxratio, r);
    }
    sb.check("normal.mills.envelope", worst, 1e-12);
    const double half_sqrt_pi_over_2 =
        0.5 * std::sqrt(special::kPi / 2.0);
    sb.check("normal.mills.max_at_zero",
             std::fabs(gauss_mills_product(0.0) - half_sqrt_pi_over_2), 1e-9);
    sb.check("normal.mills.max_global",
             std::fabs(maxratio - half_sqrt_pi_over_2), 1e-9);
  });

  // sup_x |L f| <= sqrt(pi/2) ||f||_inf over a bounded battery
  sb.guarded("normal.sup_bound", [&] {
    struct Bf {
      RealFn f;
      double sup;
    };
    const std::vector<Bf> battery = {
        {fn::sine(), 1.0},
        {RealFn("cos", [](double x) { return std::cos(x); }), 1.0},
        {RealFn("tanh", [](double x) { return std::tanh(x); }), 1.0},
        {RealFn("sech2", [](double x) { return std::exp(-x * x); }), 1.0},
        {RealFn("lorentz", [](double x) { return 1.0 / (1.0 + x * x); }), 1.0},
        {RealFn("sin2x", [](double x) { return std::sin(2.0 * x); }), 1.0},
        {RealFn("cos3x", [](double x) { return std::cos(3.0 * x); }), 1.0},
        {RealFn("tanh_half", [](double x) { return std::tanh(0.5 * x); }), 1.0},
        {RealFn("ratio", [](double x) { return x / (1.0 + x * x); }), 0.5},
        {RealFn("atan", [](double x) { return std::atan(x); }),
         0.5 * special::kPi},
    };
    const double c = std::sqrt(special::kPi / 2.0);
    double worst = 0.0;
    for (const auto& bf : battery) {
      for (double x : grid) {
        worst = std::max(worst, std::fabs(inverse_apply(ctx, bf.f, x)) -
                                    c * bf.sup);
      }
    }
    sb.check("normal.sup_bound", std::max(worst, 0.0), 1e-9);
  });

  // uniform Stein factor for 1-Lipschitz h with eta = Id
  sb.guarded("normal.uniform_factor", [&] {
    const std::vector<RealFn> lip = {
        fn::sine(), RealFn("cos", [](double x) { return std::cos(x); }),
        RealFn("tanh", [](double x) { return std::tanh(x); })};
    double sup = 0.0;
    for (const auto& h : lip) {
      for (double x : grid) {
        sup = std::max(sup, std::fabs(stein_solution(ctx, h, fn::identity(), x)));
      }
    }
    sb.check("normal.uniform_factor", std::max(sup - 1.0, 0.0), 1e-9);
  });

  // non-uniform factor |L f(x)| <= 2 ||f|| E[chi] E[chi-flip] / p(x)
  sb.guarded("normal.nonuniform_factor", [&] {
    double worst = 0.0;
    const RealFn f = fn::sine();
    for (double x : grid) {
      const double envelope = 2.0 * chi_mean(ctx, x) * chi_mean_flip(ctx, x) /
                              ctx.dist.density(x);
      worst =
          std::max(worst, std::fabs(inverse_apply(ctx, f, x)) - envelope);
    }
    sb.check("normal.nonuniform_factor", std::max(worst, 0.0), 1e-9);
  });

  // monotone kernel ratio x -> K(x,x')/p(x) for x < x'
  sb.guarded("normal.monotone_ratio", [&] {
    double worst = 0.0;
    for (double xp : {0.5, 1.0}) {
      double prev = -1e300;
      for (double x : grid) {
        if (x >= xp) break;
        const double v = k_kernel(ctx, x, xp) / ctx.dist.density(x);
        worst = std::max(worst, prev - v);
        prev = v;
      }
    }
    sb.check("normal.monotone_ratio", std::max(worst, 0.0), 1e-12);
  });

  // Brascamp-Lieb reduces to the Chernoff upper bound
  sb.guarded("normal.bl_dominance", [&] {
    double worst = 0.0;
    for (const RealFn& g : {fn::square(), fn::sine()}) {
      const double bl = brascamp_lieb_upper(ctx, g);
      const double kl = variance_sandwich(ctx, g, fn::neg_identity()).upper;
      worst = std::max(worst, std::fabs(bl - kl));
    }
    sb.check("normal.bl_dominance", worst, 1e-7);
  });

  // asymmetric Brascamp-Lieb: equality for f = g = Id, e^{-1/2} for sin
  sb.guarded("normal.asym_bl", [&] {
    const auto r1 = asymmetric_bl_bound(ctx, fn::identity(), fn::identity());
    sb.check("normal.asym_bl.id", std::fabs(r1.bound - 1.0), 1e-8);
    const auto r2 = asymmetric_bl_bound(ctx, fn::sine(), fn::identity());
    const double ecos = std::exp(-0.5);
    // the sup of |cos| is taken over the grid, so allow its discretization
    sb.check("normal.asym_bl.sin.bound", std::fabs(r2.bound - 1.0), 1e-4);
    sb.check("normal.asym_bl.sin",
             std::max(std::fabs(r2.cov_abs - ecos), r2.cov_abs - r2.bound),
             1e-8);
    const auto r3 = asymmetric_bl_bound(ctx, fn::square(), fn::identity());
    sb.check_flag("normal.asym_bl.divergent", r3.divergent,
                  "unbounded ratio must be flagged");
  });

  // Hermite He2 has constant weight 1/2
  sb.guarded("normal.hermite_weight", [&] {
    RealFn he2("He2", [](double x) { return x * x - 1.0; },
               [](double x) { return 2.0 * x; });
    double worst = 0.0;
    for (double x : grid) {
      worst = std::max(worst, std::fabs(weight_ratio(ctx, he2, x) - 0.5));
    }
    sb.check("normal.hermite_weight", worst, 1e-8);
  });

  // Lagrange remainder: MC gap matches upper^2 - cov^2; saturated case is 0
  sb.guarded("normal.lagrange", [&] {
    const auto est = lagrange_gap(ctx, fn::square(), fn::square(),
                                  fn::neg_identity(), 50000, sb.rng_for(901));
    sb.check("normal.lagrange.x2",
             std::fabs(est.value - 12.0) / std::max(3.0 * est.std_error, 1e-9),
             1.0);
    const auto sat = lagrange_gap(ctx, fn::neg_identity(), fn::neg_identity(),
                                  fn::neg_identity(), 2000, sb.rng_for(902));
    sb.check("normal.lagrange.saturated", std::fabs(sat.value), 1e-300);
  });

  // Menz-Otto reweighted density has mass one
  sb.guarded("normal.menz_otto", [&] {
    double worst = 0.0;
    for (double xp : {-1.0, 0.0, 1.0}) {
      const RealFn p = menz_otto_density(ctx, xp);
      const double mass =
          integrate_interval([&](double x) { return p(x); }, ctx.dist.lo,
                             ctx.dist.hi, Tolerance{1e-10, 1e-9});
      worst = std::max(worst, std::fabs(mass - 1.0));
    }
    sb.check("normal.menz_otto_mass", worst, 1e-6);
  });
}

inline void run_structural_extras(SuiteBuilder& sb) {
  // gamma(0.5, 1) is not strictly log-concave: Menz-Otto must refuse
  sb.guarded("gamma05.menz_otto_reject", [&] {
    const SteinContext g05 = make_context(make_gamma(0.5, 1.0), Lattice::continuous);
    bool rejected = false;
    try {
      (void)menz_otto_density(g05, 1.0);
    } catch (const NotLogConcave&) {
      rejected = true;
    }
    sb.check_flag("gamma05.menz_otto_reject", rejected);
  });

  // student(1.5) rejected by Brascamp-Lieb
  sb.guarded("student15.bl_reject", [&] {
    const SteinContext st = make_context(make_student(1.5), Lattice::continuous);
    bool rejected = false;
    try {
      (void)brascamp_lieb_upper(st, fn::identity());
    } catch (const NotLogConcave&) {
      rejected = true;
    }
    sb.check_flag("student15.bl_reject", rejected);
  });

  // binomial out-of-class counterexample: f(n) != 0 must fail v1
  sb.guarded("binomial.boundary_counterexample", [&] {
    const SteinContext bctx = make_context(make_binomial(3.0, 0.5),
                                           Lattice::backward);
    const auto cr = verify::boundary_conditions_check(
        bctx, fn::constant(1.0), fn::constant(1.0));
    const double expected = bctx.dist.density(3.0);  // f(n) g(n+1) p(n)
    const bool flagged = !cr.v1_pass && std::fabs(cr.boundary_right) > 1e-6;
    sb.check_flag("binomial.boundary_counterexample", flagged);
    sb.check("binomial.boundary_counterexample.value",
             std::fabs(cr.boundary_right - expected), 1e-12);
  });

  // exact-rational oracle agreement on the finite discrete built-ins
  for (const auto& spec :
       {std::pair<std::string, Distribution>{"binomial3", make_binomial(3.0, 0.5)},
        {"binomial50", make_binomial(50.0, 0.2)},
        {"hypergeom", make_hypergeom(5.0, 4.0, 10.0)},
        {"neghypergeom", make_neghypergeom(10.0, 4.0, 2.0)}}) {
    sb.guarded("oracle." + spec.first, [&] {
      double worst = 0.0;
      for (Lattice ell : {Lattice::backward, Lattice::forward}) {
        const SteinContext ctx = make_context(spec.second, ell, Tolerance{1e-14, 1e-13});
        for (double x = spec.second.lo; x <= spec.second.hi; x += 1.0) {
          const double exact =
              verify::oracle_inverse_finite(spec.second, ell,
                                            [](double u) { return u; },
                                            static_cast<long>(x))
                  .get_d();
          worst = std::max(
              worst, std::fabs(inverse_apply(ctx, fn::identity(), x) - exact));
        }
      }
      sb.check("oracle." + spec.first, worst, 1e-12);
    });
  }

  // eigen machinery on binomial(5, 0.3)
  sb.guarded("eigen.binomial5", [&] {
    const Distribution b5 = make_binomial(5.0, 0.3);
    const SteinContext ctx = make_context(b5, Lattice::forward, Tolerance{1e-13, 1e-12});
    // self-adjointness over a scaled degree-<=5 polynomial basis
    double asym = 0.0;
    for (int i = 0; i <= 5; ++i) {
      for (int j = i; j <= 5; ++j) {
        RealFn fi("poly", [i](double x) { return std::pow(x / 5.0, i); });
        RealFn fj("poly", [j](double x) { return std::pow(x / 5.0, j); });
        asym = std::max(asym, eigen_selfadjoint_check(ctx, fi, fj));
      }
    }
    sb.check("eigen.binomial5.selfadjoint", asym, 1e-12);

    const EigenWeightAnalysis ew = eigen_weight_analysis(ctx);
    const auto certified =
        verify::oracle_spectrum(b5, Lattice::forward, ew.eigenvalues);
    double worst = 0.0;
    for (std::size_t k = 0; k < certified.size(); ++k) {
      worst = std::max(worst, std::fabs(certified[k] - ew.eigenvalues[k]));
    }
    sb.check("eigen.binomial5.spectrum_vs_oracle", worst, 1e-10);
    double wworst = 0.0;
    for (double r : ew.weight_residuals) wworst = std::max(wworst, r);
    sb.check("eigen.binomial5.weight_constancy", wworst, 1e-8);
  });
}

}  // namespace detail

/// Runs every registered invariant over the given scope; deterministic
/// under the seed; cases are ordered by id.
inline SuiteReport invariant_suite(const std::vector<SuiteEntry>& scope,
                                   std::uint64_t seed) {
  detail::SuiteBuilder sb(seed);
  bool have_normal = false, have_binomial = false;
  for (std::size_t i = 0; i < scope.size(); ++i) {
    detail::run_entry_cases(sb, scope[i], i);
    have_normal |= scope[i].dist.family == "normal";
    have_binomial |= scope[i].dist.family == "binomial";
  }
  if (have_normal) detail::run_normal_extras(sb);
  if (have_normal && have_binomial) detail::run_structural_extras(sb);
  return sb.take();
}

inline SuiteReport invariant_suite_all(std::uint64_t seed) {
  return invariant_suite(default_scope(), seed);
}

}  // namespace steinops
