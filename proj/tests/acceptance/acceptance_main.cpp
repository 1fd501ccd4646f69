// Acceptance suite: one pass/fail line per criterion, exit 0 only when
// every criterion holds at its stated tolerance.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "steinops/bounds.hpp"
#include "steinops/eigenweights.hpp"
#include "steinops/families.hpp"
#include "steinops/stein.hpp"
#include "steinops/verify.hpp"

using namespace steinops;
using verify::Rational;

namespace {

struct Harness {
  int failed = 0;
  void report(int num, const std::string& what, bool ok,
              const std::string& detail) {
    std::printf("%s | criterion %2d | %s%s%s\n", ok ? "PASS" : "FAIL", num,
                what.c_str(), detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++failed;
  }
  template <class F>
  void run(int num, const std::string& what, F&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      report(num, what, false, std::string("exception: ") + e.what());
    }
  }
};

std::string fmt_res(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

struct FamilyCase {
  std::string id;
  std::vector<double> params;
};

const std::vector<FamilyCase>& battery_families() {
  static const std::vector<FamilyCase> fams = {
      {"poisson", {0.5}},       {"poisson", {2}},
      {"poisson", {20}},        {"binomial", {3, 0.5}},
      {"binomial", {50, 0.2}},  {"negbinomial", {2, 0.3}},
      {"hypergeom", {5, 4, 10}}, {"neghypergeom", {10, 4, 2}},
      {"normal", {0, 1}},       {"normal", {1, 4}},
      {"beta", {1.3, 2.4}},     {"beta", {2, 2}},
      {"gamma", {1.3, 2.4}},    {"student", {3}},
      {"fdist", {5, 8}},
  };
  return fams;
}

std::string label(const FamilyCase& fc) {
  std::string s = fc.id + "(";
  for (std::size_t i = 0; i < fc.params.size(); ++i) {
    if (i) s += ",";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", fc.params[i]);
    s += buf;
  }
  return s + ")";
}

// closed-form kernel coefficients evaluated in exact rationals
Rational rational_tau(const Distribution& d, Lattice ell, long x) {
  const auto cf = closed_form_kernel(d, ell);
  const std::optional<PearsonOrdTriple>& t =
      ell == Lattice::backward ? d.kernel_backward : d.kernel_forward;
  (void)cf;
  Rational delta, beta, gamma;
  if (d.family == "binomial") {
    const Rational th(d.params[1]);
    const Rational n(d.params[0]);
    if (ell == Lattice::backward) {
      delta = 0;
      beta = -th;
      gamma = n * th;
    } else {
      delta = 0;
      beta = Rational(1) - th;
      gamma = 0;
    }
  } else if (d.family == "hypergeom") {
    const Rational n(d.params[0]), K(d.params[1]), N(d.params[2]);
    if (ell == Lattice::backward) {
      delta = Rational(1) / N;
      beta = -(n + K) / N;
      gamma = n * K / N;
    } else {
      delta = Rational(1) / N;
      beta = (N - K - n) / N;
      gamma = 0;
    }
  } else if (d.family == "neghypergeom") {
    const Rational N(d.params[0]), K(d.params[1]), r(d.params[2]);
    const Rational M = N - K + 1;
    if (ell == Lattice::backward) {
      delta = Rational(-1) / M;
      beta = (K - r) / M;
      gamma = r * K / M;
    } else {
      delta = Rational(-1) / M;
      beta = (N - r + 1) / M;
      gamma = 0;
    }
  } else {
    throw NotExact("no rational kernel for " + d.family);
  }
  (void)t;
  const Rational rx(x);
  return (delta * rx + beta) * rx + gamma;
}

Distribution make_logistic() {
  Distribution d;
  d.family = "custom-logistic";
  d.discrete = false;
  d.pdf = [](double x) {
    const double e = std::exp(-std::fabs(x));
    return e / ((1.0 + e) * (1.0 + e));
  };
  d.cdf = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
  d.sf = [](double x) { return 1.0 / (1.0 + std::exp(x)); };
  d.score = [](double x) { return -std::tanh(0.5 * x); };
  d.score_deriv = [](double x) {
    const double c = std::cosh(0.5 * x);
    return -0.5 / (c * c);
  };
  d.mean = 0.0;
  d.variance = special::kPi * special::kPi / 3.0;
  return d;
}

std::vector<Lattice> lattices_of(const Distribution& d) {
  if (d.discrete) return {Lattice::backward, Lattice::forward};
  return {Lattice::continuous};
}

}  // namespace

int main() {
  Harness h;
  const auto t_start = std::chrono::steady_clock::now();
  const Tolerance tight{1e-14, 1e-13};

  // ---- criterion 1: table kernel reproduction --------------------------
  h.run(1, "table kernels tau = -L(Id) across all fifteen rows", [&] {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::string worst_at = "-";
    bool all_exact = true;
    for (const auto& fc : battery_families()) {
      const Distribution d = make_family(fc.id, fc.params);
      const bool finite_discrete =
          d.discrete && std::isfinite(d.lo) && std::isfinite(d.hi);
      for (Lattice ell : lattices_of(d)) {
        if (finite_discrete) {
          // exact-rational route: identically zero residual
          for (long x = static_cast<long>(d.lo); x <= static_cast<long>(d.hi);
               ++x) {
            const Rational tau = verify::oracle_tau(d, ell, x);
            if (tau != rational_tau(d, ell, x)) {
              all_exact = false;
              worst_at = label(fc);
            }
          }
          continue;
        }
        const SteinContext ctx = make_context(d, ell, tight);
        const auto cf = closed_form_kernel(d, ell);
        const auto grid = quantile_grid(d, 1e-6, 1.0 - 1e-6, 512);
        const double tol = d.discrete ? 1e-12 : 1e-8;
        for (double x : grid) {
          const double c = (*cf)(x);
          const double r =
              std::fabs(-inverse_apply(ctx, fn::identity(), x) - c) /
              (1.0 + std::fabs(c));
          if (r / tol > worst) {
            worst = r / tol;
            worst_at = label(fc);
          }
        }
      }
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    const bool ok = all_exact && worst <= 1.0 && secs < 30.0;
    h.report(1, "table kernels tau = -L(Id) across all fifteen rows", ok,
             "finite-discrete exact; worst scaled residual/tol " +
                 fmt_res(worst) + " at " + worst_at + "; " + fmt_res(secs) +
                 " s");
  });

  // ---- criterion 2: E[tau] = Var ---------------------------------------
  h.run(2, "E[tau(X)] = Var(X) for every family", [&] {
    double worst = 0.0;
    std::string at;
    for (const auto& fc : battery_families()) {
      const Distribution d = make_family(fc.id, fc.params);
      for (Lattice ell : lattices_of(d)) {
        const SteinContext ctx = make_context(d, ell, tight);
        const auto kr = stein_kernel(ctx);
        const double etau = expectation(d, kr.fn, tight);
        const double r = std::fabs(etau - *d.variance);
        if (r > worst) {
          worst = r;
          at = label(fc);
        }
      }
    }
    h.report(2, "E[tau(X)] = Var(X) for every family", worst <= 1e-8,
             "worst residual " + fmt_res(worst) + " at " + at);
  });

  // ---- criterion 3: inverse identity -----------------------------------
  h.run(3, "inverse identity T(L h) = h - E[h] on the grid", [&] {
    double worst = 0.0;
    std::string at;
    for (const auto& fc : battery_families()) {
      const Distribution d = make_family(fc.id, fc.params);
      std::vector<RealFn> hs = {fn::identity(), fn::square(), fn::exp_neg()};
      if (fc.id == "student") hs.pop_back();  // e^{-x} not in L1(p)
      for (Lattice ell : lattices_of(d)) {
        const SteinContext ctx = make_context(d, ell, tight);
        const auto grid = quantile_grid(d, 1e-6, 1.0 - 1e-6, 512);
        for (const auto& hf : hs) {
          const double eh = expectation_cached(ctx, hf);
          const RealFn lh = inverse_fn(ctx, hf);
          for (double x : grid) {
            const double target = hf(x) - eh;
            const double r = std::fabs(canonical_apply(ctx, lh, x) - target) /
                             (1.0 + std::fabs(target));
            if (r > worst) {
              worst = r;
              at = label(fc) + "/" + hf.name();
            }
          }
        }
      }
    }
    h.report(3, "inverse identity T(L h) = h - E[h] on the grid",
             worst <= 1e-8, "worst residual " + fmt_res(worst) + " at " + at);
  });

  // ---- criterion 4: Hoeffding double form ------------------------------
  h.run(4, "binomial(3,0.5) double form sums to 3/4 exactly", [&] {
    const Distribution d = make_binomial(3, 0.5);
    const auto table = verify::rational_pmf(d);
    Rational sum(0);
    for (long x = 0; x <= 3; ++x) {
      for (long xp = 0; xp <= 3; ++xp) {
        sum += verify::oracle_k_kernel(table, Lattice::forward, x, xp);
      }
    }
    const SteinContext ctx = make_context(d, Lattice::forward, tight);
    const double dbl =
        cov_identity_rhs(ctx, fn::identity(), fn::identity(),
                         CovForm::double_form);
    const bool ok = (sum == Rational(3, 4)) && std::fabs(dbl - 0.75) <= 1e-13;
    h.report(4, "binomial(3,0.5) double form sums to 3/4 exactly", ok,
             "rational sum exact; float route residual " +
                 fmt_res(std::fabs(dbl - 0.75)));
  });

  // ---- criterion 5: Chernoff endpoints ---------------------------------
  h.run(5, "chernoff endpoints (0,2,4) and full saturation for g=x", [&] {
    const SteinContext ctx = make_context(make_normal(0, 1),
                                          Lattice::continuous, tight);
    const BoundReport r2 =
        variance_sandwich(ctx, fn::square(), fn::neg_identity());
    const BoundReport r1 =
        variance_sandwich(ctx, fn::identity(), fn::neg_identity());
    const double worst = std::max(
        {std::fabs(r2.lower - 0.0), std::fabs(r2.center - 2.0),
         std::fabs(r2.upper - 4.0), std::fabs(r1.lower - 1.0),
         std::fabs(r1.center - 1.0), std::fabs(r1.upper - 1.0)});
    h.report(5, "chernoff endpoints (0,2,4) and full saturation for g=x",
             worst <= 1e-8, "worst residual " + fmt_res(worst));
  });

  // ---- criterion 6: sandwich battery -----------------------------------
  h.run(6, "sandwich and saturation over 4 families x 3 g x 2 h", [&] {
    const std::vector<std::pair<std::string, std::vector<double>>> fams = {
        {"normal", {0, 1}},
        {"beta", {2, 2}},
        {"binomial", {10, 0.4}},
        {"poisson", {2}}};
    const std::vector<RealFn> gs = {fn::identity(), fn::square(),
                                    fn::exp_neg()};
    const std::vector<RealFn> hs = {fn::neg_identity(), fn::exp_neg()};
    double worst_sandwich = 0.0, worst_sat = 0.0;
    for (const auto& [id, params] : fams) {
      const Distribution d = make_family(id, params);
      for (Lattice ell : lattices_of(d)) {
        const SteinContext ctx = make_context(d, ell, tight);
        for (const auto& hf : hs) {
          for (const auto& g : gs) {
            const BoundReport r = variance_sandwich(ctx, g, hf);
            const double slack = 1e-9 * (1.0 + r.center);
            worst_sandwich =
                std::max({worst_sandwich, r.lower - r.center - slack,
                          r.center - r.upper - slack});
          }
          RealFn g2("2h+1", [hf](double x) { return 2.0 * hf(x) + 1.0; },
                    [hf](double x) { return 2.0 * hf.diff(x); });
          const BoundReport rs = variance_sandwich(ctx, g2, hf);
          worst_sat = std::max(worst_sat, std::fabs(rs.upper - rs.center));
        }
      }
    }
    const bool ok = worst_sandwich <= 0.0 && worst_sat <= 1e-8;
    h.report(6, "sandwich and saturation over 4 families x 3 g x 2 h", ok,
             "worst sandwich violation " + fmt_res(worst_sandwich) +
                 ", worst saturation residual " + fmt_res(worst_sat));
  });

  // ---- criterion 7: Mill's envelope and the gaussian sup bound ---------
  h.run(7, "mill's ratio envelope and sup bound sqrt(pi/2)||f||", [&] {
    double worst_env = 0.0, maxratio = 0.0;
    for (int i = 0; i < 200; ++i) {
      const double x = 10.0 * i / 199.0;
      const double r = gauss_mills_product(x);
      worst_env = std::max(worst_env, gauss_mills_lower(x) - r);
      worst_env = std::max(worst_env, r - gauss_mills_upper(x));
      maxratio = std::max(maxratio, r);
    }
    const double peak = 0.5 * std::sqrt(special::kPi / 2.0);
    const double peak_res = std::fabs(gauss_mills_product(0.0) - peak);
    const double max_res = std::fabs(maxratio - peak);

    const SteinContext ctx = make_context(make_normal(0, 1),
                                          Lattice::continuous, tight);
    const auto grid = quantile_grid(ctx.dist, 1e-6, 1.0 - 1e-6, 512);
    struct Bf {
      RealFn f;
      double sup;
    };
    const std::vector<Bf> battery = {
        {fn::sine(), 1.0},
        {RealFn("cos", [](double x) { return std::cos(x); }), 1.0},
        {RealFn("tanh", [](double x) { return std::tanh(x); }), 1.0},
        {RealFn("gauss", [](double x) { return std::exp(-x * x); }), 1.0},
        {RealFn("lorentz", [](double x) { return 1.0 / (1.0 + x * x); }), 1.0},
        {RealFn("sin2x", [](double x) { return std::sin(2.0 * x); }), 1.0},
        {RealFn("cos3x", [](double x) { return std::cos(3.0 * x); }), 1.0},
        {RealFn("tanh2", [](double x) { return std::tanh(0.5 * x); }), 1.0},
        {RealFn("xratio", [](double x) { return x / (1.0 + x * x); }), 0.5},
        {RealFn("atan", [](double x) { return std::atan(x); }),
         0.5 * special::kPi}};
    const double c = std::sqrt(special::kPi / 2.0);
    double worst_sup = 0.0;
    for (const auto& bf : battery) {
      for (double x : grid) {
        worst_sup = std::max(
            worst_sup, std::fabs(inverse_apply(ctx, bf.f, x)) - c * bf.sup);
      }
    }
    const bool ok = worst_env <= 1e-12 && peak_res <= 1e-9 &&
                    max_res <= 1e-9 && worst_sup <= 1e-9;
    h.report(7, "mill's ratio envelope and sup bound sqrt(pi/2)||f||", ok,
             "envelope violation " + fmt_res(worst_env) + ", peak residual " +
                 fmt_res(peak_res) + ", sup slack " + fmt_res(worst_sup));
  });

  // ---- criterion 8: Menz-Otto mass -------------------------------------
  h.run(8, "menz-otto density mass for normal and logistic; gamma rejected",
        [&] {
          double worst = 0.0;
          for (const Distribution& d : {make_normal(0, 1), make_logistic()}) {
            const SteinContext ctx = make_context(d, Lattice::continuous,
                                                  Tolerance{1e-11, 1e-10});
            for (double xp : {-1.0, 0.0, 1.0}) {
              const RealFn ps = menz_otto_density(ctx, xp);
              const double mass = integrate_interval(
                  [&](double x) { return ps(x); }, d.lo, d.hi,
                  Tolerance{1e-10, 1e-9});
              worst = std::max(worst, std::fabs(mass - 1.0));
            }
          }
          bool rejected = false;
          try {
            const SteinContext g05 = make_context(make_gamma(0.5, 1.0),
                                                  Lattice::continuous);
            (void)menz_otto_density(g05, 1.0);
          } catch (const NotLogConcave&) {
            rejected = true;
          }
          h.report(8,
                   "menz-otto density mass for normal and logistic; gamma "
                   "rejected",
                   worst <= 1e-6 && rejected,
                   "worst |mass-1| " + fmt_res(worst) +
                       (rejected ? ", gamma(0.5,1) rejected" : ", no rejection"));
        });

  // ---- criterion 9: eigen checks ---------------------------------------
  h.run(9, "hermite weight, binomial self-adjointness, certified spectrum",
        [&] {
          const SteinContext nctx = make_context(make_normal(0, 1),
                                                 Lattice::continuous, tight);
          RealFn he2("He2", [](double x) { return x * x - 1.0; },
                     [](double x) { return 2.0 * x; });
          double worst_h = 0.0;
          for (double x : quantile_grid(nctx.dist, 1e-6, 1.0 - 1e-6, 512)) {
            worst_h =
                std::max(worst_h, std::fabs(weight_ratio(nctx, he2, x) - 0.5));
          }

          const Distribution b5 = make_binomial(5, 0.3);
          const SteinContext bctx = make_context(b5, Lattice::forward, tight);
          double asym = 0.0;
          for (int i = 0; i <= 5; ++i) {
            for (int j = i; j <= 5; ++j) {
              RealFn fi("p", [i](double x) { return std::pow(x / 5.0, i); });
              RealFn fj("p", [j](double x) { return std::pow(x / 5.0, j); });
              asym = std::max(asym, eigen_selfadjoint_check(bctx, fi, fj));
            }
          }

          const EigenWeightAnalysis ew = eigen_weight_analysis(bctx);
          const auto certified =
              verify::oracle_spectrum(b5, Lattice::forward, ew.eigenvalues);
          double worst_spec = 0.0;
          for (std::size_t k = 0; k < certified.size(); ++k) {
            worst_spec = std::max(
                worst_spec, std::fabs(certified[k] - ew.eigenvalues[k]));
          }
          const bool ok =
              worst_h <= 1e-8 && asym <= 1e-12 && worst_spec <= 1e-10;
          h.report(9,
                   "hermite weight, binomial self-adjointness, certified "
                   "spectrum",
                   ok,
                   "hermite " + fmt_res(worst_h) + ", asymmetry " +
                       fmt_res(asym) + ", spectrum " + fmt_res(worst_spec));
        });

  // ---- criterion 10: representation consistency ------------------------
  h.run(10, "monte carlo representation within 3 s.e. of the kernel form",
        [&] {
          const std::vector<std::pair<std::string, std::vector<double>>> fams =
              {{"normal", {0, 1}}, {"poisson", {2}}, {"binomial", {10, 0.4}}};
          double worst_sigmas = 0.0;
          std::uint64_t salt = 0;
          for (const auto& [id, params] : fams) {
            const Distribution d = make_family(id, params);
            const Lattice ell =
                d.discrete ? Lattice::forward : Lattice::continuous;
            const SteinContext ctx = make_context(d, ell);
            const auto pts = quantile_grid(d, 0.1, 0.9, 5);
            for (const RealFn& f : {fn::identity(), fn::square()}) {
              for (double x : pts) {
                const auto mc =
                    repr_one_mc(ctx, f, x, 100000, RngState{2026}.split(salt++));
                const double ref = repr_two(ctx, f, x);
                worst_sigmas = std::max(
                    worst_sigmas,
                    std::fabs(mc.value - ref) / std::max(mc.std_error, 1e-12));
              }
            }
          }
          h.report(10,
                   "monte carlo representation within 3 s.e. of the kernel "
                   "form",
                   worst_sigmas <= 3.0,
                   "worst deviation " + fmt_res(worst_sigmas) + " s.e.");
        });

  // ---- criterion 11: boundary checker soundness ------------------------
  h.run(11, "boundary checker: counterexample flagged, in-class pairs pass",
        [&] {
          const SteinContext bctx = make_context(make_binomial(3, 0.5),
                                                 Lattice::backward, tight);
          const auto bad = verify::boundary_conditions_check(
              bctx, fn::constant(1.0), fn::constant(1.0));
          const double expected = bctx.dist.density(3.0);
          const bool counterexample =
              !bad.v1_pass &&
              std::fabs(bad.boundary_right - expected) <= 1e-12;

          double worst = 0.0;
          const std::vector<std::pair<std::string, std::vector<double>>> fams =
              {{"normal", {0, 1}},
               {"beta", {2, 2}},
               {"gamma", {1.3, 2.4}},
               {"binomial", {10, 0.4}},
               {"poisson", {2}}};
          for (const auto& [id, params] : fams) {
            const Distribution d = make_family(id, params);
            for (Lattice ell : lattices_of(d)) {
              const SteinContext ctx = make_context(d, ell, tight);
              RealFn f = fn::identity();
              if (d.discrete && ell == Lattice::backward &&
                  std::isfinite(d.hi)) {
                const double hi = d.hi;
                f = RealFn("hi-x", [hi](double x) { return hi - x; });
              }
              for (const RealFn& g : {fn::identity(), fn::square()}) {
                const auto r = verify::boundary_conditions_check(ctx, f, g);
                worst =
                    std::max({worst, r.v1_residual, r.v2_residual});
              }
            }
          }
          h.report(11,
                   "boundary checker: counterexample flagged, in-class pairs "
                   "pass",
                   counterexample && worst <= 1e-7,
                   std::string(counterexample ? "counterexample residual "
                                              : "counterexample MISSED ") +
                       fmt_res(bad.v1_residual) + ", worst in-class " +
                       fmt_res(worst));
        });

  const double total_secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  const bool time_ok = total_secs < 120.0;
  std::printf("%s | total runtime %.1f s (budget 120 s)\n",
              time_ok ? "PASS" : "FAIL", total_secs);
  if (!time_ok) ++h.failed;
  std::printf("%d of 12 checks failed\n", h.failed);
  return h.failed == 0 ? 0 : 1;
}
