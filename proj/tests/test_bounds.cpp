#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "steinops/bounds.hpp"
#include "steinops/families.hpp"

using namespace steinops;
using Catch::Approx;

namespace {
SteinContext normal_ctx(double a = 1e-12, double r = 1e-11) {
  return make_context(make_normal(0, 1), Lattice::continuous, Tolerance{a, r});
}
}  // namespace

TEST_CASE("exact covariance") {
  auto ctx = normal_ctx();
  REQUIRE(cov_exact(ctx, fn::identity(), fn::identity()) ==
          Approx(1.0).margin(1e-9));
  auto b = make_context(make_binomial(3, 0.5), Lattice::forward);
  REQUIRE(cov_exact(b, fn::identity(), fn::identity()) ==
          Approx(0.75).margin(1e-13));
  REQUIRE(cov_exact(ctx, fn::constant(4.0), fn::square()) ==
          Approx(0.0).margin(1e-10));
}

TEST_CASE("covariance identity, single and double form") {
  SECTION("poisson single form: rate times E[forward difference]") {
    auto p = make_context(make_poisson(2), Lattice::backward,
                          Tolerance{1e-13, 1e-12});
    for (const RealFn& g : {fn::square(), fn::exp_neg(), fn::sine()}) {
      const double cov = cov_exact(p, fn::identity(), g);
      const double rhs = cov_identity_rhs(p, fn::identity(), g, CovForm::single);
      REQUIRE(rhs == Approx(cov).margin(1e-8 * (1.0 + std::fabs(cov))));
      // kernel is the constant rate: rhs = lambda E[Delta^+ g]
      const double direct = 2.0 * expectation(p.dist, [&](double x) {
        return delta(Lattice::forward, g, x);
      });
      REQUIRE(rhs == Approx(direct).margin(1e-9));
    }
  }
  SECTION("binomial double form sums the kernel exactly") {
    auto b = make_context(make_binomial(3, 0.5), Lattice::forward);
    REQUIRE(cov_identity_rhs(b, fn::identity(), fn::identity(),
                             CovForm::double_form) ==
            Approx(0.75).margin(1e-13));
  }
  SECTION("normal double form") {
    auto ctx = normal_ctx();
    REQUIRE(cov_identity_rhs(ctx, fn::identity(), fn::identity(),
                             CovForm::double_form) ==
            Approx(1.0).margin(1e-6));
    const double cov = cov_exact(ctx, fn::identity(), fn::square());
    REQUIRE(cov_identity_rhs(ctx, fn::identity(), fn::square(),
                             CovForm::double_form) ==
            Approx(cov).margin(1e-6));
  }
}

TEST_CASE("cramer-rao lower bound") {
  auto ctx = normal_ctx();
  SECTION("equality when g is affine in T f") {
    auto tau = closed_form_kernel(ctx.dist, Lattice::continuous);
    REQUIRE(lower_cramer_rao(ctx, fn::identity(), *tau) ==
            Approx(1.0).margin(1e-9));
    auto b = make_context(make_binomial(3, 0.5), Lattice::forward,
                          Tolerance{1e-13, 1e-12});
    auto taub = closed_form_kernel(b.dist, Lattice::forward);
    REQUIRE(lower_cramer_rao(b, fn::identity(), *taub) ==
            Approx(0.75).margin(1e-12));
  }
  SECTION("slack case: f = 1, g = x^2") {
    REQUIRE(lower_cramer_rao(ctx, fn::square(), fn::constant(1.0)) ==
            Approx(0.0).margin(1e-10));
  }
  SECTION("zero denominator") {
    REQUIRE_THROWS_AS(
        lower_cramer_rao(ctx, fn::identity(), fn::constant(0.0)),
        ZeroDenominator);
  }
}

TEST_CASE("klaassen covariance upper bound") {
  auto ctx = normal_ctx();
  const WeightFn w = make_klaassen_weight(ctx, fn::neg_identity());
  SECTION("dominates the covariance") {
    const double bound = upper_klaassen_cov(ctx, fn::square(), fn::square(), w);
    REQUIRE(bound == Approx(4.0).margin(1e-8));
    REQUIRE(bound >= cov_exact(ctx, fn::square(), fn::square()));
  }
  SECTION("saturates for affine images of h") {
    RealFn f("3h+2", [](double x) { return -3.0 * x + 2.0; },
             [](double) { return -3.0; });
    const double bound = upper_klaassen_cov(ctx, f, f, w);
    REQUIRE(bound == Approx(std::fabs(cov_exact(ctx, f, f))).margin(1e-8));
  }
  SECTION("sweep on the beta distribution") {
    auto bctx = make_context(make_beta(2, 2), Lattice::continuous);
    const WeightFn wb = make_klaassen_weight(bctx, fn::neg_identity());
    for (const RealFn& g : {fn::identity(), fn::square(), fn::exp_neg()}) {
      const double bound = upper_klaassen_cov(bctx, g, g, wb);
      REQUIRE(bound + 1e-10 >= std::fabs(cov_exact(bctx, g, g)));
    }
  }
}

TEST_CASE("variance sandwich") {
  SECTION("chernoff endpoints on the normal") {
    auto ctx = normal_ctx(1e-13, 1e-12);
    const BoundReport r =
        variance_sandwich(ctx, fn::square(), fn::neg_identity());
    REQUIRE(r.lower == Approx(0.0).margin(1e-8));
    REQUIRE(r.center == Approx(2.0).margin(1e-8));
    REQUIRE(r.upper == Approx(4.0).margin(1e-8));
    REQUIRE(r.weight_provenance == "closed-form");
    REQUIRE(r.boundary_status == "pass");
  }
  SECTION("binomial backward display coefficients") {
    const double n = 5, th = 0.4;
    auto b = make_context(make_binomial(n, th), Lattice::backward,
                          Tolerance{1e-13, 1e-12});
    const RealFn g = fn::sine();
    const BoundReport r = variance_sandwich(b, g, fn::neg_identity());
    // lower = theta/(n(1-theta)) E[(n-X) Delta+ g]^2, upper = theta E[(n-X)(Delta+ g)^2]
    const double egd = expectation(b.dist, [&](double x) {
      return (n - x) * delta(Lattice::forward, g, x);
    });
    const double egd2 = expectation(b.dist, [&](double x) {
      const double dg = delta(Lattice::forward, g, x);
      return (n - x) * dg * dg;
    });
    REQUIRE(r.lower ==
            Approx(th / (n * (1 - th)) * egd * egd).margin(1e-10));
    REQUIRE(r.upper == Approx(th * egd2).margin(1e-10));
    REQUIRE(r.lower <= r.center + 1e-12);
    REQUIRE(r.center <= r.upper + 1e-12);
  }
  SECTION("saturation at affine g") {
    auto ctx = normal_ctx(1e-13, 1e-12);
    RealFn g("2h+1", [](double x) { return -2.0 * x + 1.0; },
             [](double) { return -2.0; });
    const BoundReport r = variance_sandwich(ctx, g, fn::neg_identity());
    REQUIRE(r.upper - r.center == Approx(0.0).margin(1e-8));
  }
  SECTION("numeric weight provenance") {
    auto ctx = normal_ctx();
    const BoundReport r = variance_sandwich(ctx, fn::square(), fn::exp_neg());
    REQUIRE(r.weight_provenance == "numeric");
    REQUIRE(r.lower <= r.center + 1e-9);
    REQUIRE(r.center <= r.upper + 1e-9);
  }
  SECTION("rejects increasing h") {
    auto ctx = normal_ctx();
    REQUIRE_THROWS_AS(variance_sandwich(ctx, fn::square(), fn::identity()),
                      NotDecreasing);
  }
}

TEST_CASE("boundary probe flags genuinely asymmetric tails") {
  // student(3) with a cubic: tau g p diverges with opposite signs in the
  // two tails, so the IBP boundary products cannot match
  auto st = make_context(make_student(3), Lattice::continuous);
  RealFn cube("cube", [](double x) { return x * x * x; },
              [](double x) { return 3.0 * x * x; });
  const BoundaryProbe probe = boundary_probe(st, fn::neg_identity(), cube);
  REQUIRE_FALSE(probe.pass);
  // gaussian tails kill polynomials: the same pair passes there
  REQUIRE(boundary_probe(normal_ctx(), fn::neg_identity(), cube).pass);
  RealFn g("(x+5)^2", [](double x) { return (x + 5) * (x + 5); },
           [](double x) { return 2.0 * (x + 5); });
  REQUIRE(boundary_probe(normal_ctx(), fn::neg_identity(), g).pass);
}

TEST_CASE("brascamp-lieb bounds") {
  auto ctx = normal_ctx(1e-13, 1e-12);
  SECTION("standard normal reduces to the chernoff upper bound") {
    REQUIRE(brascamp_lieb_upper(ctx, fn::square()) == Approx(4.0).margin(1e-8));
  }
  SECTION("linear g saturates at the variance") {
    auto n04 = make_context(make_normal(0, 4), Lattice::continuous);
    REQUIRE(brascamp_lieb_upper(n04, fn::identity()) ==
            Approx(4.0).margin(1e-8));
  }
  SECTION("heavy tails rejected") {
    auto st = make_context(make_student(1.5), Lattice::continuous);
    REQUIRE_THROWS_AS(brascamp_lieb_upper(st, fn::identity()), NotLogConcave);
  }
}

TEST_CASE("asymmetric brascamp-lieb") {
  auto ctx = normal_ctx();
  SECTION("identity pair saturates") {
    const auto r = asymmetric_bl_bound(ctx, fn::identity(), fn::identity());
    REQUIRE(r.bound == Approx(1.0).margin(1e-9));
    REQUIRE(r.cov_abs == Approx(1.0).margin(1e-9));
    REQUIRE_FALSE(r.divergent);
  }
  SECTION("sin against identity") {
    const auto r = asymmetric_bl_bound(ctx, fn::sine(), fn::identity());
    REQUIRE(r.cov_abs == Approx(std::exp(-0.5)).margin(1e-8));
    REQUIRE(r.bound >= r.cov_abs);
  }
  SECTION("unbounded ratio reported as infinite") {
    const auto r = asymmetric_bl_bound(ctx, fn::square(), fn::identity());
    REQUIRE(r.divergent);
    REQUIRE(std::isinf(r.bound));
  }
}

TEST_CASE("lagrange remainder gap") {
  auto ctx = normal_ctx();
  SECTION("saturated choice has exactly zero gap") {
    const auto est = lagrange_gap(ctx, fn::neg_identity(), fn::neg_identity(),
                                  fn::neg_identity(), 2000, RngState{5});
    REQUIRE(est.value == 0.0);
  }
  SECTION("normal x^2 gap matches upper^2 - cov^2 = 12") {
    const auto est = lagrange_gap(ctx, fn::square(), fn::square(),
                                  fn::neg_identity(), 60000, RngState{11});
    REQUIRE(std::fabs(est.value - 12.0) <= 3.0 * est.std_error);
  }
  SECTION("binomial identity against the exact gap") {
    auto b = make_context(make_binomial(3, 0.5), Lattice::forward,
                          Tolerance{1e-13, 1e-12});
    const WeightFn w = make_klaassen_weight(b, fn::neg_identity());
    const double upper =
        upper_klaassen_cov(b, fn::identity(), fn::square(), w);
    const double cov = cov_exact(b, fn::identity(), fn::square());
    const auto est = lagrange_gap(b, fn::identity(), fn::square(),
                                  fn::neg_identity(), 60000, RngState{13});
    REQUIRE(std::fabs(est.value - (upper * upper - cov * cov)) <=
            3.0 * est.std_error);
  }
}
