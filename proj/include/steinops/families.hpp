#pragma once

// The built-in distribution families with their closed-form moments,
// Stein kernels and Pearson/Ord coefficient triples.
//
// Family ids and parameter order are a stable public contract:
//   normal(mu, sigma2)        beta(alpha, beta)      gamma(alpha, scale)
//   student(nu)               fdist(d1, d2)          poisson(lambda)
//   binomial(n, theta)        negbinomial(r, p)      hypergeom(n, K, N)
//   neghypergeom(N, K, r)

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "steinops/distribution.hpp"
#include "steinops/errors.hpp"
#include "steinops/numerics.hpp"
#include "steinops/special.hpp"

namespace steinops {

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidParameter(msg);
}

inline void require_count(const std::vector<double>& p, std::size_t n,
                          const char* family) {
  if (p.size() != n) {
    throw InvalidParameter(std::string(family) + ": expected " +
                           std::to_string(n) + " parameters, got " +
                           std::to_string(p.size()));
  }
}

inline double gamma_draw(std::mt19937_64& eng, double alpha) {
  if (alpha < 1.0) {
    double u = uniform01(eng);
    while (u <= 0.0) u = uniform01(eng);
    return gamma_draw(eng, alpha + 1.0) * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal_draw(eng);
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform01(eng);
    while (u <= 0.0) u = uniform01(eng);
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

inline long poisson_draw(std::mt19937_64& eng, double lambda) {
  // sequential inversion; adequate for the moderate rates used here
  double u = uniform01(eng);
  double p = std::exp(-lambda);
  double c = p;
  long k = 0;
  while (u > c && k < 100000) {
    ++k;
    p *= lambda / k;
    c += p;
  }
  return k;
}

// Finite discrete helper: closes pmf/cdf/sampler over a probability table
// on lo..lo+m-1.
inline void attach_table(Distribution& d, long lo,
                         const std::vector<double>& probs) {
  auto table = std::make_shared<const std::vector<double>>(probs);
  std::vector<double> cum(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cum.begin());
  auto cumtab = std::make_shared<const std::vector<double>>(std::move(cum));
  d.pdf = [table, lo](double x) {
    const long j = static_cast<long>(std::floor(x)) - lo;
    if (j < 0 || j >= static_cast<long>(table->size())) return 0.0;
    return (*table)[j];
  };
  d.cdf = [cumtab, lo](double x) {
    const long j = static_cast<long>(std::floor(x)) - lo;
    if (j < 0) return 0.0;
    if (j >= static_cast<long>(cumtab->size())) return 1.0;
    return (*cumtab)[j];
  };
  std::vector<double> suf(probs.size() + 1, 0.0);
  for (std::size_t i = probs.size(); i-- > 0;) suf[i] = suf[i + 1] + probs[i];
  auto suftab = std::make_shared<const std::vector<double>>(std::move(suf));
  d.sf = [suftab, lo](double x) {
    const long j = static_cast<long>(std::floor(x)) - lo + 1;
    if (j < 0) return 1.0;
    if (j >= static_cast<long>(suftab->size())) return 0.0;
    return (*suftab)[j];
  };
  d.sampler = [cumtab, lo](std::mt19937_64& eng) {
    const double u = uniform01(eng);
    const auto it = std::lower_bound(cumtab->begin(), cumtab->end(), u);
    const long j = std::min<long>(it - cumtab->begin(),
                                  static_cast<long>(cumtab->size()) - 1);
    return static_cast<double>(lo + j);
  };
}

}  // namespace detail

inline Distribution make_normal(double mu, double sigma2) {
  detail::require(sigma2 > 0.0, "normal: sigma2 > 0 required");
  const double sigma = std::sqrt(sigma2);
  Distribution d;
  d.family = "normal";
  d.params = {mu, sigma2};
  d.discrete = false;
  d.pdf = [mu, sigma](double x) {
    return special::norm_pdf((x - mu) / sigma) / sigma;
  };
  d.log_pdf = [mu, sigma2, sigma](double x) {
    return -0.5 * (x - mu) * (x - mu) / sigma2 -
           std::log(sigma * special::kSqrt2Pi);
  };
  d.cdf = [mu, sigma](double x) { return special::norm_cdf((x - mu) / sigma); };
  d.sf = [mu, sigma](double x) { return special::norm_cdf(-(x - mu) / sigma); };
  d.score = [mu, sigma2](double x) { return -(x - mu) / sigma2; };
  d.score_deriv = [sigma2](double) { return -1.0 / sigma2; };
  d.mean = mu;
  d.variance = sigma2;
  d.kernel_continuous = PearsonOrdTriple{0.0, 0.0, sigma2};
  d.triple = d.kernel_continuous;
  d.sampler = [mu, sigma](std::mt19937_64& eng) {
    return mu + sigma * detail::normal_draw(eng);
  };
  return d;
}

inline Distribution make_beta(double a, double b) {
  detail::require(a > 0.0 && b > 0.0, "beta: alpha, beta > 0 required");
  Distribution d;
  d.family = "beta";
  d.params = {a, b};
  d.discrete = false;
  d.lo = 0.0;
  d.hi = 1.0;
  const double lnorm = special::lgamma(a + b) - special::lgamma(a) -
                       special::lgamma(b);
  d.pdf = [a, b, lnorm](double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return std::exp(lnorm + (a - 1.0) * std::log(x) +
                    (b - 1.0) * std::log1p(-x));
  };
  d.log_pdf = [a, b, lnorm](double x) {
    return lnorm + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
  };
  d.cdf = [a, b](double x) { return special::beta_inc(a, b, x); };
  d.sf = [a, b](double x) { return special::beta_inc(b, a, 1.0 - x); };
  d.score = [a, b](double x) { return (a - 1.0) / x - (b - 1.0) / (1.0 - x); };
  d.score_deriv = [a, b](double x) {
    return -(a - 1.0) / (x * x) - (b - 1.0) / ((1.0 - x) * (1.0 - x));
  };
  d.mean = a / (a + b);
  d.variance = a * b / ((a + b) * (a + b) * (a + b + 1.0));
  d.kernel_continuous = PearsonOrdTriple{-1.0 / (a + b), 1.0 / (a + b), 0.0};
  d.triple = d.kernel_continuous;
  d.sampler = [a, b](std::mt19937_64& eng) {
    const double g1 = detail::gamma_draw(eng, a);
    const double g2 = detail::gamma_draw(eng, b);
    return g1 / (g1 + g2);
  };
  return d;
}

inline Distribution make_gamma(double alpha, double scale) {
  detail::require(alpha > 0.0 && scale > 0.0,
                  "gamma: alpha, scale > 0 required");
  Distribution d;
  d.family = "gamma";
  d.params = {alpha, scale};
  d.discrete = false;
  d.lo = 0.0;
  const double lnorm = -alpha * std::log(scale) - special::lgamma(alpha);
  d.pdf = [alpha, scale, lnorm](double x) {
    if (x <= 0.0) return 0.0;
    return std::exp(lnorm + (alpha - 1.0) * std::log(x) - x / scale);
  };
  d.log_pdf = [alpha, scale, lnorm](double x) {
    return lnorm + (alpha - 1.0) * std::log(x) - x / scale;
  };
  d.cdf = [alpha, scale](double x) {
    return x <= 0.0 ? 0.0 : special::gamma_p(alpha, x / scale);
  };
  d.sf = [alpha, scale](double x) {
    return x <= 0.0 ? 1.0 : special::gamma_q(alpha, x / scale);
  };
  d.score = [alpha, scale](double x) { return (alpha - 1.0) / x - 1.0 / scale; };
  d.score_deriv = [alpha](double x) { return -(alpha - 1.0) / (x * x); };
  d.mean = alpha * scale;
  d.variance = alpha * scale * scale;
  d.kernel_continuous = PearsonOrdTriple{0.0, scale, 0.0};
  d.triple = d.kernel_continuous;
  d.sampler = [alpha, scale](std::mt19937_64& eng) {
    return scale * detail::gamma_draw(eng, alpha);
  };
  return d;
}

inline Distribution make_student(double nu) {
  detail::require(nu > 0.0, "student: nu > 0 required");
  Distribution d;
  d.family = "student";
  d.params = {nu};
  d.discrete = false;
  const double lnorm = -0.5 * std::log(nu) -
                       (special::lgamma(nu / 2.0) + special::lgamma(0.5) -
                        special::lgamma((nu + 1.0) / 2.0));
  d.pdf = [nu, lnorm](double x) {
    return std::exp(lnorm +
                    0.5 * (1.0 + nu) * std::log(nu / (nu + x * x)));
  };
  d.log_pdf = [nu, lnorm](double x) {
    return lnorm + 0.5 * (1.0 + nu) * std::log(nu / (nu + x * x));
  };
  d.cdf = [nu](double x) {
    const double w = 0.5 * special::beta_inc(nu / 2.0, 0.5, nu / (nu + x * x));
    return x > 0.0 ? 1.0 - w : w;
  };
  d.sf = [nu](double x) {
    const double w = 0.5 * special::beta_inc(nu / 2.0, 0.5, nu / (nu + x * x));
    return x > 0.0 ? w : 1.0 - w;
  };
  d.score = [nu](double x) { return -(1.0 + nu) * x / (nu + x * x); };
  d.score_deriv = [nu](double x) {
    const double s = nu + x * x;
    return -(1.0 + nu) * (nu - x * x) / (s * s);
  };
  if (nu > 1.0) {
    d.mean = 0.0;
    d.kernel_continuous =
        PearsonOrdTriple{1.0 / (nu - 1.0), 0.0, nu / (nu - 1.0)};
    d.triple = d.kernel_continuous;
  }
  if (nu > 2.0) d.variance = nu / (nu - 2.0);
  d.sampler = [nu](std::mt19937_64& eng) {
    const double z = detail::normal_draw(eng);
    const double chi2 = 2.0 * detail::gamma_draw(eng, nu / 2.0);
    return z * std::sqrt(nu / chi2);
  };
  return d;
}

inline Distribution make_fdist(double d1, double d2) {
  detail::require(d1 > 0.0 && d2 > 0.0, "fdist: d1, d2 > 0 required");
  Distribution d;
  d.family = "fdist";
  d.params = {d1, d2};
  d.discrete = false;
  d.lo = 0.0;
  const double lnorm = 0.5 * d1 * std::log(d1 / d2) -
                       (special::lgamma(d1 / 2.0) + special::lgamma(d2 / 2.0) -
                        special::lgamma((d1 + d2) / 2.0));
  d.pdf = [d1, d2, lnorm](double x) {
    if (x <= 0.0) return 0.0;
    return std::exp(lnorm + (0.5 * d1 - 1.0) * std::log(x) -
                    0.5 * (d1 + d2) * std::log1p(d1 * x / d2));
  };
  d.log_pdf = [d1, d2, lnorm](double x) {
    return lnorm + (0.5 * d1 - 1.0) * std::log(x) -
           0.5 * (d1 + d2) * std::log1p(d1 * x / d2);
  };
  d.cdf = [d1, d2](double x) {
    if (x <= 0.0) return 0.0;
    return special::beta_inc(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2));
  };
  d.sf = [d1, d2](double x) {
    if (x <= 0.0) return 1.0;
    return special::beta_inc(d2 / 2.0, d1 / 2.0, d2 / (d1 * x + d2));
  };
  d.score = [d1, d2](double x) {
    return (0.5 * d1 - 1.0) / x -
           0.5 * (d1 + d2) * (d1 / d2) / (1.0 + d1 * x / d2);
  };
  d.score_deriv = [d1, d2](double x) {
    const double w = 1.0 + d1 * x / d2;
    return -(0.5 * d1 - 1.0) / (x * x) +
           0.5 * (d1 + d2) * (d1 / d2) * (d1 / d2) / (w * w);
  };
  if (d2 > 2.0) {
    d.mean = d2 / (d2 - 2.0);
    d.kernel_continuous = PearsonOrdTriple{
        2.0 / (d2 - 2.0), 2.0 * d2 / (d1 * (d2 - 2.0)), 0.0};
    d.triple = d.kernel_continuous;
  }
  if (d2 > 4.0) {
    d.variance = 2.0 * d2 * d2 * (d1 + d2 - 2.0) /
                 (d1 * (d2 - 2.0) * (d2 - 2.0) * (d2 - 4.0));
  }
  d.sampler = [d1, d2](std::mt19937_64& eng) {
    const double c1 = 2.0 * detail::gamma_draw(eng, d1 / 2.0);
    const double c2 = 2.0 * detail::gamma_draw(eng, d2 / 2.0);
    return (c1 / d1) / (c2 / d2);
  };
  return d;
}

inline Distribution make_poisson(double lambda) {
  detail::require(lambda > 0.0, "poisson: lambda > 0 required");
  Distribution d;
  d.family = "poisson";
  d.params = {lambda};
  d.discrete = true;
  d.lo = 0.0;
  d.pdf = [lambda](double x) {
    if (x < 0.0 || !is_integer(x)) return 0.0;
    return std::exp(x * std::log(lambda) - lambda - special::lgamma(x + 1.0));
  };
  d.cdf = [lambda](double x) {
    const double k = std::floor(x);
    if (k < 0.0) return 0.0;
    return special::gamma_q(k + 1.0, lambda);
  };
  d.sf = [lambda](double x) {
    const double k = std::floor(x);
    if (k < 0.0) return 1.0;
    return special::gamma_p(k + 1.0, lambda);
  };
  d.mean = lambda;
  d.variance = lambda;
  d.kernel_backward = PearsonOrdTriple{0.0, 0.0, lambda};
  d.kernel_forward = PearsonOrdTriple{0.0, 1.0, 0.0};
  d.triple = d.kernel_backward;
  d.sampler = [lambda](std::mt19937_64& eng) {
    return static_cast<double>(detail::poisson_draw(eng, lambda));
  };
  return d;
}

inline Distribution make_binomial(double n_, double theta) {
  detail::require(is_integer(n_) && n_ >= 1.0, "binomial: n integer >= 1");
  detail::require(theta > 0.0 && theta < 1.0, "binomial: 0 < theta < 1");
  const double n = n_;
  Distribution d;
  d.family = "binomial";
  d.params = {n, theta};
  d.discrete = true;
  d.lo = 0.0;
  d.hi = n;
  d.pdf = [n, theta](double x) {
    if (x < 0.0 || x > n || !is_integer(x)) return 0.0;
    return std::exp(special::lchoose(n, x) + x * std::log(theta) +
                    (n - x) * std::log1p(-theta));
  };
  d.cdf = [n, theta](double x) {
    const double k = std::floor(x);
    if (k < 0.0) return 0.0;
    if (k >= n) return 1.0;
    return special::beta_inc(n - k, k + 1.0, 1.0 - theta);
  };
  d.sf = [n, theta](double x) {
    const double k = std::floor(x);
    if (k < 0.0) return 1.0;
    if (k >= n) return 0.0;
    return special::beta_inc(k + 1.0, n - k, theta);
  };
  d.mean = n * theta;
  d.variance = n * theta * (1.0 - theta);
  d.kernel_backward = PearsonOrdTriple{0.0, -theta, n * theta};
  d.kernel_forward = PearsonOrdTriple{0.0, 1.0 - theta, 0.0};
  d.triple = d.kernel_backward;
  d.sampler = [n, theta](std::mt19937_64& eng) {
    long s = 0;
    for (long i = 0; i < static_cast<long>(n); ++i) {
      if (detail::uniform01(eng) < theta) ++s;
    }
    return static_cast<double>(s);
  };
  return d;
}

inline Distribution make_negbinomial(double r, double p) {
  detail::require(r > 0.0, "negbinomial: r > 0 required");
  detail::require(p > 0.0 && p < 1.0, "negbinomial: 0 < p < 1");
  Distribution d;
  d.family = "negbinomial";
  d.params = {r, p};
  d.discrete = true;
  d.lo = 0.0;
  d.pdf = [r, p](double x) {
    if (x < 0.0 || !is_integer(x)) return 0.0;
    return std::exp(special::lgamma(r + x) - special::lgamma(r) -
                    special::lgamma(x + 1.0) + r * std::log(p) +
                    x * std::log1p(-p));
  };
  d.cdf = [r, p](double x) {
    const double k = std::floor(x);
    if (k < 0.0) return 0.0;
    return special::beta_inc(r, k + 1.0, p);
  };
  d.sf = [r, p](double x) {
    const double k = std::floor(x);
    if (k < 0.0) return 1.0;
    return special::beta_inc(k + 1.0, r, 1.0 - p);
  };
  d.mean = r * (1.0 - p) / p;
  d.variance = r * (1.0 - p) / (p * p);
  d.kernel_backward =
      PearsonOrdTriple{0.0, (1.0 - p) / p, r * (1.0 - p) / p};
  d.kernel_forward = PearsonOrdTriple{0.0, 1.0 / p, 0.0};
  d.triple = d.kernel_backward;
  d.sampler = [r, p](std::mt19937_64& eng) {
    const double lambda = detail::gamma_draw(eng, r) * (1.0 - p) / p;
    return static_cast<double>(detail::poisson_draw(eng, lambda));
  };
  return d;
}

inline Distribution make_hypergeom(double n_, double K_, double N_) {
  detail::require(is_integer(n_) && is_integer(K_) && is_integer(N_),
                  "hypergeom: n, K, N must be integers");
  detail::require(K_ >= 1.0 && K_ <= N_, "hypergeom: 1 <= K <= N");
  detail::require(n_ >= 1.0 && n_ <= N_, "hypergeom: 1 <= n <= N");
  const double n = n_, K = K_, N = N_;
  Distribution d;
  d.family = "hypergeom";
  d.params = {n, K, N};
  d.discrete = true;
  d.lo = std::max(0.0, n + K - N);
  d.hi = std::min(n, K);
  const long lo = static_cast<long>(d.lo);
  std::vector<double> probs;
  for (long x = lo; x <= static_cast<long>(d.hi); ++x) {
    probs.push_back(std::exp(special::lchoose(K, x) +
                             special::lchoose(N - K, n - x) -
                             special::lchoose(N, n)));
  }
  detail::attach_table(d, lo, probs);
  d.mean = n * K / N;
  d.variance = n * (K / N) * (1.0 - K / N) * (N - n) / (N - 1.0);
  d.kernel_backward = PearsonOrdTriple{1.0 / N, -(n + K) / N, n * K / N};
  d.kernel_forward = PearsonOrdTriple{1.0 / N, (N - K - n) / N, 0.0};
  d.triple = d.kernel_backward;
  return d;
}

inline Distribution make_neghypergeom(double N_, double K_, double r_) {
  detail::require(is_integer(N_) && is_integer(K_) && is_integer(r_),
                  "neghypergeom: N, K, r must be integers");
  detail::require(K_ >= 0.0 && K_ <= N_, "neghypergeom: 0 <= K <= N");
  detail::require(r_ >= 1.0 && r_ <= N_ - K_, "neghypergeom: 1 <= r <= N - K");
  const double N = N_, K = K_, r = r_;
  Distribution d;
  d.family = "neghypergeom";
  d.params = {N, K, r};
  d.discrete = true;
  d.lo = 0.0;
  d.hi = K;
  std::vector<double> probs;
  for (long x = 0; x <= static_cast<long>(K); ++x) {
    probs.push_back(std::exp(special::lchoose(x + r - 1.0, x) +
                             special::lchoose(N - r - x, K - x) -
                             special::lchoose(N, K)));
  }
  detail::attach_table(d, 0, probs);
  const double M = N - K + 1.0;
  d.mean = r * K / M;
  d.variance = r * K * (N + 1.0) * (M - r) / (M * M * (M + 1.0));
  d.kernel_backward = PearsonOrdTriple{-1.0 / M, (K - r) / M, r * K / M};
  d.kernel_forward = PearsonOrdTriple{-1.0 / M, (N - r + 1.0) / M, 0.0};
  d.triple = d.kernel_backward;
  return d;
}

/// Construct a built-in family by its documented string id.
inline Distribution make_family(const std::string& name,
                                const std::vector<double>& params) {
  using detail::require_count;
  if (name == "normal") {
    require_count(params, 2, "normal");
    return make_normal(params[0], params[1]);
  }
  if (name == "beta") {
    require_count(params, 2, "beta");
    return make_beta(params[0], params[1]);
  }
  if (name == "gamma") {
    require_count(params, 2, "gamma");
    return make_gamma(params[0], params[1]);
  }
  if (name == "student") {
    require_count(params, 1, "student");
    return make_student(params[0]);
  }
  if (name == "fdist") {
    require_count(params, 2, "fdist");
    return make_fdist(params[0], params[1]);
  }
  if (name == "poisson") {
    require_count(params, 1, "poisson");
    return make_poisson(params[0]);
  }
  if (name == "binomial") {
    require_count(params, 2, "binomial");
    return make_binomial(params[0], params[1]);
  }
  if (name == "negbinomial") {
    require_count(params, 2, "negbinomial");
    return make_negbinomial(params[0], params[1]);
  }
  if (name == "hypergeom") {
    require_count(params, 3, "hypergeom");
    return make_hypergeom(params[0], params[1], params[2]);
  }
  if (name == "neghypergeom") {
    require_count(params, 3, "neghypergeom");
    return make_neghypergeom(params[0], params[1], params[2]);
  }
  throw InvalidParameter("unknown family id: " + name);
}

inline const std::vector<std::string>& family_ids() {
  static const std::vector<std::string> ids = {
      "normal",   "beta",        "gamma",    "student",  "fdist",
      "poisson",  "binomial",    "negbinomial", "hypergeom", "neghypergeom"};
  return ids;
}

}  // namespace steinops
