#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/bessel.hpp>

#include "sublp/errors.hpp"
#include "sublp/quadrature.hpp"
#include "sublp/sbm.hpp"
#include "sublp/spde.hpp"

using namespace sublp;

namespace {

const double kPi = std::numbers::pi;

double cauchy_cdf(double x) { return 0.5 + std::atan(x) / kPi; }

SampleMoments moments(const std::vector<double>& x) { return sample_moments(x); }

std::vector<double> column(const std::vector<double>& xs, int d, int a) {
  std::vector<double> out(xs.size() / static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xs[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(a)];
  return out;
}

}  // namespace

TEST_CASE("stable subordinator: half-stable closed form and Laplace transform") {
  // density t e^{-t^2/(4s)} / (2 sqrt(pi) s^{3/2}), CDF erfc(t / (2 sqrt s))
  const double t = 1.7;
  auto s = sample_stable_subordinator(0.5, t, 1000000, 11);
  CHECK(std::all_of(s.begin(), s.end(), [](double v) { return v >= 0.0; }));
  const double D = ks_statistic(s, [&](double v) { return v <= 0.0 ? 0.0 : std::erfc(t / (2.0 * std::sqrt(v))); });
  CHECK(D < 0.01);
  CHECK(ks_p_value(D, 1e6) > 0.001);

  for (double a : {0.3, 0.7}) {
    auto x = sample_stable_subordinator(a, 1.0, 400000, 5);
    for (double lam : {0.5, 1.0, 2.0}) {
      std::vector<double> e(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) e[i] = std::exp(-lam * x[i]);
      const auto m = moments(e);
      CHECK(std::abs(m.mean - std::exp(-std::pow(lam, a))) < 3.0 * m.std_err);
    }
  }

  auto zero = sample_stable_subordinator(0.4, 0.0, 100, 1);
  CHECK(std::all_of(zero.begin(), zero.end(), [](double v) { return v == 0.0; }));
  CHECK_THROWS_AS(sample_stable_subordinator(1.0, 1.0, 10, 1), ParameterError);
  CHECK_THROWS_AS(sample_stable_subordinator(0.0, 1.0, 10, 1), ParameterError);
  CHECK(sample_stable_subordinator(0.6, 1.0, 20000, 3) == sample_stable_subordinator(0.6, 1.0, 20000, 3));
}

TEST_CASE("stable paths: monotone, independent increments, conditional variance 2 dS") {
  std::vector<double> times;
  for (int i = 1; i <= 8; ++i) times.push_back(0.25 * i);
  const auto paths = sample_stable_paths(0.6, 2, times, 40000, 21);
  std::vector<double> inc1, inc2, z;
  for (const auto& p : paths) {
    for (std::size_t i = 1; i < p.S.size(); ++i) REQUIRE(p.S[i] >= p.S[i - 1]);
    // log increments have finite variance
    inc1.push_back(std::log(p.S[3] - p.S[2]));
    inc2.push_back(std::log(p.S[4] - p.S[3]));
    const double dS = p.S[5] - p.S[4];
    if (dS > 0.0) z.push_back((p.X[5][0] - p.X[4][0]) / std::sqrt(2.0 * dS));
  }
  const auto m1 = moments(inc1), m2 = moments(inc2);
  std::vector<double> prod(inc1.size());
  for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = (inc1[i] - m1.mean) * (inc2[i] - m2.mean);
  const auto c = moments(prod);
  CHECK(std::abs(c.mean) < 3.0 * c.std_err);
  // standardized increments are standard normal
  const double D = ks_statistic(z, [](double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); });
  CHECK(ks_p_value(D, static_cast<double>(z.size())) > 0.01);
}

TEST_CASE("radial law: Cauchy and relativistic Cauchy closed forms") {
  const auto phi = BernsteinFunction::from_catalog("stable", {});
  const RadialLaw law(phi, 1, 1.0);
  CHECK(std::abs(law.total_mass() - 1.0) < 1e-10);
  for (double r : {1e-4, 0.03, 0.5, 1.0, 7.0, 300.0, 1e5}) {
    CHECK(law.cdf(r) == doctest::Approx(2.0 / kPi * std::atan(r)).epsilon(2e-5));
    CHECK(law.survival(r) == doctest::Approx(1.0 - 2.0 / kPi * std::atan(r)).epsilon(2e-5));
  }
  for (double u : {1e-5, 0.2, 0.5, 0.9, 0.999, 1.0 - 1e-7}) CHECK(law.quantile(u) == doctest::Approx(std::tan(0.5 * kPi * u)).epsilon(1e-4));

  // d = 3 Cauchy: p(r) = 1 / (pi^2 (1 + r^2)^2)
  const RadialLaw law3(phi, 3, 1.0);
  for (double r : {0.1, 1.0, 10.0}) {
    const double F = 2.0 / kPi * (std::atan(r) - r / (1.0 + r * r));
    CHECK(law3.cdf(r) == doctest::Approx(F).epsilon(2e-5));
  }

  // (sqrt(s lambda + m^2) - m) / c0 in d = 1: with tau = t / c0 and y = x / sqrt(s),
  // p = tau m e^{m tau} K_1(m rho) / (pi rho sqrt(s)), rho = sqrt(y^2 + tau^2)
  const auto rel = BernsteinFunction::from_catalog("relativistic", {});
  const double t = 0.8, m = rel.param("m");
  const double tau = t / rel.normalization(), sq = std::sqrt(rel.arg_scale());
  const RadialLaw lr(rel, 1, t);
  auto p = [&](double x) {
    const double rho = std::hypot(x / sq, tau);
    return tau * m * std::exp(m * tau) * boost::math::cyl_bessel_k(1, m * rho) / (kPi * rho * sq);
  };
  for (double r : {0.2, 1.0, 4.0}) {
    const double F = 2.0 * quad::gauss_kronrod(p, 0.0, r, 1e-12, 14).value;
    CHECK(lr.cdf(r) == doctest::Approx(F).epsilon(2e-5));
  }
}

TEST_CASE("sbm samples: Cauchy law, symmetry, isotropy, scaling") {
  const auto phi = BernsteinFunction::from_catalog("stable", {});
  for (SbmRoute route : {SbmRoute::subordinator, SbmRoute::inverse_cdf}) {
    const auto x = sample_sbm(phi, 1, 1.0, 1000000, 7, route);
    CHECK(ks_statistic(x, cauchy_cdf) < 0.01);
  }

  // two_stable has finite moments of order < 0.6; the sign is symmetric in any case
  const auto ts = BernsteinFunction::from_catalog("two_stable", {});
  const auto y = sample_sbm(ts, 3, 1.0, 200000, 9);
  for (int a = 0; a < 3; ++a) {
    auto c = column(y, 3, a);
    for (double& v : c) v = v > 0.0 ? 1.0 : -1.0;
    const auto mo = moments(c);
    CHECK(std::abs(mo.mean) < 3.0 * mo.std_err);
  }

  // angle of (x0, x1) on 36 sectors
  const auto w = sample_sbm(ts, 2, 1.0, 180000, 13);
  std::vector<double> counts(36, 0.0);
  for (std::size_t i = 0; i < w.size() / 2; ++i) {
    const double ang = std::atan2(w[2 * i + 1], w[2 * i]) + kPi;
    counts[std::min<std::size_t>(35, static_cast<std::size_t>(ang / (2.0 * kPi) * 36.0))] += 1.0;
  }
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - 5000.0) * (c - 5000.0) / 5000.0;
  CHECK(chi2 < 57.3);  // chi^2_{35} at 1%

  // X_t equals t^{1/alpha} X_1 in law for lambda^{alpha/2}
  const double alpha = 1.2, t = 3.0;
  const auto st = BernsteinFunction::from_catalog("stable", {{"alpha", alpha}});
  auto a = sample_sbm(st, 1, t, 200000, 31);
  auto b = sample_sbm(st, 1, 1.0, 200000, 32);
  for (double& v : b) v *= std::pow(t, 1.0 / alpha);
  CHECK(ks_p_value(ks_two_sample(a, b), 1e5) > 0.01);
}

TEST_CASE("goodness of fit: positive and negative controls") {
  const auto phi = BernsteinFunction::from_catalog("stable", {});
  const auto x = sample_sbm(phi, 1, 1.0, 1000000, 7);
  const auto ok = histogram_vs_density(x, phi, 1, 1.0);
  CHECK(ok.pass);
  CHECK(ok.bins == 102);
  CHECK(ok.dof == 101);

  const auto ts = BernsteinFunction::from_catalog("two_stable", {});
  const auto y = sample_sbm(ts, 1, 1.0, 1000000, 8);
  CHECK(histogram_vs_density(y, ts, 1, 1.0).chi2_p_value > 0.01);
  const auto bad = histogram_vs_density(y, ts, 1, 1.3);
  CHECK_FALSE(bad.pass);
  CHECK(bad.chi2_p_value < 1e-6);

  CHECK_THROWS_AS(histogram_vs_density(std::vector<double>(99999, 0.0), phi, 1, 1.0), UndersamplingError);
  CHECK_THROWS_AS(sample_sbm(BernsteinFunction::from_catalog("relativistic", {}), 1, 1.0, 10, 1, SbmRoute::subordinator),
                  UnsupportedError);
}

TEST_CASE("goodness of fit: self-test p-values spread over (0, 1)") {
  // inverse-CDF samples come from the table itself, so the chi^2 p-value is uniform
  const auto rel = BernsteinFunction::from_catalog("relativistic", {});
  int passes = 0;
  double mean_p = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = histogram_vs_density(sample_sbm(rel, 1, 1.0, 100000, seed), rel, 1, 1.0);
    passes += r.pass;
    mean_p += r.chi2_p_value / 5.0;
  }
  CHECK(passes >= 4);
  CHECK(mean_p > 0.15);
  CHECK(mean_p < 0.85);

  // KS p-values of closed-form Cauchy draws are uniform themselves
  const auto st = BernsteinFunction::from_catalog("stable", {});
  std::vector<double> ps;
  for (std::uint64_t seed = 100; seed < 140; ++seed)
    ps.push_back(ks_p_value(ks_statistic(sample_sbm(st, 1, 1.0, 20000, seed), cauchy_cdf), 20000.0));
  CHECK(ks_p_value(ks_statistic(ps, [](double u) { return std::clamp(u, 0.0, 1.0); }), 40.0) > 0.01);
}

TEST_CASE("ks p-value: both series agree with known quantiles") {
  // lambda = 1.358 is the 5% point, 1.628 the 1% point
  const double n = 1e8;
  CHECK(ks_p_value(1.358 / std::sqrt(n), n) == doctest::Approx(0.05).epsilon(0.01));
  CHECK(ks_p_value(1.628 / std::sqrt(n), n) == doctest::Approx(0.01).epsilon(0.01));
  CHECK(ks_p_value(0.828 / std::sqrt(n), n) == doctest::Approx(0.5).epsilon(0.01));
  // continuity across the switch at lambda = 1
  CHECK(ks_p_value(0.99999 / std::sqrt(n), n) == doctest::Approx(ks_p_value(1.00001 / std::sqrt(n), n)).epsilon(1e-4));
}
