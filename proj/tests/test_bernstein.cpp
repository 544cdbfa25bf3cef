#include <doctest.h>

#include <cmath>

#include "sublp/bernstein.hpp"
#include "sublp/errors.hpp"

using namespace sublp;

namespace {

BernsteinFunction stable(double alpha) { return BernsteinFunction::from_catalog("stable", {{"alpha", alpha}}); }
BernsteinFunction two_stable(double a, double b) {
  return BernsteinFunction::from_catalog("two_stable", {{"alpha", a}, {"beta", b}});
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace

TEST_CASE("eval: closed-form values") {
  CHECK(stable(1.0)(4.0) == doctest::Approx(2.0).epsilon(1e-15));
  const auto ts = two_stable(0.3, 0.7);
  CHECK(ts(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(ts.normalization() == doctest::Approx(2.0));
  const auto rel_phi = BernsteinFunction::from_catalog("relativistic");
  const double expect = (std::sqrt(4.0) - 1.0) / (std::sqrt(2.0) - 1.0);
  CHECK(rel(rel_phi(3.0), expect) < 1e-14);
  CHECK(rel_phi.normalization() == doctest::Approx(std::sqrt(2.0) - 1.0));
}

TEST_CASE("eval: every entry is normalized, zero at zero and increasing") {
  for (const auto& name : catalog_names()) {
    CAPTURE(name);
    const auto f = BernsteinFunction::from_catalog(name);
    CHECK(f(1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f(0.0) == 0.0);
    double prev = 0.0;
    for (double lam = 1e-8; lam < 1e8; lam *= 1.3) {
      const double v = f(lam);
      CHECK(v > prev);
      prev = v;
    }
  }
}

TEST_CASE("eval: series and asymptotic branches agree at the switch point") {
  for (const char* name : {"log_cosh", "log_sinh"}) {
    const auto f = BernsteinFunction::from_catalog(name);
    const double below = f(16.0 * (1 - 1e-12));
    const double above = f(16.0 * (1 + 1e-12));
    CHECK(rel(below, above) < 1e-10);
  }
  // log cosh sqrt(x) against the direct library formula
  const auto lc = BernsteinFunction::from_catalog("log_cosh", {{"alpha", 0.5}});
  auto direct = [](double x) { return std::sqrt(std::log(std::cosh(std::sqrt(x)))); };
  for (double x : {1e-3, 0.5, 3.0, 20.0, 300.0}) CHECK(rel(lc(x), direct(x) / direct(1.0)) < 1e-12);
  const auto ls = BernsteinFunction::from_catalog("log_sinh", {{"alpha", 0.5}});
  auto direct_s = [](double x) {
    return std::sqrt(std::log(std::sinh(std::sqrt(x))) - std::log(std::sqrt(x)));
  };
  for (double x : {1e-2, 0.5, 3.0, 20.0, 300.0}) CHECK(rel(ls(x), direct_s(x) / direct_s(1.0)) < 1e-10);
}

TEST_CASE("eval: complex continuation agrees with the real axis") {
  for (const auto& name : catalog_names()) {
    CAPTURE(name);
    const auto f = BernsteinFunction::from_catalog(name);
    for (double x : {1e-5, 0.3, 7.0, 50.0, 1e5}) {
      const auto z = f(std::complex<double>(x, 0.0));
      CHECK(rel(z.real(), f(x)) < 1e-12);
      CHECK(std::abs(z.imag()) < 1e-14 * std::abs(z.real()));
    }
    // Re phi(i s) >= 0 on the imaginary axis
    for (double s : {0.01, 1.0, 100.0}) CHECK(f(std::complex<double>(0.0, s)).real() >= 0.0);
  }
}

TEST_CASE("eval: errors") {
  CHECK_THROWS_AS(stable(1.0)(-1.0), DomainError);
  CHECK_THROWS_AS(BernsteinFunction::from_catalog("power_log", {{"alpha", 0.5}, {"beta", 0.6}}),
                  ParameterError);
  CHECK_THROWS_AS(two_stable(0.7, 0.3), ParameterError);
  CHECK_THROWS_AS(stable(2.0), ParameterError);
  CHECK_THROWS_AS(BernsteinFunction::from_catalog("nope"), ParameterError);
  CHECK_THROWS_AS(BernsteinFunction::from_catalog("stable", {{"gamma", 1.0}}), ParameterError);
}

TEST_CASE("deriv_n: power rule and identity case") {
  for (double alpha : {0.5, 1.0, 1.5}) CHECK(deriv_n(stable(alpha), 1.0, 1) == doctest::Approx(alpha / 2));
  const auto f = BernsteinFunction::from_catalog("mixed_power");
  CHECK(deriv_n(f, 2.5, 0) == f(2.5));
  // third derivative of lambda^{1/2}: (1/2)(-1/2)(-3/2) lambda^{-5/2}
  CHECK(rel(deriv_n(stable(1.0), 4.0, 3), 0.375 * std::pow(4.0, -2.5)) < 1e-13);
}

TEST_CASE("deriv_n: two-term sum against analytic and finite-difference oracles") {
  const auto f = two_stable(0.4, 0.9);
  const double lam = 2.0;
  const double analytic = (0.4 * -0.6 * std::pow(lam, -1.6) + 0.9 * -0.1 * std::pow(lam, -1.1)) / 2.0;
  CHECK(rel(deriv_n(f, lam, 2), analytic) < 1e-12);
  // second difference of the raw closed form, step 4x finer than a 1e-3 base step
  auto raw = [](double x) { return (std::pow(x, 0.4) + std::pow(x, 0.9)) / 2.0; };
  const double h = 0.25e-3;
  const double fd = (raw(lam + h) - 2 * raw(lam) + raw(lam - h)) / (h * h);
  CHECK(std::abs(deriv_n(f, lam, 2) - fd) < 1e-6);
}

TEST_CASE("numeric_derivative agrees with jets for every entry") {
  for (const auto& name : catalog_names()) {
    CAPTURE(name);
    const auto f = BernsteinFunction::from_catalog(name);
    for (double lam : {0.01, 1.0, 30.0}) {
      for (int n = 1; n <= 3; ++n) {
        CAPTURE(lam);
        CAPTURE(n);
        const double exact = deriv_n(f, lam, n);
        // near-linear symbols cancel in the log-stencil; refusing is the contract there
        try {
          const double approx = numeric_derivative(f, lam, n);
          CHECK(rel(approx, exact) < 1e-4);
        } catch (const ToleranceError&) {
          CHECK(lam < 1.0);
        }
      }
    }
  }
}

TEST_CASE("inverse") {
  CHECK(rel(inverse(stable(1.0), 3.0), 9.0) < 1e-12);
  for (const auto& name : catalog_names()) CHECK(inverse(BernsteinFunction::from_catalog(name), 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  const auto f = two_stable(0.3, 0.7);
  const double lam = inverse(f, 5.0);
  CHECK(std::abs(f(lam) - 5.0) <= 5e-12);
  CHECK_THROWS_AS(inverse(f, -1.0), DomainError);
  // relativistic grows like lambda^{1/2} but the normalization bounds nothing; log entries saturate
  CHECK_THROWS_AS(inverse(stable(0.01), 1e300), BracketError);
}

TEST_CASE("inverse composed with eval is the identity") {
  for (const auto& name : catalog_names()) {
    CAPTURE(name);
    const auto f = BernsteinFunction::from_catalog(name);
    for (double lam = 1e-8; lam <= 1e8; lam *= 10.0) CHECK(rel(inverse(f, f(lam)), lam) < 1e-10);
  }
}

TEST_CASE("characteristic scale") {
  const auto f = BernsteinFunction::from_catalog("power_log");
  for (double t : {0.01, 1.0, 50.0}) {
    const double a = characteristic_scale(f, t);
    CHECK(t * f(1.0 / (a * a)) == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(characteristic_scale(stable(1.0), 2.0) == doctest::Approx(2.0));
}

TEST_CASE("phi_scaled") {
  const auto f = two_stable(0.3, 0.7);
  CHECK(phi_scaled(f, 3.7, 1.0) == 1.0);
  const double direct = (std::pow(16.0, 0.3) + std::pow(16.0, 0.7)) / (std::pow(4.0, 0.3) + std::pow(4.0, 0.7));
  CHECK(rel(phi_scaled(f, 0.5, 4.0), direct) < 1e-14);
  CHECK(rel(f.scaled(0.5)(4.0), direct) < 1e-14);
  const auto s = stable(1.2);
  for (double lam : {0.1, 2.0, 9.0}) CHECK(rel(phi_scaled(s, 2.0, lam), std::pow(lam, 0.6)) < 1e-14);
}

TEST_CASE("check_scaling_conditions: pure power") {
  for (double alpha : {0.4, 1.0, 1.6}) {
    const auto e = check_scaling_conditions(stable(alpha));
    CHECK(e.delta1 == doctest::Approx(alpha / 2).epsilon(1e-3));
    CHECK(e.delta2 == doctest::Approx(alpha / 2).epsilon(1e-3));
    CHECK(e.delta3 == doctest::Approx(alpha / 2).epsilon(1e-3));
    CHECK(e.a1 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(e.admissible());
  }
}

TEST_CASE("check_scaling_conditions: two-term sum against the analytic slope extremes") {
  const double a = 0.3, b = 0.7;
  const auto e = check_scaling_conditions(two_stable(a, b));
  // smallest slope on lambda,t >= 1 is the first lattice step above lambda = t = 1
  const double l1 = std::pow(10.0, 1.0 / 40);
  const double d1 = std::log((std::pow(l1, a) + std::pow(l1, b)) / 2.0) / std::log(l1);
  CHECK(e.delta1 == doctest::Approx(d1).epsilon(1e-9));
  // largest slope: t at the lattice top, lambda one step above 1
  const double t = 1e4;
  auto raw = [&](double x) { return std::pow(x, a) + std::pow(x, b); };
  double d2 = 0.0;
  for (double lam = l1; lam <= 1e4 * 1.0001; lam *= l1)
    d2 = std::max(d2, std::log(raw(lam * t) / raw(t)) / std::log(lam));
  CHECK(e.delta2 == doctest::Approx(d2).epsilon(1e-6));
  CHECK(e.delta2 < b);
  CHECK(e.delta2 > b - 0.05);
  CHECK(e.delta3 == doctest::Approx(a).epsilon(1e-2));
  CHECK(e.admissible());
}

TEST_CASE("check_scaling_conditions: catalog entries and lattice preconditions") {
  for (const auto& name : catalog_names()) {
    CAPTURE(name);
    const auto f = BernsteinFunction::from_catalog(name);
    const auto e = check_scaling_conditions(f);
    CHECK(e.delta1 > 0.0);
    CHECK(e.delta1 <= e.delta2);
    CHECK(e.delta3 <= 1.0);
    const double r = f(6.0) / f(2.0);
    CHECK(r >= 1.0);
    CHECK(r <= 3.0);
  }
  CHECK_THROWS_AS(check_scaling_conditions(stable(1.0), LogLattice{1e-3, 1e4, 40}), PreconditionError);
  CHECK_THROWS_AS(check_scaling_conditions(stable(1.0), LogLattice{1e-4, 1e4, 20}), PreconditionError);
}

TEST_CASE("concavity and monotone ratio properties on the lattice") {
  for (const auto& name : catalog_names()) {
    CAPTURE(name);
    const auto f = BernsteinFunction::from_catalog(name);
    const auto pts = LogLattice{1e-4, 1e4, 5}.points();
    for (double t : pts) {
      for (double lam : pts) {
        if (lam >= 1.0) CHECK(f(lam * t) <= lam * f(t) * (1 + 1e-12));
      }
    }
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      CHECK(f(pts[i + 1]) / pts[i + 1] <= f(pts[i]) / pts[i] * (1 + 1e-12));
  }
}

TEST_CASE("complete monotonicity probe") {
  for (const auto& name : catalog_names()) {
    CAPTURE(name);
    std::string why;
    CHECK(complete_monotonicity_probe(BernsteinFunction::from_catalog(name), &why));
    CHECK(why.empty());
  }
}

TEST_CASE("verify_derivative_ratio") {
  for (double alpha : {0.5, 1.0, 1.5}) {
    const auto r = verify_derivative_ratio(stable(alpha), 1);
    CHECK(std::abs(r.n_hat - alpha / 2) < 1e-6);
    CHECK(r.pass);
  }
  const auto r2 = verify_derivative_ratio(two_stable(0.3, 0.7), 1);
  CHECK(r2.n_hat <= 0.7 + 1e-3);
  CHECK(r2.n_hat > 0.69);
  const auto r3 = verify_derivative_ratio(BernsteinFunction::from_catalog("relativistic"), 2);
  CHECK(std::isfinite(r3.n_hat));
  CHECK(r3.pass);
  CHECK_THROWS_AS(verify_derivative_ratio(stable(1.0), 5), DomainError);
}

TEST_CASE("verify_tail_integral") {
  for (double alpha : {0.5, 1.0, 1.5}) {
    const auto r = verify_tail_integral(stable(alpha), {0.1, 1.0, 10.0});
    CHECK(std::abs(r.n_hat - 1.0 / alpha) < 1e-4 / alpha);
    CHECK(std::abs(r.details["n_hat_sqrt"].get<double>() - 2.0 / alpha) < 2e-4 / alpha);
    CHECK(r.pass);
  }
  const auto r = verify_tail_integral(two_stable(0.3, 0.7), {0.1, 1.0, 10.0});
  CHECK(std::isfinite(r.n_hat));
  CHECK(r.pass);
  CHECK_THROWS_AS(verify_tail_integral(BernsteinFunction::linear(), {1.0}), PreconditionError);
}

TEST_CASE("levy measure density") {
  const auto s = stable(1.0);
  CHECK(rel(s.levy_measure_density(2.0), 0.5 / std::tgamma(0.5) * std::pow(2.0, -1.5)) < 1e-14);
  // recovers phi: int (1 - e^{-lambda u}) mu(du) for the relativistic entry
  const auto r = BernsteinFunction::from_catalog("relativistic");
  double acc = 0.0;
  for (double u = -40; u < 10; u += 1e-3) {
    const double x = std::exp(u);
    acc += -std::expm1(-3.0 * x) * r.levy_measure_density(x) * x * 1e-3;
  }
  CHECK(rel(acc, r(3.0)) < 1e-4);
  CHECK_THROWS_AS(BernsteinFunction::from_catalog("log_cosh").levy_measure_density(1.0), UnsupportedError);
}

TEST_CASE("catalog serialization") {
  const auto entries = catalog();
  CHECK(entries.size() == 8);
  for (const auto& e : entries) {
    const auto j = e.function.to_json();
    CHECK(j.contains("params"));
    CHECK(e.exponents.admissible());
  }
}
