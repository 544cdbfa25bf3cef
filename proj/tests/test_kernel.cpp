#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "sublp/errors.hpp"
#include "sublp/kernel.hpp"

using namespace sublp;

namespace {

constexpr double kPi = std::numbers::pi;

BernsteinFunction stable(double alpha) { return BernsteinFunction::from_catalog("stable", {{"alpha", alpha}}); }

double cauchy(double t, double x) { return t / (kPi * (t * t + x * x)); }
double gaussian(int d, double t, double r) {
  return std::pow(4.0 * kPi * t, -0.5 * d) * std::exp(-r * r / (4.0 * t));
}
double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("density: Cauchy oracle") {
  const auto f = stable(1.0);
  CHECK(rel(density(f, 1, 1.0, 0.0), 1.0 / kPi) < 1e-10);
  CHECK(rel(density(f, 1, 2.0, 2.0), 2.0 / (kPi * 8.0)) < 1e-10);
  for (double t : {0.5, 1.0, 2.0})
    for (double r : {0.0, 1e-3, 0.1, 0.7, 1.0, 3.0, 10.0, 20.0, 1e3, 1e6}) {
      CAPTURE(t);
      CAPTURE(r);
      CHECK(rel(density(f, 1, t, r), cauchy(t, r)) < 1e-9);
    }
}

TEST_CASE("density: stable origin value") {
  // (1/pi) int_0^inf e^{-xi^alpha} = Gamma(1 + 1/alpha) / pi
  for (double alpha : {0.5, 1.3}) CHECK(rel(density(stable(alpha), 1, 1.0, 0.0), std::tgamma(1.0 + 1.0 / alpha) / kPi) < 1e-10);
}

TEST_CASE("density: Gaussian oracle in d = 1, 2, 3 through both routes") {
  const auto g = BernsteinFunction::linear();
  for (int d : {1, 2, 3}) {
    for (double r : {0.0, 0.3, 1.0, 2.5, 5.0}) {
      CAPTURE(d);
      CAPTURE(r);
      const double exact = gaussian(d, 0.7, r);
      CHECK(rel(density(g, d, 0.7, r), exact) < 1e-8);
      CHECK(rel(density_bessel_route(g, d, 0.7, 0, r), exact) < 1e-8);
    }
  }
}

TEST_CASE("density: contour and Bessel routes agree on catalog entries") {
  for (const auto& name : catalog_names()) {
    const auto f = BernsteinFunction::from_catalog(name);
    for (int d : {1, 3}) {
      for (double r : {0.05, 0.8, 4.0}) {
        CAPTURE(name);
        CAPTURE(d);
        CAPTURE(r);
        CHECK(rel(density(f, d, 1.0, r), density_bessel_route(f, d, 1.0, 0, r)) < 1e-7);
      }
    }
  }
  // d = 3 against the Cauchy-type closed form t / (pi^2 (t^2 + r^2)^2)
  for (double r : {0.0, 0.5, 3.0, 40.0}) CHECK(rel(density(stable(1.0), 3, 1.0, r), 1.0 / (kPi * kPi * std::pow(1.0 + r * r, 2))) < 1e-8);
}

TEST_CASE("density: even dimensions across the far-field switch") {
  // Cauchy-type closed forms: t / (2 pi (t^2+r^2)^{3/2}) and 3t / (4 pi^2 (t^2+r^2)^{5/2})
  const auto f = stable(1.0);
  for (double t : {0.5, 2.0})
    for (double r : {0.3, 20.0, 99.0 * t, 101.0 * t, 1e4, 1e7}) {
      CAPTURE(t);
      CAPTURE(r);
      const double q = t * t + r * r;
      CHECK(rel(density(f, 2, t, r), t / (2.0 * kPi * std::pow(q, 1.5))) < 1e-9);
      CHECK(rel(density(f, 4, t, r), 3.0 * t / (4.0 * kPi * kPi * std::pow(q, 2.5))) < 1e-8);
    }
  // both sides of the switch agree with the plain Bessel series
  for (const char* name : {"two_stable", "log_sinh"}) {
    const auto g = BernsteinFunction::from_catalog(name);
    const double r = 100.5 * characteristic_scale(g, 1.0);
    CAPTURE(name);
    CHECK(rel(density(g, 2, 1.0, r), density_bessel_route(g, 2, 1.0, 0, r)) < 1e-7);
  }
}

TEST_CASE("density: positivity and radial monotonicity") {
  for (const auto& name : catalog_names()) {
    CAPTURE(name);
    const auto f = BernsteinFunction::from_catalog(name);
    const double peak = density(f, 1, 1.0, 0.0);
    double prev = peak;
    for (double r = 1e-3; r < 1e5; r *= 1.5) {
      const double v = density(f, 1, 1.0, r);
      CHECK(v >= -1e-8 * peak);
      CHECK(v <= prev + 1e-12 * peak);
      prev = v;
    }
  }
}

TEST_CASE("density: errors") {
  CHECK_THROWS_AS(density(stable(1.0), 1, 1e-9, 1.0), DomainError);
  CHECK_THROWS_AS(density(stable(1.0), 1, 1.0, -1.0), DomainError);
}

TEST_CASE("frac_density_1d: Cauchy derivatives and parity") {
  const auto f = stable(1.0);
  for (double x : {0.2, 1.0, 3.0, 15.0}) {
    CAPTURE(x);
    const double d1 = -2.0 * x / (kPi * std::pow(1.0 + x * x, 2));
    CHECK(rel(frac_density_1d(f, 1.0, 0, 1, x), d1) < 1e-8);
    CHECK(frac_density_1d(f, 1.0, 0, 1, -x) == -frac_density_1d(f, 1.0, 0, 1, x));
    // symbol |xi| e^{-t|xi|} is -d/dt of the Cauchy kernel: (t^2 - x^2)/(pi (t^2+x^2)^2)
    const double gen = (1.0 - x * x) / (kPi * std::pow(1.0 + x * x, 2));
    CHECK(std::abs(frac_density_1d(f, 1.0, 2, 0, x) - gen) < 1e-10);
  }
  // second derivative of the Gaussian
  const auto g = BernsteinFunction::linear();
  for (double x : {0.0, 0.5, 2.0}) {
    const double t = 0.5;
    const double exact = gaussian(1, t, x) * (x * x / (4 * t * t) - 1.0 / (2 * t));
    CHECK(std::abs(frac_density_1d(g, t, 0, 2, x) - exact) < 1e-10);
  }
}

TEST_CASE("frac_kernel: n = 0 table matches density") {
  const auto f = BernsteinFunction::from_catalog("two_stable");
  const std::vector<double> radii{0.0, 0.1, 1.0, 10.0};
  const auto tab = frac_kernel(f, 1, 1.0, KernelOrder{0, {}}, radii);
  for (std::size_t i = 0; i < radii.size(); ++i) CHECK(std::abs(tab.values[i] - density(f, 1, 1.0, radii[i])) < 1e-6);
  CHECK_THROWS_AS(frac_kernel(f, 1, 1.0, KernelOrder{0, {1}}, radii), DomainError);
}

TEST_CASE("frac_kernel_fft: agrees with the radial path and has exact parity") {
  const auto f = BernsteinFunction::from_catalog("relativistic");
  const auto tab = frac_kernel_fft(f, 1, 1.0, KernelOrder{0, {0}});
  const double h = tab.grid.h();
  for (int j : {0, 1, 7, 30, 100}) {
    CAPTURE(j);
    CHECK(rel(tab.at({j}), density(f, 1, 1.0, j * h)) < 1e-5);
  }
  const auto odd = frac_kernel_fft(f, 1, 1.0, KernelOrder{0, {1}});
  for (int j : {1, 5, 40}) {
    CHECK(odd.at({-j}) == -odd.at({j}));
    CHECK(rel(odd.at({j}), frac_density_1d(f, 1.0, 0, 1, j * odd.grid.h())) < 1e-5);
  }
  const auto cauchy_d1 = frac_kernel_fft(stable(1.0), 1, 1.0, KernelOrder{0, {1}});
  for (int j : {3, 20, 60}) {
    const double x = j * cauchy_d1.grid.h();
    CHECK(std::abs(cauchy_d1.at({j}) + 2.0 * x / (kPi * std::pow(1.0 + x * x, 2))) < 1e-4);
  }
  // d = 2 mixed derivative: odd in both axes
  const auto mixed = frac_kernel_fft(f, 2, 1.0, KernelOrder{0, {1, 1}}, {std::size_t{1} << 22, 1e-8});
  CHECK(mixed.at({2, 3}) == -mixed.at({-2, 3}));
  CHECK(mixed.at({2, 3}) == mixed.at({-2, -3}));
  CHECK_THROWS_AS(frac_kernel_fft(stable(1.0), 3, 1.0, KernelOrder{0, {}}), AliasingError);
}

TEST_CASE("levy_density") {
  CHECK(rel(levy_density(stable(1.0), 1, 2.0), 1.0 / (kPi * 4.0)) < 1e-8);
  for (double alpha : {0.6, 1.0, 1.7}) {
    for (int d : {1, 2, 3}) {
      const double c = levy_density(stable(alpha), d, 1.0);
      CHECK(rel(c, stable_levy_density(alpha, d, 1.0)) < 1e-8);
      for (double r : {1e-3, 0.1, 10.0, 1e3}) CHECK(rel(levy_density(stable(alpha), d, r) * std::pow(r, d + alpha), c) < 1e-3);
    }
  }
  const auto rel_phi = BernsteinFunction::from_catalog("relativistic");
  double prev = INFINITY;
  for (double r = 1e-2; r < 30; r *= 2) {
    const double v = levy_density(rel_phi, 2, r);
    CHECK(v > 0.0);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(levy_density(BernsteinFunction::from_catalog("log_cosh"), 1, 1.0), UnsupportedError);
}

TEST_CASE("kernel_mass and Chapman-Kolmogorov") {
  for (const char* name : {"stable", "relativistic", "log_sinh"}) {
    CAPTURE(name);
    CHECK(std::abs(kernel_mass(BernsteinFunction::from_catalog(name), 1, 1.0) - 1.0) < 1e-6);
  }
  CHECK(std::abs(kernel_mass(stable(1.0), 3, 0.5) - 1.0) < 1e-6);
  CHECK(chapman_kolmogorov_defect(BernsteinFunction::from_catalog("relativistic"), 0.4, 0.6, {0.0, 1.5}) < 1e-4);
}

TEST_CASE("verify_kernel_upper_bound: Cauchy origin constant and stability") {
  const auto rep = verify_kernel_upper_bound(stable(1.0), 1, 1.0);
  CHECK(rep.details["origin_ratio_t_T"].get<double>() == doctest::Approx(1.0 / kPi).epsilon(1e-9));
  CHECK(rep.pass);
  CHECK(rep.n_hat == doctest::Approx(1.0 / kPi).epsilon(1e-6));
  const auto two = verify_kernel_upper_bound(BernsteinFunction::from_catalog("two_stable"), 1, 1.0);
  CHECK(two.pass);
}

TEST_CASE("verify_j_bound") {
  const auto rep = verify_j_bound(stable(1.0), 1);
  // j r / phi(r^{-2}) = (1/pi r^2) r / r^{-1} = 1/pi
  CHECK(rep.n_hat == doctest::Approx(1.0 / kPi).epsilon(1e-6));
  CHECK(rep.pass);
  const auto two = verify_j_bound(BernsteinFunction::from_catalog("two_stable"), 2);
  CHECK(two.pass);
  CHECK(two.details["sup_r_below_1"].get<double>() > 0.0);
  CHECK(two.details["sup_r_above_1"].get<double>() > 0.0);
}

TEST_CASE("verify_frac_bound") {
  const auto f = stable(1.0);
  const auto rep = verify_frac_bound(f, 1, 1.0, 1, 0);
  CHECK(rep.pass);
  // cross-check at x = 0 with the real-axis Bessel route
  CHECK(std::abs(frac_density_1d(f, 1.0, 1, 0, 0.0) - density_bessel_route(f, 1, 1.0, 1, 0.0)) < 1e-5);
  // far-field slope of phi(Delta)^{1/2} p for alpha = 1: -(d + alpha/2) or steeper
  const double x1 = 1e3, x2 = 1e4;
  const double slope = std::log(std::abs(frac_density_1d(f, 1.0, 1, 0, x2) / frac_density_1d(f, 1.0, 1, 0, x1))) / std::log(x2 / x1);
  CHECK(slope <= -1.5 + 0.1);
  const auto n0 = verify_frac_bound(BernsteinFunction::from_catalog("two_stable"), 1, 1.0, 0, 0);
  const auto k0 = verify_kernel_upper_bound(BernsteinFunction::from_catalog("two_stable"), 1, 1.0);
  CHECK(n0.pass);
  // the n = 0 right side dominates the kernel bound, so its constant is not larger
  CHECK(n0.n_hat <= k0.n_hat * (1 + 1e-9));
}

TEST_CASE("verify_scaling_identity") {
  const auto one = verify_scaling_identity(stable(1.0), 1, {1.0});
  CHECK(one.details["per_a"]["1.000000"].get<double>() == 0.0);
  const auto rep = verify_scaling_identity(stable(1.0), 1, {2.0}, KernelLattice{1, 1, 1e-2, 1e2, 2});
  CHECK(rep.pass);
  const auto two = verify_scaling_identity(BernsteinFunction::from_catalog("two_stable"), 1, {0.5}, KernelLattice{1, 1, 1e-2, 1e2, 2});
  CHECK(two.pass);
}

TEST_CASE("density is fast enough for the Cauchy sweep") {
  const auto start = std::chrono::steady_clock::now();
  const auto f = stable(1.0);
  for (double t : {0.5, 1.0, 2.0})
    for (double r = 0.0; r <= 20.0; r += 0.25) (void)density(f, 1, t, r);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 5.0);
}
