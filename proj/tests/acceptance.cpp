// End-to-end acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "sublp/bernstein.hpp"
#include "sublp/errors.hpp"
#include "sublp/kernel.hpp"
#include "sublp/parabolic.hpp"
#include "sublp/reports.hpp"
#include "sublp/sbm.hpp"
#include "sublp/spde.hpp"
#include "sublp/spectral.hpp"

using namespace sublp;

namespace {

const double kPi = std::numbers::pi;
const double kL = 2.0 * kPi;

struct Outcome {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int number, const std::string& name, const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.pass = false;
    out.note << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!out.pass) ++failures;
  std::printf("criterion %2d %s  %s:%s (%.1f s)\n", number, out.pass ? "PASS" : "FAIL", name.c_str(),
              out.note.str().c_str(), secs);
  std::fflush(stdout);
}

BernsteinFunction stable(double alpha) { return BernsteinFunction::from_catalog("stable", {{"alpha", alpha}}); }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

int main() {
  criterion(1, "Cauchy density oracle", [](Outcome& o) {
    const auto start = std::chrono::steady_clock::now();
    const auto phi = stable(1.0);
    double worst = 0.0;
    for (double t : {0.5, 1.0, 2.0})
      for (int i = 0; i <= 80; ++i) {
        const double r = 0.25 * i;
        const double exact = t / (kPi * (t * t + r * r));
        worst = std::max(worst, std::abs(density(phi, 1, t, r) - exact) / exact);
      }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.note << " max rel err " << num(worst) << ", sweep " << num(secs) << " s";
    o.require(worst < 1e-4, "relative error < 1e-4");
    o.require(secs < 5.0, "runtime < 5 s");
  });

  criterion(2, "normalization and Chapman-Kolmogorov", [](Outcome& o) {
    double mass_dev = 0.0, ck = 0.0;
    for (const auto& name : catalog_names()) {
      const auto phi = BernsteinFunction::from_catalog(name);
      for (double t : {0.1, 1.0}) mass_dev = std::max(mass_dev, std::abs(kernel_mass(phi, 1, t) - 1.0));
    }
    for (const char* name : {"stable", "two_stable", "relativistic"})
      ck = std::max(ck, chapman_kolmogorov_defect(BernsteinFunction::from_catalog(name), 0.4, 0.6, {0.0, 1.5}));
    o.note << " " << catalog_names().size() << " entries, max |mass - 1| " << num(mass_dev) << ", CK defect "
           << num(ck);
    o.require(catalog_names().size() == 8, "eight catalog entries");
    o.require(mass_dev <= 1e-6, "mass within 1e-6");
    o.require(ck <= 1e-4, "Chapman-Kolmogorov within 1e-4");
  });

  criterion(3, "p = 2 square-function constant", [](Outcome& o) {
    RunConfig c;
    c.n = 32;
    c.M = 64;
    c.random_fields = 30;
    const BoundReport r = run_check("lem5.1", c);
    o.note << " ratio " << num(r.n_hat) << ", ensemble max " << num(r.details["ensemble"]["max_ratio"].get<double>())
           << " <= " << num(r.details["ensemble"]["allowance"].get<double>());
    o.require(std::abs(r.n_hat - 0.5) <= 0.01, "0.5 within 2%");
    o.require(r.pass, "ensemble bound");
  });

  criterion(4, "square-function L_p property suite", [](Outcome& o) {
    const auto start = std::chrono::steady_clock::now();
    const auto ensemble = lp_test_ensemble(1, kL, 100, 6, 2024);
    const TorusGrid g{1, 256, kL};
    for (const auto& phi : {stable(1.0), BernsteinFunction::from_catalog("two_stable"),
                            BernsteinFunction::from_catalog("relativistic", {{"alpha", 1.0}, {"m", 1.0}})}) {
      const BoundReport r = verify_lp_inequality(ensemble, {2.0, 4.0, 8.0}, 1.0, phi, g, 256);
      o.note << " " << phi.name() << ":";
      for (const auto& pp : r.details["per_p"])
        o.note << " p" << pp["p"].get<double>() << "=" << num(pp["n_hat"].get<double>()) << "/"
               << num(100 * pp["drift"].get<double>()) << "%";
      o.require(r.pass && std::isfinite(r.n_hat), phi.name() + " finite with drift <= 10%");
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.note << "; " << ensemble.size() << " fields";
    o.require(ensemble.size() >= 105, "100 random + adversarial fields");
    o.require(secs < 600.0, "runtime < 10 min");
  });

  criterion(5, "kernel upper, jump and fractional bounds", [](Outcome& o) {
    int entries = 0;
    for (const auto& e : catalog()) {
      if (!e.exponents.admissible()) continue;
      ++entries;
      const auto& phi = e.function;
      o.require(verify_kernel_upper_bound(phi, 1, 1.0).pass, phi.name() + " kernel bound");
      if (e.supports_levy_density) o.require(verify_j_bound(phi, 1).pass, phi.name() + " jump bound");
      for (int n : {0, 1, 2})
        for (int beta : {0, 1, 2})
          o.require(verify_frac_bound(phi, 1, 1.0, n, beta).pass,
                    phi.name() + " n=" + std::to_string(n) + " beta=" + std::to_string(beta));
    }
    double spread = 0.0;
    for (double alpha : {0.5, 1.0, 1.5})
      for (int d : {1, 3}) {
        double lo = INFINITY, hi = 0.0;
        for (double r = 1e-3; r <= 1e3; r *= 1.7) {
          const double v = levy_density(stable(alpha), d, r) * std::pow(r, d + alpha);
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        spread = std::max(spread, hi / lo - 1.0);
      }
    o.note << " " << entries << " admissible entries; stable j(r) r^{d+alpha} spread " << num(spread);
    o.require(entries > 0, "some admissible entries");
    o.require(spread < 1e-3, "stable jump density is an exact power");
  });

  criterion(6, "scaling identity", [](Outcome& o) {
    for (const char* name : {"stable", "two_stable"}) {
      const BoundReport r = verify_scaling_identity(BernsteinFunction::from_catalog(name), 1, {0.5, 1.0, 2.0});
      o.note << " " << name << " " << num(r.n_hat);
      o.require(r.pass && r.n_hat < 1e-6, std::string(name) + " discrepancy < 1e-6 peak");
    }
  });

  criterion(7, "sharp domination and local oscillation", [](Outcome& o) {
    RunConfig c;
    c.n = 64;
    c.M = 64;
    const BoundReport sh = run_check("eq6.08.9", c);
    const BoundReport osc = run_check("lem5.3", c);
    const json& far = osc.details["parts"]["far"];
    o.note << " sharp N " << num(sh.n_hat) << " (drift " << num(sh.refinement_drift) << "), oscillation N "
           << num(osc.n_hat) << ", far-support N " << num(far["n_hat"].get<double>());
    o.require(sh.pass && std::isfinite(sh.n_hat), "sharp domination finite and stable");
    o.require(osc.pass && std::isfinite(osc.n_hat), "oscillation bound finite and stable");
    o.require(far["n_hat"].get<double>() > 0.0, "far-support probe sees the nonlocal tail");
  });

  criterion(8, "parabolic multiplier", [](Outcome& o) {
    RunConfig c;
    c.p = {2.0, 4.0};
    c.random_fields = 12;
    const BoundReport r = run_check("lem6.4", c);
    const double p2 = r.details["per_p"][0]["n_hat"].get<double>();
    o.note << " p=2 " << num(p2) << ", p=4 " << num(r.details["per_p"][1]["n_hat"].get<double>()) << ", drift "
           << num(r.refinement_drift);
    o.require(p2 <= 1.0, "p = 2 ratio <= 1");
    o.require(r.pass, "drift <= 10%");
  });

  criterion(9, "SPDE Ito isometry and deterministic limb", [](Outcome& o) {
    RunConfig c;
    c.phi_name = "two_stable";
    c.n = 32;
    c.M = 64;
    c.replicas = 10000;
    const BoundReport r = run_check("thm6.3", c);
    o.note << " energy se ratio " << num(r.details["energy_T"]["std_err_ratio"].get<double>())
           << ", dissipation se ratio " << num(r.details["dissipation"]["std_err_ratio"].get<double>());
    o.require(r.pass, "energies within 3 se and se ~ R^{-1/2}");

    // single cosine mode held in time: u = cos(kx) (1 - e^{-t lambda}) / lambda
    SpdeProblem pr;
    pr.phi = BernsteinFunction::from_catalog("relativistic");
    pr.grid = {1, 16, kL};
    pr.M = 50;
    pr.T = 1.0;
    const int k = 3;
    SmoothFieldSpec f;
    f.L = kL;
    f.modes.push_back({{k}, 0, cplx(0.5, 0.0), {}, {}});
    pr.f = f.sample(pr.grid, pr.M, pr.T);
    const SpaceTimeField u = solve_deterministic(pr);
    const double lam = pr.phi(double(k * k));
    double err = 0.0, scale = 0.0;
    for (int m = 0; m <= pr.M; ++m)
      for (int j = 0; j < pr.grid.n; ++j) {
        const double expect = std::cos(k * j * pr.grid.h()) * -std::expm1(-m * pr.dt() * lam) / lam;
        err = std::max(err, std::abs(u.slice(m)[j] - expect));
        scale = std::max(scale, std::abs(expect));
      }
    o.note << ", ODE rel err " << num(err / scale);
    o.require(err <= 1e-10 * scale, "deterministic limb to 1e-10");
  });

  criterion(10, "SPDE a priori estimate", [](Outcome& o) {
    RunConfig c;
    c.phi_name = "two_stable";
    c.n = 32;
    c.M = 64;
    c.p = {2.0, 4.0};
    c.replicas = 2000;
    const BoundReport r = run_check("thm6.5", c);
    for (const auto& [label, part] : r.details["parts"].items())
      o.note << " " << label << " N " << num(part["n_hat"].get<double>()) << " drift "
             << num(part["refinement_drift"].get<double>());
    o.require(r.details["parts"].size() == 2, "p = 2 and p = 4");
    o.require(r.pass && std::isfinite(r.n_hat), "finite and stable within 15%");
  });

  criterion(11, "simulator cross-validation", [](Outcome& o) {
    const auto cauchy = sample_sbm(stable(1.0), 1, 1.0, 1000000, 7);
    const double ks_c = ks_statistic(cauchy, [](double x) { return 0.5 + std::atan(x) / kPi; });
    const double t = 1.0;
    const auto half = sample_stable_subordinator(0.5, t, 1000000, 8);
    const double ks_h =
        ks_statistic(half, [&](double s) { return s <= 0.0 ? 0.0 : std::erfc(t / (2.0 * std::sqrt(s))); });
    const auto ts = BernsteinFunction::from_catalog("two_stable");
    const FitReport fit = histogram_vs_density(sample_sbm(ts, 1, 1.0, 1000000, 9), ts, 1, 1.0);
    o.note << " Cauchy KS " << num(ks_c) << ", half-stable KS " << num(ks_h) << ", two_stable chi2 p "
           << num(fit.chi2_p_value);
    o.require(ks_c < 0.01, "Cauchy KS < 0.01");
    o.require(ks_h < 0.01, "subordinator KS < 0.01");
    o.require(fit.chi2_p_value >= 0.01, "chi^2 at the 1% level");
  });

  criterion(12, "scaling, derivative-ratio and tail-integral lemmas", [](Outcome& o) {
    for (const auto& name : catalog_names()) {
      const auto phi = BernsteinFunction::from_catalog(name);
      try {
        (void)check_scaling_conditions(phi);
      } catch (const ViolationError& e) {
        o.require(false, name + " two-sided scaling: " + e.what());
      }
      o.require(std::isfinite(verify_derivative_ratio(phi, 1).n_hat), name + " bounded derivative ratio");
    }
    double d_err = 0.0, t_err = 0.0;
    for (double alpha : {0.5, 1.0, 1.5}) {
      d_err = std::max(d_err, std::abs(verify_derivative_ratio(stable(alpha), 1).n_hat - alpha / 2));
      t_err = std::max(t_err, std::abs(verify_tail_integral(stable(alpha), {0.1, 1.0, 10.0}).n_hat - 1.0 / alpha));
    }
    o.note << " N(1) - alpha/2 " << num(d_err) << ", tail ratio - 1/alpha " << num(t_err);
    o.require(d_err <= 1e-6, "N(1) = alpha/2");
    o.require(t_err <= 1e-4, "tail ratio = 1/alpha");
  });

  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
