#pragma once

#include <complex>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sublp/bound_report.hpp"
#include "sublp/jet.hpp"

namespace sublp {

using ParamMap = std::map<std::string, double>;

enum class Family {
  stable,             // lambda^{alpha/2}, 0 < alpha < 2
  two_stable,         // lambda^alpha + lambda^beta, 0 < alpha < beta < 1
  mixed_power,        // (lambda + lambda^alpha)^beta
  power_log,          // lambda^alpha log(1+lambda)^beta, beta < 1 - alpha
  power_inv_log,      // lambda^alpha log(1+lambda)^{-beta}, beta < alpha
  relativistic,       // (lambda + m^{2/alpha})^{alpha/2} - m
  log_cosh,           // log(cosh sqrt(lambda))^alpha
  log_sinh,           // (log sinh sqrt(lambda) - log sqrt(lambda))^alpha
  linear,             // pure drift lambda (Brownian case, b = 1); not in the catalog
};

/// A normalized Bernstein function phi(lambda) = raw(s*lambda) / raw(s).
///
/// `s` (the argument scale) is 1 for catalog entries, so phi(1) = 1 holds by
/// construction; scaled(a) sets s -> s*a^{-2}, which realizes
/// phi^a(lambda) = phi(lambda a^{-2}) / phi(a^{-2}) exactly.
class BernsteinFunction {
 public:
  /// Catalog constructor; `overrides` replace the default parameters.
  static BernsteinFunction from_catalog(std::string_view name, const ParamMap& overrides = {});
  static BernsteinFunction linear();

  const std::string& name() const { return name_; }
  Family family() const { return family_; }
  const ParamMap& params() const { return params_; }
  double param(const std::string& key) const { return params_.at(key); }
  double drift() const { return family_ == Family::linear ? 1.0 : 0.0; }
  double normalization() const { return c0_; }
  double arg_scale() const { return scale_; }
  bool supports_levy_density() const;

  /// phi(lambda); lambda = 0 returns 0, negative lambda is a DomainError.
  double operator()(double lambda) const;
  /// Analytic continuation to Re z >= 0 (principal branches).
  std::complex<double> operator()(std::complex<double> z) const;
  /// Taylor jet of phi at lambda > 0.
  Jet jet(double lambda) const;

  /// Density of the Levy measure mu(ds)/ds of the normalized phi.
  double levy_measure_density(double s) const;

  BernsteinFunction scaled(double a) const;

  /// kappa with phi(lambda) ~ lambda^kappa as lambda -> 0 (sets kernel tails).
  double small_argument_exponent() const;
  /// kappa with phi(lambda) ~ lambda^kappa (up to logs) as lambda -> infinity.
  double large_argument_exponent() const;

  json to_json() const;

 private:
  BernsteinFunction(std::string name, Family family, ParamMap params);
  template <class T>
  T raw(const T& x) const;

  std::string name_;
  Family family_;
  ParamMap params_;
  double scale_ = 1.0;
  double c0_ = 1.0;
};

struct ScalingExponents {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double delta3 = 0.0;
  double a1 = 1.0;
  double a2 = 1.0;
  double a3 = 1.0;

  /// 0 < delta1 <= delta2 < 1 and 0 < delta3 <= 1.
  bool admissible() const {
    return delta1 > 0.0 && delta1 <= delta2 && delta2 < 1.0 && delta3 > 0.0 && delta3 <= 1.0;
  }
};

struct CatalogEntry {
  BernsteinFunction function;
  ScalingExponents exponents;
  bool supports_levy_density = false;
};

/// Log-spaced lattice [lo, hi] with `per_decade` points per decade (both ends included).
struct LogLattice {
  double lo = 1e-4;
  double hi = 1e4;
  int per_decade = 40;

  std::vector<double> points() const;
  LogLattice refined() const { return {lo, hi, 2 * per_decade}; }
};

/// Names of all catalog entries, in catalog order.
std::vector<std::string> catalog_names();

double eval(const BernsteinFunction& phi, double lambda);

/// n-th derivative (n <= 6) from the jet of the closed form.
double deriv_n(const BernsteinFunction& phi, double lambda, int n);

/// n-th derivative by Richardson-extrapolated central differences in log(lambda).
/// Throws ToleranceError if two successive refinements disagree beyond 1e-4 relative.
double numeric_derivative(const BernsteinFunction& phi, double lambda, int n);

/// lambda with |phi(lambda) - y| <= 1e-12 y.
double inverse(const BernsteinFunction& phi, double y);

/// a_t = 1 / sqrt(phi^{-1}(1/t)); t * phi(a_t^{-2}) = 1.
double characteristic_scale(const BernsteinFunction& phi, double t);

double phi_scaled(const BernsteinFunction& phi, double a, double lambda);

/// Extremal log-log slopes of phi(lambda t)/phi(t) over the lattice, plus the
/// two-sided bound min(1,lambda) <= phi(lambda t)/phi(t) <= max(1,lambda).
ScalingExponents check_scaling_conditions(const BernsteinFunction& phi,
                                          const LogLattice& lattice = {});

/// (-1)^n D^n phi <= 0 for n = 1..6 on [1e-6, 1e6]; returns the first failing
/// (lambda, n) in `failure` when false.
bool complete_monotonicity_probe(const BernsteinFunction& phi, std::string* failure = nullptr);

BoundReport verify_derivative_ratio(const BernsteinFunction& phi, int n,
                                    const LogLattice& lattice = {1e-6, 1e6, 20});

BoundReport verify_tail_integral(const BernsteinFunction& phi,
                                 const std::vector<double>& lambda_grid);

std::vector<CatalogEntry> catalog();

}  // namespace sublp
