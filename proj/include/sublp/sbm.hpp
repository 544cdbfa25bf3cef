#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sublp/bernstein.hpp"
#include "sublp/bound_report.hpp"

namespace sublp {

/// One-sided stable samples with E exp(-lambda S_t) = exp(-t lambda^alpha_sub)
/// (Kanter's representation).  ParameterError unless 0 < alpha_sub < 1.
std::vector<double> sample_stable_subordinator(double alpha_sub, double t, std::size_t count, std::uint64_t seed);

/// Subordinator paths on a time grid and the subordinate Brownian motion
/// X = W_S, whose increments given S are Gaussian with variance 2 dS per
/// coordinate (E exp(i xi W_t) = exp(-t |xi|^2)).
struct PathSample {
  std::vector<double> times;
  std::vector<double> S;
  std::vector<std::vector<double>> X;  // X[i] is the point at times[i]
};
std::vector<PathSample> sample_stable_paths(double alpha_sub, int d, const std::vector<double>& times,
                                            std::size_t count, std::uint64_t seed);

/// Radial law of p(t, .): F(r) = P(|X_t| <= r), tabulated from the kernel
/// engine's density on a log grid and inverted with monotone cubic
/// interpolation.  TabulationError when the tabulated CDF is not monotone or
/// its total mass misses 1 by more than 1e-5.
class RadialLaw {
 public:
  RadialLaw(const BernsteinFunction& phi, int d, double t, int per_decade = 24);

  int d() const { return d_; }
  double t() const { return t_; }
  double cdf(double r) const;
  /// 1 - cdf(r), accurate in the tail.
  double survival(double r) const;
  /// The r with cdf(r) = u.
  double quantile(double u) const;
  double total_mass() const { return mass_; }

 private:
  int d_;
  double t_;
  std::vector<double> log_r_, F_, Q_;
  std::vector<double> lq_;                 // log Q, floored where Q underflows
  std::vector<double> upper_x_, upper_y_;  // (-log Q, log r) over the upper half
  double tail_exponent_ = 0.0;  // survival ~ r^{-tail_exponent} past the table
  double mass_ = 1.0;
};

enum class SbmRoute {
  automatic,     // subordinator when phi allows it, otherwise inverse CDF
  subordinator,  // stable and two_stable only
  inverse_cdf,
};

/// `count` samples of X_t in R^d, row-major (count x d).
std::vector<double> sample_sbm(const BernsteinFunction& phi, int d, double t, std::size_t count, std::uint64_t seed,
                               SbmRoute route = SbmRoute::automatic);

// --- goodness of fit ---

/// sup_x |F_n(x) - F(x)|; sorts a copy of the samples.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// Asymptotic Kolmogorov tail P(D_n > D) with the Stephens small-sample correction.
double ks_p_value(double D, double n_effective);

struct FitReport {
  std::size_t samples = 0;
  int bins = 0;
  double chi2 = 0.0;
  int dof = 0;
  double chi2_p_value = 0.0;
  double ks = 0.0;  // d = 1 only (NaN otherwise)
  double ks_p_value = 0.0;
  bool pass = false;
  json to_json() const;
};

/// chi^2 of the samples against p(t, .) integrated over equal-probability bins
/// spanning the central 99.9% of the law (plus one bin per tail), bin masses
/// by direct quadrature of the kernel engine's density; KS against the
/// tabulated CDF for d = 1.  d > 1 tests |X|.  Pass: both p-values >= 0.01.
/// UndersamplingError below 1e5 samples.
FitReport histogram_vs_density(const std::vector<double>& samples, const BernsteinFunction& phi, int d, double t,
                               int bins = 100);

}  // namespace sublp
