#pragma once

#include <cstdint>
#include <vector>

#include "sublp/bernstein.hpp"
#include "sublp/bound_report.hpp"
#include "sublp/spectral.hpp"

namespace sublp {

/// du = (-phi(-Delta) u + f) dt + sum_k g^k dw^k, u(0) = 0, on the torus.
/// f (one channel) and g (K channels) live on the lattice t_m = m T/M; an
/// empty field (no data) stands for zero.
struct SpdeProblem {
  BernsteinFunction phi = BernsteinFunction::linear();
  TorusGrid grid;
  double T = 1.0;
  int M = 64;
  SpaceTimeField f;
  SpaceTimeField g;
  double gamma = 0.0;
  double p = 2.0;

  double dt() const { return T / M; }
  int channels() const { return g.data.empty() ? 0 : g.K; }
  bool has_f() const { return !f.data.empty(); }
  bool has_g() const { return !g.data.empty(); }
  /// Throws PreconditionError when f or g sit on a different lattice.
  void validate() const;
};

/// Independent N(0, dt) increments, reproducible from (seed, replica).
struct WienerBundle {
  std::uint64_t seed = 0;
  int K = 1;

  /// Layout [m][k], m = 0..M-1.
  std::vector<double> increments(std::uint64_t replica, int M, double T) const;
};

/// Sums groups of `factor` consecutive steps: the coupled coarse path.
std::vector<double> coarsen_increments(const std::vector<double>& dw, int K, int factor);

/// The solution on t_m = m dt for m = 0..M (M + 1 slices; the last is t = T).
SpaceTimeField solve_deterministic(const SpdeProblem& problem);
/// One path driven by the given increments ([m][k], as WienerBundle makes them).
SpaceTimeField solve_path(const SpdeProblem& problem, const std::vector<double>& dw);
/// The deterministic solution through the space-time multiplier phi/(i tau + phi)
/// followed by phi^{-1}; M slices, zero mode dropped.  Only a cross-check: it
/// carries the O(dt) error of the periodized time transform.
SpaceTimeField solve_deterministic_multiplier(const SpdeProblem& problem);

struct SpdeSolution {
  int R = 0;
  /// E[u] on the M + 1 lattice times.
  SpaceTimeField mean;
  /// ||u(T)||_2^2 and dt sum_m ||phi^{1/2} u(t_m)||_2^2 per replica, in replica order.
  std::vector<double> energy_T;
  std::vector<double> dissipation;
  /// Replicas kept whole (the first `keep_paths`).
  std::vector<SpaceTimeField> paths;
};

struct SampleMoments {
  double mean = 0.0;
  double std_err = 0.0;
};
/// Pairwise-summed mean and standard error of the mean.
SampleMoments sample_moments(const std::vector<double>& x);

SpdeSolution solve_mild(const SpdeProblem& problem, int R, std::uint64_t seed, int keep_paths = 0);

/// Exact discrete values of E||u(T)||_2^2 and E[dt sum_m ||phi^{1/2} u(t_m)||_2^2].
struct ExactEnergy {
  double energy_T = 0.0;
  double dissipation = 0.0;
};
ExactEnergy exact_energy(const SpdeProblem& problem);

/// Monte Carlo energies at R and 4R replicas against the exact sums.  Passes
/// when both runs sit within 3 standard errors and the standard error ratio is
/// 2 within 15%.
BoundReport ito_isometry_check(const SpdeProblem& problem, int R, std::uint64_t seed);

/// N_hat = (E dt sum_m ||(1 + phi) u(t_m)||_p^p)^{1/p} / (||f||_p + ||(1 + phi)^{1/2} g||_p)
/// for gamma = 0.
struct AprioriEstimate {
  double n_hat = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
};
AprioriEstimate apriori_estimate(const SpdeProblem& problem, int R, std::uint64_t seed);

/// A problem family member, sampled on demand so the grid can be refined.
struct SpdeFamilyMember {
  std::string label;
  SmoothFieldSpec f;  // K = 0 modes means no f
  SmoothFieldSpec g;
  bool has_f = true;
  bool has_g = true;
};
SpdeProblem make_problem(const SpdeFamilyMember& member, const BernsteinFunction& phi, const TorusGrid& grid,
                         double T, int M, double p);
/// Six problems: deterministic single mode and random f, single-mode and
/// multi-channel noise, and two mixed ones.
std::vector<SpdeFamilyMember> apriori_family(double L, std::uint64_t seed);

/// Runs every member at (grid, M, R), (grid, M, 4R) and (2n, 2M, R); pass when
/// each member drifts by at most 15% under both changes.
BoundReport apriori_estimate_report(const std::vector<SpdeFamilyMember>& family, const BernsteinFunction& phi,
                                    const TorusGrid& grid, double T, int M, double p, int R, std::uint64_t seed);

/// max over t_m of |(u(t_m), psi) - dt sum_{l<m} (-phi u_l + f_l, psi) - sum_{l<m} (g_l, psi) dw_l|,
/// psi a periodized Gaussian of the given width centred at the box middle
/// (width = infinity gives psi = 1).
double weak_form_residual(const SpdeProblem& problem, const std::vector<double>& dw, double width);

}  // namespace sublp
