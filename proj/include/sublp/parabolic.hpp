#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sublp/bernstein.hpp"
#include "sublp/bound_report.hpp"
#include "sublp/spectral.hpp"

namespace sublp {

/// Q_c(r, z) = (r - tau, r + tau) x prod_i (z_i - c/2, z_i + c/2) with tau = 1/phi(c^{-2}).
struct PhiCube {
  double c = 1.0;
  double r = 0.0;
  std::vector<double> z;  // empty means the origin

  double half_time(const BernsteinFunction& phi) const;
  double volume(const BernsteinFunction& phi, int d) const;
  bool contains(const BernsteinFunction& phi, double t, const std::vector<double>& x) const;
};

/// A space-time field whose slice m sits at t = (m - origin) * F.dt().
struct TimeAxisField {
  SpaceTimeField F;
  int origin = 0;
  double time(int m) const { return (m - origin) * F.dt(); }
};

/// `direct` transforms every (t, s) term back to space; `recursive` works on
/// pairs of active Fourier modes, where the s-sum obeys an exponential
/// recursion in t (modes below 1e-13 of their slice maximum are dropped).
/// Both evaluate the same discrete sum; `automatic` picks the cheaper.
enum class SquareFunctionMethod { automatic, direct, recursive };

/// G_a f on f's own lattice, one real channel.  Left-endpoint rule in s over
/// the lattice points a <= s <= t (the s = t term uses T_0 = identity), so
/// G(t) = 0 for t < a.  a is rounded to the lattice.
SpaceTimeField square_function(const SpaceTimeField& f, double a, const BernsteinFunction& phi,
                               SquareFunctionMethod method = SquareFunctionMethod::automatic);

/// The truncated and reflected variant on slices m in [m_lo, m_hi) (t = m dt):
/// the kernel is dropped for lags t - s > cut, f vanishes outside its lattice,
/// and values for t < a are those at 2a - t.
TimeAxisField truncated_square_function(const SpaceTimeField& f, double a, double cut,
                                        const BernsteinFunction& phi, int m_lo, int m_hi,
                                        SquareFunctionMethod method = SquareFunctionMethod::automatic);

/// Pointwise |F|_H^2 as a one-channel field.
SpaceTimeField abs2_field(const SpaceTimeField& F);

// --- maximal functions (all act on |f|, the l2 channel norm) ---

/// Sup of averages over centered balls with radius 0 or h 2^j <= L/2.
GridField maximal_x(const GridField& f);
/// Sup of averages over the aligned dyadic cubes (side h 2^j <= L) containing the point.
GridField maximal_cubes_x(const GridField& f);
/// Sup of averages over centered windows of half-length 0 or 2^j steps; the
/// series is extended by zero, so windows may reach past either end.
std::vector<double> maximal_t(const std::vector<double>& series);

SpaceTimeField maximal_x(const SpaceTimeField& F);
SpaceTimeField maximal_cubes_x(const SpaceTimeField& F);
SpaceTimeField maximal_t(const SpaceTimeField& F);

/// Sup over phi-cubes containing the point of avg_Q |h - avg_Q h|.  Spatial
/// sides are c = h 2^j up to L, the time window is the nearest whole number
/// of steps to 2/phi(c^{-2}) (at least one, at most M).  Cubes come from the
/// aligned dyadic lattice and its half-shift along every axis, and wrap
/// periodically in space and time.
SpaceTimeField sharp_function(const SpaceTimeField& h, const BernsteinFunction& phi);

// --- test fields ---

/// Samples a field on (grid, M steps over [0, T)); must not depend on the
/// resolution except through sampling.
using FieldFactory = std::function<SpaceTimeField(const TorusGrid&, int M, double T)>;

struct FieldSource {
  std::string label;
  FieldFactory make;
};

FieldSource spec_source(std::string label, SmoothFieldSpec spec);

/// Single spatial mode, constant in time (channel 0).
SmoothFieldSpec single_mode_field(int d, double L, const std::vector<int>& k);
/// Single spatial mode times cos^{2q}(pi (t - t0) / T): a smooth pulse at t0.
SmoothFieldSpec time_pulse_field(int d, double L, const std::vector<int>& k, double t0_fraction, int q);
/// Mode kmax along every axis times cos(2 pi j t / T): sign changes in space and time.
SmoothFieldSpec alternating_field(int d, double L, int kmax, int j);

/// C-infinity bump exp(-1/(1 - |x - center|^2/R^2)) in space times the same
/// shape on [t_lo, t_hi] in time; channel 0 only.
FieldSource bump_source(std::string label, int d, double L, std::vector<double> center, double R,
                        double t_lo, double t_hi);

/// One nonzero cell (value 1) at x = 0 on the slice nearest t = T/2.
FieldSource spike_source();

/// `random_count` random band-limited fields (K in [1, 8], |k| <= kmax,
/// time degree <= 3) followed by single-mode, pulse and sign-alternating ones.
std::vector<FieldSource> lp_test_ensemble(int d, double L, int random_count, int kmax,
                                          std::uint64_t seed);

// --- verifiers ---

/// max over sources of ||G f||_p^p / ||f||_p^p for every p, on (grid, M) and
/// on (2n, 2M).  n_hat is the largest per-p constant; pass needs every p to
/// drift by at most 10%.
BoundReport verify_lp_inequality(const std::vector<FieldSource>& sources, const std::vector<double>& ps,
                                 double T, const BernsteinFunction& phi, const TorusGrid& grid, int M);

/// max of (sharp(truncated G f))^2 / (G(t,x) + G(-t,x)), where
/// G = M_t M_x |f|^2 + C_x M_t M_x |f|^2 + (C_x M_t M_x |f|^2)(. - T, .),
/// M = centered maximal operator, C = dyadic cube maximal operator.
/// Points with RHS below 1e-30 are excluded and counted.
BoundReport verify_sharp_domination(const std::vector<FieldSource>& sources, double T,
                                    const BernsteinFunction& phi, const TorusGrid& grid, int M);

struct OscillationProbe {
  double c = 1.0;
  double r = 0.0;
  double a = 0.0;
};

/// max over probes of int_{Q_c(r)} |u_a|^2 / ([|r - a| + 1/phi(c^{-2})] c^d min_Q M_t M_x |f|^2),
/// u_a the truncated, reflected square function with the kernel cut at T.
BoundReport verify_local_oscillation(const FieldSource& source, const std::vector<OscillationProbe>& probes,
                                     double T, const BernsteinFunction& phi, const TorusGrid& grid, int M);

/// Empirical constants of ||M_x h||_p <= N ||h||_p, ||C_x h||_p <= N ||h||_p
/// and ||h||_p <= N ||h^#||_p (h made mean-zero first).  Drift tolerance 0.5:
/// dyadic suprema move by up to a factor of two as cell boundaries shift.
BoundReport verify_hl_fs(const std::vector<FieldSource>& sources, double p, const BernsteinFunction& phi,
                         const TorusGrid& grid, int M, double T);

}  // namespace sublp
