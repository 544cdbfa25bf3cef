#pragma once

#include <string>
#include <vector>

#include "sublp/bernstein.hpp"
#include "sublp/bound_report.hpp"
#include "sublp/spectral.hpp"

namespace sublp {

/// Identifies phi(Delta)^{n/2} D^beta p.
struct KernelOrder {
  int n = 0;
  std::vector<int> beta;  // empty or all zeros means no spatial derivative

  int beta_abs() const;
  bool radial() const { return beta_abs() == 0; }
};

struct RadialKernelTable {
  std::string phi_name;
  int d = 1;
  double t = 1.0;
  KernelOrder order;
  std::vector<double> radii;
  std::vector<double> values;
};

/// Cartesian samples on a torus grid centered at the origin (index order as TorusGrid).
struct CartesianKernelTable {
  std::string phi_name;
  double t = 1.0;
  KernelOrder order;
  TorusGrid grid;
  std::vector<double> values;
  /// Value at signed integer offsets from the origin.
  double at(const std::vector<int>& offset) const;
};

struct LevyDensityTable {
  std::string phi_name;
  int d = 1;
  std::vector<double> radii;
  std::vector<double> j_values;
};

/// Transition density p(t, x) at |x| = r.  Refuses t < 1e-8.
double density(const BernsteinFunction& phi, int d, double t, double r);

/// phi(Delta)^{n/2} p(t, .) at |x| = r.
double frac_density(const BernsteinFunction& phi, int d, double t, int n, double r);

/// d = 1: phi(Delta)^{n/2} D^k p(t, .)(x) for signed x, k <= 3.
double frac_density_1d(const BernsteinFunction& phi, double t, int n, int k, double x);

/// Same integral by splitting at Bessel zeros with epsilon acceleration (any d,
/// beta = 0); the cross-check route for density().
double density_bessel_route(const BernsteinFunction& phi, int d, double t, int n, double r);

RadialKernelTable frac_kernel(const BernsteinFunction& phi, int d, double t, const KernelOrder& order,
                              const std::vector<double>& radii);

struct FftKernelOptions {
  std::size_t max_points = std::size_t{1} << 22;
  double tail_tolerance = 1e-12;  // RHS(L/2) relative to RHS(0)
  double symbol_tolerance = 1e-16;
};

/// General-beta path: periodic box sized from the order's upper-bound profile,
/// multiplier (i xi)^beta phi^{n/2} e^{-t phi}.  AliasingError if the box
/// needs more than max_points samples.
CartesianKernelTable frac_kernel_fft(const BernsteinFunction& phi, int d, double t,
                                     const KernelOrder& order, const FftKernelOptions& opts = {});

/// Jump density j(r) of the subordinate process.
double levy_density(const BernsteinFunction& phi, int d, double r);
LevyDensityTable levy_table(const BernsteinFunction& phi, int d, const std::vector<double>& radii);

/// Closed-form j(r) for phi = lambda^{alpha/2}.
double stable_levy_density(double alpha, int d, double r);

/// Mass of p(t, .) over R^d (radial quadrature plus a fitted power-law tail).
double kernel_mass(const BernsteinFunction& phi, int d, double t);

/// max over x in xs of |int p(s,y) p(t,x-y) dy - p(s+t,x)| / p(s+t,x), d = 1.
double chapman_kolmogorov_defect(const BernsteinFunction& phi, double s, double t,
                                 const std::vector<double>& xs);

/// (t, r) lattice: t = T * 10^{-k / t_per_decade}, r/a_t log-spaced on [r_lo, r_hi], plus r = 0.
struct KernelLattice {
  int t_decades = 3;
  int t_per_decade = 2;
  double r_lo = 1e-3;
  double r_hi = 1e4;
  int r_per_decade = 8;

  KernelLattice refined() const {
    return {t_decades, 2 * t_per_decade, r_lo, r_hi, 2 * r_per_decade};
  }
  std::vector<double> times(double T) const;
  std::vector<double> scaled_radii() const;
};

BoundReport verify_kernel_upper_bound(const BernsteinFunction& phi, int d, double T,
                                      const KernelLattice& lattice = {});

struct RadiusLattice {
  double lo = 1e-3;
  double hi = 1e3;
  int per_decade = 8;
  RadiusLattice refined() const { return {lo, hi, 2 * per_decade}; }
};

BoundReport verify_j_bound(const BernsteinFunction& phi, int d, const RadiusLattice& lattice = {});

/// sup |phi(Delta)^{n/2} D^beta p| / RHS; RHS is the two-branch minimum of the
/// derivative bound.  beta must be zero unless d = 1.
BoundReport verify_frac_bound(const BernsteinFunction& phi, int d, double T, int n, int beta,
                              const KernelLattice& lattice = {});

/// max |p(t,x) - a^{-d} p^a(t phi(a^{-2}), x/a)| / peak over a in a_values, and
/// the phi^{1/2} version at a = a_t.
BoundReport verify_scaling_identity(const BernsteinFunction& phi, int d,
                                    const std::vector<double>& a_values,
                                    const KernelLattice& lattice = {});

/// Upper-bound profiles (exposed for tests and the FFT box choice).
double kernel_bound_rhs(const BernsteinFunction& phi, int d, double t, double r);
double frac_bound_rhs(const BernsteinFunction& phi, int d, double t, int n, int beta_abs, double r);

}  // namespace sublp
