#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "sublp/bernstein.hpp"
#include "sublp/bound_report.hpp"

namespace sublp {

using cplx = std::complex<double>;

/// Periodic box [0, L)^d with n points per axis.  Index order is the FFT's:
/// point j has coordinate x_j = j*h, and frequency index j carries
/// xi = 2*pi*k/L with k = j for j < n/2 and k = j - n otherwise.
struct TorusGrid {
  int d = 1;
  int n = 64;
  double L = 2.0 * 3.14159265358979323846;

  void validate() const;
  double h() const { return L / n; }
  std::size_t size() const;
  /// Signed wavenumber k of FFT index j.
  int wavenumber(int j) const { return j < n / 2 ? j : j - n; }
  double xi(int j) const;
  /// Signed coordinate of index j in (-L/2, L/2].
  double centered_coordinate(int j) const { return (j <= n / 2 ? j : j - n) * h(); }
  /// |xi|^2 for every flat index, in FFT order.
  std::vector<double> xi_squared() const;
  /// Multi-index of a flat index (axis 0 slowest).
  std::vector<int> unflatten(std::size_t flat) const;
  TorusGrid refined() const { return {d, 2 * n, L}; }
};

/// K-channel complex samples on a torus grid; layout [channel][point].
struct GridField {
  TorusGrid grid;
  int K = 1;
  std::vector<cplx> data;

  GridField() = default;
  GridField(const TorusGrid& g, int channels);
  cplx* channel(int k) { return data.data() + static_cast<std::size_t>(k) * grid.size(); }
  const cplx* channel(int k) const { return data.data() + static_cast<std::size_t>(k) * grid.size(); }
  std::size_t points() const { return grid.size(); }
};

/// Uniform time samples t_m = m*dt, m = 0..M-1, dt = T/M; layout [m][channel][point].
struct SpaceTimeField {
  TorusGrid grid;
  int K = 1;
  int M = 2;
  double T = 1.0;
  std::vector<cplx> data;

  SpaceTimeField() = default;
  SpaceTimeField(const TorusGrid& g, int channels, int steps, double horizon);
  double dt() const { return T / M; }
  std::size_t slice_size() const { return static_cast<std::size_t>(K) * grid.size(); }
  cplx* slice(int m) { return data.data() + static_cast<std::size_t>(m) * slice_size(); }
  const cplx* slice(int m) const { return data.data() + static_cast<std::size_t>(m) * slice_size(); }
  GridField slice_field(int m) const;
  void set_slice(int m, const GridField& f);
};

// --- FFT (FFTW, unnormalized forward, inverse divided by the point count) ---

/// In-place d-dimensional transforms of `howmany` contiguous blocks.
void fft_forward(cplx* data, const std::vector<int>& dims, int howmany = 1);
void fft_inverse(cplx* data, const std::vector<int>& dims, int howmany = 1);
void fft_forward(GridField& f);
void fft_inverse(GridField& f);

/// Applies a real per-mode multiplier (FFT order) to every channel.
void apply_real_multiplier(GridField& f, const std::vector<double>& m);

/// Symbol tables in FFT order.
std::vector<double> phi_symbol(const TorusGrid& g, const BernsteinFunction& phi);

GridField semigroup_apply(const GridField& f, double t, const BernsteinFunction& phi);
GridField phi_power_apply(const GridField& f, double beta_exp, const BernsteinFunction& phi);
GridField bessel_apply(const GridField& f, double gamma, const BernsteinFunction& phi);

/// (d+1)-dimensional multiplier phi/(i tau + phi) with m(0,0) = 0.  With
/// pad_time the field is zero-padded to 2M steps first, so the periodic
/// transform approximates the causal time convolution.
SpaceTimeField parabolic_multiplier_apply(const SpaceTimeField& F, const BernsteinFunction& phi,
                                          bool pad_time = true);

/// Riemann-sum L_p norm; p = infinity gives the max norm.  Channels combine
/// in l2 at every point.
double lp_norm(const GridField& f, double p);
double lp_norm(const SpaceTimeField& F, double p);

// --- smooth test fields, resolution independent ---

/// A real trigonometric polynomial in x (and optionally t).  Sampling the same
/// spec on two grids gives the same function, which is what refinement checks need.
struct SmoothFieldSpec {
  struct Mode {
    std::vector<int> k;           // spatial wavenumbers
    int channel = 0;
    cplx amplitude;               // the field gets amplitude*e^{i k.x 2pi/L} + conj
    std::vector<double> time_cos; // coefficients of cos(2 pi j t / T), j = 0..
    std::vector<double> time_sin; // coefficients of sin(2 pi j t / T), j = 1..
  };
  int d = 1;
  int K = 1;
  double L = 2.0 * 3.14159265358979323846;
  std::vector<Mode> modes;

  int max_wavenumber() const;
  GridField sample(const TorusGrid& g, double t = 0.0, double T = 1.0) const;
  SpaceTimeField sample(const TorusGrid& g, int M, double T) const;
};

/// Random band-limited spec: `count` modes with |k_i| <= kmax, Gaussian amplitudes,
/// time profiles of degree <= time_degree (0 = constant in time).
SmoothFieldSpec random_smooth_field(int d, double L, int K, int kmax, int count, int time_degree,
                                    std::mt19937_64& rng);

/// Empirical (c_lo, c_hi) of (||f||_p + ||phi(D)^{gamma/2} f||_p) / ||(1+phi)^{gamma/2} f||_p
/// over the ensemble; refinement doubles n.
BoundReport verify_norm_equivalence(const std::vector<SmoothFieldSpec>& fields, double gamma,
                                    double p, const BernsteinFunction& phi, const TorusGrid& grid);

/// max over the ensemble of ||F^{-1}(m F f)||_p / ||f||_p for the causal
/// parabolic multiplier, on (grid, M) and on (2n, 2M).  n_hat is the largest
/// per-p constant; pass needs every p to drift by at most 10% and the p = 2
/// constant to stay at or below 1 (up to rounding).
BoundReport verify_multiplier(const std::vector<SmoothFieldSpec>& fields, const std::vector<double>& ps,
                              double T, const BernsteinFunction& phi, const TorusGrid& grid, int M);

// --- field snapshots: little-endian float64, header (d, n, L, K), then re/im pairs ---

void write_field(const std::string& path, const GridField& f);
GridField read_field(const std::string& path);

}  // namespace sublp
