#include "sublp/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <tuple>

#include "sublp/errors.hpp"
#include "sublp/simd.hpp"

namespace sublp {

static_assert(std::endian::native == std::endian::little, "field I/O assumes a little-endian host");

void TorusGrid::validate() const {
  if (d < 1 || d > 3) throw DomainError("torus dimension must be 1, 2 or 3");
  if (n < 2 || (n & (n - 1)) != 0) throw DomainError("points per axis must be a power of two");
  if (!(L > 0.0)) throw DomainError("box side must be positive");
}

std::size_t TorusGrid::size() const {
  std::size_t s = 1;
  for (int i = 0; i < d; ++i) s *= static_cast<std::size_t>(n);
  return s;
}

double TorusGrid::xi(int j) const { return 2.0 * std::numbers::pi * wavenumber(j) / L; }

std::vector<double> TorusGrid::xi_squared() const {
  std::vector<double> axis(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) axis[static_cast<std::size_t>(j)] = xi(j) * xi(j);
  std::vector<double> out(size());
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t rest = flat;
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      s += axis[rest % static_cast<std::size_t>(n)];
      rest /= static_cast<std::size_t>(n);
    }
    out[flat] = s;
  }
  return out;
}

std::vector<int> TorusGrid::unflatten(std::size_t flat) const {
  std::vector<int> idx(static_cast<std::size_t>(d));
  for (int a = d - 1; a >= 0; --a) {
    idx[static_cast<std::size_t>(a)] = static_cast<int>(flat % static_cast<std::size_t>(n));
    flat /= static_cast<std::size_t>(n);
  }
  return idx;
}

GridField::GridField(const TorusGrid& g, int channels) : grid(g), K(channels) {
  grid.validate();
  if (K < 1) throw DomainError("channel count must be >= 1");
  data.assign(static_cast<std::size_t>(K) * grid.size(), cplx(0.0, 0.0));
}

SpaceTimeField::SpaceTimeField(const TorusGrid& g, int channels, int steps, double horizon)
    : grid(g), K(channels), M(steps), T(horizon) {
  grid.validate();
  if (K < 1) throw DomainError("channel count must be >= 1");
  if (M < 2) throw DomainError("space-time field needs M >= 2 steps");
  if (!(T > 0.0)) throw DomainError("time horizon must be positive");
  data.assign(static_cast<std::size_t>(M) * slice_size(), cplx(0.0, 0.0));
}

GridField SpaceTimeField::slice_field(int m) const {
  GridField f(grid, K);
  std::copy(slice(m), slice(m) + slice_size(), f.data.begin());
  return f;
}

void SpaceTimeField::set_slice(int m, const GridField& f) {
  std::copy(f.data.begin(), f.data.end(), slice(m));
}

// --- FFT plan cache ---

namespace {

using PlanKey = std::tuple<std::vector<int>, int, int>;

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan get_plan(const std::vector<int>& dims, int howmany, int sign) {
  static std::map<PlanKey, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  const PlanKey key{dims, howmany, sign};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  int dist = 1;
  for (int v : dims) dist *= v;
  std::vector<fftw_complex> scratch(static_cast<std::size_t>(dist) * static_cast<std::size_t>(howmany));
  fftw_plan p = fftw_plan_many_dft(static_cast<int>(dims.size()), dims.data(), howmany,
                                   scratch.data(), nullptr, 1, dist, scratch.data(), nullptr, 1,
                                   dist, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!p) throw DomainError("FFTW could not create a plan");
  cache.emplace(key, p);
  return p;
}

void execute(cplx* data, const std::vector<int>& dims, int howmany, int sign) {
  fftw_plan p = get_plan(dims, howmany, sign);
  auto* z = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(p, z, z);
}

std::vector<int> grid_dims(const TorusGrid& g) { return std::vector<int>(static_cast<std::size_t>(g.d), g.n); }

}  // namespace

void fft_forward(cplx* data, const std::vector<int>& dims, int howmany) {
  execute(data, dims, howmany, FFTW_FORWARD);
}

void fft_inverse(cplx* data, const std::vector<int>& dims, int howmany) {
  execute(data, dims, howmany, FFTW_BACKWARD);
  std::size_t total = static_cast<std::size_t>(howmany);
  double count = 1.0;
  for (int v : dims) {
    total *= static_cast<std::size_t>(v);
    count *= v;
  }
  const double inv = 1.0 / count;
  for (std::size_t i = 0; i < total; ++i) data[i] *= inv;
}

void fft_forward(GridField& f) { fft_forward(f.data.data(), grid_dims(f.grid), f.K); }
void fft_inverse(GridField& f) { fft_inverse(f.data.data(), grid_dims(f.grid), f.K); }

void apply_real_multiplier(GridField& f, const std::vector<double>& m) {
  if (m.size() != f.points()) throw DomainError("multiplier size does not match the grid");
  fft_forward(f);
  const auto& k = simd::active();
  for (int c = 0; c < f.K; ++c) k.scale_by_real(f.channel(c), m.data(), m.size());
  fft_inverse(f);
}

std::vector<double> phi_symbol(const TorusGrid& g, const BernsteinFunction& phi) {
  std::vector<double> s = g.xi_squared();
  for (auto& v : s) v = phi(v);
  return s;
}

GridField semigroup_apply(const GridField& f, double t, const BernsteinFunction& phi) {
  if (!(t >= 0.0)) throw DomainError("semigroup time must be >= 0");
  GridField out = f;
  if (t == 0.0) return out;
  std::vector<double> m = phi_symbol(f.grid, phi);
  for (auto& v : m) v = std::exp(-t * v);
  apply_real_multiplier(out, m);
  return out;
}

GridField phi_power_apply(const GridField& f, double beta_exp, const BernsteinFunction& phi) {
  GridField out = f;
  if (beta_exp == 0.0) return out;
  std::vector<double> m = phi_symbol(f.grid, phi);
  for (auto& v : m) v = (v == 0.0) ? 0.0 : std::pow(v, beta_exp);
  apply_real_multiplier(out, m);
  return out;
}

GridField bessel_apply(const GridField& f, double gamma, const BernsteinFunction& phi) {
  GridField out = f;
  if (gamma == 0.0) return out;
  std::vector<double> m = phi_symbol(f.grid, phi);
  for (auto& v : m) v = std::pow(1.0 + v, 0.5 * gamma);
  apply_real_multiplier(out, m);
  return out;
}

SpaceTimeField parabolic_multiplier_apply(const SpaceTimeField& F, const BernsteinFunction& phi,
                                          bool pad_time) {
  const int M2 = pad_time ? 2 * F.M : F.M;
  const std::size_t P = F.grid.size();
  const std::vector<double> sym = phi_symbol(F.grid, phi);
  std::vector<int> dims{M2};
  for (int a = 0; a < F.grid.d; ++a) dims.push_back(F.grid.n);

  // m(tau, xi) for every (time index, spatial index)
  const double period = M2 * F.dt();
  std::vector<cplx> mult(static_cast<std::size_t>(M2) * P);
  for (int j = 0; j < M2; ++j) {
    const int kk = j < M2 / 2 ? j : j - M2;
    const double tau = 2.0 * std::numbers::pi * kk / period;
    const bool nyquist = (j == M2 / 2);
    for (std::size_t q = 0; q < P; ++q) {
      const double ph = sym[q];
      cplx m = (ph == 0.0) ? cplx(0.0, 0.0) : ph / cplx(ph, tau);
      if (nyquist) m = cplx(m.real(), 0.0);
      mult[static_cast<std::size_t>(j) * P + q] = m;
    }
  }

  SpaceTimeField out(F.grid, F.K, F.M, F.T);
  std::vector<cplx> buf(static_cast<std::size_t>(M2) * P);
  const auto& k = simd::active();
  for (int c = 0; c < F.K; ++c) {
    std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
    for (int m = 0; m < F.M; ++m)
      std::copy(F.slice(m) + static_cast<std::size_t>(c) * P,
                F.slice(m) + static_cast<std::size_t>(c + 1) * P,
                buf.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(m) * P));
    fft_forward(buf.data(), dims, 1);
    k.mul_complex(buf.data(), mult.data(), buf.size());
    fft_inverse(buf.data(), dims, 1);
    for (int m = 0; m < F.M; ++m)
      std::copy(buf.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(m) * P),
                buf.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(m + 1) * P),
                out.slice(m) + static_cast<std::size_t>(c) * P);
  }
  return out;
}

namespace {

// Pointwise l2 channel norm of one slice, raised to p and summed.
double slice_power_sum(const cplx* s, int K, std::size_t P, double p, double* max_out) {
  double acc = 0.0;
  double mx = 0.0;
  for (std::size_t q = 0; q < P; ++q) {
    double a2 = 0.0;
    for (int c = 0; c < K; ++c) a2 += std::norm(s[static_cast<std::size_t>(c) * P + q]);
    const double a = std::sqrt(a2);
    mx = std::max(mx, a);
    if (std::isfinite(p)) acc += (p == 2.0) ? a2 : std::pow(a, p);
  }
  if (max_out) *max_out = std::max(*max_out, mx);
  return acc;
}

}  // namespace

double lp_norm(const GridField& f, double p) {
  if (!(p >= 1.0)) throw DomainError("lp_norm needs p >= 1");
  double mx = 0.0;
  const double s = slice_power_sum(f.data.data(), f.K, f.points(), p, &mx);
  if (!std::isfinite(p)) return mx;
  return std::pow(s * std::pow(f.grid.h(), f.grid.d), 1.0 / p);
}

double lp_norm(const SpaceTimeField& F, double p) {
  if (!(p >= 1.0)) throw DomainError("lp_norm needs p >= 1");
  double mx = 0.0;
  double s = 0.0;
  for (int m = 0; m < F.M; ++m) s += slice_power_sum(F.slice(m), F.K, F.grid.size(), p, &mx);
  if (!std::isfinite(p)) return mx;
  return std::pow(s * std::pow(F.grid.h(), F.grid.d) * F.dt(), 1.0 / p);
}

// --- smooth fields ---

int SmoothFieldSpec::max_wavenumber() const {
  int mx = 0;
  for (const auto& m : modes)
    for (int v : m.k) mx = std::max(mx, std::abs(v));
  return mx;
}

namespace {

double time_profile(const SmoothFieldSpec::Mode& m, double t, double T) {
  if (m.time_cos.empty() && m.time_sin.empty()) return 1.0;
  const double w = 2.0 * std::numbers::pi * t / T;
  double v = 0.0;
  for (std::size_t j = 0; j < m.time_cos.size(); ++j) v += m.time_cos[j] * std::cos(w * static_cast<double>(j));
  for (std::size_t j = 0; j < m.time_sin.size(); ++j)
    v += m.time_sin[j] * std::sin(w * static_cast<double>(j + 1));
  return v;
}

void check_compatible(const SmoothFieldSpec& s, const TorusGrid& g) {
  if (s.d != g.d || std::abs(s.L - g.L) > 1e-12 * s.L)
    throw DomainError("smooth field spec and grid disagree on dimension or box");
  if (2 * s.max_wavenumber() >= g.n) throw DomainError("grid too coarse for the field's band limit");
}

// e^{i 2 pi k.x / L} for one mode, all points.
std::vector<cplx> plane_wave(const std::vector<int>& k, const TorusGrid& g) {
  std::vector<std::vector<cplx>> axis(static_cast<std::size_t>(g.d), std::vector<cplx>(static_cast<std::size_t>(g.n)));
  for (int a = 0; a < g.d; ++a)
    for (int j = 0; j < g.n; ++j)
      axis[static_cast<std::size_t>(a)][static_cast<std::size_t>(j)] =
          std::polar(1.0, 2.0 * std::numbers::pi * k[static_cast<std::size_t>(a)] * j / g.n);
  std::vector<cplx> out(g.size());
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    std::size_t rest = flat;
    cplx v(1.0, 0.0);
    for (int a = g.d - 1; a >= 0; --a) {
      v *= axis[static_cast<std::size_t>(a)][rest % static_cast<std::size_t>(g.n)];
      rest /= static_cast<std::size_t>(g.n);
    }
    out[flat] = v;
  }
  return out;
}

}  // namespace

GridField SmoothFieldSpec::sample(const TorusGrid& g, double t, double T) const {
  check_compatible(*this, g);
  GridField f(g, K);
  for (const auto& m : modes) {
    const auto wave = plane_wave(m.k, g);
    const double tp = time_profile(m, t, T);
    cplx* ch = f.channel(m.channel);
    for (std::size_t q = 0; q < wave.size(); ++q) ch[q] += 2.0 * tp * (m.amplitude * wave[q]).real();
  }
  return f;
}

SpaceTimeField SmoothFieldSpec::sample(const TorusGrid& g, int M, double T) const {
  check_compatible(*this, g);
  SpaceTimeField F(g, K, M, T);
  const std::size_t P = g.size();
  for (const auto& m : modes) {
    const auto wave = plane_wave(m.k, g);
    std::vector<double> spatial(P);
    for (std::size_t q = 0; q < P; ++q) spatial[q] = 2.0 * (m.amplitude * wave[q]).real();
    for (int s = 0; s < M; ++s) {
      const double tp = time_profile(m, s * F.dt(), T);
      cplx* ch = F.slice(s) + static_cast<std::size_t>(m.channel) * P;
      for (std::size_t q = 0; q < P; ++q) ch[q] += tp * spatial[q];
    }
  }
  return F;
}

SmoothFieldSpec random_smooth_field(int d, double L, int K, int kmax, int count, int time_degree,
                                    std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> wave(-kmax, kmax);
  std::uniform_int_distribution<int> chan(0, K - 1);
  SmoothFieldSpec s;
  s.d = d;
  s.K = K;
  s.L = L;
  for (int i = 0; i < count; ++i) {
    SmoothFieldSpec::Mode m;
    for (int a = 0; a < d; ++a) m.k.push_back(wave(rng));
    m.channel = (i < K) ? i : chan(rng);
    m.amplitude = {gauss(rng), gauss(rng)};
    if (time_degree > 0) {
      for (int j = 0; j <= time_degree; ++j) m.time_cos.push_back(gauss(rng) / (1.0 + j));
      for (int j = 1; j <= time_degree; ++j) m.time_sin.push_back(gauss(rng) / (1.0 + j));
    }
    s.modes.push_back(std::move(m));
  }
  return s;
}

BoundReport verify_norm_equivalence(const std::vector<SmoothFieldSpec>& fields, double gamma,
                                    double p, const BernsteinFunction& phi, const TorusGrid& grid) {
  if (!(gamma >= 0.0)) throw DomainError("norm equivalence needs gamma >= 0");
  auto run = [&](const TorusGrid& g, double* lo, double* hi) {
    *lo = INFINITY;
    *hi = 0.0;
    for (const auto& spec : fields) {
      const GridField f = spec.sample(g);
      const double num = lp_norm(f, p) + lp_norm(phi_power_apply(f, 0.5 * gamma, phi), p);
      const double den = lp_norm(bessel_apply(f, gamma, phi), p);
      if (den == 0.0) continue;
      *lo = std::min(*lo, num / den);
      *hi = std::max(*hi, num / den);
    }
  };
  double lo_c, hi_c, lo_f, hi_f;
  run(grid, &lo_c, &hi_c);
  run(grid.refined(), &lo_f, &hi_f);
  BoundReport r;
  r.inequality_id = "lem6.1";
  r.drift_tolerance = 0.10;
  r.grid = {{"d", grid.d}, {"n", grid.n}, {"L", grid.L}, {"gamma", gamma}, {"p", p},
            {"ensemble", fields.size()}, {"phi", phi.to_json()}};
  r.settle(std::max(hi_c, 1.0 / lo_c), std::max(hi_f, 1.0 / lo_f));
  r.details["c_lo"] = lo_f;
  r.details["c_hi"] = hi_f;
  return r;
}

BoundReport verify_multiplier(const std::vector<SmoothFieldSpec>& fields, const std::vector<double>& ps,
                              double T, const BernsteinFunction& phi, const TorusGrid& grid, int M) {
  if (fields.empty()) throw DomainError("multiplier check needs at least one field");
  for (double p : ps)
    if (!(p >= 1.0)) throw DomainError("multiplier check needs p >= 1");
  auto run = [&](const TorusGrid& g, int steps) {
    std::vector<double> worst(ps.size(), 0.0);
    for (const auto& spec : fields) {
      const SpaceTimeField f = spec.sample(g, steps, T);
      const SpaceTimeField mf = parabolic_multiplier_apply(f, phi);
      for (std::size_t i = 0; i < ps.size(); ++i) {
        const double den = lp_norm(f, ps[i]);
        if (den > 0.0) worst[i] = std::max(worst[i], lp_norm(mf, ps[i]) / den);
      }
    }
    return worst;
  };
  const auto coarse = run(grid, M);
  const auto fine = run(grid.refined(), 2 * M);

  BoundReport r;
  r.inequality_id = "lem6.4";
  r.drift_tolerance = 0.10;
  r.grid = {{"d", grid.d}, {"n", grid.n}, {"L", grid.L}, {"M", M}, {"T", T},
            {"ensemble", fields.size()}, {"phi", phi.to_json()}};
  json per_p = json::array();
  bool ok = true;
  double nc = 0.0, nf = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    BoundReport one;
    one.drift_tolerance = r.drift_tolerance;
    one.settle(coarse[i], fine[i]);
    bool pass = one.pass;
    if (ps[i] == 2.0) pass = pass && coarse[i] <= 1.0 + 1e-12 && fine[i] <= 1.0 + 1e-12;
    ok = ok && pass;
    per_p.push_back({{"p", ps[i]}, {"n_hat", fine[i]}, {"n_hat_coarse", coarse[i]},
                     {"refinement_drift", one.refinement_drift}, {"pass", pass}});
    if (fine[i] > nf) {
      nf = fine[i];
      nc = coarse[i];
    }
  }
  r.settle(nc, nf);
  r.pass = r.pass && ok;
  r.details["per_p"] = per_p;
  return r;
}

// --- binary snapshots ---

void write_field(const std::string& path, const GridField& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot open '" + path + "' for writing");
  const double header[4] = {static_cast<double>(f.grid.d), static_cast<double>(f.grid.n), f.grid.L,
                            static_cast<double>(f.K)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(f.data.data()),
            static_cast<std::streamsize>(f.data.size() * sizeof(cplx)));
  std::ofstream side(path + ".json");
  side << json{{"format", "sublp-field"}, {"version", 1}, {"dtype", "float64-le"},
               {"layout", "header[d,n,L,K] then (re,im) per [channel][point], axis 0 slowest"},
               {"d", f.grid.d}, {"n", f.grid.n}, {"L", f.grid.L}, {"K", f.K}}
              .dump(2)
       << "\n";
}

GridField read_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  double header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw SchemaError("'" + path + "': truncated header");
  TorusGrid g{static_cast<int>(header[0]), static_cast<int>(header[1]), header[2]};
  GridField f(g, static_cast<int>(header[3]));
  in.read(reinterpret_cast<char*>(f.data.data()), static_cast<std::streamsize>(f.data.size() * sizeof(cplx)));
  if (!in) throw SchemaError("'" + path + "': truncated sample block");
  std::ifstream side(path + ".json");
  if (side) {
    const json j = json::parse(side);
    if (j.at("d") != g.d || j.at("n") != g.n || j.at("K") != f.K)
      throw SchemaError("'" + path + "': sidecar disagrees with the binary header");
  }
  return f;
}

}  // namespace sublp
