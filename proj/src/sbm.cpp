#include "sublp/sbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/quadrature/gauss.hpp>

#include "sublp/errors.hpp"
#include "sublp/kernel.hpp"
#include "sublp/parallel.hpp"
#include "sublp/quadrature.hpp"

namespace sublp {

namespace {

constexpr std::size_t kSampleChunk = 8192;
constexpr std::uint64_t kPurposeSubordinator = 0x53554231ULL;
constexpr std::uint64_t kPurposeSbm = 0x53424d31ULL;
constexpr std::uint64_t kPurposePaths = 0x50415448ULL;

const double kPi = std::numbers::pi;

double sphere_area(int d) { return 2.0 * std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d); }

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t index, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

// Kanter: S_1 = sin(aU)/sin(U)^{1/a} * (sin((1-a)U)/E)^{(1-a)/a}, U ~ U(0, pi), E ~ Exp(1).
double kanter(double a, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, kPi);
  std::exponential_distribution<double> ex(1.0);
  double U = uni(rng);
  while (U == 0.0) U = uni(rng);
  const double E = ex(rng);
  const double log_s = std::log(std::sin(a * U)) - std::log(std::sin(U)) / a +
                       (1.0 - a) / a * (std::log(std::sin((1.0 - a) * U)) - std::log(E));
  return std::exp(log_s);
}

void check_alpha_sub(double a) {
  if (!(a > 0.0 && a < 1.0)) throw ParameterError("subordinator index must lie in (0, 1)");
}

// Fills out[i] for i in [0, count) chunk by chunk, one RNG stream per chunk.
template <class Body>
void chunked(std::size_t count, std::uint64_t seed, std::uint64_t purpose, Body body) {
  const std::size_t chunks = (count + kSampleChunk - 1) / kSampleChunk;
  parallel_for(chunks, [&](std::size_t c) {
    std::mt19937_64 rng = stream(seed, c, purpose);
    const std::size_t lo = c * kSampleChunk, hi = std::min(count, lo + kSampleChunk);
    for (std::size_t i = lo; i < hi; ++i) body(i, rng);
  });
}

bool has_subordinator_route(const BernsteinFunction& phi) {
  return phi.family() == Family::stable || phi.family() == Family::two_stable;
}

// S_t for phi(lambda) = raw(s lambda) / c0 with raw a sum of powers.
double subordinator_draw(const BernsteinFunction& phi, double t, std::mt19937_64& rng) {
  const double s = phi.arg_scale(), tau = t / phi.normalization();
  if (phi.family() == Family::stable) {
    const double a = 0.5 * phi.param("alpha");
    return s * std::pow(tau, 1.0 / a) * kanter(a, rng);
  }
  const double a = phi.param("alpha"), b = phi.param("beta");
  return s * (std::pow(tau, 1.0 / a) * kanter(a, rng) + std::pow(tau, 1.0 / b) * kanter(b, rng));
}

void gaussian_point(double scale, int d, std::mt19937_64& rng, double* out) {
  std::normal_distribution<double> nd;
  for (int a = 0; a < d; ++a) out[a] = scale * nd(rng);
}

}  // namespace

std::vector<double> sample_stable_subordinator(double alpha_sub, double t, std::size_t count, std::uint64_t seed) {
  check_alpha_sub(alpha_sub);
  if (!(t >= 0.0)) throw DomainError("subordinator time must be >= 0");
  std::vector<double> out(count, 0.0);
  if (t == 0.0) return out;
  const double scale = std::pow(t, 1.0 / alpha_sub);
  chunked(count, seed, kPurposeSubordinator,
          [&](std::size_t i, std::mt19937_64& rng) { out[i] = scale * kanter(alpha_sub, rng); });
  return out;
}

std::vector<PathSample> sample_stable_paths(double alpha_sub, int d, const std::vector<double>& times,
                                            std::size_t count, std::uint64_t seed) {
  check_alpha_sub(alpha_sub);
  if (d < 1) throw DomainError("dimension must be >= 1");
  for (std::size_t i = 0; i < times.size(); ++i)
    if (!(times[i] >= 0.0) || (i > 0 && !(times[i] > times[i - 1]))) throw DomainError("times must increase from >= 0");
  std::vector<PathSample> out(count);
  chunked(count, seed, kPurposePaths, [&](std::size_t i, std::mt19937_64& rng) {
    PathSample& p = out[i];
    p.times = times;
    double S = 0.0, prev = 0.0;
    std::vector<double> X(static_cast<std::size_t>(d), 0.0), step(static_cast<std::size_t>(d));
    for (double t : times) {
      const double dt = t - prev;
      const double dS = dt > 0.0 ? std::pow(dt, 1.0 / alpha_sub) * kanter(alpha_sub, rng) : 0.0;
      gaussian_point(std::sqrt(2.0 * dS), d, rng, step.data());
      for (int a = 0; a < d; ++a) X[static_cast<std::size_t>(a)] += step[static_cast<std::size_t>(a)];
      S += dS;
      prev = t;
      p.S.push_back(S);
      p.X.push_back(X);
    }
  });
  return out;
}

// --- radial law ---

RadialLaw::RadialLaw(const BernsteinFunction& phi, int d, double t, int per_decade) : d_(d), t_(t) {
  if (d < 1) throw DomainError("dimension must be >= 1");
  if (per_decade < 4) throw DomainError("need at least 4 table points per decade");
  const double a_t = characteristic_scale(phi, t);
  const double r_lo = 1e-6 * a_t, r_hi = 1e8 * a_t;
  const double area = sphere_area(d);
  const int steps = 14 * per_decade;
  const double u_lo = std::log(r_lo), du = (std::log(r_hi) - u_lo) / steps;
  auto integrand = [&](double u) {
    const double r = std::exp(u);
    return area * density(phi, d, t, r) * std::pow(r, d);
  };

  std::vector<double> inc(static_cast<std::size_t>(steps));
  parallel_for(inc.size(), [&](std::size_t i) {
    const double a = u_lo + static_cast<double>(i) * du;
    inc[i] = boost::math::quadrature::gauss<double, 10>::integrate(integrand, a, a + du);
  });

  // Past the bulk an exponentially decaying kernel drops below what the
  // density quadrature resolves; the table ends there with no tail.
  constexpr double kUnresolved = 1e-13;
  std::size_t N = inc.size() + 1;
  bool truncated = false;
  double acc = 0.0;
  for (std::size_t i = 0; i < inc.size(); ++i) {
    if (acc > 0.5 && inc[i] < kUnresolved) {
      N = i + 1;
      truncated = true;
      break;
    }
    if (inc[i] < 0.0 || !std::isfinite(inc[i]))
      throw TabulationError("radial CDF is not monotone near r = " + std::to_string(std::exp(u_lo + du * static_cast<double>(i))));
    acc += inc[i];
  }

  // survival past r_hi from a power law fitted on the last half decade
  double tail = 0.0;
  if (!truncated) {
    const double p1 = density(phi, d, t, r_hi / std::sqrt(10.0)), p2 = density(phi, d, t, r_hi);
    if (p1 > 0.0 && p2 > 0.0) {
      const double q = std::log(p1 / p2) / std::log(std::sqrt(10.0));
      if (q > d) {
        tail = area * p2 * std::pow(r_hi, d) / (q - d);
        tail_exponent_ = q - d;
      }
    }
  }

  const double F0 = area * density(phi, d, t, 0.0) * std::pow(r_lo, d) / d;
  log_r_.resize(N);
  F_.resize(N);
  Q_.resize(N);
  F_[0] = F0;
  for (std::size_t i = 0; i < N; ++i) log_r_[i] = u_lo + du * static_cast<double>(i);
  for (std::size_t i = 1; i < N; ++i) F_[i] = F_[i - 1] + inc[i - 1];
  Q_[N - 1] = tail;
  for (std::size_t i = N - 1; i-- > 0;) Q_[i] = Q_[i + 1] + inc[i];
  mass_ = F_[N - 1] + tail;
  if (std::abs(mass_ - 1.0) > 1e-5)
    throw TabulationError("radial CDF total mass " + std::to_string(mass_) + " is not 1 within 1e-5");

  for (std::size_t i = 1; i < N; ++i) {
    const bool flat = F_[i - 1] < 0.6 ? !(F_[i] > F_[i - 1]) : !(Q_[i] < Q_[i - 1]);
    if (flat) throw TabulationError("radial CDF is flat inside the table");
  }
  lq_.resize(N);
  for (std::size_t i = 0; i < N; ++i) {
    lq_[i] = Q_[i] > 0.0 ? std::log(Q_[i]) : -745.0;
    if (F_[i] >= 0.4 && Q_[i] > 0.0) {
      upper_x_.push_back(-lq_[i]);
      upper_y_.push_back(log_r_[i]);
    }
  }
}

namespace {

// Monotone cubic through (x, y) evaluated at one point; x strictly increasing.
double pchip_at(const std::vector<double>& x, const std::vector<double>& y, double v) {
  const auto it = std::upper_bound(x.begin(), x.end(), v);
  std::size_t hi = static_cast<std::size_t>(it - x.begin());
  hi = std::clamp<std::size_t>(hi, 1, x.size() - 1);
  // local 4-point window keeps every evaluation O(1) in memory
  std::size_t lo = hi >= 2 ? hi - 2 : 0;
  std::size_t end = std::min(x.size(), lo + 4);
  if (end - lo < 4) lo = end >= 4 ? end - 4 : 0;
  std::vector<double> xs(x.begin() + static_cast<std::ptrdiff_t>(lo), x.begin() + static_cast<std::ptrdiff_t>(end));
  std::vector<double> ys(y.begin() + static_cast<std::ptrdiff_t>(lo), y.begin() + static_cast<std::ptrdiff_t>(end));
  boost::math::interpolators::pchip<std::vector<double>> spline(std::move(xs), std::move(ys));
  return spline(v);
}

}  // namespace

double RadialLaw::cdf(double r) const {
  if (!(r > 0.0)) return 0.0;
  const double u = std::log(r);
  if (u <= log_r_.front()) return F_.front() * std::exp(d_ * (u - log_r_.front()));
  if (u < log_r_.back()) {
    const double F = pchip_at(log_r_, F_, u);
    if (F < 0.5) return F;
  }
  return 1.0 - survival(r);
}

double RadialLaw::survival(double r) const {
  if (!(r > 0.0)) return 1.0;
  const double u = std::log(r);
  if (u >= log_r_.back()) {
    if (Q_.back() == 0.0 || tail_exponent_ == 0.0) return 0.0;
    return Q_.back() * std::exp(-tail_exponent_ * (u - log_r_.back()));
  }
  const double F = u <= log_r_.front() ? F_.front() * std::exp(d_ * (u - log_r_.front())) : pchip_at(log_r_, F_, u);
  if (F < 0.5) return 1.0 - F;
  return std::exp(pchip_at(log_r_, lq_, u));
}

double RadialLaw::quantile(double u) const {
  if (!(u > 0.0)) return 0.0;
  if (!(u < 1.0)) return std::numeric_limits<double>::infinity();
  if (u < F_.front()) return std::exp(log_r_.front()) * std::pow(u / F_.front(), 1.0 / d_);
  if (u <= 0.5) return std::exp(pchip_at(F_, log_r_, u));
  const double v = 1.0 - u;  // exact for u >= 1/2
  const std::size_t last = Q_.size() - 1;
  if (v < Q_[last]) {
    if (tail_exponent_ == 0.0) return std::exp(log_r_.back());
    return std::exp(log_r_.back() - std::log(v / Q_[last]) / tail_exponent_);
  }
  return std::exp(pchip_at(upper_x_, upper_y_, -std::log(v)));
}

std::vector<double> sample_sbm(const BernsteinFunction& phi, int d, double t, std::size_t count, std::uint64_t seed,
                               SbmRoute route) {
  if (d < 1) throw DomainError("dimension must be >= 1");
  if (!(t > 0.0)) throw DomainError("sampling needs t > 0");
  if (route == SbmRoute::automatic) route = has_subordinator_route(phi) ? SbmRoute::subordinator : SbmRoute::inverse_cdf;
  std::vector<double> out(count * static_cast<std::size_t>(d));
  if (route == SbmRoute::subordinator) {
    if (!has_subordinator_route(phi)) throw UnsupportedError(phi.name() + " has no exact subordinator sampler");
    chunked(count, seed, kPurposeSbm, [&](std::size_t i, std::mt19937_64& rng) {
      const double S = subordinator_draw(phi, t, rng);
      gaussian_point(std::sqrt(2.0 * S), d, rng, out.data() + i * static_cast<std::size_t>(d));
    });
    return out;
  }
  const RadialLaw law(phi, d, t);
  chunked(count, seed, kPurposeSbm, [&](std::size_t i, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double u = uni(rng);
    while (u == 0.0) u = uni(rng);
    const double r = law.quantile(u);
    double* x = out.data() + i * static_cast<std::size_t>(d);
    if (d == 1) {
      x[0] = uni(rng) < 0.5 ? -r : r;
      return;
    }
    double n2 = 0.0;
    do {
      gaussian_point(1.0, d, rng, x);
      n2 = 0.0;
      for (int a = 0; a < d; ++a) n2 += x[a] * x[a];
    } while (n2 == 0.0);
    const double s = r / std::sqrt(n2);
    for (int a = 0; a < d; ++a) x[a] *= s;
  });
  return out;
}

// --- goodness of fit ---

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw UndersamplingError("no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double D = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = cdf(samples[i]);
    D = std::max({D, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return D;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw UndersamplingError("no samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double D = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    D = std::max(D, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return D;
}

double ks_p_value(double D, double n_effective) {
  const double sn = std::sqrt(n_effective);
  const double lam = (sn + 0.12 + 0.11 / sn) * D;
  if (lam <= 0.0) return 1.0;
  if (lam < 1.0) {
    // Jacobi-transformed series converges fast for small lambda
    double s = 0.0;
    for (int k = 1; k <= 50; ++k) {
      const double a = (2.0 * k - 1.0) * kPi / lam;
      s += std::exp(-a * a / 8.0);
    }
    return std::clamp(1.0 - std::sqrt(2.0 * kPi) / lam * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) s += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lam * lam);
  return std::clamp(s, 0.0, 1.0);
}

json FitReport::to_json() const {
  return {{"samples", samples}, {"bins", bins},        {"chi2", chi2},          {"dof", dof},
          {"chi2_p_value", chi2_p_value}, {"ks", ks}, {"ks_p_value", ks_p_value}, {"pass", pass}};
}

FitReport histogram_vs_density(const std::vector<double>& samples, const BernsteinFunction& phi, int d, double t,
                               int bins) {
  if (d < 1 || samples.size() % static_cast<std::size_t>(d) != 0) throw DomainError("sample array does not hold whole points");
  const std::size_t n = samples.size() / static_cast<std::size_t>(d);
  if (n < 100000) throw UndersamplingError("goodness of fit needs at least 1e5 samples, got " + std::to_string(n));
  if (bins < 2) throw DomainError("need at least two bins");
  const RadialLaw law(phi, d, t);

  // values and the law they are tested against
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (d == 1) {
      v[i] = samples[i];
      continue;
    }
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) r2 += samples[i * d + a] * samples[i * d + a];
    v[i] = std::sqrt(r2);
  }
  auto quantile = [&](double level) {
    if (d > 1) return law.quantile(level);
    return level < 0.5 ? -law.quantile(1.0 - 2.0 * level) : law.quantile(2.0 * level - 1.0);
  };
  const double area = sphere_area(d);
  auto mass = [&](double a, double b) {
    auto f = [&](double x) {
      return d == 1 ? density(phi, 1, t, std::abs(x)) : area * density(phi, d, t, x) * std::pow(x, d - 1);
    };
    return quad::gauss_kronrod(f, a, b, 1e-10, 12).value;
  };

  std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
  for (int k = 0; k <= bins; ++k) edges[static_cast<std::size_t>(k)] = quantile(0.0005 + 0.999 * k / bins);
  std::vector<double> expect(static_cast<std::size_t>(bins) + 2);
  double central = 0.0;
  parallel_for(static_cast<std::size_t>(bins), [&](std::size_t k) { expect[k + 1] = mass(edges[k], edges[k + 1]); });
  for (int k = 1; k <= bins; ++k) central += expect[static_cast<std::size_t>(k)];
  if (d == 1) {
    expect.front() = expect.back() = 0.5 * (1.0 - central);
  } else {
    expect.front() = mass(0.0, edges.front());
    expect.back() = 1.0 - central - expect.front();
  }

  std::vector<double> observed(expect.size(), 0.0);
  for (double x : v) {
    const std::size_t k = static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
    observed[k] += 1.0;
  }
  FitReport rep;
  rep.samples = n;
  rep.bins = static_cast<int>(expect.size());
  for (std::size_t k = 0; k < expect.size(); ++k) {
    const double e = expect[k] * static_cast<double>(n);
    if (!(e > 0.0)) throw TabulationError("empty expected bin in the goodness-of-fit table");
    rep.chi2 += (observed[k] - e) * (observed[k] - e) / e;
  }
  rep.dof = rep.bins - 1;
  rep.chi2_p_value = boost::math::cdf(boost::math::complement(boost::math::chi_squared(rep.dof), rep.chi2));
  if (d == 1) {
    rep.ks = ks_statistic(v, [&](double x) { return x < 0.0 ? 0.5 * law.survival(-x) : 1.0 - 0.5 * law.survival(x); });
    rep.ks_p_value = ks_p_value(rep.ks, static_cast<double>(n));
  } else {
    rep.ks = std::numeric_limits<double>::quiet_NaN();
    rep.ks_p_value = 1.0;
  }
  rep.pass = rep.chi2_p_value >= 0.01 && rep.ks_p_value >= 0.01;
  return rep;
}

}  // namespace sublp
