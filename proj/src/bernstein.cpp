#include "sublp/bernstein.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "sublp/errors.hpp"
#include "sublp/quadrature.hpp"

namespace sublp {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kSeriesRadius = 16.0;
constexpr int kSeriesTerms = 20;

struct FamilySpec {
  const char* name;
  Family family;
  ParamMap defaults;
};

const std::vector<FamilySpec>& families() {
  static const std::vector<FamilySpec> specs = {
      {"stable", Family::stable, {{"alpha", 1.0}}},
      {"two_stable", Family::two_stable, {{"alpha", 0.3}, {"beta", 0.7}}},
      {"mixed_power", Family::mixed_power, {{"alpha", 0.8}, {"beta", 0.7}}},
      {"power_log", Family::power_log, {{"alpha", 0.5}, {"beta", 0.3}}},
      {"power_inv_log", Family::power_inv_log, {{"alpha", 0.7}, {"beta", 0.2}}},
      {"relativistic", Family::relativistic, {{"alpha", 1.0}, {"m", 1.0}}},
      {"log_cosh", Family::log_cosh, {{"alpha", 0.8}}},
      {"log_sinh", Family::log_sinh, {{"alpha", 0.8}}},
  };
  return specs;
}

void require(bool ok, const std::string& name, const std::string& what) {
  if (!ok) throw ParameterError(name + ": " + what);
}

void validate(const std::string& name, Family f, const ParamMap& p) {
  auto in_open = [](double v, double lo, double hi) { return v > lo && v < hi; };
  switch (f) {
    case Family::stable:
      require(in_open(p.at("alpha"), 0.0, 2.0), name, "alpha must lie in (0, 2)");
      break;
    case Family::two_stable:
      require(in_open(p.at("alpha"), 0.0, 1.0) && in_open(p.at("beta"), p.at("alpha"), 1.0), name,
              "need 0 < alpha < beta < 1");
      break;
    case Family::mixed_power:
      require(in_open(p.at("alpha"), 0.0, 1.0) && in_open(p.at("beta"), 0.0, 1.0), name,
              "alpha, beta must lie in (0, 1)");
      break;
    case Family::power_log:
      require(in_open(p.at("alpha"), 0.0, 1.0), name, "alpha must lie in (0, 1)");
      require(in_open(p.at("beta"), 0.0, 1.0 - p.at("alpha")), name,
              "beta must lie in (0, 1 - alpha)");
      break;
    case Family::power_inv_log:
      require(in_open(p.at("alpha"), 0.0, 1.0), name, "alpha must lie in (0, 1)");
      require(in_open(p.at("beta"), 0.0, p.at("alpha")), name, "beta must lie in (0, alpha)");
      break;
    case Family::relativistic:
      require(in_open(p.at("alpha"), 0.0, 2.0), name, "alpha must lie in (0, 2)");
      require(p.at("m") > 0.0 && std::isfinite(p.at("m")), name, "m must be positive");
      break;
    case Family::log_cosh:
    case Family::log_sinh:
      require(in_open(p.at("alpha"), 0.0, 1.0), name, "alpha must lie in (0, 1)");
      break;
    case Family::linear:
      break;
  }
}

// sum_{k=1}^{K} x^k * coeff(k) by Horner.
template <class T, class Coeff>
T power_series_tail(const T& x, Coeff coeff) {
  T acc(coeff(kSeriesTerms));
  for (int k = kSeriesTerms - 1; k >= 1; --k) acc = acc * x + coeff(k);
  return acc * x;
}

double inv_factorial(int n) {
  static const std::array<double, 2 * kSeriesTerms + 2> table = [] {
    std::array<double, 2 * kSeriesTerms + 2> t{};
    t[0] = 1.0;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] / static_cast<double>(i);
    return t;
  }();
  return table[static_cast<std::size_t>(n)];
}

// log cosh sqrt(x)
template <class T>
T log_cosh_sqrt(const T& x) {
  if (magnitude(x) <= kSeriesRadius)
    return lg1p(power_series_tail(x, [](int k) { return inv_factorial(2 * k); }));
  const T w = sq(x);
  return w - kLn2 + lg1p(ex(-2.0 * w));
}

// log(sinh sqrt(x) / sqrt(x))
template <class T>
T log_sinhc_sqrt(const T& x) {
  if (magnitude(x) <= kSeriesRadius)
    return lg1p(power_series_tail(x, [](int k) { return inv_factorial(2 * k + 1); }));
  const T w = sq(x);
  return w + lg1p(-ex(-2.0 * w)) - kLn2 - lg(w);
}

}  // namespace

BernsteinFunction::BernsteinFunction(std::string name, Family family, ParamMap params)
    : name_(std::move(name)), family_(family), params_(std::move(params)) {
  validate(name_, family_, params_);
  c0_ = 1.0;
  c0_ = raw(scale_);
}

BernsteinFunction BernsteinFunction::from_catalog(std::string_view name, const ParamMap& overrides) {
  for (const auto& spec : families()) {
    if (name != spec.name) continue;
    ParamMap p = spec.defaults;
    for (const auto& [k, v] : overrides) {
      if (!p.count(k)) throw ParameterError(std::string(name) + ": unknown parameter '" + k + "'");
      p[k] = v;
    }
    return BernsteinFunction(spec.name, spec.family, p);
  }
  throw ParameterError("unknown catalog entry '" + std::string(name) + "'");
}

BernsteinFunction BernsteinFunction::linear() { return BernsteinFunction("linear", Family::linear, {}); }

std::vector<std::string> catalog_names() {
  std::vector<std::string> out;
  for (const auto& s : families()) out.emplace_back(s.name);
  return out;
}

template <class T>
T BernsteinFunction::raw(const T& x) const {
  switch (family_) {
    case Family::stable:
      return pw(x, 0.5 * params_.at("alpha"));
    case Family::two_stable:
      return pw(x, params_.at("alpha")) + pw(x, params_.at("beta"));
    case Family::mixed_power:
      return pw(x + pw(x, params_.at("alpha")), params_.at("beta"));
    case Family::power_log:
      return pw(x, params_.at("alpha")) * pw(lg1p(x), params_.at("beta"));
    case Family::power_inv_log:
      return pw(x, params_.at("alpha")) * pw(lg1p(x), -params_.at("beta"));
    case Family::relativistic: {
      const double a = params_.at("alpha");
      const double m = params_.at("m");
      const double kappa = std::pow(m, 2.0 / a);
      if (magnitude(x) < kappa) return m * em1((0.5 * a) * lg1p(x / kappa));
      return pw(x + kappa, 0.5 * a) - m;
    }
    case Family::log_cosh:
      return pw(log_cosh_sqrt(x), params_.at("alpha"));
    case Family::log_sinh:
      return pw(log_sinhc_sqrt(x), params_.at("alpha"));
    case Family::linear:
      return x;
  }
  return x;
}

bool BernsteinFunction::supports_levy_density() const {
  return family_ == Family::stable || family_ == Family::two_stable ||
         family_ == Family::relativistic;
}

double BernsteinFunction::operator()(double lambda) const {
  if (!(lambda >= 0.0)) throw DomainError(name_ + ": phi evaluated at negative or NaN argument");
  if (lambda == 0.0) return 0.0;
  return raw(scale_ * lambda) / c0_;
}

std::complex<double> BernsteinFunction::operator()(std::complex<double> z) const {
  if (z == std::complex<double>(0.0, 0.0)) return {0.0, 0.0};
  if (z.real() < 0.0) throw DomainError(name_ + ": complex argument outside Re z >= 0");
  return raw(scale_ * z) / c0_;
}

Jet BernsteinFunction::jet(double lambda) const {
  if (!(lambda > 0.0)) throw DomainError(name_ + ": derivatives need lambda > 0");
  Jet j = raw(Jet::variable(scale_ * lambda, scale_));
  j /= c0_;
  return j;
}

double BernsteinFunction::levy_measure_density(double s) const {
  if (!supports_levy_density())
    throw UnsupportedError(name_ + ": no closed-form Levy measure for this entry");
  if (!(s > 0.0)) throw DomainError("Levy measure density needs s > 0");
  const double u = s / scale_;
  auto stable_density = [](double a, double v) {
    return a / std::tgamma(1.0 - a) * std::pow(v, -1.0 - a);
  };
  double raw_density = 0.0;
  switch (family_) {
    case Family::stable:
      raw_density = stable_density(0.5 * params_.at("alpha"), u);
      break;
    case Family::two_stable:
      raw_density = stable_density(params_.at("alpha"), u) + stable_density(params_.at("beta"), u);
      break;
    case Family::relativistic: {
      const double a = params_.at("alpha");
      const double kappa = std::pow(params_.at("m"), 2.0 / a);
      raw_density = stable_density(0.5 * a, u) * std::exp(-kappa * u);
      break;
    }
    default:
      break;
  }
  return raw_density / (scale_ * c0_);
}

BernsteinFunction BernsteinFunction::scaled(double a) const {
  if (!(a > 0.0) || !std::isfinite(a)) throw DomainError("scale a must be positive");
  BernsteinFunction out = *this;
  out.scale_ = scale_ / (a * a);
  out.c0_ = 1.0;
  out.c0_ = out.raw(out.scale_);
  return out;
}

double BernsteinFunction::small_argument_exponent() const {
  const auto& p = params_;
  switch (family_) {
    case Family::stable: return 0.5 * p.at("alpha");
    case Family::two_stable: return p.at("alpha");
    case Family::mixed_power: return p.at("alpha") * p.at("beta");
    case Family::power_log: return p.at("alpha") + p.at("beta");
    case Family::power_inv_log: return p.at("alpha") - p.at("beta");
    case Family::relativistic: return 1.0;
    case Family::log_cosh:
    case Family::log_sinh: return p.at("alpha");
    case Family::linear: return 1.0;
  }
  return 1.0;
}

double BernsteinFunction::large_argument_exponent() const {
  const auto& p = params_;
  switch (family_) {
    case Family::stable: return 0.5 * p.at("alpha");
    case Family::two_stable: return p.at("beta");
    case Family::mixed_power: return p.at("beta");
    case Family::power_log:
    case Family::power_inv_log: return p.at("alpha");
    case Family::relativistic: return 0.5 * p.at("alpha");
    case Family::log_cosh:
    case Family::log_sinh: return 0.5 * p.at("alpha");
    case Family::linear: return 1.0;
  }
  return 1.0;
}

json BernsteinFunction::to_json() const {
  return json{{"name", name_}, {"params", params_}, {"normalization", c0_}, {"arg_scale", scale_}};
}

std::vector<double> LogLattice::points() const {
  if (!(lo > 0.0) || !(hi > lo) || per_decade < 1) throw PreconditionError("malformed log lattice");
  const double decades = std::log10(hi / lo);
  const int count = static_cast<int>(std::lround(decades * per_decade));
  std::vector<double> pts(static_cast<std::size_t>(count) + 1);
  for (int i = 0; i <= count; ++i)
    pts[static_cast<std::size_t>(i)] = lo * std::pow(10.0, decades * i / count);
  return pts;
}

double eval(const BernsteinFunction& phi, double lambda) { return phi(lambda); }

double deriv_n(const BernsteinFunction& phi, double lambda, int n) {
  if (n < 0 || n > 6) throw DomainError("deriv_n supports 0 <= n <= 6");
  if (n == 0) return phi(lambda);
  return phi.jet(lambda).derivative(static_cast<std::size_t>(n));
}

namespace {

// Signed Stirling numbers of the first kind, s(n, k) for n, k <= 6.
double stirling1(int n, int k) {
  static const auto table = [] {
    std::array<std::array<double, 7>, 7> s{};
    s[0][0] = 1.0;
    for (int i = 1; i <= 6; ++i)
      for (int j = 1; j <= i; ++j) s[i][j] = s[i - 1][j - 1] - (i - 1) * s[i - 1][j];
    return s;
  }();
  return table[static_cast<std::size_t>(n)][static_cast<std::size_t>(k)];
}

// k-th derivative of g(s) = phi(e^s) by the centered binomial stencil.
double central_log_derivative(const BernsteinFunction& phi, double s0, int k, double h) {
  double acc = 0.0;
  double binom = 1.0;
  for (int j = 0; j <= k; ++j) {
    const double offset = (0.5 * k - j) * h;
    acc += ((j % 2 == 0) ? 1.0 : -1.0) * binom * phi(std::exp(s0 + offset));
    binom = binom * (k - j) / (j + 1);
  }
  return acc / std::pow(h, k);
}

double richardson_log_derivative(const BernsteinFunction& phi, double s0, int k, double h) {
  const double coarse = central_log_derivative(phi, s0, k, h);
  const double fine = central_log_derivative(phi, s0, k, 0.5 * h);
  return (4.0 * fine - coarse) / 3.0;
}

}  // namespace

double numeric_derivative(const BernsteinFunction& phi, double lambda, int n) {
  if (n < 0 || n > 6) throw DomainError("numeric_derivative supports 0 <= n <= 6");
  if (!(lambda > 0.0)) throw DomainError("numeric_derivative needs lambda > 0");
  if (n == 0) return phi(lambda);
  const double s0 = std::log(lambda);
  double first = 0.0;
  double second = 0.0;
  double scale = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double h = 2.0 * std::pow(std::numeric_limits<double>::epsilon(), 1.0 / (k + 4));
    const double a = richardson_log_derivative(phi, s0, k, h);
    const double b = richardson_log_derivative(phi, s0, k, 0.5 * h);
    first += stirling1(n, k) * a;
    second += stirling1(n, k) * b;
    scale += std::abs(stirling1(n, k) * b);
  }
  const double denom = std::max(std::abs(second), 1e-300);
  if (std::abs(first - second) > 1e-4 * std::max(denom, 1e-8 * scale))
    throw ToleranceError("numeric_derivative: stencil refinements disagree at lambda=" +
                         std::to_string(lambda) + ", n=" + std::to_string(n));
  return second / std::pow(lambda, n);
}

double inverse(const BernsteinFunction& phi, double y) {
  if (!(y > 0.0) || !std::isfinite(y)) throw DomainError("inverse needs y > 0");
  constexpr double kLo = 1e-300;
  constexpr double kHi = 1e300;
  double lo = 1.0;
  double hi = 1.0;
  double flo = phi(lo);
  double fhi = flo;
  while (fhi < y) {
    if (hi >= kHi) throw BracketError("inverse: y=" + std::to_string(y) + " above achievable range");
    lo = hi;
    flo = fhi;
    hi = std::min(hi * 1e4, kHi);
    fhi = phi(hi);
  }
  while (flo > y) {
    if (lo <= kLo) throw BracketError("inverse: y=" + std::to_string(y) + " below achievable range");
    hi = lo;
    fhi = flo;
    lo = std::max(lo * 1e-4, kLo);
    flo = phi(lo);
  }
  if (flo == y) return lo;
  if (fhi == y) return hi;

  // Illinois regula falsi on g(u) = log phi(e^u) - log y, nearly linear in u.
  const double ly = std::log(y);
  double ua = std::log(lo), ub = std::log(hi);
  double ga = std::log(flo) - ly, gb = std::log(fhi) - ly;
  int side = 0;
  double best = 0.5 * (ua + ub);
  for (int it = 0; it < 400; ++it) {
    double uc = (ua * gb - ub * ga) / (gb - ga);
    if (!(uc > ua && uc < ub)) uc = 0.5 * (ua + ub);
    const double fc = phi(std::exp(uc));
    best = uc;
    if (std::abs(fc - y) <= 1e-13 * y) return std::exp(uc);
    const double gc = std::log(fc) - ly;
    if (gc < 0.0) {
      ua = uc;
      ga = gc;
      if (side == -1) gb *= 0.5;
      side = -1;
    } else {
      ub = uc;
      gb = gc;
      if (side == 1) ga *= 0.5;
      side = 1;
    }
    if (ub - ua <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(ua))) break;
  }
  const double lambda = std::exp(best);
  if (std::abs(phi(lambda) - y) > 1e-12 * y)
    throw BracketError("inverse: residual above 1e-12 for y=" + std::to_string(y));
  return lambda;
}

double characteristic_scale(const BernsteinFunction& phi, double t) {
  if (!(t > 0.0)) throw DomainError("characteristic scale needs t > 0");
  return 1.0 / std::sqrt(inverse(phi, 1.0 / t));
}

double phi_scaled(const BernsteinFunction& phi, double a, double lambda) {
  if (!(a > 0.0)) throw DomainError("phi_scaled needs a > 0");
  return phi(lambda / (a * a)) / phi(1.0 / (a * a));
}

ScalingExponents check_scaling_conditions(const BernsteinFunction& phi, const LogLattice& lattice) {
  if (lattice.lo > 1e-4 * (1 + 1e-12) || lattice.hi < 1e4 * (1 - 1e-12) || lattice.per_decade < 40)
    throw PreconditionError("scaling lattice must cover [1e-4, 1e4] with >= 40 points per decade");
  const std::vector<double> pts = lattice.points();
  const std::size_t n = pts.size();
  std::vector<double> phi_pts(n);
  for (std::size_t i = 0; i < n; ++i) phi_pts[i] = phi(pts[i]);

  ScalingExponents e;
  double d1 = INFINITY, d2 = -INFINITY, d3 = INFINITY;
  constexpr double kTol = 1e-10;
  for (std::size_t i = 0; i < n; ++i) {
    const double lam = pts[i];
    const double log_lam = std::log(lam);
    for (std::size_t j = 0; j < n; ++j) {
      const double t = pts[j];
      const double ratio = phi(lam * t) / phi_pts[j];
      const double lower = std::min(1.0, lam), upper = std::max(1.0, lam);
      if (!(ratio >= lower * (1 - kTol) && ratio <= upper * (1 + kTol))) {
        std::ostringstream os;
        os << phi.name() << ": two-sided scaling bound fails at lambda=" << lam << ", t=" << t
           << " (ratio " << ratio << ", allowed [" << lower << ", " << upper << "])";
        throw ViolationError(os.str());
      }
      if (std::abs(log_lam) < 1e-12) continue;
      const double slope = std::log(ratio) / log_lam;
      if (lam > 1.0 && t >= 1.0 - 1e-12) {
        d1 = std::min(d1, slope);
        d2 = std::max(d2, slope);
      } else if (lam < 1.0 && t <= 1.0 + 1e-12) {
        d3 = std::min(d3, slope);
      }
    }
  }
  if (d3 > 1.0 && d3 < 1.0 + 1e-9) d3 = 1.0;
  e.delta1 = d1;
  e.delta2 = d2;
  e.delta3 = d3;
  double a1 = INFINITY, a2 = 0.0, a3 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lam = pts[i];
    for (std::size_t j = 0; j < n; ++j) {
      const double t = pts[j];
      const double ratio = phi(lam * t) / phi_pts[j];
      if (lam >= 1.0 - 1e-12 && t >= 1.0 - 1e-12) {
        a1 = std::min(a1, ratio / std::pow(lam, d1));
        a2 = std::max(a2, ratio / std::pow(lam, d2));
      }
      if (lam <= 1.0 + 1e-12 && t <= 1.0 + 1e-12) a3 = std::max(a3, ratio / std::pow(lam, d3));
    }
  }
  e.a1 = a1;
  e.a2 = a2;
  e.a3 = a3;
  return e;
}

bool complete_monotonicity_probe(const BernsteinFunction& phi, std::string* failure) {
  const LogLattice lattice{1e-6, 1e6, 10};
  for (double lam : lattice.points()) {
    const Jet j = phi.jet(lam);
    for (int n = 1; n <= 6; ++n) {
      const double d = j.derivative(static_cast<std::size_t>(n));
      const double signed_d = (n % 2 == 0) ? d : -d;
      const double slack = 1e-10 * j.value() / std::pow(lam, n);
      if (signed_d > slack) {
        if (failure) {
          std::ostringstream os;
          os << phi.name() << ": (-1)^n D^n phi > 0 at lambda=" << lam << ", n=" << n;
          *failure = os.str();
        }
        return false;
      }
    }
  }
  return true;
}

BoundReport verify_derivative_ratio(const BernsteinFunction& phi, int n, const LogLattice& lattice) {
  if (n < 1 || n > 4) throw DomainError("verify_derivative_ratio supports n = 1..4");
  auto sup_over = [&](const LogLattice& lat) {
    double best = 0.0;
    for (double lam : lat.points()) {
      const Jet j = phi.jet(lam);
      best = std::max(best, std::pow(lam, n) * std::abs(j.derivative(static_cast<std::size_t>(n))) /
                                j.value());
    }
    return best;
  };
  BoundReport r;
  r.inequality_id = "lem3.2";
  r.grid = {{"lambda_lo", lattice.lo}, {"lambda_hi", lattice.hi},
            {"per_decade", lattice.per_decade}, {"n", n}, {"phi", phi.to_json()}};
  r.settle(sup_over(lattice), sup_over(lattice.refined()));
  if (!r.pass)
    throw InstabilityError("verify_derivative_ratio: N(" + std::to_string(n) +
                           ") drifts by " + std::to_string(r.refinement_drift) + " under refinement");
  return r;
}

BoundReport verify_tail_integral(const BernsteinFunction& phi,
                                 const std::vector<double>& lambda_grid) {
  if (phi.drift() != 0.0)
    throw PreconditionError(phi.name() + ": tail integral check requires zero drift (b = 0)");
  // int_{1/lambda}^inf r^{-1} phi(r^{-2})^power dr, in u = log r.
  auto tail = [&](double lambda, double power, double tol) {
    const double reference = std::pow(phi(lambda * lambda), power);
    auto integrand = [&](double u) { return std::pow(phi(std::exp(-2.0 * u)), power); };
    const double u0 = -std::log(lambda);
    double u1 = u0 + 1.0;
    while (integrand(u1) >= 1e-16 * reference) u1 += 1.0 + 0.5 * (u1 - u0);
    const quad::Result q = quad::gauss_kronrod_split(integrand, u0, u1, 8, tol);
    if (!(q.error <= 1e-6 * std::abs(q.value)))
      throw QuadratureError("verify_tail_integral: quadrature did not converge", q.error);
    return q.value / reference;
  };
  double coarse = 0.0, fine = 0.0, coarse_sqrt = 0.0, fine_sqrt = 0.0;
  json per_lambda = json::array();
  for (double lam : lambda_grid) {
    if (!(lam > 0.0)) throw DomainError("tail integral grid needs lambda > 0");
    const double c = tail(lam, 1.0, 1e-8), f = tail(lam, 1.0, 1e-13);
    const double cs = tail(lam, 0.5, 1e-8), fs = tail(lam, 0.5, 1e-13);
    coarse = std::max(coarse, c);
    fine = std::max(fine, f);
    coarse_sqrt = std::max(coarse_sqrt, cs);
    fine_sqrt = std::max(fine_sqrt, fs);
    per_lambda.push_back({{"lambda", lam}, {"ratio", f}, {"ratio_sqrt", fs}});
  }
  BoundReport r;
  r.inequality_id = "lem3.9";
  r.grid = {{"lambda", lambda_grid}, {"phi", phi.to_json()}};
  r.settle(coarse, fine);
  BoundReport rs;
  rs.settle(coarse_sqrt, fine_sqrt);
  r.pass = r.pass && rs.pass;
  r.details["n_hat_sqrt"] = fine_sqrt;
  r.details["sqrt_drift"] = rs.refinement_drift;
  r.details["per_lambda"] = per_lambda;
  return r;
}

std::vector<CatalogEntry> catalog() {
  std::vector<CatalogEntry> out;
  for (const auto& name : catalog_names()) {
    BernsteinFunction f = BernsteinFunction::from_catalog(name);
    CatalogEntry e{f, check_scaling_conditions(f), f.supports_levy_density()};
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace sublp
