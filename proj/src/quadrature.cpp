#include "sublp/quadrature.hpp"

#include <algorithm>
#include <limits>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace sublp::quad {

Result gauss_kronrod(const std::function<double(double)>& f, double a, double b, double rel_tol,
                     unsigned max_depth) {
  Result r;
  if (a == b) return r;
  r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth,
                                                                          rel_tol, &r.error, &r.l1);
  return r;
}

Result gauss_kronrod_split(const std::function<double(double)>& f, double a, double b, int pieces,
                           double rel_tol, unsigned max_depth) {
  // First pass: one Kronrod rule per piece gives the global L1 scale; the
  // adaptive pass then holds each piece to rel_tol of that scale, so pieces
  // that contribute nothing are not refined down to roundoff.
  struct Piece {
    double lo, hi;
    Result r;
  };
  std::vector<Piece> parts(static_cast<std::size_t>(pieces));
  const double w = (b - a) / pieces;
  double total_l1 = 0.0;
  for (int i = 0; i < pieces; ++i) {
    auto& p = parts[static_cast<std::size_t>(i)];
    p.lo = a + i * w;
    p.hi = (i + 1 == pieces) ? b : a + (i + 1) * w;
    p.r = gauss_kronrod(f, p.lo, p.hi, rel_tol, 0);
    total_l1 += p.r.l1;
  }
  Result total;
  for (auto& p : parts) {
    const double budget = rel_tol * total_l1 / pieces;
    if (p.r.error > budget && p.r.l1 > 0.0) {
      const double piece_tol = std::min(0.1, std::max(rel_tol, budget / p.r.l1));
      p.r = gauss_kronrod(f, p.lo, p.hi, piece_tol, max_depth);
    }
    total.value += p.r.value;
    total.error += p.r.error;
    total.l1 += p.r.l1;
  }
  return total;
}

double gauss_legendre(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 32>::integrate(f, a, b);
}

// Standard in-place epsilon table: row_[k] holds eps_k of the current diagonal.
double WynnEpsilon::push(double s) {
  ++count_;
  std::vector<double> next(row_.size() + 1);
  next[0] = s;
  for (std::size_t k = 1; k < next.size(); ++k) {
    const double prev_lower = (k >= 2) ? row_[k - 2] : 0.0;
    const double diff = next[k - 1] - row_[k - 1];
    if (diff == 0.0 || !std::isfinite(diff)) {
      next.resize(k);
      break;
    }
    next[k] = prev_lower + 1.0 / diff;
  }
  row_ = std::move(next);
  // Even columns carry the accelerated sums; take the deepest one.
  const std::size_t top = (row_.size() - 1) & ~static_cast<std::size_t>(1);
  const double est = row_[top];
  last_change_ = std::abs(est - estimate_);
  estimate_ = est;
  return estimate_;
}

}  // namespace sublp::quad
