#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace sublp::quad {

struct Result {
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
};

/// Adaptive Gauss-Kronrod (31 points) on a finite interval.
Result gauss_kronrod(const std::function<double(double)>& f, double a, double b,
                     double rel_tol = 1e-12, unsigned max_depth = 18);

/// Integral over [a, b] split into `pieces` equal subintervals, each adaptive;
/// the tolerance is relative to the L1 norm over the whole interval.
Result gauss_kronrod_split(const std::function<double(double)>& f, double a, double b,
                           int pieces, double rel_tol = 1e-12, unsigned max_depth = 15);

/// Fixed 32-point Gauss-Legendre on [a, b].
double gauss_legendre(const std::function<double(double)>& f, double a, double b);

/// Wynn epsilon algorithm over a stream of partial sums.
class WynnEpsilon {
 public:
  /// Adds the next partial sum; returns the current accelerated estimate.
  double push(double partial_sum);
  double estimate() const { return estimate_; }
  /// |difference| between the last two accelerated estimates.
  double last_change() const { return last_change_; }
  std::size_t size() const { return count_; }

 private:
  std::vector<double> row_;
  std::size_t count_ = 0;
  double estimate_ = 0.0;
  double last_change_ = INFINITY;
};

}  // namespace sublp::quad
