#include "narz/quadrature.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include "narz/error.hpp"

namespace narz {
namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;
using Embedded = boost::math::quadrature::gauss<double, 7>;

struct Panel {
  double a;
  double b;
  double value;
  double error;
  unsigned depth;

  bool operator<(const Panel& o) const { return error < o.error; }
};

Panel apply_rule(const std::function<double(double)>& f, double a, double b, unsigned depth) {
  // The library's own non-adaptive estimate is a pessimistic heuristic with a
  // floor near 1e-13 relative; use the raw Kronrod-Gauss difference instead.
  double l1 = 0.0;
  const double value = Rule::integrate(f, a, b, 0, 0.0, nullptr, &l1);
  double err = std::abs(value - Embedded::integrate(f, a, b));
  // Differences below round-off are noise.
  if (err < 50.0 * std::numeric_limits<double>::epsilon() * l1) err = 0.0;
  return {a, b, value, err, depth};
}

constexpr std::size_t kMaxPanels = 1u << 15;

}  // namespace

// Globally adaptive: always bisect the panel with the largest error estimate
// until the summed estimate meets the tolerance.
QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double abs_tol, unsigned max_depth) {
  if (!(abs_tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "quadrature tolerance must be positive");
  }
  if (a == b) return {};
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::priority_queue<Panel> heap;
  std::vector<Panel> done;  // panels that can no longer be split
  heap.push(apply_rule(f, a, b, 0));
  double total_error = heap.top().error;
  while (!heap.empty() && total_error > abs_tol && heap.size() + done.size() < kMaxPanels) {
    const Panel p = heap.top();
    heap.pop();
    const double mid = 0.5 * (p.a + p.b);
    if (p.depth >= max_depth || !(mid > p.a && mid < p.b)) {
      done.push_back(p);
      if (p.error > 0.0 && heap.empty()) break;
      continue;
    }
    const Panel left = apply_rule(f, p.a, mid, p.depth + 1);
    const Panel right = apply_rule(f, mid, p.b, p.depth + 1);
    total_error += left.error + right.error - p.error;
    heap.push(left);
    heap.push(right);
  }
  QuadratureResult acc;
  // Re-sum from scratch to avoid drift in the running error total.
  for (; !heap.empty(); heap.pop()) {
    acc.value += heap.top().value;
    acc.error_estimate += heap.top().error;
  }
  for (const Panel& p : done) {
    acc.value += p.value;
    acc.error_estimate += p.error;
  }
  if (acc.error_estimate > abs_tol || !std::isfinite(acc.value)) {
    std::ostringstream msg;
    msg << "adaptive quadrature on [" << a << ", " << b
        << "] did not reach tolerance " << abs_tol << " (estimate "
        << acc.error_estimate << ")";
    throw Error(ErrorCode::QuadratureFailure, msg.str());
  }
  acc.value *= sign;
  return acc;
}

double integrate_value(const std::function<double(double)>& f, double a,
                       double b, double abs_tol) {
  return integrate(f, a, b, abs_tol).value;
}

}  // namespace narz
