#include "narz/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "narz/error.hpp"
#include "narz/metrics.hpp"
#include "narz/quadrature.hpp"

namespace narz {

namespace {

constexpr double kThetaTol = 1e-12;
constexpr double kQuadTol = 1e-13;

InitialDatum::Function require_u0(InitialDatum::Function u0) {
  if (!u0) throw Error(ErrorCode::InvalidArgument, "initial velocity u0 is missing");
  return u0;
}

}  // namespace

InitialDatum InitialDatum::atomic(std::vector<double> positions, std::vector<double> masses,
                                  Function u0) {
  if (positions.empty() || positions.size() != masses.size()) {
    throw Error(ErrorCode::InvalidArgument, "atomic datum needs matching positions and masses");
  }
  std::vector<std::size_t> order(positions.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return positions[a] < positions[b]; });
  std::vector<double> x, w;
  double total = 0.0;
  for (std::size_t i : order) {
    if (!(masses[i] > 0.0)) throw Error(ErrorCode::InvalidArgument, "atom masses must be positive");
    x.push_back(positions[i]);
    w.push_back(masses[i]);
    total += masses[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "atom masses must sum to 1");
  }
  InitialDatum d;
  d.atoms_ = StepFunction(std::move(x), std::move(w));
  d.u0_ = require_u0(std::move(u0));
  d.support_ = {d.atoms_.breakpoints().front(), d.atoms_.breakpoints().back()};
  d.r0_ = std::max(std::abs(d.support_.lo), std::abs(d.support_.hi));
  return d;
}

InitialDatum InitialDatum::table(std::vector<double> xs, std::vector<double> values, Function u0) {
  if (xs.empty() || xs.size() != values.size()) {
    throw Error(ErrorCode::InvalidArgument, "M0 table needs matching x and value columns");
  }
  std::vector<double> x, w;
  double prev = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i > 0 && !(xs[i] > xs[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "M0 table abscissae must be strictly increasing");
    }
    if (values[i] < prev || values[i] > 1.0 + 1e-12) {
      throw Error(ErrorCode::InvalidArgument, "M0 table values must be nondecreasing in [0, 1]");
    }
    if (values[i] > prev) {
      x.push_back(xs[i]);
      w.push_back(values[i] - prev);
    }
    prev = values[i];
  }
  if (std::abs(prev - 1.0) > 1e-12) {
    throw Error(ErrorCode::InvalidArgument, "M0 table must reach 1");
  }
  return atomic(std::move(x), std::move(w), std::move(u0));
}

InitialDatum InitialDatum::uniform(double a, double b, Function u0) {
  if (!(b > a)) throw Error(ErrorCode::InvalidArgument, "uniform datum needs a < b");
  return continuous([a, b](double x) { return std::clamp((x - a) / (b - a), 0.0, 1.0); }, a, b,
                    std::move(u0), [a, b](double m) { return a + m * (b - a); });
}

InitialDatum InitialDatum::continuous(Function cdf, double lo, double hi, Function u0,
                                      Function quantile) {
  if (!cdf) throw Error(ErrorCode::InvalidArgument, "continuous datum needs a CDF");
  if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::InvalidArgument, "continuous datum needs a finite interval lo < hi");
  }
  InitialDatum d;
  d.cdf_ = std::move(cdf);
  d.quantile_ = std::move(quantile);
  d.u0_ = require_u0(std::move(u0));
  d.support_ = {lo, hi};
  d.r0_ = std::max(std::abs(lo), std::abs(hi));
  return d;
}

double InitialDatum::M0(double x) const {
  if (!cdf_) return atoms_(x);
  if (x < support_.lo) return 0.0;
  if (x >= support_.hi) return 1.0;
  return cdf_(x);
}

void InitialDatum::set_r0(double r0) {
  if (r0 < std::max(std::abs(support_.lo), std::abs(support_.hi))) {
    throw Error(ErrorCode::InvalidArgument, "R0 does not cover the support of M0");
  }
  r0_ = r0;
}

double InitialDatum::pseudo_inverse(double m) const {
  if (!(m > 0.0) || m > 1.0 + kThetaTol) {
    throw Error(ErrorCode::InvalidArgument, "pseudo-inverse argument must lie in (0, 1]");
  }
  if (!cdf_) {
    // Tolerance absorbs rounding in running mass sums.
    const auto& v = atoms_.values();
    const auto it = std::lower_bound(v.begin(), v.end(), m - kThetaTol);
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - v.begin()), v.size() - 1);
    return atoms_.breakpoints()[k];
  }
  m = std::min(m, 1.0);
  if (quantile_) return std::clamp(quantile_(m), support_.lo, support_.hi);
  double a = support_.lo, b = support_.hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    if (cdf_(mid) >= m) {
      b = mid;
    } else {
      a = mid;
    }
  }
  return M0(a) >= m ? a : b;
}

double pseudo_inverse(const InitialDatum& datum, double m) { return datum.pseudo_inverse(m); }

Atomization atomize(const InitialDatum& datum, std::size_t n, const MassRule& rule) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "atomization needs N >= 1");
  Atomization at;
  if (rule.masses.empty()) {
    at.masses.assign(n, 1.0 / static_cast<double>(n));
  } else {
    if (rule.masses.size() != n) {
      throw Error(ErrorCode::BadMassRule, "custom mass count differs from N");
    }
    at.masses = rule.masses;
  }
  double total = 0.0, max_m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(at.masses[i] > 0.0) || !std::isfinite(at.masses[i])) {
      std::ostringstream msg;
      msg << "mass " << i << " is not positive";
      throw Error(ErrorCode::BadMassRule, msg.str());
    }
    total += at.masses[i];
    max_m = std::max(max_m, at.masses[i]);
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "masses sum to " << total << ", not 1";
    throw Error(ErrorCode::BadMassRule, msg.str());
  }
  if (rule.decay_c) {
    const double bound = *rule.decay_c / std::pow(static_cast<double>(n), rule.decay_gamma);
    if (!(rule.decay_gamma > 0.0) || max_m > bound) {
      std::ostringstream msg;
      msg << "max mass " << max_m << " exceeds declared decay bound " << bound;
      throw Error(ErrorCode::BadMassRule, msg.str());
    }
  }
  at.thetas.assign(n + 1, 0.0);
  at.positions.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    at.thetas[i + 1] = at.thetas[i] + at.masses[i];
    at.positions[i] = datum.pseudo_inverse(at.thetas[i + 1]);
  }
  return at;
}

double initial_psi(const InitialDatum& datum, const Kernel& k, double x) {
  double conv = 0.0;
  if (datum.is_atomic()) {
    conv = conv_phi_M(datum.atoms(), k, x);
  } else {
    // (omega * rho0)(x) = int phi(x - y) M0(y) dy over y in [x - hi, x - lo].
    const Support ks = k.support();
    const Support ms = datum.support();
    const double a = x - ks.hi, b = x - ks.lo;
    // Where M0 = 1 the integral of phi is a difference of omega values.
    const double c = std::clamp(ms.hi, a, b);
    conv = k.omega(x - c) - k.omega(x - b);
    const double lo = std::max(a, ms.lo), hi = std::min(b, ms.hi);
    if (hi > lo) {
      auto f = [&](double y) { return k.phi(x - y) * datum.M0(y); };
      if (x > lo && x < hi) {
        conv += integrate_value(f, lo, x, kQuadTol) + integrate_value(f, x, hi, kQuadTol);
      } else {
        conv += integrate_value(f, lo, hi, kQuadTol);
      }
    }
  }
  return datum.u0(x) + conv;
}

PiecewiseLinearFlux build_flux_from_data(const InitialDatum& datum, std::span<const double> masses,
                                         const Kernel& k, std::size_t grid) {
  const std::size_t n = masses.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "flux needs at least one mass");
  std::vector<double> th(n + 1, 0.0), val(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) th[i + 1] = th[i] + masses[i];

  if (datum.is_atomic()) {
    // psi0 o M0^{-1} is constant on each atom's mass interval.
    const auto& ax = datum.atoms().breakpoints();
    const auto& av = datum.atoms().values();
    std::vector<double> apsi(ax.size());
    for (std::size_t j = 0; j < ax.size(); ++j) apsi[j] = initial_psi(datum, k, ax[j]);
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double lo = th[i], cell = 0.0;
      const double hi = th[i + 1];
      while (lo < hi) {
        while (j + 1 < ax.size() && av[j] <= lo + kThetaTol) ++j;
        const double top = j + 1 < ax.size() ? std::min(hi, av[j]) : hi;
        cell += (top - lo) * apsi[j];
        lo = top;
      }
      val[i + 1] = val[i] + cell;
    }
  } else {
    if (grid == 0) throw Error(ErrorCode::InvalidArgument, "flux grid must be positive");
    for (std::size_t i = 0; i < n; ++i) {
      const double h = masses[i] / static_cast<double>(grid);
      double cell = 0.0;
      for (std::size_t s = 0; s < grid; ++s) {
        const double mid = th[i] + (static_cast<double>(s) + 0.5) * h;
        cell += initial_psi(datum, k, datum.pseudo_inverse(mid));
      }
      val[i + 1] = val[i] + h * cell;
    }
  }
  return PiecewiseLinearFlux(std::move(th), std::move(val));
}

std::vector<double> recover_initial_velocities(std::span<const double> masses,
                                               std::span<const double> positions,
                                               const PiecewiseLinearFlux& A, const Kernel& k) {
  const std::size_t n = masses.size();
  if (positions.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "masses and positions differ in length");
  }
  if (A.segments() != n) {
    throw Error(ErrorCode::GridMismatch, "flux grid has a different number of cells than masses");
  }
  double theta = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    theta += masses[i];
    if (std::abs(A.thetas()[i + 1] - theta) > kThetaTol) {
      std::ostringstream msg;
      msg << "flux node " << i + 1 << " does not match the running mass sum";
      throw Error(ErrorCode::GridMismatch, msg.str());
    }
  }
  std::vector<double> v(n);
  std::vector<double> mass(masses.begin(), masses.end());
  const StepFunction M(std::vector<double>(positions.begin(), positions.end()), mass);
  for (std::size_t i = 0; i < n; ++i) {
    const double psi = (A.values()[i + 1] - A.values()[i]) / masses[i];
    v[i] = psi - conv_phi_M(M, k, positions[i]);
  }
  return v;
}

double flux_interpolation_error(const std::function<double(double)>& A,
                                const PiecewiseLinearFlux& A_N, std::size_t per_cell) {
  const auto& th = A_N.thetas();
  per_cell = std::max<std::size_t>(per_cell, 1) | 1;  // odd count keeps the midpoint
  double err = 0.0;
  for (std::size_t i = 0; i + 1 < th.size(); ++i) {
    err = std::max(err, std::abs(A_N.values()[i] - A(th[i])));
    for (std::size_t s = 1; s <= per_cell; ++s) {
      const double m = th[i] + (th[i + 1] - th[i]) * static_cast<double>(s) /
                                   static_cast<double>(per_cell + 1);
      err = std::max(err, std::abs(A_N(m) - A(m)));
    }
  }
  err = std::max(err, std::abs(A_N.values().back() - A(th.back())));
  return err;
}

double initial_l1_error(const InitialDatum& datum, const StepFunction& M_N) {
  if (datum.is_atomic()) return l1_distance(datum.atoms(), M_N);
  std::vector<double> cuts(M_N.breakpoints());
  cuts.push_back(datum.support().lo);
  cuts.push_back(datum.support().hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double level = M_N(cuts[i]);
    sum += integrate_value([&](double x) { return std::abs(level - datum.M0(x)); }, cuts[i],
                           cuts[i + 1], kQuadTol);
  }
  return sum;
}

DiscreteProblem discretize(const InitialDatum& datum, const Kernel& k, std::size_t n,
                           const MassRule& rule, std::size_t grid) {
  Atomization at = atomize(datum, n, rule);
  PiecewiseLinearFlux A = build_flux_from_data(datum, at.masses, k, grid);
  std::vector<double> v = recover_initial_velocities(at.masses, at.positions, A, k);
  return {ParticleSystem::make(at.positions, std::move(v), at.masses), std::move(A)};
}

}  // namespace narz
