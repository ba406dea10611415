#include "narz/cumulative.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "integrator.hpp"
#include "narz/error.hpp"

namespace narz {

StepFunction::StepFunction(std::vector<double> breakpoints, std::vector<double> jumps) {
  if (breakpoints.size() != jumps.size()) {
    throw Error(ErrorCode::InvalidArgument, "breakpoints and jumps differ in length");
  }
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!std::isfinite(breakpoints[i]) || !(jumps[i] >= 0.0) || !std::isfinite(jumps[i])) {
      throw Error(ErrorCode::InvalidArgument, "step function needs finite breakpoints and nonnegative jumps");
    }
    if (i > 0 && breakpoints[i] < breakpoints[i - 1]) {
      throw Error(ErrorCode::InvalidArgument, "breakpoints must be sorted");
    }
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < breakpoints.size(); ++i) {
    if (!breakpoints_.empty() && breakpoints_.back() == breakpoints[i]) {
      jumps_.back() += jumps[i];
    } else {
      breakpoints_.push_back(breakpoints[i]);
      jumps_.push_back(jumps[i]);
    }
    acc += jumps[i];
    if (values_.size() < breakpoints_.size()) {
      values_.push_back(acc);
    } else {
      values_.back() = acc;
    }
  }
}

double StepFunction::operator()(double x) const {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  if (it == breakpoints_.begin()) return 0.0;
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

double StepFunction::left_limit(double x) const {
  const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), x);
  if (it == breakpoints_.begin()) return 0.0;
  return values_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

PiecewiseLinearFlux::PiecewiseLinearFlux(std::vector<double> thetas, std::vector<double> values)
    : thetas_(std::move(thetas)), values_(std::move(values)) {
  if (thetas_.size() != values_.size() || thetas_.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "flux needs matching thetas and values (at least two nodes)");
  }
  for (std::size_t i = 0; i < thetas_.size(); ++i) {
    if (!std::isfinite(thetas_[i]) || !std::isfinite(values_[i])) {
      throw Error(ErrorCode::InvalidArgument, "flux nodes must be finite");
    }
    if (i > 0 && !(thetas_[i] > thetas_[i - 1])) {
      throw Error(ErrorCode::InvalidArgument, "flux thetas must be strictly increasing");
    }
  }
}

PiecewiseLinearFlux PiecewiseLinearFlux::from_slopes(std::span<const double> masses,
                                                     std::span<const double> slopes) {
  if (masses.size() != slopes.size() || masses.empty()) {
    throw Error(ErrorCode::InvalidArgument, "masses and slopes differ in length");
  }
  std::vector<double> th(masses.size() + 1, 0.0), val(masses.size() + 1, 0.0);
  for (std::size_t i = 0; i < masses.size(); ++i) {
    th[i + 1] = th[i] + masses[i];
    val[i + 1] = val[i] + masses[i] * slopes[i];
  }
  return PiecewiseLinearFlux(std::move(th), std::move(val));
}

double PiecewiseLinearFlux::operator()(double m) const {
  if (thetas_.empty()) return 0.0;
  if (m <= thetas_.front()) return values_.front();
  if (m >= thetas_.back()) return values_.back();
  const auto it = std::upper_bound(thetas_.begin(), thetas_.end(), m);
  const std::size_t j = static_cast<std::size_t>(it - thetas_.begin());
  const double w = (m - thetas_[j - 1]) / (thetas_[j] - thetas_[j - 1]);
  return values_[j - 1] + w * (values_[j] - values_[j - 1]);
}

double PiecewiseLinearFlux::slope(std::size_t i) const {
  return (values_.at(i + 1) - values_.at(i)) / (thetas_[i + 1] - thetas_[i]);
}

double PiecewiseLinearFlux::lipschitz() const {
  double lip = 0.0;
  for (std::size_t i = 0; i < segments(); ++i) lip = std::max(lip, std::abs(slope(i)));
  return lip;
}

std::optional<std::size_t> PiecewiseLinearFlux::node_index(double m, double tol) const {
  const auto it = std::lower_bound(thetas_.begin(), thetas_.end(), m - tol);
  if (it != thetas_.end() && std::abs(*it - m) <= tol) {
    return static_cast<std::size_t>(it - thetas_.begin());
  }
  return std::nullopt;
}

double AtomicMeasurePair::rho_mass() const { return std::accumulate(rho.begin(), rho.end(), 0.0); }

double AtomicMeasurePair::p_mass() const { return std::accumulate(p.begin(), p.end(), 0.0); }

double KruzkovPair::q(const PiecewiseLinearFlux& A, double m) const {
  const double d = A(m) - A(alpha);
  if (m > alpha) return d;
  if (m < alpha) return -d;
  return 0.0;
}

namespace {

// (1 - u^2)^3 and its antiderivative from -1, in the scaled variable u.
double bump(double u) {
  if (u <= -1.0 || u >= 1.0) return 0.0;
  const double a = 1.0 - u * u;
  return a * a * a;
}

double bump_prime(double u) {
  if (u <= -1.0 || u >= 1.0) return 0.0;
  const double a = 1.0 - u * u;
  return -6.0 * u * a * a;
}

double bump_integral(double u) {
  u = std::clamp(u, -1.0, 1.0);
  const auto prim = [](double s) {
    const double s2 = s * s;
    return s * (1.0 - s2 * (1.0 - s2 * (0.6 - s2 / 7.0)));
  };
  return prim(u) - prim(-1.0);
}

}  // namespace

double BumpTestFunction::g(double x) const { return bump((x - x_center) / x_halfwidth); }

double BumpTestFunction::g_prime(double x) const {
  return bump_prime((x - x_center) / x_halfwidth) / x_halfwidth;
}

double BumpTestFunction::g_integral(double x) const {
  return x_halfwidth * bump_integral((x - x_center) / x_halfwidth);
}

double BumpTestFunction::h(double t) const { return bump((t - t_center) / t_halfwidth); }

double BumpTestFunction::h_prime(double t) const {
  return bump_prime((t - t_center) / t_halfwidth) / t_halfwidth;
}

StepFunction build_M(const ParticleSystem& s) {
  std::vector<double> bp, jumps;
  bp.reserve(s.cluster_count());
  jumps.reserve(s.cluster_count());
  for (std::size_t c = 0; c < s.cluster_count(); ++c) {
    const auto [first, last] = s.cluster_range(c);
    double mass = 0.0;
    for (std::size_t i = first; i <= last; ++i) mass += s.m[i];
    bp.push_back(s.x[first]);
    jumps.push_back(mass);
  }
  return StepFunction(std::move(bp), std::move(jumps));
}

double conv_phi_M(const StepFunction& M, const Kernel& k, double x) {
  const auto& bp = M.breakpoints();
  const auto& jumps = M.jumps();
  const Support sup = k.support();
  // omega(x - x_j) != 0 only for x - hi <= x_j <= x - lo.
  auto lo = std::lower_bound(bp.begin(), bp.end(), x - sup.hi);
  auto hi = std::upper_bound(bp.begin(), bp.end(), x - sup.lo);
  double sum = 0.0;
  for (auto it = lo; it != hi; ++it) {
    const auto j = static_cast<std::size_t>(it - bp.begin());
    sum += jumps[j] * k.omega(x - bp[j]);
  }
  return sum;
}

double eval_A_of_M(const StepFunction& M, const PiecewiseLinearFlux& A, double x) {
  const double m = M(x);
  const auto node = A.node_index(m, 1e-12 * std::max(1.0, std::abs(m)));
  if (!node) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "M(" << x << ") = " << m << " is not a node of the flux grid";
    throw Error(ErrorCode::GridMismatch, msg.str());
  }
  return A.values()[*node];
}

PiecewiseLinearFlux flux_from_state(const ParticleSystem& s, const Kernel& k) {
  const auto psi = compute_psi(s, k);
  return PiecewiseLinearFlux::from_slopes(s.m, psi);
}

namespace {

struct ClusterView {
  std::vector<double> theta;      // theta[i] = m_1 + ... + m_i, theta[0] = 0
  std::vector<double> psi;        // per cluster v + (phi * M)(x)
  std::vector<double> a_node;     // A(theta[i])
};

ClusterView cluster_view(const ParticleSystem& s, const PiecewiseLinearFlux& A, const Kernel& k) {
  ClusterView cv;
  const std::size_t n = s.size();
  cv.theta.assign(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) cv.theta[i + 1] = cv.theta[i] + s.m[i];
  cv.a_node.resize(n + 1);
  const bool aligned = A.segments() == n;
  for (std::size_t i = 0; i <= n; ++i) cv.a_node[i] = aligned ? A.values()[i] : A(cv.theta[i]);

  detail::Clusters cl = detail::Clusters::from(s);
  std::vector<double> conv(cl.size());
  detail::InteractionEvaluator eval(k);
  eval.convolution(cl.x, cl.mass, conv);
  cv.psi.resize(cl.size());
  for (std::size_t c = 0; c < cl.size(); ++c) cv.psi[c] = cl.v[c] + conv[c];
  return cv;
}

}  // namespace

std::vector<double> check_rankine_hugoniot(const ParticleSystem& s, const PiecewiseLinearFlux& A,
                                           const Kernel& k) {
  const ClusterView cv = cluster_view(s, A, k);
  std::vector<double> out(s.cluster_count());
  for (std::size_t c = 0; c < s.cluster_count(); ++c) {
    const auto [first, last] = s.cluster_range(c);
    const double chord =
        (cv.a_node[last + 1] - cv.a_node[first]) / (cv.theta[last + 1] - cv.theta[first]);
    out[c] = std::abs(cv.psi[c] - chord);
  }
  return out;
}

std::vector<double> check_oleinik(const ParticleSystem& s, const PiecewiseLinearFlux& A,
                                  const Kernel& k) {
  const ClusterView cv = cluster_view(s, A, k);
  std::vector<double> out(s.cluster_count(), std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < s.cluster_count(); ++c) {
    const auto [first, last] = s.cluster_range(c);
    for (std::size_t j = first + 1; j <= last; ++j) {
      const double chord = (cv.a_node[j] - cv.a_node[first]) / (cv.theta[j] - cv.theta[first]);
      out[c] = std::min(out[c], chord - cv.psi[c]);
    }
  }
  return out;
}

namespace {

// Spatial part of the weak entropy form at one instant:
//   h'(t) int eta(M) g dx + h(t) int q(M) g' dx + h(t) sum_c g(X_c) S(X_c) [eta(M)]_c.
double entropy_integrand(const ParticleSystem& s, const PiecewiseLinearFlux& A,
                         const KruzkovPair& pair, const BumpTestFunction& test, double t,
                         detail::InteractionEvaluator& eval) {
  const double ht = test.h(t);
  const double dht = test.h_prime(t);
  if (ht == 0.0 && dht == 0.0) return 0.0;

  detail::Clusters cl = detail::Clusters::from(s);
  std::vector<double> conv(cl.size());
  eval.convolution(cl.x, cl.mass, conv);

  // Plateau values use running particle sums so they coincide with flux nodes.
  double theta = 0.0;
  double prev_eta = pair.eta(0.0);
  double prev_q = pair.q(A, 0.0);
  double prev_G = 0.0;  // int_{-inf}^{X_c} g
  double time_part = 0.0, flux_part = 0.0, source_part = 0.0;
  for (std::size_t c = 0; c < cl.size(); ++c) {
    const double X = cl.x[c];
    const double G = test.g_integral(X);
    const double gX = test.g(X);
    time_part += prev_eta * (G - prev_G);
    flux_part += prev_q * gX;  // int over plateau of g' = g(X) - g(previous X)
    for (std::size_t i = cl.start[c]; i <= cl.last_particle(c); ++i) theta += s.m[i];
    const double eta = pair.eta(theta);
    const double q = pair.q(A, theta);
    flux_part -= q * gX;
    source_part += gX * conv[c] * (eta - prev_eta);
    prev_eta = eta;
    prev_q = q;
    prev_G = G;
  }
  time_part += prev_eta * (test.g_integral(std::numeric_limits<double>::infinity()) - prev_G);
  return dht * time_part + ht * (flux_part + source_part);
}

}  // namespace

EntropyResidual entropy_residual(const Trajectory& traj, const PiecewiseLinearFlux& A,
                                 const Kernel& k, const KruzkovPair& pair,
                                 const BumpTestFunction& test, double tol) {
  const auto& st = traj.states;
  if (st.size() < 3) {
    throw Error(ErrorCode::InsufficientSnapshots, "entropy residual needs at least three states");
  }
  detail::InteractionEvaluator eval(k);
  std::vector<double> f(st.size());
  for (std::size_t i = 0; i < st.size(); ++i) {
    f[i] = entropy_integrand(st[i].system, A, pair, test, st[i].time, eval);
  }

  // Trapezoid rules inside collision-free segments (kinks sit at collisions).
  double fine = 0.0, coarse = 0.0;
  std::size_t seg_begin = 0;
  auto close_segment = [&](std::size_t a, std::size_t b) {
    for (std::size_t i = a; i < b; ++i) fine += 0.5 * (st[i + 1].time - st[i].time) * (f[i] + f[i + 1]);
    std::size_t i = a;
    while (i + 2 <= b) {
      coarse += 0.5 * (st[i + 2].time - st[i].time) * (f[i] + f[i + 2]);
      i += 2;
    }
    if (i < b) coarse += 0.5 * (st[b].time - st[i].time) * (f[i] + f[b]);
  };
  for (std::size_t i = 1; i < st.size(); ++i) {
    if (st[i].kind == EventKind::Collision || i + 1 == st.size()) {
      close_segment(seg_begin, i);
      seg_begin = i;
    }
  }

  EntropyResidual r;
  r.value = fine;
  r.error_estimate = std::abs(fine - coarse) / 3.0;
  if (r.error_estimate > tol) {
    std::ostringstream msg;
    msg << "time quadrature error estimate " << r.error_estimate << " exceeds tolerance " << tol
        << "; add snapshots";
    throw Error(ErrorCode::InsufficientSnapshots, msg.str());
  }
  return r;
}

AtomicMeasurePair build_measure_pair(const ParticleSystem& s) {
  AtomicMeasurePair mp;
  for (std::size_t c = 0; c < s.cluster_count(); ++c) {
    const auto [first, last] = s.cluster_range(c);
    double mass = 0.0, mom = 0.0;
    for (std::size_t i = first; i <= last; ++i) {
      mass += s.m[i];
      mom += s.m[i] * s.v[i];
    }
    mp.x.push_back(s.x[first]);
    mp.rho.push_back(mass);
    mp.p.push_back(mom);
  }
  return mp;
}

double moment(const AtomicMeasurePair& mp, const std::function<double(double)>& f,
              MeasureComponent which) {
  const auto& w = which == MeasureComponent::Rho ? mp.rho : mp.p;
  double sum = 0.0;
  for (std::size_t i = 0; i < mp.x.size(); ++i) sum += w[i] * f(mp.x[i]);
  return sum;
}

}  // namespace narz
