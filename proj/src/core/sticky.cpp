#include "narz/sticky.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "integrator.hpp"
#include "narz/error.hpp"

namespace narz {

ParticleSystem ParticleSystem::make(std::vector<double> x, std::vector<double> v,
                                    std::vector<double> m, double time) {
  const std::size_t n = x.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "particle system needs at least one particle");
  if (v.size() != n || m.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "positions, velocities and masses differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(v[i]) || !std::isfinite(m[i])) {
      throw Error(ErrorCode::InvalidArgument, "particle data must be finite");
    }
    if (!(m[i] > 0.0)) {
      std::ostringstream msg;
      msg << "mass of particle " << i << " is not positive (" << m[i] << ")";
      throw Error(ErrorCode::InvalidArgument, msg.str());
    }
    if (i > 0 && x[i] < x[i - 1]) {
      std::ostringstream msg;
      msg << "positions must be sorted; x[" << i << "] < x[" << i - 1 << "]";
      throw Error(ErrorCode::InvalidArgument, msg.str());
    }
    total += m[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "masses must sum to 1 (got " << total << ")";
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
  ParticleSystem s;
  s.time = time;
  s.cluster_start.push_back(0);
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] != x[i - 1] || v[i] != v[i - 1]) s.cluster_start.push_back(i);
  }
  s.x = std::move(x);
  s.v = std::move(v);
  s.m = std::move(m);
  return s;
}

std::pair<std::size_t, std::size_t> ParticleSystem::cluster_range(std::size_t c) const {
  const std::size_t first = cluster_start.at(c);
  const std::size_t last = c + 1 < cluster_start.size() ? cluster_start[c + 1] - 1 : size() - 1;
  return {first, last};
}

std::size_t ParticleSystem::cluster_of(std::size_t i) const {
  const auto it = std::upper_bound(cluster_start.begin(), cluster_start.end(), i);
  return static_cast<std::size_t>(it - cluster_start.begin()) - 1;
}

double ParticleSystem::total_mass() const { return std::accumulate(m.begin(), m.end(), 0.0); }

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Collision: return "collision";
    case EventKind::Snapshot: return "snapshot";
    case EventKind::Horizon: return "horizon";
  }
  return "unknown";
}

std::vector<double> compute_psi(const ParticleSystem& s, const Kernel& k) {
  detail::Clusters cl = detail::Clusters::from(s);
  std::vector<double> conv(cl.size());
  detail::InteractionEvaluator eval(k);
  eval.convolution(cl.x, cl.mass, conv);
  std::vector<double> psi(s.size());
  for (std::size_t c = 0; c < cl.size(); ++c) {
    const auto [first, last] = s.cluster_range(c);
    for (std::size_t i = first; i <= last; ++i) psi[i] = s.v[i] + conv[c];
  }
  return psi;
}

std::vector<double> acceleration(const ParticleSystem& s, const Kernel& k) {
  detail::Clusters cl = detail::Clusters::from(s);
  std::vector<double> acc(cl.size());
  detail::InteractionEvaluator eval(k);
  eval.acceleration(cl.x, cl.v, cl.mass, acc);
  std::vector<double> out(s.size());
  for (std::size_t c = 0; c < cl.size(); ++c) {
    const auto [first, last] = s.cluster_range(c);
    for (std::size_t i = first; i <= last; ++i) out[i] = acc[c];
  }
  return out;
}

ParticleSystem merge_clusters(const ParticleSystem& s, std::span<const std::size_t> colliding,
                              double gap_tol) {
  if (colliding.empty()) return s;
  for (std::size_t j = 0; j < colliding.size(); ++j) {
    if (colliding[j] >= s.size()) {
      throw Error(ErrorCode::InvalidArgument, "merge index out of range");
    }
    if (j > 0 && colliding[j] != colliding[j - 1] + 1) {
      throw Error(ErrorCode::NonAdjacentMerge, "merge indices must be contiguous and increasing");
    }
  }
  detail::Clusters cl = detail::Clusters::from(s);
  const std::size_t c_first = s.cluster_of(colliding.front());
  const std::size_t c_last = s.cluster_of(colliding.back());
  std::vector<char> join(cl.size() > 0 ? cl.size() - 1 : 0, 0);
  for (std::size_t c = c_first; c < c_last; ++c) join[c] = 1;
  detail::merge_runs(cl, join, std::max(gap_tol, 0.0), nullptr);
  return cl.to_system(s.m, s.time);
}

StepResult step_to_next_event(const ParticleSystem& s, const Kernel& k, double dt_max,
                              const Tolerances& tol) {
  if (!(dt_max > 0.0)) throw Error(ErrorCode::InvalidArgument, "dt_max must be positive");
  detail::Integrator integ(s, k, tol, dt_max);
  StepResult result;
  std::vector<Event> events = integ.resolve_contacts();
  if (events.empty()) events = integ.advance(dt_max);
  if (events.empty()) {
    Event snap;
    snap.kind = EventKind::Snapshot;
    snap.time = integ.time();
    events.push_back(std::move(snap));
  }
  result.state = integ.system();
  result.events = std::move(events);
  return result;
}

Trajectory simulate(const ParticleSystem& s0, const Kernel& k, double horizon,
                    std::span<const double> snapshot_times, const Tolerances& tol,
                    const SimulateOptions& options) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  const double t0 = s0.time;
  const double t_end = t0 + horizon;
  // Times past the end by rounding only (e.g. horizon * n / n) are clamped.
  const double slack = 1e-12 * std::max(1.0, std::abs(t_end));
  std::vector<double> snapshots(snapshot_times.begin(), snapshot_times.end());
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    if (snapshots[i] > t_end && snapshots[i] <= t_end + slack) snapshots[i] = t_end;
    const double t = snapshots[i];
    if (t < t0 || t > t_end || (i > 0 && t < snapshots[i - 1])) {
      throw Error(ErrorCode::InvalidArgument,
                  "snapshot times must be sorted and inside [t0, t0 + horizon]");
    }
  }

  detail::Integrator integ(s0, k, tol, horizon);
  Trajectory traj;
  auto emit = [&](EventKind kind) {
    TrajectoryState st;
    st.time = integ.time();
    st.kind = kind;
    st.system = integ.system();
    st.psi = integ.particle_psi();
    traj.states.push_back(std::move(st));
  };

  emit(EventKind::Snapshot);
  std::vector<Event> initial = integ.resolve_contacts();
  if (!initial.empty()) {
    for (auto& e : initial) traj.events.push_back(std::move(e));
    if (options.record_collision_states) emit(EventKind::Collision);
  }

  std::vector<double> targets;
  for (double t : snapshots) {
    if (t > t0 && (targets.empty() || t > targets.back())) targets.push_back(t);
  }
  const bool horizon_is_snapshot = !targets.empty() && targets.back() == t_end;
  if (!horizon_is_snapshot) targets.push_back(t_end);

  for (std::size_t j = 0; j < targets.size(); ++j) {
    const double target = targets[j];
    while (integ.time() < target) {
      std::vector<Event> events = integ.advance(target - integ.time());
      if (events.empty()) break;
      for (auto& e : events) traj.events.push_back(std::move(e));
      if (options.record_collision_states) emit(EventKind::Collision);
    }
    integ.set_time(target);
    const bool last = j + 1 == targets.size();
    emit(last && !horizon_is_snapshot ? EventKind::Horizon : EventKind::Snapshot);
  }
  return traj;
}

BoundsReport a_priori_bounds(const ParticleSystem& s0, const Kernel& k) {
  const std::vector<double> psi = compute_psi(s0, k);
  BoundsReport b;
  const auto [lo, hi] = std::minmax_element(psi.begin(), psi.end());
  b.psi_lo = *lo;
  b.psi_hi = *hi;
  b.vel_lo = b.psi_lo - k.sup_omega();
  b.vel_hi = b.psi_hi;
  b.m_tilde = std::max(std::abs(b.vel_lo), std::abs(b.psi_hi));
  for (double xi : s0.x) b.r0 = std::max(b.r0, std::abs(xi));
  return b;
}

}  // namespace narz
