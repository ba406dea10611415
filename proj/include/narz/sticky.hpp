#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "narz/kernel.hpp"

namespace narz {

/// Sticky Cucker-Smale particle state.
///
/// Particles are sorted by position. Clusters are maximal index-contiguous
/// groups sharing one position and one velocity; `cluster_start` holds the
/// first particle index of every cluster in increasing order.
struct ParticleSystem {
  double time = 0.0;
  std::vector<double> x;
  std::vector<double> v;
  std::vector<double> m;
  std::vector<std::size_t> cluster_start;

  /// Validates sizes, positive masses summing to 1 +- 1e-12 and sorted
  /// positions. Adjacent particles with identical position and velocity
  /// start in one cluster; ties with different velocities stay separate
  /// and are merged by the integrator at the initial instant.
  static ParticleSystem make(std::vector<double> x, std::vector<double> v,
                             std::vector<double> m, double time = 0.0);

  std::size_t size() const { return x.size(); }
  std::size_t cluster_count() const { return cluster_start.size(); }

  /// Inclusive particle range [first, last] of cluster c.
  std::pair<std::size_t, std::size_t> cluster_range(std::size_t c) const;

  /// Cluster ordinal containing particle i.
  std::size_t cluster_of(std::size_t i) const;

  double total_mass() const;
};

struct Tolerances {
  double substep = 0.0;      // RK4 substep; <= 0 means horizon / 1e4
  double event_time = 1e-10; // collision-time localization
  double gap = 0.0;          // collision predicate; <= 0 means 1e-12 (1 + R0)
};

/// Generalized velocities psi_i = v_i + sum_j m_j omega(x_i - x_j).
std::vector<double> compute_psi(const ParticleSystem& s, const Kernel& k);

/// a_i = sum_j m_j phi(x_i - x_j) (v_j - v_i).
std::vector<double> acceleration(const ParticleSystem& s, const Kernel& k);

/// Merges the contiguous particle range [first, last] into one cluster at the
/// mass-weighted position with the momentum-conserving velocity, then
/// absorbs neighbouring clusters within gap_tol until all gaps are positive.
/// The range must cover whole clusters; otherwise Error{NonAdjacentMerge}.
ParticleSystem merge_clusters(const ParticleSystem& s, std::span<const std::size_t> colliding,
                              double gap_tol = 0.0);

enum class EventKind { Collision, Snapshot, Horizon };

const char* to_string(EventKind kind);

struct Event {
  EventKind kind = EventKind::Snapshot;
  double time = 0.0;
  /// Particle indices of the resulting cluster (collisions) or empty.
  std::vector<std::size_t> indices;
  /// First particle index of every pre-collision cluster that merged.
  std::vector<std::size_t> merged_from;
  /// psi_j(t-) of every particle in `indices`, evaluated with pre-collision
  /// velocities at the collision position.
  std::vector<double> psi_before;
  double psi_after = 0.0;
  double velocity_after = 0.0;
};

struct StepResult {
  ParticleSystem state;
  /// Either one Snapshot event or one or more Collision events that occur
  /// at the same instant, ordered left to right.
  std::vector<Event> events;
};

/// Advances the smooth flow by RK4 substeps until dt_max elapses or the
/// first collision; collisions are localized by bisection on the gap
/// function and resolved with merge_clusters.
StepResult step_to_next_event(const ParticleSystem& s, const Kernel& k, double dt_max,
                              const Tolerances& tol);

struct TrajectoryState {
  double time = 0.0;
  EventKind kind = EventKind::Snapshot;
  ParticleSystem system;
  std::vector<double> psi;
};

struct Trajectory {
  std::vector<TrajectoryState> states;
  std::vector<Event> events;
};

struct SimulateOptions {
  /// Emit a state after every collision instant (in addition to snapshots).
  bool record_collision_states = true;
};

/// Runs from s0.time to s0.time + horizon. The initial state is always the
/// first entry; snapshot times are absolute and must be sorted.
Trajectory simulate(const ParticleSystem& s0, const Kernel& k, double horizon,
                    std::span<const double> snapshot_times, const Tolerances& tol,
                    const SimulateOptions& options = {});

struct BoundsReport {
  double psi_lo = 0.0;
  double psi_hi = 0.0;
  double vel_lo = 0.0;
  double vel_hi = 0.0;
  double m_tilde = 0.0;
  double r0 = 0.0;

  double radius(double t) const { return r0 + t * m_tilde; }
};

BoundsReport a_priori_bounds(const ParticleSystem& s0, const Kernel& k);

}  // namespace narz
