#pragma once

#include <vector>

#include "interaction.hpp"
#include "narz/sticky.hpp"

namespace narz::detail {

/// Cluster-level view of a ParticleSystem: one entry per cluster.
struct Clusters {
  std::vector<double> x;
  std::vector<double> v;
  std::vector<double> mass;
  std::vector<std::size_t> start;
  std::size_t particles = 0;

  static Clusters from(const ParticleSystem& s);
  ParticleSystem to_system(const std::vector<double>& particle_mass, double time) const;

  std::size_t size() const { return x.size(); }
  std::size_t last_particle(std::size_t c) const {
    return c + 1 < start.size() ? start[c + 1] - 1 : particles - 1;
  }
};

/// One merged cluster produced by merge_runs.
struct MergeRecord {
  std::size_t cluster = 0;                 // index after merging
  std::vector<std::size_t> from_start;     // constituent first-particle indices
  std::vector<double> from_velocity;       // constituent pre-merge velocities
};

/// Merges runs of clusters flagged in `join` (join[c] joins c and c+1) at
/// the mass-weighted position with momentum-averaged velocity. Runs whose
/// merged positions lie within gap_tol of a neighbour are absorbed
/// transitively.
void merge_runs(Clusters& cl, std::vector<char> join, double gap_tol,
                std::vector<MergeRecord>* records);

/// Event-driven RK4 integrator over cluster state.
class Integrator {
 public:
  Integrator(const ParticleSystem& s, const Kernel& k, const Tolerances& tol, double horizon);

  double time() const { return time_; }
  void set_time(double t) { time_ = t; }
  double gap_tolerance() const { return gap_tol_; }
  double substep() const { return h_; }

  ParticleSystem system() const { return cl_.to_system(particle_mass_, time_); }
  std::vector<double> particle_psi();

  /// Merges adjacent clusters already in contact (gap <= gap tolerance).
  std::vector<Event> resolve_contacts();

  /// Integrates up to time() + dt_max. Returns the collision events if a
  /// collision stopped the step early, otherwise an empty list.
  std::vector<Event> advance(double dt_max);

 private:
  struct State {
    std::vector<double> x;
    std::vector<double> v;
  };

  /// Length of the interaction-free window starting now (0 if none).
  double free_flight_time() const;
  double kink_aligned_step(double tau);
  void rk4(double tau, State& to);
  bool contacts(const State& end, double tau, std::vector<char>* join) const;
  std::vector<Event> apply_merges(const std::vector<char>& join);
  double convolution_at(double x) const;

  Clusters cl_;
  std::vector<double> particle_mass_;
  const Kernel* kernel_;
  InteractionEvaluator eval_;
  double h_ = 0.0;
  double event_tol_ = 0.0;
  double gap_tol_ = 0.0;
  double time_ = 0.0;
  struct KinkDistance {
    double d;      // |kink| of the kernel, nonzero
    double jump0;  // jump of phi across it
    double jump1;  // jump of phi'
  };
  std::vector<KinkDistance> kinks_;
  std::vector<double> acc_;

  State trial_, probe_, stage_;
  std::vector<double> k1x_, k1v_, k2x_, k2v_, k3x_, k3v_, k4x_, k4v_;
};

}  // namespace narz::detail
