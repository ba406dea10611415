#pragma once

#include <functional>
#include <vector>

#include "narz/cumulative.hpp"
#include "narz/discretize.hpp"
#include "narz/sticky.hpp"

namespace narz {

/// Exact integral of |M1 - M2| by sweeping the merged breakpoints. Both
/// functions must share the same total (within 1e-12).
double l1_distance(const StepFunction& M1, const StepFunction& M2);

/// Cumulative distribution function of the rho component.
StepFunction cdf(const AtomicMeasurePair& mu);

/// W1 between the rho components, computed as the L1 distance of CDFs.
double wasserstein1(const AtomicMeasurePair& mu, const AtomicMeasurePair& nu);

struct StabilityInputs {
  double t = 0.0;
  double w1_0 = 0.0;
  double lip_diff = 0.0;
  double sup_phi = 0.0;
  double sup_omega = 0.0;
};

struct StabilityBounds {
  double exp_bound = 0.0;
  double linear_bound = 0.0;
  double min_bound = 0.0;
};

StabilityBounds stability_bounds(const StabilityInputs& in);

/// Max absolute slope difference over the union of both node grids.
double lip_difference(const PiecewiseLinearFlux& A, const PiecewiseLinearFlux& B);

struct TimeModulus {
  double worst_ratio = 0.0;
  double s = 0.0;  // times of the worst pair
  double t = 0.0;
};

/// Max over state pairs s < t of ||M(t) - M(s)||_{L1} / (M~ (t - s)).
TimeModulus time_modulus_check(const Trajectory& traj, const BoundsReport& bounds);

/// Last state of the trajectory recorded at time t (within 1e-12 relative).
const ParticleSystem& state_at(const Trajectory& traj, double t);

struct StudyOptions {
  Tolerances tol;
  std::size_t flux_grid = 4;
  /// Worker cap; 0 reads NARZ_THREADS and falls back to the hardware count.
  unsigned threads = 0;
};

/// Test functions used for the momentum-moment comparison.
std::vector<std::function<double(double)>> moment_battery();

struct ConvergenceRow {
  std::size_t n = 0;
  double t = 0.0;
  double distance = 0.0;       // ||M_N(t) - M_ref(t)||_{L1}
  double bound = 0.0;          // 2 R0 max m at t = 0, NaN otherwise
  double datum_error = 0.0;    // ||M_N(0) - M0||_{L1} at t = 0, NaN otherwise
  double moment_gap = 0.0;     // max over the battery of |<f, P_N> - <f, P_ref>|
};

struct ConvergenceStudy {
  std::size_t n_ref = 0;
  double horizon = 0.0;
  std::vector<ConvergenceRow> rows;  // ordered by N, then t
};

ConvergenceStudy convergence_study(const InitialDatum& datum, const Kernel& k, double horizon,
                                   const std::vector<std::size_t>& ns, std::size_t n_ref,
                                   const StudyOptions& options = {});

struct StabilityRow {
  double t = 0.0;
  double measured = 0.0;
  StabilityBounds bounds;
  double p_moment_drift = 0.0;  // informational
};

struct StabilityReport {
  std::size_t n = 0;
  double w1_0 = 0.0;
  double lip_diff = 0.0;
  double slack = 0.0;  // 1e-6 + 4 / N
  std::vector<StabilityRow> rows;

  bool passed() const;
};

StabilityReport stability_experiment(const InitialDatum& a, const InitialDatum& b, const Kernel& k,
                                     double horizon, std::size_t n,
                                     const std::vector<double>& times,
                                     const StudyOptions& options = {});

/// As above for already discretized systems; the slack uses the smaller N.
StabilityReport stability_experiment(const DiscreteProblem& a, const DiscreteProblem& b,
                                     const Kernel& k, double horizon,
                                     const std::vector<double>& times,
                                     const StudyOptions& options = {});

}  // namespace narz
