#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "narz/kernel.hpp"
#include "narz/sticky.hpp"

namespace narz {

/// Right-continuous nondecreasing step function sum_i jump_i H(x - x_i).
/// Duplicate breakpoints are collapsed into one with the summed jump.
class StepFunction {
 public:
  StepFunction() = default;
  StepFunction(std::vector<double> breakpoints, std::vector<double> jumps);

  /// Value at x (right-continuous).
  double operator()(double x) const;
  double left_limit(double x) const;
  double total() const { return values_.empty() ? 0.0 : values_.back(); }

  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& jumps() const { return jumps_; }
  /// values()[k] is the plateau value on [x_k, x_{k+1}).
  const std::vector<double>& values() const { return values_; }
  std::size_t size() const { return breakpoints_.size(); }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> jumps_;
  std::vector<double> values_;
};

/// Continuous piecewise-linear function on [0, 1] with nodes
/// 0 = theta_0 < ... < theta_N = 1.
class PiecewiseLinearFlux {
 public:
  PiecewiseLinearFlux() = default;
  PiecewiseLinearFlux(std::vector<double> thetas, std::vector<double> values);

  /// Nodes theta_i = theta_{i-1} + m_i with A(0) = 0 and slope psi_i on
  /// segment i.
  static PiecewiseLinearFlux from_slopes(std::span<const double> masses,
                                         std::span<const double> slopes);

  /// Linear interpolation; arguments are clamped to [0, 1].
  double operator()(double m) const;

  const std::vector<double>& thetas() const { return thetas_; }
  const std::vector<double>& values() const { return values_; }
  std::size_t segments() const { return thetas_.empty() ? 0 : thetas_.size() - 1; }
  double slope(std::size_t i) const;
  double lipschitz() const;

  /// Node index whose theta lies within tol of m, if any.
  std::optional<std::size_t> node_index(double m, double tol = 1e-12) const;

 private:
  std::vector<double> thetas_;
  std::vector<double> values_;
};

/// rho_N = sum m_i delta_{x_i} and P_N = sum m_i v_i delta_{x_i}; clusters
/// contribute one atom each.
struct AtomicMeasurePair {
  std::vector<double> x;
  std::vector<double> rho;
  std::vector<double> p;

  double rho_mass() const;
  double p_mass() const;
};

/// Kruzkov entropy |m - alpha| and flux sgn(m - alpha)(A(m) - A(alpha)).
struct KruzkovPair {
  double alpha = 0.5;

  double eta(double m) const { return std::abs(m - alpha); }
  double q(const PiecewiseLinearFlux& A, double m) const;
};

/// Product test function g(x) h(t) with C2 polynomial bumps
/// (1 - u^2)^3 in each variable.
struct BumpTestFunction {
  double x_center = 0.0;
  double x_halfwidth = 1.0;
  double t_center = 0.5;
  double t_halfwidth = 0.5;

  double g(double x) const;
  double g_prime(double x) const;
  /// Antiderivative of g vanishing at -infinity.
  double g_integral(double x) const;
  double h(double t) const;
  double h_prime(double t) const;
};

StepFunction build_M(const ParticleSystem& s);

/// (phi * M)(x) = sum_j m_j omega(x - x_j), evaluated as a finite sum.
double conv_phi_M(const StepFunction& M, const Kernel& k, double x);

/// A(M(x)); plateau values of M must be nodes of A (Error{GridMismatch}).
double eval_A_of_M(const StepFunction& M, const PiecewiseLinearFlux& A, double x);

/// Flux whose slopes are the psi values of the given (initial) state.
PiecewiseLinearFlux flux_from_state(const ParticleSystem& s, const Kernel& k);

/// Per-cluster |v + (phi * M)(x) - chord slope of A over the cluster range|.
std::vector<double> check_rankine_hugoniot(const ParticleSystem& s, const PiecewiseLinearFlux& A,
                                           const Kernel& k);

/// Per-cluster minimum over interior nodes of (chord slope from the left
/// end) - (v + (phi * M)(x)). Singletons report +infinity.
std::vector<double> check_oleinik(const ParticleSystem& s, const PiecewiseLinearFlux& A,
                                  const Kernel& k);

struct EntropyResidual {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Weak-form Kruzkov residual over the trajectory's time span. Spatial
/// integrals are exact plateau by plateau; the time integral is a composite
/// trapezoid over the states, with a Richardson estimate from the
/// every-other-state rule inside collision-free segments. Throws
/// Error{InsufficientSnapshots} when the estimate exceeds tol.
EntropyResidual entropy_residual(const Trajectory& traj, const PiecewiseLinearFlux& A,
                                 const Kernel& k, const KruzkovPair& pair,
                                 const BumpTestFunction& test,
                                 double tol = std::numeric_limits<double>::infinity());

AtomicMeasurePair build_measure_pair(const ParticleSystem& s);

enum class MeasureComponent { Rho, P };

double moment(const AtomicMeasurePair& mp, const std::function<double(double)>& f,
              MeasureComponent which);

}  // namespace narz
