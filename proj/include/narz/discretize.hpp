#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "narz/cumulative.hpp"
#include "narz/kernel.hpp"
#include "narz/sticky.hpp"

namespace narz {

/// Initial cumulative mass M0 together with the initial velocity u0.
///
/// M0 is either atomic (a StepFunction; monotone tables are read as
/// right-continuous step interpolants) or a continuous CDF on a compact
/// interval, optionally with a closed-form quantile function.
class InitialDatum {
 public:
  using Function = std::function<double(double)>;

  static InitialDatum atomic(std::vector<double> positions, std::vector<double> masses, Function u0);
  static InitialDatum table(std::vector<double> xs, std::vector<double> values, Function u0);
  static InitialDatum uniform(double a, double b, Function u0);
  static InitialDatum continuous(Function cdf, double lo, double hi, Function u0,
                                 Function quantile = {});

  bool is_atomic() const { return !cdf_; }
  double M0(double x) const;
  double u0(double x) const { return u0_(x); }
  const StepFunction& atoms() const { return atoms_; }

  /// Interval outside which M0 is 0 (left) or 1 (right).
  Support support() const { return support_; }
  double r0() const { return r0_; }
  /// Overrides the support radius; must cover the support.
  void set_r0(double r0);

  /// inf{x : M0(x) >= m} for m in (0, 1].
  double pseudo_inverse(double m) const;

 private:
  InitialDatum() = default;

  StepFunction atoms_;
  Function cdf_;
  Function quantile_;
  Function u0_;
  Support support_;
  double r0_ = 0.0;
};

/// Mass rule for atomization. Custom masses may declare a decay bound
/// max m_i <= c / N^gamma that is checked at atomization.
struct MassRule {
  std::vector<double> masses;  // empty: uniform 1/N
  std::optional<double> decay_c;
  double decay_gamma = 1.0;
};

struct Atomization {
  std::vector<double> masses;
  std::vector<double> positions;
  std::vector<double> thetas;  // running sums, thetas[0] = 0
};

double pseudo_inverse(const InitialDatum& datum, double m);

/// Throws Error{BadMassRule} on nonpositive masses, sums off 1 by more than
/// 1e-12, length mismatch or a violated decay bound.
Atomization atomize(const InitialDatum& datum, std::size_t n, const MassRule& rule = {});

/// psi0 = u0 + omega * rho0 at x: a finite sum for atomic data, otherwise
/// the quadrature of phi(x - y) M0(y) over the overlap of the supports.
double initial_psi(const InitialDatum& datum, const Kernel& k, double x);

/// A(m) = int_0^m psi0(M0^{-1}(m')) dm' on the theta grid of `masses`. Exact
/// for atomic data; composite midpoint with `grid` subpanels per cell
/// otherwise. A(0) = 0.
PiecewiseLinearFlux build_flux_from_data(const InitialDatum& datum, std::span<const double> masses,
                                         const Kernel& k, std::size_t grid = 4);

/// v_i = psi_i - sum_j m_j omega(x_i - x_j) with psi_i the slopes of A.
/// Throws Error{GridMismatch} unless A's nodes are the running mass sums.
std::vector<double> recover_initial_velocities(std::span<const double> masses,
                                               std::span<const double> positions,
                                               const PiecewiseLinearFlux& A, const Kernel& k);

/// sup |A_N - A| sampled at nodes and `per_cell` interior points per cell
/// (always including the midpoint).
double flux_interpolation_error(const std::function<double(double)>& A,
                                const PiecewiseLinearFlux& A_N, std::size_t per_cell = 16);

/// ||M_N - M0||_{L1}, exact for atomic data and by piecewise quadrature
/// otherwise.
double initial_l1_error(const InitialDatum& datum, const StepFunction& M_N);

struct DiscreteProblem {
  ParticleSystem system;
  PiecewiseLinearFlux flux;
};

/// atomize -> build_flux_from_data -> recover_initial_velocities.
DiscreteProblem discretize(const InitialDatum& datum, const Kernel& k, std::size_t n,
                           const MassRule& rule = {}, std::size_t grid = 4);

}  // namespace narz
