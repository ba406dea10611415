#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace narz {

/// Closed interval outside which the kernel vanishes.
struct Support {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// On its support the kernel equals c0 + c1 cos(k z) + s1 sin(k z).
/// Families with this form admit O(N) windowed interaction sums.
struct TrigForm {
  double c0 = 0.0;
  double c1 = 0.0;
  double s1 = 0.0;
  double wavenumber = 0.0;
};

enum class KernelFamily {
  RaisedCosine,
  QuadraticSpline,
  DownstreamCosine,
  UpstreamCosine,
  Hat,
  Custom,
};

struct FamilyInfo {
  std::string_view name;
  std::string_view description;
};

/// Names and one-line descriptions of the built-in families.
std::span<const FamilyInfo> builtin_families();

/// Convolution kernel omega together with its derivative phi = omega'.
///
/// Built-in families carry closed-form values and exact norms. Custom
/// kernels wrap arbitrary callables; their norms are measured on a dense
/// grid at construction. Kernels are immutable values.
class Kernel {
 public:
  /// Throws Error{UnknownFamily} or Error{NonpositiveSupport}.
  static Kernel builtin(std::string_view family, std::span<const double> params);

  static Kernel custom(std::string name, std::function<double(double)> omega,
                       std::function<double(double)> phi, Support support);

  double omega(double x) const;
  double phi(double x) const;

  const std::string& name() const { return name_; }
  const std::vector<double>& params() const { return params_; }
  KernelFamily family() const { return family_; }
  Support support() const { return support_; }

  double sup_omega() const { return sup_omega_; }
  double sup_phi() const { return sup_phi_; }
  double l1_phi() const { return l1_phi_; }

  const std::optional<TrigForm>& trig_form() const { return trig_; }

  /// Points where phi is not smooth (support ends and interior kinks);
  /// the integrator aligns its steps with pair distances crossing them.
  const std::vector<double>& kinks() const { return kinks_; }

 private:
  Kernel() = default;

  KernelFamily family_ = KernelFamily::Custom;
  std::string name_;
  std::vector<double> params_;
  Support support_;
  double scale_ = 1.0;  // support radius r for built-ins
  double sup_omega_ = 0.0;
  double sup_phi_ = 0.0;
  double l1_phi_ = 0.0;
  std::optional<TrigForm> trig_;
  std::vector<double> kinks_;
  std::function<double(double)> custom_omega_;
  std::function<double(double)> custom_phi_;
};

struct ValidationReport {
  bool nonnegative = false;
  bool unit_mass = false;
  bool boundary_continuity = false;
  bool derivative_consistency = false;

  double mass = 0.0;
  double sup_omega = 0.0;
  double sup_phi = 0.0;
  double l1_phi = 0.0;
  double max_derivative_mismatch = 0.0;

  bool passed() const {
    return nonnegative && unit_mass && boundary_continuity && derivative_consistency;
  }
};

/// Checks the admissibility hypotheses: nonnegativity with compact support,
/// unit mass, vanishing at the support endpoints, and omega(x) - omega(lo)
/// matching the integral of phi. The derivative test is in integral form so
/// kernels with interior kinks pass. Throws Error{QuadratureFailure}.
ValidationReport validate_hypotheses(const Kernel& k, double quad_tol);

}  // namespace narz
