#pragma once

#include <functional>

namespace narz {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

/// Globally adaptive Gauss-Kronrod (7/15) integral of f over [a, b] to absolute
/// tolerance abs_tol. Throws Error{QuadratureFailure} when the error
/// estimate stays above abs_tol once panels reach max_depth bisections.
QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, double abs_tol, unsigned max_depth = 30);

/// Convenience wrapper returning only the value.
double integrate_value(const std::function<double(double)>& f, double a,
                       double b, double abs_tol);

}  // namespace narz
