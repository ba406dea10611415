#include "narz/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "narz/error.hpp"
#include "narz/quadrature.hpp"

namespace narz {
namespace {

constexpr double kPi = std::numbers::pi;

constexpr std::array<FamilyInfo, 5> kFamilies{{
    {"raised_cosine", "symmetric (1/2r)(1+cos(pi x/r)) on [-r, r]"},
    {"quadratic_spline", "symmetric C1 quadratic B-spline on [-r, r]"},
    {"downstream_cosine", "one-sided (1/r)(1-cos(2 pi x/r)) on [-r, 0]; weights traffic ahead"},
    {"upstream_cosine", "one-sided (1/r)(1-cos(2 pi x/r)) on [0, r]; weights traffic behind"},
    {"hat", "symmetric piecewise-linear (1/r)(1-|x|/r) on [-r, r]; Lipschitz only"},
}};

// Quadratic B-spline on [-1.5, 1.5] with unit mass, and its derivative.
double bspline2(double s) {
  const double a = std::abs(s);
  if (a <= 0.5) return 0.75 - s * s;
  if (a <= 1.5) return 0.5 * (1.5 - a) * (1.5 - a);
  return 0.0;
}

double bspline2_prime(double s) {
  const double a = std::abs(s);
  if (a <= 0.5) return -2.0 * s;
  if (a <= 1.5) return (s > 0.0 ? -1.0 : 1.0) * (1.5 - a);
  return 0.0;
}

}  // namespace

std::span<const FamilyInfo> builtin_families() { return kFamilies; }

Kernel Kernel::builtin(std::string_view family, std::span<const double> params) {
  Kernel k;
  if (family == "raised_cosine") {
    k.family_ = KernelFamily::RaisedCosine;
  } else if (family == "quadratic_spline") {
    k.family_ = KernelFamily::QuadraticSpline;
  } else if (family == "downstream_cosine") {
    k.family_ = KernelFamily::DownstreamCosine;
  } else if (family == "upstream_cosine") {
    k.family_ = KernelFamily::UpstreamCosine;
  } else if (family == "hat") {
    k.family_ = KernelFamily::Hat;
  } else {
    throw Error(ErrorCode::UnknownFamily,
                "unknown kernel family '" + std::string(family) + "'");
  }
  if (params.size() != 1) {
    std::ostringstream msg;
    msg << "kernel family '" << family << "' takes exactly one parameter (r), got "
        << params.size();
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
  const double r = params[0];
  if (!(r > 0.0) || !std::isfinite(r)) {
    std::ostringstream msg;
    msg << "kernel support radius must be positive, got " << r;
    throw Error(ErrorCode::NonpositiveSupport, msg.str());
  }
  k.name_ = std::string(family);
  k.params_.assign(params.begin(), params.end());
  k.scale_ = r;

  switch (k.family_) {
    case KernelFamily::RaisedCosine:
      k.support_ = {-r, r};
      k.sup_omega_ = 1.0 / r;
      k.sup_phi_ = kPi / (2.0 * r * r);
      k.l1_phi_ = 2.0 / r;
      k.trig_ = TrigForm{0.5 / r, 0.5 / r, 0.0, kPi / r};
      k.kinks_ = {-r, r};
      break;
    case KernelFamily::QuadraticSpline:
      k.support_ = {-r, r};
      k.sup_omega_ = 1.125 / r;
      k.sup_phi_ = 2.25 / (r * r);
      k.l1_phi_ = 2.25 / r;
      k.kinks_ = {-r, -r / 3.0, r / 3.0, r};
      break;
    case KernelFamily::DownstreamCosine:
    case KernelFamily::UpstreamCosine:
      k.support_ = k.family_ == KernelFamily::DownstreamCosine ? Support{-r, 0.0}
                                                               : Support{0.0, r};
      k.sup_omega_ = 2.0 / r;
      k.sup_phi_ = 2.0 * kPi / (r * r);
      k.l1_phi_ = 4.0 / r;
      k.trig_ = TrigForm{1.0 / r, -1.0 / r, 0.0, 2.0 * kPi / r};
      k.kinks_ = {k.support_.lo, k.support_.hi};
      break;
    case KernelFamily::Hat:
      k.support_ = {-r, r};
      k.sup_omega_ = 1.0 / r;
      k.sup_phi_ = 1.0 / (r * r);
      k.l1_phi_ = 2.0 / r;
      k.kinks_ = {-r, 0.0, r};
      break;
    case KernelFamily::Custom:
      break;
  }
  return k;
}

Kernel Kernel::custom(std::string name, std::function<double(double)> omega,
                      std::function<double(double)> phi, Support support) {
  if (!omega || !phi) {
    throw Error(ErrorCode::InvalidArgument, "custom kernel needs both omega and phi");
  }
  if (!(support.hi > support.lo)) {
    throw Error(ErrorCode::NonpositiveSupport, "custom kernel support must have positive width");
  }
  Kernel k;
  k.family_ = KernelFamily::Custom;
  k.name_ = std::move(name);
  k.support_ = support;
  k.custom_omega_ = std::move(omega);
  k.custom_phi_ = std::move(phi);
  k.kinks_ = {support.lo, support.hi};

  constexpr int kSamples = 20000;
  const double step = support.width() / kSamples;
  for (int i = 0; i <= kSamples; ++i) {
    const double x = support.lo + i * step;
    k.sup_omega_ = std::max(k.sup_omega_, std::abs(k.custom_omega_(x)));
    k.sup_phi_ = std::max(k.sup_phi_, std::abs(k.custom_phi_(x)));
  }
  // Panels keep kinks of |phi| local to one refinement tree.
  const auto& phi_fn = k.custom_phi_;
  for (int p = 0; p < 64; ++p) {
    const double a = support.lo + support.width() * p / 64.0;
    const double b = support.lo + support.width() * (p + 1) / 64.0;
    k.l1_phi_ += integrate_value([&](double x) { return std::abs(phi_fn(x)); }, a, b, 1e-12);
  }
  return k;
}

double Kernel::omega(double x) const {
  if (!support_.contains(x)) return 0.0;
  const double r = scale_;
  switch (family_) {
    case KernelFamily::RaisedCosine:
      return (0.5 / r) * (1.0 + std::cos(kPi * x / r));
    case KernelFamily::QuadraticSpline:
      return (1.5 / r) * bspline2(1.5 * x / r);
    case KernelFamily::DownstreamCosine:
    case KernelFamily::UpstreamCosine:
      return (1.0 / r) * (1.0 - std::cos(2.0 * kPi * x / r));
    case KernelFamily::Hat:
      return (1.0 / r) * (1.0 - std::abs(x) / r);
    case KernelFamily::Custom:
      return custom_omega_(x);
  }
  return 0.0;
}

double Kernel::phi(double x) const {
  if (!support_.contains(x)) return 0.0;
  const double r = scale_;
  switch (family_) {
    case KernelFamily::RaisedCosine:
      return -(kPi / (2.0 * r * r)) * std::sin(kPi * x / r);
    case KernelFamily::QuadraticSpline:
      return (2.25 / (r * r)) * bspline2_prime(1.5 * x / r);
    case KernelFamily::DownstreamCosine:
    case KernelFamily::UpstreamCosine:
      return (2.0 * kPi / (r * r)) * std::sin(2.0 * kPi * x / r);
    case KernelFamily::Hat:
      if (x == 0.0) return 0.0;
      return (x > 0.0 ? -1.0 : 1.0) / (r * r);
    case KernelFamily::Custom:
      return custom_phi_(x);
  }
  return 0.0;
}

ValidationReport validate_hypotheses(const Kernel& k, double quad_tol) {
  if (!(quad_tol > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "quad_tol must be positive");
  }
  ValidationReport report;
  const Support s = k.support();
  const double width = s.width();

  constexpr int kGrid = 4000;
  report.nonnegative = true;
  for (int i = 0; i <= kGrid; ++i) {
    const double x = s.lo + width * i / kGrid;
    const double w = k.omega(x);
    const double p = k.phi(x);
    if (!(w >= 0.0)) report.nonnegative = false;
    report.sup_omega = std::max(report.sup_omega, std::abs(w));
    report.sup_phi = std::max(report.sup_phi, std::abs(p));
  }
  for (double d : {1e-9, 1e-3, 0.5, 2.0, 10.0}) {
    const double off = d * std::max(1.0, width);
    if (k.omega(s.lo - off) != 0.0 || k.omega(s.hi + off) != 0.0) report.nonnegative = false;
  }

  // Sixteen panels so interior kinks only force local refinement.
  constexpr int kPanels = 16;
  double mass = 0.0;
  double l1 = 0.0;
  for (int p = 0; p < kPanels; ++p) {
    const double a = s.lo + width * p / kPanels;
    const double b = s.lo + width * (p + 1) / kPanels;
    mass += integrate_value([&](double x) { return k.omega(x); }, a, b, quad_tol / kPanels);
    l1 += integrate_value([&](double x) { return std::abs(k.phi(x)); }, a, b, quad_tol / kPanels);
  }
  report.mass = mass;
  report.l1_phi = l1;
  report.unit_mass = std::abs(mass - 1.0) <= std::max(quad_tol, 1e-10);

  const double edge_tol = 1e-6 * std::max(1.0, report.sup_omega);
  const double delta = 1e-9 * std::max(1.0, width);
  report.boundary_continuity = std::abs(k.omega(s.lo)) <= edge_tol &&
                               std::abs(k.omega(s.hi)) <= edge_tol &&
                               std::abs(k.omega(s.lo + delta)) <= edge_tol &&
                               std::abs(k.omega(s.hi - delta)) <= edge_tol;

  // omega(x_k) - omega(x_{k-1}) against the integral of phi on each cell.
  constexpr int kCells = 200;
  double mismatch = 0.0;
  for (int c = 1; c <= kCells; ++c) {
    const double a = s.lo + width * (c - 1) / kCells;
    const double b = s.lo + width * c / kCells;
    const double jump = k.omega(b) - k.omega(a);
    const double integral =
        integrate_value([&](double x) { return k.phi(x); }, a, b, quad_tol / kCells);
    mismatch = std::max(mismatch, std::abs(jump - integral));
  }
  report.max_derivative_mismatch = mismatch;
  report.derivative_consistency = mismatch <= std::max(1e-8, 100.0 * quad_tol);
  return report;
}

}  // namespace narz
