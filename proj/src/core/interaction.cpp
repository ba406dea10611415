#include "interaction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace narz::detail {
namespace {

struct Window {
  std::size_t begin;
  std::size_t end;
};

// Clusters d with x[c] - x[d] inside the kernel support. Centres are
// visited in increasing order, so both window edges only move forward.
class WindowSweep {
 public:
  WindowSweep(std::span<const double> x, const Support& s) : x_(x), s_(s) {}
  Window next(double xc) {
    while (begin_ < x_.size() && x_[begin_] < xc - s_.hi) ++begin_;
    end_ = std::max(end_, begin_);
    while (end_ < x_.size() && x_[end_] <= xc - s_.lo) ++end_;
    return {begin_, end_};
  }

 private:
  std::span<const double> x_;
  Support s_;
  std::size_t begin_ = 0;
  std::size_t end_ = 0;
};

// Distinct clusters keep their order; a stage that overlaps a pair by
// rounding still sees phi from the side the pair approaches.
double ordered_offset(double z, std::size_t c, std::size_t d) {
  constexpr double tiny = std::numeric_limits<double>::denorm_min();
  if (c < d) return std::min(z, -tiny);
  return std::max(z, tiny);
}

}  // namespace

void InteractionEvaluator::trig_sums(std::span<const double> x, std::span<const double> v,
                                     std::span<const double> mass, bool with_velocity) {
  const TrigForm& tf = *kernel_->trig_form();
  const std::size_t n = x.size();
  const double centre = 0.5 * (x.front() + x.back());
  const double vref = with_velocity ? v[0] : 0.0;
  cos_.resize(n);
  sin_.resize(n);
  p_m_.assign(n + 1, 0.0);
  p_mc_.assign(n + 1, 0.0);
  p_ms_.assign(n + 1, 0.0);
  if (with_velocity) {
    p_mv_.assign(n + 1, 0.0);
    p_mvc_.assign(n + 1, 0.0);
    p_mvs_.assign(n + 1, 0.0);
  }
  for (std::size_t d = 0; d < n; ++d) {
    const double arg = tf.wavenumber * (x[d] - centre);
    cos_[d] = std::cos(arg);
    sin_[d] = std::sin(arg);
    p_m_[d + 1] = p_m_[d] + mass[d];
    p_mc_[d + 1] = p_mc_[d] + mass[d] * cos_[d];
    p_ms_[d + 1] = p_ms_[d] + mass[d] * sin_[d];
    if (with_velocity) {
      const double mv = mass[d] * (v[d] - vref);
      p_mv_[d + 1] = p_mv_[d] + mv;
      p_mvc_[d + 1] = p_mvc_[d] + mv * cos_[d];
      p_mvs_[d + 1] = p_mvs_[d] + mv * sin_[d];
    }
  }
}

void InteractionEvaluator::convolution(std::span<const double> x, std::span<const double> mass,
                                       std::span<double> out) {
  const std::size_t n = x.size();
  const Kernel& k = *kernel_;
  if (n < kWindowThreshold) {
    for (std::size_t c = 0; c < n; ++c) {
      double acc = 0.0;
      for (std::size_t d = 0; d < n; ++d) acc += mass[d] * k.omega(x[c] - x[d]);
      out[c] = acc;
    }
    return;
  }
  const Support s = k.support();
  if (n >= kTrigThreshold && k.trig_form()) {
    const TrigForm& tf = *k.trig_form();
    trig_sums(x, {}, mass, false);
    WindowSweep sweep(x, s);
    for (std::size_t c = 0; c < n; ++c) {
      const Window w = sweep.next(x[c]);
      const double sm = p_m_[w.end] - p_m_[w.begin];
      const double smc = p_mc_[w.end] - p_mc_[w.begin];
      const double sms = p_ms_[w.end] - p_ms_[w.begin];
      const double mcos = cos_[c] * smc + sin_[c] * sms;
      const double msin = sin_[c] * smc - cos_[c] * sms;
      out[c] = tf.c0 * sm + tf.c1 * mcos + tf.s1 * msin;
    }
    return;
  }
  WindowSweep sweep(x, s);
  for (std::size_t c = 0; c < n; ++c) {
    const Window w = sweep.next(x[c]);
    double acc = 0.0;
    for (std::size_t d = w.begin; d < w.end; ++d) acc += mass[d] * k.omega(x[c] - x[d]);
    out[c] = acc;
  }
}

void InteractionEvaluator::acceleration(std::span<const double> x, std::span<const double> v,
                                        std::span<const double> mass, std::span<double> out) {
  const std::size_t n = x.size();
  const Kernel& k = *kernel_;
  if (n < kWindowThreshold) {
    for (std::size_t c = 0; c < n; ++c) {
      double acc = 0.0;
      for (std::size_t d = 0; d < n; ++d) {
        if (d == c) continue;
        acc += mass[d] * k.phi(ordered_offset(x[c] - x[d], c, d)) * (v[d] - v[c]);
      }
      out[c] = acc;
    }
    return;
  }
  const Support s = k.support();
  if (n >= kTrigThreshold && k.trig_form()) {
    const TrigForm& tf = *k.trig_form();
    trig_sums(x, v, mass, true);
    const double vref = v[0];
    WindowSweep sweep(x, s);
    for (std::size_t c = 0; c < n; ++c) {
      const Window w = sweep.next(x[c]);
      const double smc = p_mc_[w.end] - p_mc_[w.begin];
      const double sms = p_ms_[w.end] - p_ms_[w.begin];
      const double svc = p_mvc_[w.end] - p_mvc_[w.begin];
      const double svs = p_mvs_[w.end] - p_mvs_[w.begin];
      const double mcos = cos_[c] * smc + sin_[c] * sms;
      const double msin = sin_[c] * smc - cos_[c] * sms;
      const double vcos = cos_[c] * svc + sin_[c] * svs;
      const double vsin = sin_[c] * svc - cos_[c] * svs;
      const double sum_phi = tf.wavenumber * (-tf.c1 * msin + tf.s1 * mcos);
      const double sum_phi_v = tf.wavenumber * (-tf.c1 * vsin + tf.s1 * vcos);
      out[c] = sum_phi_v - (v[c] - vref) * sum_phi;
    }
    return;
  }
  WindowSweep sweep(x, s);
  for (std::size_t c = 0; c < n; ++c) {
    const Window w = sweep.next(x[c]);
    double acc = 0.0;
    for (std::size_t d = w.begin; d < w.end; ++d) {
      if (d == c) continue;
      acc += mass[d] * k.phi(ordered_offset(x[c] - x[d], c, d)) * (v[d] - v[c]);
    }
    out[c] = acc;
  }
}

}  // namespace narz::detail
