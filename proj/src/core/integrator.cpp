#include "integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "narz/error.hpp"

namespace narz::detail {

Clusters Clusters::from(const ParticleSystem& s) {
  Clusters cl;
  cl.particles = s.size();
  const std::size_t n = s.cluster_count();
  cl.x.resize(n);
  cl.v.resize(n);
  cl.mass.assign(n, 0.0);
  cl.start = s.cluster_start;
  for (std::size_t c = 0; c < n; ++c) {
    const auto [first, last] = s.cluster_range(c);
    cl.x[c] = s.x[first];
    cl.v[c] = s.v[first];
    for (std::size_t i = first; i <= last; ++i) cl.mass[c] += s.m[i];
  }
  return cl;
}

ParticleSystem Clusters::to_system(const std::vector<double>& particle_mass, double time) const {
  ParticleSystem s;
  s.time = time;
  s.m = particle_mass;
  s.x.resize(particles);
  s.v.resize(particles);
  s.cluster_start = start;
  for (std::size_t c = 0; c < size(); ++c) {
    for (std::size_t i = start[c]; i <= last_particle(c); ++i) {
      s.x[i] = x[c];
      s.v[i] = v[c];
    }
  }
  return s;
}

void merge_runs(Clusters& cl, std::vector<char> join, double gap_tol,
                std::vector<MergeRecord>* records) {
  const std::size_t n = cl.size();
  if (n < 2) return;
  join.resize(n - 1, 0);

  struct Run {
    std::size_t first;
    std::size_t last;
    double mass;
    double x;
    double momentum;
  };
  std::vector<Run> runs;
  auto build_runs = [&] {
    runs.clear();
    std::size_t c = 0;
    while (c < n) {
      Run r{c, c, 0.0, 0.0, 0.0};
      while (r.last + 1 < n && join[r.last]) ++r.last;
      double mx = 0.0;
      for (std::size_t d = r.first; d <= r.last; ++d) {
        r.mass += cl.mass[d];
        mx += cl.mass[d] * cl.x[d];
        r.momentum += cl.mass[d] * cl.v[d];
      }
      r.x = r.first == r.last ? cl.x[r.first] : mx / r.mass;
      runs.push_back(r);
      c = r.last + 1;
    }
  };

  // Absorb neighbours that the merged positions bring into contact.
  for (;;) {
    build_runs();
    bool changed = false;
    for (std::size_t r = 0; r + 1 < runs.size(); ++r) {
      if (runs[r + 1].x - runs[r].x <= gap_tol) {
        join[runs[r].last] = 1;
        changed = true;
      }
    }
    if (!changed) break;
  }

  Clusters out;
  out.particles = cl.particles;
  for (const Run& r : runs) {
    const std::size_t idx = out.x.size();
    out.start.push_back(cl.start[r.first]);
    out.mass.push_back(r.mass);
    if (r.first == r.last) {
      out.x.push_back(cl.x[r.first]);
      out.v.push_back(cl.v[r.first]);
      continue;
    }
    out.x.push_back(r.x);
    out.v.push_back(r.momentum / r.mass);
    if (records) {
      MergeRecord rec;
      rec.cluster = idx;
      for (std::size_t d = r.first; d <= r.last; ++d) {
        rec.from_start.push_back(cl.start[d]);
        rec.from_velocity.push_back(cl.v[d]);
      }
      records->push_back(std::move(rec));
    }
  }
  // Snapped positions stay inside the convex hull of each run, so the
  // order is preserved; enforce it against rounding anyway.
  for (std::size_t c = 1; c < out.size(); ++c) out.x[c] = std::max(out.x[c], out.x[c - 1]);
  cl = std::move(out);
}

Integrator::Integrator(const ParticleSystem& s, const Kernel& k, const Tolerances& tol,
                       double horizon)
    : cl_(Clusters::from(s)), particle_mass_(s.m), kernel_(&k), eval_(k), time_(s.time) {
  h_ = tol.substep > 0.0 ? tol.substep : horizon / 1e4;
  event_tol_ = tol.event_time > 0.0 ? tol.event_time : 1e-10;
  double r0 = 0.0;
  for (double xi : s.x) r0 = std::max(r0, std::abs(xi));
  gap_tol_ = tol.gap > 0.0 ? tol.gap : 1e-12 * (1.0 + r0);
  std::vector<double> dist;
  for (double z : k.kinks()) {
    if (z != 0.0) dist.push_back(std::abs(z));
  }
  std::sort(dist.begin(), dist.end());
  dist.erase(std::unique(dist.begin(), dist.end()), dist.end());
  // One-sided differences on both sides of +-d measure the jumps.
  for (double d : dist) {
    const double delta = 1e-7 * d;
    KinkDistance kd{d, 0.0, 0.0};
    for (double z : {-d, d}) {
      kd.jump0 = std::max(kd.jump0, std::abs(k.phi(z + delta) - k.phi(z - delta)));
      const double right = (k.phi(z + 2.0 * delta) - k.phi(z + delta)) / delta;
      const double left = (k.phi(z - delta) - k.phi(z - 2.0 * delta)) / delta;
      kd.jump1 = std::max(kd.jump1, std::abs(right - left));
    }
    kinks_.push_back(kd);
  }
  if (!(h_ > 0.0) || !std::isfinite(h_)) {
    throw Error(ErrorCode::InvalidArgument, "integrator substep must be positive");
  }
}

std::vector<double> Integrator::particle_psi() {
  std::vector<double> conv(cl_.size());
  eval_.convolution(cl_.x, cl_.mass, conv);
  std::vector<double> psi(cl_.particles);
  for (std::size_t c = 0; c < cl_.size(); ++c) {
    for (std::size_t i = cl_.start[c]; i <= cl_.last_particle(c); ++i) psi[i] = cl_.v[c] + conv[c];
  }
  return psi;
}

void Integrator::rk4(double tau, State& to) {
  const std::size_t n = cl_.size();
  for (auto* buf : {&k1x_, &k1v_, &k2x_, &k2v_, &k3x_, &k3v_, &k4x_, &k4v_}) buf->resize(n);
  stage_.x.resize(n);
  stage_.v.resize(n);
  to.x.resize(n);
  to.v.resize(n);
  const auto& x0 = cl_.x;
  const auto& v0 = cl_.v;

  k1x_ = v0;
  eval_.acceleration(x0, v0, cl_.mass, k1v_);
  for (std::size_t c = 0; c < n; ++c) {
    stage_.x[c] = x0[c] + 0.5 * tau * k1x_[c];
    stage_.v[c] = v0[c] + 0.5 * tau * k1v_[c];
  }
  k2x_ = stage_.v;
  eval_.acceleration(stage_.x, stage_.v, cl_.mass, k2v_);
  for (std::size_t c = 0; c < n; ++c) {
    stage_.x[c] = x0[c] + 0.5 * tau * k2x_[c];
    stage_.v[c] = v0[c] + 0.5 * tau * k2v_[c];
  }
  k3x_ = stage_.v;
  eval_.acceleration(stage_.x, stage_.v, cl_.mass, k3v_);
  for (std::size_t c = 0; c < n; ++c) {
    stage_.x[c] = x0[c] + tau * k3x_[c];
    stage_.v[c] = v0[c] + tau * k3v_[c];
  }
  k4x_ = stage_.v;
  eval_.acceleration(stage_.x, stage_.v, cl_.mass, k4v_);
  const double w = tau / 6.0;
  for (std::size_t c = 0; c < n; ++c) {
    to.x[c] = x0[c] + w * (k1x_[c] + 2.0 * k2x_[c] + 2.0 * k3x_[c] + k4x_[c]);
    to.v[c] = v0[c] + w * (k1v_[c] + 2.0 * k2v_[c] + 2.0 * k3v_[c] + k4v_[c]);
  }
}

namespace {

// Minimum over s in [0, 1] of the cubic Hermite interpolant of a gap with
// end values g0, g1 and scaled end slopes m0, m1, restricted to interior
// turning points.
double hermite_interior_min(double g0, double g1, double m0, double m1) {
  const double a = 6.0 * g0 + 3.0 * m0 - 6.0 * g1 + 3.0 * m1;
  const double b = -6.0 * g0 - 4.0 * m0 + 6.0 * g1 - 2.0 * m1;
  const double c = m0;
  auto value = [&](double s) {
    const double s2 = s * s;
    const double s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * g0 + (s3 - 2 * s2 + s) * m0 + (-2 * s3 + 3 * s2) * g1 +
           (s3 - s2) * m1;
  };
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](double s) {
    if (s > 0.0 && s < 1.0) best = std::min(best, value(s));
  };
  if (std::abs(a) < 1e-300) {
    if (std::abs(b) > 0.0) consider(-c / b);
    return best;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return best;
  const double sq = std::sqrt(disc);
  consider((-b - sq) / (2.0 * a));
  consider((-b + sq) / (2.0 * a));
  return best;
}

}  // namespace

bool Integrator::contacts(const State& end, double tau, std::vector<char>* join) const {
  const std::size_t n = cl_.size();
  bool any = false;
  if (join) join->assign(n > 0 ? n - 1 : 0, 0);
  for (std::size_t c = 0; c + 1 < n; ++c) {
    const double g1 = end.x[c + 1] - end.x[c];
    bool hit = g1 <= gap_tol_;
    if (!hit) {
      const double d0 = cl_.v[c + 1] - cl_.v[c];
      const double d1 = end.v[c + 1] - end.v[c];
      // Approaching then separating inside the step: check for a dip.
      if (d0 < 0.0 && d1 > 0.0) {
        const double g0 = cl_.x[c + 1] - cl_.x[c];
        hit = hermite_interior_min(g0, g1, tau * d0, tau * d1) <= gap_tol_;
      }
    }
    if (hit) {
      any = true;
      if (!join) return true;
      (*join)[c] = 1;
    }
  }
  return any;
}

double Integrator::convolution_at(double x) const {
  const Support s = kernel_->support();
  const auto first = std::lower_bound(cl_.x.begin(), cl_.x.end(), x - s.hi);
  const auto last = std::upper_bound(first, cl_.x.end(), x - s.lo);
  double acc = 0.0;
  for (auto it = first; it != last; ++it) {
    const auto d = static_cast<std::size_t>(it - cl_.x.begin());
    acc += cl_.mass[d] * kernel_->omega(x - cl_.x[d]);
  }
  return acc;
}

std::vector<Event> Integrator::apply_merges(const std::vector<char>& join) {
  std::vector<MergeRecord> records;
  merge_runs(cl_, join, gap_tol_, &records);
  std::vector<Event> events;
  events.reserve(records.size());
  for (const MergeRecord& rec : records) {
    const std::size_t c = rec.cluster;
    const double conv = convolution_at(cl_.x[c]);
    Event e;
    e.kind = EventKind::Collision;
    e.time = time_;
    e.merged_from = rec.from_start;
    for (std::size_t i = cl_.start[c]; i <= cl_.last_particle(c); ++i) e.indices.push_back(i);
    for (std::size_t j = 0; j < rec.from_start.size(); ++j) {
      const std::size_t end =
          j + 1 < rec.from_start.size() ? rec.from_start[j + 1] : cl_.last_particle(c) + 1;
      for (std::size_t i = rec.from_start[j]; i < end; ++i) {
        e.psi_before.push_back(rec.from_velocity[j] + conv);
      }
    }
    e.velocity_after = cl_.v[c];
    e.psi_after = cl_.v[c] + conv;
    events.push_back(std::move(e));
  }
  return events;
}

std::vector<Event> Integrator::resolve_contacts() {
  std::vector<char> join(cl_.size() > 0 ? cl_.size() - 1 : 0, 0);
  bool any = false;
  for (std::size_t c = 0; c + 1 < cl_.size(); ++c) {
    if (cl_.x[c + 1] - cl_.x[c] <= gap_tol_) {
      join[c] = 1;
      any = true;
    }
  }
  if (!any) return {};
  return apply_merges(join);
}

// Clusters move in straight lines while every adjacent pair with different
// velocities stays farther apart than the kernel reach: then no pair with
// v_j != v_i interacts and all accelerations vanish identically.
double Integrator::free_flight_time() const {
  const Support sup = kernel_->support();
  const double reach = std::max(-sup.lo, sup.hi);
  double tau = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c + 1 < cl_.size(); ++c) {
    const double dv = cl_.v[c + 1] - cl_.v[c];
    if (dv == 0.0) continue;
    const double excess = cl_.x[c + 1] - cl_.x[c] - reach;
    if (!(excess > 0.0)) return 0.0;
    if (dv < 0.0) tau = std::min(tau, excess / -dv);
  }
  return tau;
}

// Length of the next step given a proposed `tau`. RK4 loses its order when
// a pair distance x_j - x_i crosses a kink distance of the kernel inside a
// step, and for kernels whose phi jumps there a stage evaluated on the wrong
// side costs O(tau). Crossings whose estimated error
// max(m) (|[phi]| |dv| tau + |[phi']| dv^2 tau^2) is negligible are left
// alone; for the others, crossings are predicted from the current positions,
// velocities and accelerations, steps end just short of the crossing, and a
// step of 2 eta carries the state across it.
double Integrator::kink_aligned_step(double tau) {
  const std::size_t n = cl_.size();
  if (n < 2 || kinks_.empty()) return tau;
  const auto [vmin, vmax] = std::minmax_element(cl_.v.begin(), cl_.v.end());
  const double spread = (*vmax - *vmin) * tau;
  if (!(spread > 0.0)) return tau;
  const double eta = 1e-6 * tau;
  double best = std::numeric_limits<double>::infinity();
  bool have_acc = false;
  constexpr double kNegligible = 1e-14;
  for (const KinkDistance& kd : kinks_) {
    const double d = kd.d;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double lo = cl_.x[i] + d - 2.0 * spread;
      const double hi = cl_.x[i] + d + 2.0 * spread;
      auto j = std::lower_bound(cl_.x.begin() + static_cast<std::ptrdiff_t>(i) + 1, cl_.x.end(), lo);
      for (; j != cl_.x.end() && *j <= hi; ++j) {
        const std::size_t jj = static_cast<std::size_t>(j - cl_.x.begin());
        const double dv = cl_.v[jj] - cl_.v[i];
        if (dv == 0.0) continue;
        const double adv = std::abs(dv) * tau;
        if (std::max(cl_.mass[i], cl_.mass[jj]) * (kd.jump0 * adv + kd.jump1 * adv * adv) <=
            kNegligible) {
          continue;
        }
        if (!have_acc) {
          acc_.resize(n);
          eval_.acceleration(cl_.x, cl_.v, cl_.mass, acc_);
          have_acc = true;
        }
        // Smallest positive root of g0 - d + dv t + da t^2 / 2.
        const double c0 = (*j - cl_.x[i]) - d;
        const double da = acc_[jj] - acc_[i];
        double t = -c0 / dv;
        const double disc = dv * dv - 2.0 * da * c0;
        if (std::abs(da * t) > 1e-12 * std::abs(dv) && disc >= 0.0) {
          const double q = -0.5 * (dv + std::copysign(std::sqrt(disc), dv));
          const double r1 = q / (0.5 * da), r2 = c0 / q;
          t = std::numeric_limits<double>::infinity();
          for (double r : {r1, r2}) {
            if (r > 0.0 && r < t) t = r;
          }
        }
        if (t > 0.0 && t < best) best = t;
      }
    }
  }
  if (!(best < tau + eta)) return tau;
  if (best - eta > eta) return std::min(tau, best - eta);
  return best + eta;
}

std::vector<Event> Integrator::advance(double dt_max) {
  const double t_target = time_ + dt_max;
  for (;;) {
    const double remaining = t_target - time_;
    if (!(remaining > 0.0)) {
      time_ = t_target;
      return {};
    }
    if (const double free = free_flight_time(); free > 0.0) {
      const double jump = std::min(free, remaining);
      for (std::size_t c = 0; c < cl_.size(); ++c) cl_.x[c] += cl_.v[c] * jump;
      time_ = jump == remaining ? t_target : time_ + jump;
      continue;
    }
    double step = std::min(h_, remaining);
    if (remaining - step < 1e-9 * h_) step = remaining;
    step = kink_aligned_step(step);

    rk4(step, trial_);
    for (std::size_t c = 0; c < cl_.size(); ++c) {
      if (!std::isfinite(trial_.x[c]) || !std::isfinite(trial_.v[c])) {
        std::ostringstream msg;
        msg << "non-finite state at t = " << time_ << "; substep " << step;
        throw Error(ErrorCode::StepSizeUnderflow, msg.str());
      }
    }
    if (!contacts(trial_, step, nullptr)) {
      cl_.x.swap(trial_.x);
      cl_.v.swap(trial_.v);
      time_ = step == remaining ? t_target : time_ + step;
      continue;
    }

    // Bisection on the contact predicate over [0, step].
    double lo = 0.0;
    double hi = step;
    while (hi - lo > event_tol_) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      rk4(mid, probe_);
      if (contacts(probe_, mid, nullptr)) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    std::vector<char> join;
    rk4(hi, trial_);
    if (!contacts(trial_, hi, &join)) {
      std::ostringstream msg;
      msg << "collision localization failed near t = " << time_ + hi;
      throw Error(ErrorCode::StepSizeUnderflow, msg.str());
    }
    double tau = hi;

    // Illinois regula falsi on the closest pair's gap shrinks the overlap
    // that the merge snaps away from ~|dv| event_tol to ~gap_tol.
    auto closest = [&](const State& st, const std::vector<char>& flags) {
      std::size_t best = cl_.size();
      double g = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < flags.size(); ++c) {
        if (flags[c] && st.x[c + 1] - st.x[c] < g) {
          g = st.x[c + 1] - st.x[c];
          best = c;
        }
      }
      return std::pair{best, g};
    };
    auto [pair, g_hi] = closest(trial_, join);
    if (pair < cl_.size() && g_hi < -gap_tol_) {
      State at_lo{cl_.x, cl_.v};
      if (lo > 0.0) rk4(lo, at_lo);
      double a = lo, b = hi;
      double g_a = at_lo.x[pair + 1] - at_lo.x[pair];
      double g_b = g_hi;
      int last_side = 0;
      std::vector<char> join_root;
      for (int it = 0; it < 100 && g_b < -gap_tol_ && g_a > gap_tol_; ++it) {
        double root = a + (b - a) * g_a / (g_a - g_b);
        if (!(root > a && root < b)) root = 0.5 * (a + b);
        if (!(root > a && root < b)) break;
        rk4(root, probe_);
        if (contacts(probe_, root, &join_root)) {
          b = root;
          tau = root;
          join.swap(join_root);
          trial_.x.swap(probe_.x);
          trial_.v.swap(probe_.v);
          const auto [p, g] = closest(trial_, join);
          if (p != pair) {
            // Another pair touched first; follow it from here.
            pair = p;
            g_a = at_lo.x[pair + 1] - at_lo.x[pair];
            last_side = 0;
          } else if (last_side == -1) {
            g_a *= 0.5;
          }
          g_b = g;
          last_side = -1;
          if (pair >= cl_.size()) break;
        } else {
          a = root;
          at_lo.x = probe_.x;
          at_lo.v = probe_.v;
          g_a = probe_.x[pair + 1] - probe_.x[pair];
          if (last_side == 1) g_b *= 0.5;
          last_side = 1;
        }
      }
    }

    cl_.x.swap(trial_.x);
    cl_.v.swap(trial_.v);
    time_ += tau;
    return apply_merges(join);
  }
}

}  // namespace narz::detail
