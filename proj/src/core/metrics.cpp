#include "narz/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "narz/error.hpp"

namespace narz {

double l1_distance(const StepFunction& M1, const StepFunction& M2) {
  if (std::abs(M1.total() - M2.total()) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "L1 distance needs equal totals (" << M1.total() << " vs " << M2.total() << ")";
    throw Error(ErrorCode::InvalidArgument, msg.str());
  }
  const auto& b1 = M1.breakpoints();
  const auto& b2 = M2.breakpoints();
  const auto& v1 = M1.values();
  const auto& v2 = M2.values();
  std::size_t i = 0, j = 0;
  double a = 0.0, b = 0.0;  // current plateau values
  double x = 0.0, sum = 0.0;
  bool started = false;
  while (i < b1.size() || j < b2.size()) {
    const double next = j >= b2.size() || (i < b1.size() && b1[i] <= b2[j]) ? b1[i] : b2[j];
    if (started) sum += std::abs(a - b) * (next - x);
    while (i < b1.size() && b1[i] == next) a = v1[i++];
    while (j < b2.size() && b2[j] == next) b = v2[j++];
    x = next;
    started = true;
  }
  return sum;
}

StepFunction cdf(const AtomicMeasurePair& mu) { return StepFunction(mu.x, mu.rho); }

double wasserstein1(const AtomicMeasurePair& mu, const AtomicMeasurePair& nu) {
  return l1_distance(cdf(mu), cdf(nu));
}

StabilityBounds stability_bounds(const StabilityInputs& in) {
  if (in.t < 0.0 || in.w1_0 < 0.0 || in.lip_diff < 0.0 || in.sup_phi < 0.0 || in.sup_omega < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "stability inputs must be nonnegative");
  }
  StabilityBounds b;
  const double L = in.sup_phi;
  const double growth = L > 0.0 ? std::expm1(in.t * L) / (2.0 * L) : in.t / 2.0;
  b.exp_bound = std::exp(2.0 * in.t * L) * in.w1_0 + in.lip_diff * growth;
  b.linear_bound = in.w1_0 + (in.lip_diff + 4.0 * in.sup_omega) * in.t;
  b.min_bound = std::min(b.exp_bound, b.linear_bound);
  return b;
}

double lip_difference(const PiecewiseLinearFlux& A, const PiecewiseLinearFlux& B) {
  std::vector<double> grid(A.thetas());
  grid.insert(grid.end(), B.thetas().begin(), B.thetas().end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  auto slope_at = [](const PiecewiseLinearFlux& F, double m) {
    const auto& th = F.thetas();
    auto it = std::upper_bound(th.begin(), th.end(), m);
    std::size_t seg = static_cast<std::size_t>(it - th.begin());
    seg = std::clamp<std::size_t>(seg, 1, F.segments()) - 1;
    return F.slope(seg);
  };
  double diff = 0.0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double mid = 0.5 * (grid[i] + grid[i + 1]);
    diff = std::max(diff, std::abs(slope_at(A, mid) - slope_at(B, mid)));
  }
  return diff;
}

TimeModulus time_modulus_check(const Trajectory& traj, const BoundsReport& bounds) {
  TimeModulus tm;
  std::vector<StepFunction> M;
  std::vector<double> t;
  for (const auto& st : traj.states) {
    M.push_back(build_M(st.system));
    t.push_back(st.time);
  }
  for (std::size_t a = 0; a < M.size(); ++a) {
    for (std::size_t b = a + 1; b < M.size(); ++b) {
      const double dt = t[b] - t[a];
      if (!(dt > 0.0)) continue;
      const double d = l1_distance(M[a], M[b]);
      double ratio = 0.0;
      if (bounds.m_tilde > 0.0) {
        ratio = d / (bounds.m_tilde * dt);
      } else if (d > 0.0) {
        ratio = std::numeric_limits<double>::infinity();
      }
      if (ratio > tm.worst_ratio) tm = {ratio, t[a], t[b]};
    }
  }
  return tm;
}

const ParticleSystem& state_at(const Trajectory& traj, double t) {
  const double tol = 1e-12 * std::max(1.0, std::abs(t));
  for (auto it = traj.states.rbegin(); it != traj.states.rend(); ++it) {
    if (std::abs(it->time - t) <= tol) return it->system;
  }
  std::ostringstream msg;
  msg << "trajectory has no state at t = " << t;
  throw Error(ErrorCode::InvalidArgument, msg.str());
}

std::vector<std::function<double(double)>> moment_battery() {
  return {
      [](double) { return 1.0; },
      [](double x) { return x; },
      [](double x) { return std::sin(x); },
      [](double x) { return std::cos(x); },
      [](double x) { return std::exp(-x * x); },
  };
}

namespace {

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested;
  if (n == 0) {
    n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("NARZ_THREADS")) {
      const long cap = std::strtol(env, nullptr, 10);
      if (cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
  }
  return static_cast<unsigned>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

/// Runs job(i) for i in [0, jobs) on a small pool; rethrows the first error.
void parallel_for(std::size_t jobs, unsigned threads, const std::function<void(std::size_t)>& job) {
  const unsigned workers = worker_count(threads, jobs);
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct RunSamples {
  std::vector<StepFunction> M;
  std::vector<AtomicMeasurePair> mp;
  double max_mass = 0.0;
};

RunSamples sample_run(const InitialDatum& datum, const Kernel& k, double horizon, std::size_t n,
                      const std::vector<double>& times, const StudyOptions& options) {
  DiscreteProblem dp = discretize(datum, k, n, {}, options.flux_grid);
  std::vector<double> snaps;
  for (double t : times) {
    if (t > 0.0) snaps.push_back(t);
  }
  SimulateOptions so;
  so.record_collision_states = false;
  const Trajectory traj = simulate(dp.system, k, horizon, snaps, options.tol, so);
  RunSamples rs;
  rs.max_mass = *std::max_element(dp.system.m.begin(), dp.system.m.end());
  for (double t : times) {
    const ParticleSystem& s = state_at(traj, t);
    rs.M.push_back(build_M(s));
    rs.mp.push_back(build_measure_pair(s));
  }
  return rs;
}

double moment_gap(const AtomicMeasurePair& a, const AtomicMeasurePair& b) {
  double gap = 0.0;
  for (const auto& f : moment_battery()) {
    gap = std::max(gap, std::abs(moment(a, f, MeasureComponent::P) - moment(b, f, MeasureComponent::P)));
  }
  return gap;
}

}  // namespace

ConvergenceStudy convergence_study(const InitialDatum& datum, const Kernel& k, double horizon,
                                   const std::vector<std::size_t>& ns, std::size_t n_ref,
                                   const StudyOptions& options) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  if (ns.empty()) throw Error(ErrorCode::InvalidArgument, "convergence study needs at least one N");
  for (std::size_t n : ns) {
    if (n == 0 || n >= n_ref) {
      throw Error(ErrorCode::InvalidArgument, "every N must be positive and below N_ref");
    }
  }
  const std::vector<double> times{0.0, 0.5 * horizon, horizon};
  std::vector<std::size_t> all(ns);
  all.push_back(n_ref);
  std::vector<RunSamples> runs(all.size());
  parallel_for(all.size(), options.threads, [&](std::size_t i) {
    runs[i] = sample_run(datum, k, horizon, all[i], times, options);
  });

  ConvergenceStudy study;
  study.n_ref = n_ref;
  study.horizon = horizon;
  const RunSamples& ref = runs.back();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < ns.size(); ++i) {
    for (std::size_t j = 0; j < times.size(); ++j) {
      ConvergenceRow row;
      row.n = ns[i];
      row.t = times[j];
      row.distance = l1_distance(runs[i].M[j], ref.M[j]);
      row.bound = j == 0 ? 2.0 * datum.r0() * runs[i].max_mass : nan;
      row.datum_error = j == 0 ? initial_l1_error(datum, runs[i].M[j]) : nan;
      row.moment_gap = moment_gap(runs[i].mp[j], ref.mp[j]);
      study.rows.push_back(row);
    }
  }
  return study;
}

bool StabilityReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [&](const StabilityRow& r) {
    return r.measured <= r.bounds.min_bound + slack;
  });
}

StabilityReport stability_experiment(const DiscreteProblem& pa, const DiscreteProblem& pb,
                                     const Kernel& k, double horizon,
                                     const std::vector<double>& times,
                                     const StudyOptions& options) {
  if (!(horizon > 0.0)) throw Error(ErrorCode::InvalidArgument, "horizon must be positive");
  std::vector<double> samples{0.0};
  for (double t : times) {
    if (t < 0.0 || t > horizon) {
      throw Error(ErrorCode::InvalidArgument, "stability sample times must lie in [0, horizon]");
    }
    if (t > 0.0) samples.push_back(t);
  }
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end()), samples.end());

  const std::vector<double> snaps(samples.begin() + 1, samples.end());
  SimulateOptions so;
  so.record_collision_states = false;
  Trajectory ta, tb;
  const DiscreteProblem* problems[2] = {&pa, &pb};
  Trajectory* outs[2] = {&ta, &tb};
  parallel_for(2, options.threads, [&](std::size_t i) {
    *outs[i] = simulate(problems[i]->system, k, horizon, snaps, options.tol, so);
  });

  StabilityReport rep;
  rep.n = std::min(pa.system.size(), pb.system.size());
  rep.w1_0 = wasserstein1(build_measure_pair(pa.system), build_measure_pair(pb.system));
  rep.lip_diff = lip_difference(pa.flux, pb.flux);
  rep.slack = 1e-6 + 4.0 / static_cast<double>(rep.n);
  for (double t : samples) {
    const auto ma = build_measure_pair(state_at(ta, t));
    const auto mb = build_measure_pair(state_at(tb, t));
    StabilityRow row;
    row.t = t;
    row.measured = wasserstein1(ma, mb);
    row.bounds = stability_bounds({t, rep.w1_0, rep.lip_diff, k.sup_phi(), k.sup_omega()});
    row.p_moment_drift = moment_gap(ma, mb);
    rep.rows.push_back(row);
  }
  return rep;
}

StabilityReport stability_experiment(const InitialDatum& a, const InitialDatum& b, const Kernel& k,
                                     double horizon, std::size_t n,
                                     const std::vector<double>& times,
                                     const StudyOptions& options) {
  return stability_experiment(discretize(a, k, n, {}, options.flux_grid),
                              discretize(b, k, n, {}, options.flux_grid), k, horizon, times,
                              options);
}

}  // namespace narz
