#include "narz/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "narz/cumulative.hpp"
#include "narz/error.hpp"
#include "narz/io.hpp"
#include "narz/metrics.hpp"
#include "narz/scenario.hpp"

namespace narz::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

int guarded(Streams io, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    io.err << "narz: " << to_string(e.code()) << ": " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    io.err << "narz: error: " << e.what() << '\n';
    return kInputError;
  }
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string csv_number(double x) {
  if (!std::isfinite(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

fs::path output_dir(const Scenario& sc, const std::optional<fs::path>& override_dir) {
  return override_dir ? *override_dir : sc.output;
}

struct BoundsCheck {
  bool ok = true;
  double worst_excess = 0.0;
  std::string first_violation;
};

BoundsCheck check_bounds(const Trajectory& traj, const BoundsReport& b) {
  constexpr double tol = 1e-9;
  BoundsCheck bc;
  auto flag = [&](double excess, const std::string& what) {
    bc.worst_excess = std::max(bc.worst_excess, excess);
    if (excess > tol && bc.ok) {
      bc.ok = false;
      bc.first_violation = what;
    }
  };
  for (const auto& st : traj.states) {
    const ParticleSystem& s = st.system;
    const double t = st.time - traj.states.front().time;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::string where = "particle " + std::to_string(i) + " at t=" + fmt(st.time);
      flag(std::max(b.psi_lo - st.psi[i], st.psi[i] - b.psi_hi), "psi of " + where);
      flag(std::max(b.vel_lo - s.v[i], s.v[i] - b.vel_hi), "velocity of " + where);
      flag(std::abs(s.x[i]) - b.radius(t), "position of " + where);
    }
  }
  return bc;
}

Trajectory snapshot_states(const Trajectory& traj) {
  Trajectory out;
  for (const auto& st : traj.states) {
    if (st.kind != EventKind::Collision) out.states.push_back(st);
  }
  return out;
}

std::vector<double> merged_times(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

}  // namespace

std::vector<double> parse_alpha_range(const std::string& spec) {
  double lo = 0.0, hi = 0.0, step = 0.0;
  char tail = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf%c", &lo, &hi, &step, &tail) != 3 || !(step > 0.0) ||
      hi < lo || lo < 0.0 || hi > 1.0) {
    throw Error(ErrorCode::ValidationError,
                "alphas: expected lo:hi:step with 0 <= lo <= hi <= 1 and step > 0");
  }
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long k = 0; k <= n; ++k) out.push_back(lo + static_cast<double>(k) * step);
  return out;
}

int cmd_simulate(const fs::path& scenario, const std::optional<fs::path>& out_dir,
                 std::optional<double> substep, Streams io) {
  return guarded(io, [&] {
    Scenario sc = parse_scenario(scenario);
    if (substep) {
      if (!(*substep > 0.0)) throw Error(ErrorCode::ValidationError, "substep: must be positive");
      sc.tol.substep = *substep;
    }
    const DiscreteProblem dp = sc.initial_problem();
    const Trajectory traj = simulate(dp.system, *sc.kernel, sc.horizon, sc.snapshots, sc.tol);
    const BoundsReport bounds = a_priori_bounds(dp.system, *sc.kernel);
    const BoundsCheck bc = check_bounds(traj, bounds);
    const TimeModulus tm = time_modulus_check(snapshot_states(traj), bounds);

    std::size_t collisions = 0;
    for (const auto& e : traj.events) collisions += e.kind == EventKind::Collision;
    const ParticleSystem& last = traj.states.back().system;

    const fs::path dir = output_dir(sc, out_dir);
    io::write_atomically(dir / "trajectory.csv", io::trajectory_csv(traj));
    io::write_atomically(dir / "events.json", io::events_json(traj));
    io::write_atomically(dir / "flux.json", io::to_json(dp.flux));
    json summary{
        {"kernel", {{"family", sc.kernel_family}, {"params", sc.kernel_params}}},
        {"particles", dp.system.size()},
        {"horizon", sc.horizon},
        {"collisions", collisions},
        {"final_clusters", last.cluster_count()},
        {"bounds",
         {{"psi_lo", bounds.psi_lo}, {"psi_hi", bounds.psi_hi}, {"vel_lo", bounds.vel_lo},
          {"vel_hi", bounds.vel_hi}, {"m_tilde", bounds.m_tilde}, {"r0", bounds.r0},
          {"worst_excess", bc.worst_excess}, {"pass", bc.ok}}},
        {"time_modulus", {{"worst_ratio", finite_or_null(tm.worst_ratio)}, {"pass", tm.worst_ratio <= 1.0 + 1e-9}}},
    };
    io::write_atomically(dir / "summary.json", summary.dump(2) + "\n");

    io.out << "simulated " << dp.system.size() << " particles to t=" << fmt(sc.horizon) << ": "
           << collisions << " collision events, " << last.cluster_count() << " clusters\n"
           << "artifacts in " << dir.string() << '\n';
    bool ok = true;
    if (!bc.ok) {
      io.err << "narz: a-priori bound violated: " << bc.first_violation << '\n';
      ok = false;
    }
    if (tm.worst_ratio > 1.0 + 1e-9) {
      io.err << "narz: time-regularity ratio " << tm.worst_ratio << " between t=" << tm.s
             << " and t=" << tm.t << '\n';
      ok = false;
    }
    return ok ? kOk : kAssertionFailed;
  });
}

int cmd_certify(const fs::path& scenario, const std::optional<fs::path>& trajectory,
                const std::optional<std::string>& alphas_spec, const std::optional<fs::path>& out_dir,
                Streams io) {
  return guarded(io, [&] {
    const Scenario sc = parse_scenario(scenario);
    const Kernel& k = *sc.kernel;
    const std::vector<double> alphas = parse_alpha_range(alphas_spec.value_or("0.1:0.9:0.1"));

    Trajectory traj;
    std::optional<PiecewiseLinearFlux> flux;
    const bool loaded = trajectory.has_value();
    if (loaded) {
      traj = io::parse_trajectory_csv(io::read_file(*trajectory));
      flux = flux_from_state(traj.states.front().system, k);
    } else {
      DiscreteProblem dp = sc.initial_problem();
      std::vector<double> grid;
      for (std::size_t j = 1; j <= sc.time_samples; ++j) {
        grid.push_back(dp.system.time +
                       sc.horizon * static_cast<double>(j) / static_cast<double>(sc.time_samples));
      }
      traj = simulate(dp.system, k, sc.horizon, merged_times(sc.snapshots, grid), sc.tol);
      flux = std::move(dp.flux);
    }

    // Rankine-Hugoniot and Oleinik, cluster by cluster at every state.
    std::vector<io::CertificateRow> rows;
    double worst_rh = 0.0, worst_ol = std::numeric_limits<double>::infinity();
    std::string violation;
    for (std::size_t si = 0; si < traj.states.size(); ++si) {
      const TrajectoryState& st = traj.states[si];
      const auto rh = check_rankine_hugoniot(st.system, *flux, k);
      const auto ol = check_oleinik(st.system, *flux, k);
      const bool report = loaded || si == 0 || st.kind != EventKind::Snapshot;
      for (std::size_t c = 0; c < rh.size(); ++c) {
        const auto [first, last] = st.system.cluster_range(c);
        // Members of a cluster must agree; a loaded file may not.
        for (std::size_t i = first + 1; i <= last && violation.empty(); ++i) {
          const double spread = std::max(std::abs(st.system.x[i] - st.system.x[first]),
                                         std::abs(st.system.v[i] - st.system.v[first]));
          if (spread > sc.certificate_tol) {
            std::ostringstream msg;
            msg << "cluster " << first << " (particles " << first << ".." << last << ") at t=" << st.time
                << ": particle " << i << " disagrees with the cluster state by " << spread;
            violation = msg.str();
          }
        }
        worst_rh = std::max(worst_rh, rh[c]);
        worst_ol = std::min(worst_ol, ol[c]);
        if (report) rows.push_back({st.time, first, rh[c], ol[c]});
        if (violation.empty() && (rh[c] > sc.certificate_tol || ol[c] < -sc.certificate_tol)) {
          std::ostringstream msg;
          msg << "cluster " << first << " (particles " << first << ".." << last << ") at t=" << st.time
              << ": RH residual " << rh[c] << ", Oleinik margin " << ol[c] << " (tolerance "
              << sc.certificate_tol << ")";
          violation = msg.str();
        }
      }
    }

    // Kruzkov residuals for every alpha against three bump test functions.
    const double t0 = traj.states.front().time, t1 = traj.states.back().time;
    const ParticleSystem& s0 = traj.states.front().system;
    const BoundsReport bounds = a_priori_bounds(s0, k);
    const double reach = bounds.radius(t1 - t0) + k.support().width();
    std::vector<double> centers{0.0};
    for (const auto& e : traj.events) {
      if (e.kind == EventKind::Collision && !e.indices.empty()) {
        const auto& st = state_at(traj, e.time);
        centers.push_back(st.x[e.indices.front()]);
        break;
      }
    }
    if (centers.size() < 2) centers.push_back(s0.x.front());
    centers.push_back(traj.states.back().system.x.back());
    std::vector<BumpTestFunction> tests;
    tests.push_back({centers[0], reach, 0.5 * (t0 + t1), 0.45 * (t1 - t0)});
    tests.push_back({centers[1], 0.5 * reach, 0.5 * (t0 + t1), 0.45 * (t1 - t0)});
    tests.push_back({centers[2], 0.5 * reach, t0 + 0.4 * (t1 - t0), 0.35 * (t1 - t0)});

    json entropy = json::array();
    double worst_entropy = std::numeric_limits<double>::infinity();
    bool entropy_skipped = false;
    for (double alpha : alphas) {
      for (std::size_t ti = 0; ti < tests.size(); ++ti) {
        try {
          const EntropyResidual r =
              entropy_residual(traj, *flux, k, KruzkovPair{alpha}, tests[ti], sc.entropy_tol);
          worst_entropy = std::min(worst_entropy, r.value);
          entropy.push_back({{"alpha", alpha}, {"test", ti}, {"value", r.value},
                             {"error_estimate", r.error_estimate}});
          if (violation.empty() && r.value < -sc.entropy_tol) {
            std::ostringstream msg;
            msg << "Kruzkov residual " << r.value << " for alpha=" << alpha << ", test function " << ti;
            violation = msg.str();
          }
        } catch (const Error& e) {
          if (e.code() != ErrorCode::InsufficientSnapshots) throw;
          if (!loaded) {
            if (violation.empty()) violation = e.what();
          } else if (!entropy_skipped) {
            io.err << "narz: entropy check skipped: " << e.what() << '\n';
          }
          entropy_skipped = true;
        }
      }
    }

    const fs::path dir = output_dir(sc, out_dir);
    io::write_atomically(dir / "certificate.json", io::certificate_json(rows));
    io::write_atomically(dir / "entropy.json", entropy.dump(2) + "\n");
    io.out << "states checked: " << traj.states.size() << "\n"
           << "max RH residual: " << fmt(worst_rh) << "\n"
           << "min Oleinik margin: " << (std::isfinite(worst_ol) ? fmt(worst_ol) : "none (no clusters)") << "\n";
    if (std::isfinite(worst_entropy)) io.out << "min Kruzkov residual: " << fmt(worst_entropy) << "\n";
    if (!violation.empty()) {
      io.err << "narz: certificate violated: " << violation << '\n';
      return kAssertionFailed;
    }
    io.out << "certificate passed\n";
    return kOk;
  });
}

int cmd_converge(const fs::path& scenario, const std::vector<std::size_t>& ns_arg,
                 std::optional<std::size_t> n_ref_arg, const std::optional<fs::path>& out_dir,
                 Streams io) {
  return guarded(io, [&] {
    const Scenario sc = parse_scenario(scenario);
    if (!sc.datum) throw Error(ErrorCode::ValidationError, "datum: converge needs an initial datum");
    std::vector<std::size_t> ns = !ns_arg.empty() ? ns_arg : !sc.ns.empty() ? sc.ns
                                                                            : std::vector<std::size_t>{64, 128, 256};
    std::sort(ns.begin(), ns.end());
    const std::size_t n_ref = n_ref_arg.value_or(sc.n_ref);
    if (ns.back() >= n_ref) throw Error(ErrorCode::ValidationError, "Ns: every N must be below N_ref");

    StudyOptions opt;
    opt.tol = sc.tol;
    opt.flux_grid = sc.flux_grid;
    const ConvergenceStudy study = convergence_study(*sc.datum, *sc.kernel, sc.horizon, ns, n_ref, opt);

    std::string csv = "N,t,distance,bound\n";
    json rows = json::array();
    bool initial_ok = true, monotone_ok = true;
    for (const auto& r : study.rows) {
      csv += std::to_string(r.n) + ',' + csv_number(r.t) + ',' + csv_number(r.distance) + ',' +
             csv_number(r.bound) + '\n';
      rows.push_back({{"N", r.n}, {"t", r.t}, {"distance", r.distance}, {"bound", finite_or_null(r.bound)},
                      {"datum_error", finite_or_null(r.datum_error)}, {"moment_gap", r.moment_gap}});
      if (r.t == 0.0 && !(r.datum_error <= r.bound)) initial_ok = false;
    }
    // Columns are non-increasing in N up to a wiggle factor of 1.5.
    for (std::size_t i = 3; i < study.rows.size(); ++i) {
      if (study.rows[i].distance > 1.5 * study.rows[i - 3].distance) monotone_ok = false;
    }
    const bool passed = initial_ok && monotone_ok;
    json summary{{"n_ref", n_ref},
                 {"horizon", sc.horizon},
                 {"rows", rows},
                 {"assertions",
                  {{"initial_bound", {{"pass", initial_ok}}},
                   {"non_increasing", {{"pass", monotone_ok}, {"wiggle", 1.5}}}}},
                 {"passed", passed}};
    const fs::path dir = output_dir(sc, out_dir);
    io::write_atomically(dir / "convergence.csv", csv);
    io::write_atomically(dir / "convergence.json", summary.dump(2) + "\n");

    io.out << "N_ref=" << n_ref << "\n     N          t   distance\n";
    for (const auto& r : study.rows) {
      char line[96];
      std::snprintf(line, sizeof line, "%6zu %10.4g %10.4g\n", r.n, r.t, r.distance);
      io.out << line;
    }
    if (!initial_ok) io.err << "narz: initial discretization bound exceeded\n";
    if (!monotone_ok) io.err << "narz: distances grow with N beyond the 1.5 wiggle factor\n";
    return passed ? kOk : kAssertionFailed;
  });
}

int cmd_stability(const fs::path& a, const fs::path& b, const std::optional<fs::path>& out_dir,
                  Streams io) {
  return guarded(io, [&] {
    const Scenario sa = parse_scenario(a);
    const Scenario sb = parse_scenario(b);
    if (sa.kernel_family != sb.kernel_family || sa.kernel_params != sb.kernel_params) {
      throw Error(ErrorCode::ValidationError, "kernel: both scenarios must use the same kernel");
    }
    Scenario pa = sa, pb = sb;
    if (pa.datum && pa.n == 0) pa.n = 512;
    if (pb.datum && pb.n == 0) pb.n = pa.datum ? pa.n : 512;
    StudyOptions opt;
    opt.tol = sa.tol;
    opt.flux_grid = sa.flux_grid;
    const StabilityReport rep = stability_experiment(pa.initial_problem(), pb.initial_problem(), *sa.kernel,
                                                     sa.horizon, sa.sample_times, opt);

    std::string csv = "N,t,distance,bound\n";
    json rows = json::array();
    for (const auto& r : rep.rows) {
      csv += std::to_string(rep.n) + ',' + csv_number(r.t) + ',' + csv_number(r.measured) + ',' +
             csv_number(r.bounds.min_bound) + '\n';
      rows.push_back({{"t", r.t}, {"measured", r.measured}, {"exp_bound", r.bounds.exp_bound},
                      {"linear_bound", r.bounds.linear_bound}, {"min_bound", r.bounds.min_bound},
                      {"p_moment_drift", r.p_moment_drift},
                      {"pass", r.measured <= r.bounds.min_bound + rep.slack}});
    }
    json summary{{"N", rep.n},         {"w1_0", rep.w1_0}, {"lip_diff", rep.lip_diff},
                 {"slack", rep.slack}, {"rows", rows},     {"passed", rep.passed()}};
    const fs::path dir = output_dir(sa, out_dir);
    io::write_atomically(dir / "stability.csv", csv);
    io::write_atomically(dir / "stability.json", summary.dump(2) + "\n");

    io.out << "W1(0)=" << fmt(rep.w1_0) << " lip_diff=" << fmt(rep.lip_diff) << "\n";
    for (const auto& r : rep.rows) {
      io.out << "t=" << fmt(r.t) << " measured=" << fmt(r.measured) << " bound=" << fmt(r.bounds.min_bound)
             << '\n';
    }
    if (!rep.passed()) {
      io.err << "narz: measured W1 exceeds the stability bound\n";
      return kAssertionFailed;
    }
    return kOk;
  });
}

int cmd_kernels(Streams io) {
  return guarded(io, [&] {
    char line[160];
    std::snprintf(line, sizeof line, "%-18s %-14s %10s %10s %10s  %s\n", "family", "support(r=1)",
                  "sup|w|", "sup|phi|", "|phi|_1", "description");
    io.out << line;
    const double r = 1.0;
    for (const auto& f : builtin_families()) {
      const Kernel k = Kernel::builtin(f.name, std::span<const double>(&r, 1));
      char sup[32];
      std::snprintf(sup, sizeof sup, "[%g, %g]", k.support().lo, k.support().hi);
      std::snprintf(line, sizeof line, "%-18.*s %-14s %10.6g %10.6g %10.6g  %.*s\n",
                    static_cast<int>(f.name.size()), f.name.data(), sup, k.sup_omega(), k.sup_phi(),
                    k.l1_phi(), static_cast<int>(f.description.size()), f.description.data());
      io.out << line;
    }
    return kOk;
  });
}

}  // namespace narz::cli
