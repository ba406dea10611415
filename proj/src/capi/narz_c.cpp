#include "narz/narz.h"

#include <iostream>
#include <new>
#include <optional>
#include <string>

#include "narz/commands.hpp"
#include "narz/error.hpp"
#include "narz/io.hpp"
#include "narz/metrics.hpp"
#include "narz/sticky.hpp"

struct narz_kernel {
  narz::Kernel k;
};

struct narz_system {
  narz::ParticleSystem s;
};

struct narz_trajectory {
  narz::Trajectory t;
};

namespace {

thread_local std::string last_error;

template <class F>
narz_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return NARZ_OK;
  } catch (const narz::Error& e) {
    last_error = e.what();
    return static_cast<narz_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return NARZ_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return NARZ_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw narz::Error(narz::ErrorCode::InvalidArgument, what);
}

std::optional<std::filesystem::path> opt_path(const char* p) {
  if (p == nullptr || *p == '\0') return std::nullopt;
  return std::filesystem::path(p);
}

narz::cli::Streams std_streams() { return {std::cout, std::cerr}; }

}  // namespace

extern "C" {

const char* narz_version(void) { return "0.1.0"; }

const char* narz_status_name(narz_status status) {
  if (status == NARZ_OK) return "ok";
  return narz::to_string(static_cast<narz::ErrorCode>(status));
}

const char* narz_last_error(void) { return last_error.c_str(); }

narz_status narz_kernel_create(const char* family, const double* params, size_t nparams,
                               narz_kernel** out) {
  return guard([&] {
    require(family != nullptr && out != nullptr, "family and out must be non-null");
    require(nparams == 0 || params != nullptr, "params must be non-null");
    *out = new narz_kernel{narz::Kernel::builtin(family, std::span<const double>(params, nparams))};
  });
}

void narz_kernel_destroy(narz_kernel* k) { delete k; }

narz_status narz_kernel_eval(const narz_kernel* k, double x, double* omega, double* phi) {
  return guard([&] {
    require(k != nullptr, "kernel must be non-null");
    if (omega) *omega = k->k.omega(x);
    if (phi) *phi = k->k.phi(x);
  });
}

narz_status narz_kernel_get_info(const narz_kernel* k, narz_kernel_info* info) {
  return guard([&] {
    require(k != nullptr && info != nullptr, "kernel and info must be non-null");
    *info = {k->k.support().lo, k->k.support().hi, k->k.sup_omega(), k->k.sup_phi(), k->k.l1_phi()};
  });
}

narz_status narz_kernel_validate(const narz_kernel* k, double quad_tol, int* passed) {
  return guard([&] {
    require(k != nullptr && passed != nullptr, "kernel and passed must be non-null");
    *passed = narz::validate_hypotheses(k->k, quad_tol).passed() ? 1 : 0;
  });
}

narz_status narz_system_create(const double* x, const double* v, const double* m, size_t n,
                               narz_system** out) {
  return guard([&] {
    require(out != nullptr && (n == 0 || (x && v && m)), "arrays and out must be non-null");
    *out = new narz_system{narz::ParticleSystem::make({x, x + n}, {v, v + n}, {m, m + n})};
  });
}

void narz_system_destroy(narz_system* s) { delete s; }

narz_status narz_system_size(const narz_system* s, size_t* particles, size_t* clusters) {
  return guard([&] {
    require(s != nullptr, "system must be non-null");
    if (particles) *particles = s->s.size();
    if (clusters) *clusters = s->s.cluster_count();
  });
}

narz_status narz_system_psi(const narz_system* s, const narz_kernel* k, double* psi) {
  return guard([&] {
    require(s && k && psi, "arguments must be non-null");
    const auto p = narz::compute_psi(s->s, k->k);
    std::copy(p.begin(), p.end(), psi);
  });
}

narz_status narz_system_bounds(const narz_system* s, const narz_kernel* k, narz_bounds* out) {
  return guard([&] {
    require(s && k && out, "arguments must be non-null");
    const auto b = narz::a_priori_bounds(s->s, k->k);
    *out = {b.psi_lo, b.psi_hi, b.vel_lo, b.vel_hi, b.m_tilde, b.r0};
  });
}

narz_status narz_simulate(const narz_system* s0, const narz_kernel* k, double horizon,
                          const double* snapshots, size_t nsnapshots, const narz_tolerances* tol,
                          narz_trajectory** out) {
  return guard([&] {
    require(s0 && k && out, "arguments must be non-null");
    require(nsnapshots == 0 || snapshots, "snapshots must be non-null");
    narz::Tolerances t;
    if (tol) t = {tol->substep, tol->event_time, tol->gap};
    *out = new narz_trajectory{narz::simulate(s0->s, k->k, horizon,
                                              std::span<const double>(snapshots, nsnapshots), t)};
  });
}

void narz_trajectory_destroy(narz_trajectory* t) { delete t; }

narz_status narz_trajectory_state_count(const narz_trajectory* t, size_t* count) {
  return guard([&] {
    require(t && count, "arguments must be non-null");
    *count = t->t.states.size();
  });
}

narz_status narz_trajectory_state(const narz_trajectory* t, size_t index, double* time,
                                  narz_event_kind* kind, double* x, double* v, double* psi,
                                  size_t* cluster) {
  return guard([&] {
    require(t != nullptr, "trajectory must be non-null");
    require(index < t->t.states.size(), "state index out of range");
    const auto& st = t->t.states[index];
    if (time) *time = st.time;
    if (kind) *kind = static_cast<narz_event_kind>(static_cast<int>(st.kind));
    const auto& s = st.system;
    for (size_t i = 0; i < s.size(); ++i) {
      if (x) x[i] = s.x[i];
      if (v) v[i] = s.v[i];
      if (psi) psi[i] = st.psi[i];
      if (cluster) cluster[i] = s.cluster_start[s.cluster_of(i)];
    }
  });
}

narz_status narz_trajectory_collision_count(const narz_trajectory* t, size_t* count) {
  return guard([&] {
    require(t && count, "arguments must be non-null");
    *count = 0;
    for (const auto& e : t->t.events) *count += e.kind == narz::EventKind::Collision;
  });
}

narz_status narz_trajectory_write(const narz_trajectory* t, const char* dir) {
  return guard([&] {
    require(t && dir, "arguments must be non-null");
    const std::filesystem::path d(dir);
    narz::io::write_atomically(d / "trajectory.csv", narz::io::trajectory_csv(t->t));
    narz::io::write_atomically(d / "events.json", narz::io::events_json(t->t));
  });
}

narz_status narz_wasserstein1(const double* x1, const double* m1, size_t n1, const double* x2,
                              const double* m2, size_t n2, double* out) {
  return guard([&] {
    require(x1 && m1 && x2 && m2 && out, "arguments must be non-null");
    auto measure = [](const double* x, const double* m, size_t n) {
      std::vector<std::pair<double, double>> atoms;
      for (size_t i = 0; i < n; ++i) atoms.emplace_back(x[i], m[i]);
      std::sort(atoms.begin(), atoms.end());
      narz::AtomicMeasurePair mp;
      for (const auto& [pos, mass] : atoms) {
        mp.x.push_back(pos);
        mp.rho.push_back(mass);
        mp.p.push_back(0.0);
      }
      return mp;
    };
    *out = narz::wasserstein1(measure(x1, m1, n1), measure(x2, m2, n2));
  });
}

narz_status narz_stability_bounds(double t, double w1_0, double lip_diff, double sup_phi,
                                  double sup_omega, double* exp_bound, double* linear_bound,
                                  double* min_bound) {
  return guard([&] {
    const auto b = narz::stability_bounds({t, w1_0, lip_diff, sup_phi, sup_omega});
    if (exp_bound) *exp_bound = b.exp_bound;
    if (linear_bound) *linear_bound = b.linear_bound;
    if (min_bound) *min_bound = b.min_bound;
  });
}

int narz_cmd_simulate(const char* scenario, const char* out_dir, double substep) {
  if (!scenario) return narz::cli::kInputError;
  return narz::cli::cmd_simulate(scenario, opt_path(out_dir),
                                 substep > 0.0 ? std::optional<double>(substep) : std::nullopt,
                                 std_streams());
}

int narz_cmd_certify(const char* scenario, const char* trajectory, const char* alphas,
                     const char* out_dir) {
  if (!scenario) return narz::cli::kInputError;
  return narz::cli::cmd_certify(scenario, opt_path(trajectory),
                                alphas ? std::optional<std::string>(alphas) : std::nullopt,
                                opt_path(out_dir), std_streams());
}

int narz_cmd_converge(const char* scenario, const size_t* ns, size_t nns, size_t n_ref,
                      const char* out_dir) {
  if (!scenario || (nns > 0 && !ns)) return narz::cli::kInputError;
  return narz::cli::cmd_converge(scenario, std::vector<std::size_t>(ns, ns + nns),
                                 n_ref > 0 ? std::optional<std::size_t>(n_ref) : std::nullopt,
                                 opt_path(out_dir), std_streams());
}

int narz_cmd_stability(const char* a, const char* b, const char* out_dir) {
  if (!a || !b) return narz::cli::kInputError;
  return narz::cli::cmd_stability(a, b, opt_path(out_dir), std_streams());
}

int narz_cmd_kernels(void) { return narz::cli::cmd_kernels(std_streams()); }

}  // extern "C"
