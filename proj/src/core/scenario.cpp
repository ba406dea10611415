#include "narz/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "narz/error.hpp"
#include "narz/io.hpp"

namespace narz {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ValidationError, key + ": " + what);
}

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items()) {
    if (!ok.count(key)) invalid(where.empty() ? key : where + "." + key, "unknown key");
  }
}

const json& object_at(const json& parent, const char* key, const std::string& path) {
  const json& j = parent.at(key);
  if (!j.is_object()) invalid(path, "expected an object");
  return j;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) invalid(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) invalid(path, "must be finite");
  return x;
}

double number_or(const json& obj, const char* key, const std::string& prefix, double fallback) {
  return obj.contains(key) ? number(obj[key], prefix + key) : fallback;
}

double positive(const json& j, const std::string& path) {
  const double x = number(j, path);
  if (!(x > 0.0)) invalid(path, "must be positive");
  return x;
}

std::size_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() <= 0) invalid(path, "expected a positive integer");
  return static_cast<std::size_t>(j.get<long long>());
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) invalid(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

InitialDatum::Function parse_u0(const json& u, const std::string& path) {
  if (!u.is_object()) invalid(path, "expected an object");
  if (!u.contains("kind") || !u["kind"].is_string()) invalid(path + ".kind", "missing");
  const std::string kind = u["kind"].get<std::string>();
  if (kind == "const") {
    only_keys(u, path, {"kind", "value"});
    const double c = number_or(u, "value", path + ".", 0.0);
    return [c](double) { return c; };
  }
  if (kind == "affine") {
    only_keys(u, path, {"kind", "slope", "intercept"});
    const double a = number_or(u, "slope", path + ".", 0.0);
    const double b = number_or(u, "intercept", path + ".", 0.0);
    return [a, b](double x) { return a * x + b; };
  }
  if (kind == "table") {
    only_keys(u, path, {"kind", "x", "values"});
    if (!u.contains("x") || !u.contains("values")) invalid(path, "table needs x and values");
    auto xs = numbers(u["x"], path + ".x");
    auto vs = numbers(u["values"], path + ".values");
    if (xs.empty() || xs.size() != vs.size()) invalid(path + ".values", "length differs from x");
    for (std::size_t i = 1; i < xs.size(); ++i) {
      if (!(xs[i] > xs[i - 1])) invalid(path + ".x", "must be strictly increasing");
    }
    // Linear interpolation, constant beyond the ends.
    return [xs, vs](double x) {
      if (x <= xs.front()) return vs.front();
      if (x >= xs.back()) return vs.back();
      const auto it = std::upper_bound(xs.begin(), xs.end(), x);
      const std::size_t j = static_cast<std::size_t>(it - xs.begin());
      const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
      return vs[j - 1] + w * (vs[j] - vs[j - 1]);
    };
  }
  invalid(path + ".kind", "unknown kind '" + kind + "' (const, affine, table)");
}

InitialDatum parse_datum(const json& d) {
  only_keys(d, "datum", {"M0", "u0", "R0"});
  if (!d.contains("M0")) invalid("datum.M0", "missing");
  const json& m0 = object_at(d, "M0", "datum.M0");
  const auto u0 = d.contains("u0") ? parse_u0(d["u0"], "datum.u0")
                                   : InitialDatum::Function([](double) { return 0.0; });
  if (!m0.contains("kind") || !m0["kind"].is_string()) invalid("datum.M0.kind", "missing");
  const std::string kind = m0["kind"].get<std::string>();
  std::optional<InitialDatum> datum;
  try {
    if (kind == "uniform") {
      only_keys(m0, "datum.M0", {"kind", "a", "b"});
      const double a = number_or(m0, "a", "datum.M0.", 0.0);
      const double b = number_or(m0, "b", "datum.M0.", 1.0);
      if (!(b > a)) invalid("datum.M0.b", "must exceed a");
      datum = InitialDatum::uniform(a, b, u0);
    } else if (kind == "atoms") {
      only_keys(m0, "datum.M0", {"kind", "positions", "masses"});
      if (!m0.contains("positions") || !m0.contains("masses")) invalid("datum.M0", "atoms need positions and masses");
      auto x = numbers(m0["positions"], "datum.M0.positions");
      auto w = numbers(m0["masses"], "datum.M0.masses");
      if (x.size() != w.size() || x.empty()) invalid("datum.M0.masses", "length differs from positions");
      const double total = std::accumulate(w.begin(), w.end(), 0.0);
      if (std::abs(total - 1.0) > 1e-12) invalid("datum.M0.masses", "must sum to 1");
      datum = InitialDatum::atomic(std::move(x), std::move(w), u0);
    } else if (kind == "table") {
      only_keys(m0, "datum.M0", {"kind", "x", "values"});
      if (!m0.contains("x") || !m0.contains("values")) invalid("datum.M0", "table needs x and values");
      datum = InitialDatum::table(numbers(m0["x"], "datum.M0.x"), numbers(m0["values"], "datum.M0.values"), u0);
    } else {
      invalid("datum.M0.kind", "unknown kind '" + kind + "' (uniform, atoms, table)");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ValidationError) throw;
    invalid("datum.M0", e.what());
  }
  if (d.contains("R0")) {
    try {
      datum->set_r0(positive(d["R0"], "datum.R0"));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ValidationError) throw;
      invalid("datum.R0", e.what());
    }
  }
  return *datum;
}

ParticleSystem parse_particles(const json& p, std::optional<std::uint64_t> seed) {
  if (p.contains("random")) {
    only_keys(p, "particles", {"random"});
    const json& r = object_at(p, "random", "particles.random");
    only_keys(r, "particles.random", {"count", "radius", "speed"});
    if (!r.contains("count")) invalid("particles.random.count", "missing");
    const std::size_t n = count(r["count"], "particles.random.count");
    const double radius = r.contains("radius") ? positive(r["radius"], "particles.random.radius") : 1.0;
    const double speed = number_or(r, "speed", "particles.random.", 1.0);
    std::mt19937_64 rng(seed.value_or(0));
    std::uniform_real_distribution<double> pos(-radius, radius), vel(-std::abs(speed), std::abs(speed));
    std::vector<double> x(n), v(n), m(n, 1.0 / static_cast<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = pos(rng);
      v[i] = vel(rng);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> xs(n), vs(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = x[order[i]];
      vs[i] = v[order[i]];
    }
    return ParticleSystem::make(std::move(xs), std::move(vs), std::move(m));
  }
  only_keys(p, "particles", {"positions", "velocities", "masses"});
  for (const char* key : {"positions", "velocities", "masses"}) {
    if (!p.contains(key)) invalid(std::string("particles.") + key, "missing");
  }
  auto x = numbers(p["positions"], "particles.positions");
  auto v = numbers(p["velocities"], "particles.velocities");
  auto m = numbers(p["masses"], "particles.masses");
  if (x.empty()) invalid("particles.positions", "needs at least one particle");
  if (v.size() != x.size()) invalid("particles.velocities", "length differs from positions");
  if (m.size() != x.size()) invalid("particles.masses", "length differs from positions");
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!(m[i] > 0.0)) invalid("particles.masses[" + std::to_string(i) + "]", "must be positive");
    total += m[i];
  }
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "masses sum to " << total << ", expected 1 within 1e-12";
    invalid("particles.masses", msg.str());
  }
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> xs, vs, ms;
  for (std::size_t i : order) {
    xs.push_back(x[i]);
    vs.push_back(v[i]);
    ms.push_back(m[i]);
  }
  return ParticleSystem::make(std::move(xs), std::move(vs), std::move(ms));
}

std::vector<double> parse_snapshots(const json& s, double horizon) {
  if (s.is_array()) return numbers(s, "snapshots");
  if (!s.is_object()) invalid("snapshots", "expected an object or an array of times");
  const std::string kind = s.value("kind", std::string("geometric"));
  std::vector<double> out;
  if (kind == "list") {
    only_keys(s, "snapshots", {"kind", "times"});
    if (!s.contains("times")) invalid("snapshots.times", "missing");
    out = numbers(s["times"], "snapshots.times");
  } else if (kind == "uniform") {
    only_keys(s, "snapshots", {"kind", "count"});
    const std::size_t n = s.contains("count") ? count(s["count"], "snapshots.count") : 100;
    for (std::size_t k = 1; k <= n; ++k) out.push_back(horizon * static_cast<double>(k) / static_cast<double>(n));
  } else if (kind == "geometric") {
    only_keys(s, "snapshots", {"kind", "count", "first"});
    const std::size_t n = s.contains("count") ? count(s["count"], "snapshots.count") : 32;
    const double first = s.contains("first") ? positive(s["first"], "snapshots.first") : 1e-3 * horizon;
    if (first > horizon) invalid("snapshots.first", "exceeds the horizon");
    if (n == 1) {
      out.push_back(horizon);
    } else {
      const double ratio = horizon / first;
      for (std::size_t k = 0; k < n; ++k) {
        out.push_back(k + 1 == n ? horizon
                                 : first * std::pow(ratio, static_cast<double>(k) / static_cast<double>(n - 1)));
      }
    }
  } else {
    invalid("snapshots.kind", "unknown kind '" + kind + "' (geometric, uniform, list)");
  }
  return out;
}

std::vector<double> geometric_default(double horizon) {
  return parse_snapshots(json{{"kind", "geometric"}}, horizon);
}

}  // namespace

DiscreteProblem Scenario::initial_problem() const {
  if (particles) return {*particles, flux_from_state(*particles, *kernel)};
  if (!datum) throw Error(ErrorCode::ValidationError, "particles: scenario has neither particles nor datum");
  if (n == 0) throw Error(ErrorCode::ValidationError, "N: required to discretize the datum");
  return discretize(*datum, *kernel, n, {}, flux_grid);
}

Scenario parse_scenario_text(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw Error(ErrorCode::ParseError, "scenario must be a JSON object");
  only_keys(root, "", {"kernel", "particles", "datum", "N", "Ns", "N_ref", "horizon", "snapshots",
                       "sample_times", "tolerances", "time_samples", "flux_grid", "output", "seed",
                       "description"});

  Scenario sc;
  if (!root.contains("kernel")) invalid("kernel", "missing");
  const json& k = object_at(root, "kernel", "kernel");
  only_keys(k, "kernel", {"family", "params"});
  if (!k.contains("family") || !k["family"].is_string()) invalid("kernel.family", "missing");
  sc.kernel_family = k["family"].get<std::string>();
  sc.kernel_params = k.contains("params") ? numbers(k["params"], "kernel.params") : std::vector<double>{1.0};
  try {
    sc.kernel = Kernel::builtin(sc.kernel_family, sc.kernel_params);
  } catch (const Error& e) {
    invalid(e.code() == ErrorCode::UnknownFamily ? "kernel.family" : "kernel.params", e.what());
  }

  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) invalid("seed", "expected a nonnegative integer");
    sc.seed = root["seed"].get<std::uint64_t>();
  }

  if (!root.contains("horizon")) invalid("horizon", "missing");
  sc.horizon = positive(root["horizon"], "horizon");

  const bool has_particles = root.contains("particles");
  const bool has_datum = root.contains("datum");
  if (has_particles == has_datum) invalid("particles", "give exactly one of particles or datum");
  if (has_particles) {
    if (!root["particles"].is_object()) invalid("particles", "expected an object");
    try {
      sc.particles = parse_particles(root["particles"], sc.seed);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ValidationError) throw;
      invalid("particles", e.what());
    }
  } else {
    if (!root["datum"].is_object()) invalid("datum", "expected an object");
    sc.datum = parse_datum(root["datum"]);
  }

  if (root.contains("N")) sc.n = count(root["N"], "N");
  if (root.contains("Ns")) {
    if (!root["Ns"].is_array() || root["Ns"].empty()) invalid("Ns", "expected a nonempty array");
    for (std::size_t i = 0; i < root["Ns"].size(); ++i) sc.ns.push_back(count(root["Ns"][i], "Ns[" + std::to_string(i) + "]"));
  }
  if (root.contains("N_ref")) sc.n_ref = count(root["N_ref"], "N_ref");

  sc.snapshots = root.contains("snapshots") ? parse_snapshots(root["snapshots"], sc.horizon)
                                            : geometric_default(sc.horizon);
  for (std::size_t i = 0; i < sc.snapshots.size(); ++i) {
    const double t = sc.snapshots[i];
    if (t < 0.0 || t > sc.horizon) invalid("snapshots", "times must lie in [0, horizon]");
    if (i > 0 && t < sc.snapshots[i - 1]) invalid("snapshots", "times must be sorted");
  }
  if (root.contains("sample_times")) {
    sc.sample_times = numbers(root["sample_times"], "sample_times");
    for (double t : sc.sample_times) {
      if (t < 0.0 || t > sc.horizon) invalid("sample_times", "times must lie in [0, horizon]");
    }
  } else {
    sc.sample_times = {0.25 * sc.horizon, 0.5 * sc.horizon, sc.horizon};
  }

  if (root.contains("tolerances")) {
    const json& t = object_at(root, "tolerances", "tolerances");
    only_keys(t, "tolerances", {"substep", "event_time", "gap", "certificate", "entropy"});
    if (t.contains("substep")) sc.tol.substep = positive(t["substep"], "tolerances.substep");
    if (t.contains("event_time")) sc.tol.event_time = positive(t["event_time"], "tolerances.event_time");
    if (t.contains("gap")) sc.tol.gap = positive(t["gap"], "tolerances.gap");
    if (t.contains("certificate")) sc.certificate_tol = positive(t["certificate"], "tolerances.certificate");
    if (t.contains("entropy")) sc.entropy_tol = positive(t["entropy"], "tolerances.entropy");
  }
  if (root.contains("time_samples")) sc.time_samples = count(root["time_samples"], "time_samples");
  if (root.contains("flux_grid")) sc.flux_grid = count(root["flux_grid"], "flux_grid");
  if (root.contains("output")) {
    if (!root["output"].is_string()) invalid("output", "expected a path string");
    sc.output = root["output"].get<std::string>();
  }
  return sc;
}

Scenario parse_scenario(const std::filesystem::path& path) {
  return parse_scenario_text(io::read_file(path));
}

}  // namespace narz
