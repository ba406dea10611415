#include <doctest.h>

#include <filesystem>
#include <string>

#include "narz/commands.hpp"
#include "narz/error.hpp"
#include "narz/io.hpp"
#include "narz/scenario.hpp"

using namespace narz;

namespace {

ErrorCode code_of(const std::string& text) {
  try {
    parse_scenario_text(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

std::string message_of(const std::string& text) {
  try {
    parse_scenario_text(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

const char* const kMinimal = R"({
  "kernel": {"family": "raised_cosine", "params": [1.0]},
  "particles": {"positions": [-1, 1], "velocities": [1, -1], "masses": [0.5, 0.5]},
  "horizon": 2
})";

}  // namespace

TEST_CASE("minimal scenario gets defaults") {
  const auto s = parse_scenario_text(kMinimal);
  CHECK(s.kernel_family == "raised_cosine");
  REQUIRE(s.particles.has_value());
  CHECK(s.particles->size() == 2);
  CHECK(s.horizon == 2.0);
  CHECK(s.n_ref == 4096);
  CHECK(s.certificate_tol == 1e-8);
  CHECK(s.output == "narz-out");
  CHECK_FALSE(s.snapshots.empty());
  CHECK(s.snapshots.back() <= 2.0);
  CHECK(s.sample_times == std::vector<double>{0.5, 1.0, 2.0});
}

TEST_CASE("scenario validation names the key") {
  std::string bad_masses = kMinimal;
  bad_masses.replace(bad_masses.find("[0.5, 0.5]"), 10, "[0.5, 0.6]");
  CHECK(code_of(bad_masses) == ErrorCode::ValidationError);
  CHECK(message_of(bad_masses).find("masses") != std::string::npos);

  std::string bad_family = kMinimal;
  bad_family.replace(bad_family.find("raised_cosine"), 13, "gaussian");
  CHECK(message_of(bad_family).rfind("kernel.family", 0) == 0);

  std::string no_horizon = kMinimal;
  no_horizon.replace(no_horizon.find("\"horizon\": 2"), 12, "\"horizon\": -2");
  CHECK(message_of(no_horizon).rfind("horizon", 0) == 0);

  std::string unknown = kMinimal;
  unknown.replace(unknown.find("\"horizon\""), 9, "\"horizn\"");
  CHECK(code_of(unknown) == ErrorCode::ValidationError);

  CHECK(code_of("{ not json") == ErrorCode::ParseError);
  CHECK_THROWS_AS(parse_scenario("/nonexistent/scenario.json"), Error);
}

TEST_CASE("datum scenario") {
  const auto s = parse_scenario_text(R"({
    "kernel": {"family": "downstream_cosine", "params": [1.0]},
    "datum": {"M0": {"kind": "uniform", "a": 0, "b": 1}, "u0": {"kind": "affine", "slope": -1, "intercept": 0.5}},
    "N": 16, "horizon": 1, "seed": 7
  })");
  REQUIRE(s.datum.has_value());
  CHECK(s.datum->u0(0.25) == doctest::Approx(0.25));
  const auto prob = s.initial_problem();
  CHECK(prob.system.size() == 16);
  CHECK(prob.flux.segments() == 16);
}

TEST_CASE("random particles are reproducible") {
  const char* text = R"({
    "kernel": {"family": "raised_cosine", "params": [1.0]},
    "particles": {"random": {"count": 10, "radius": 2, "speed": 1}},
    "horizon": 1, "seed": 42
  })";
  const auto a = parse_scenario_text(text);
  const auto b = parse_scenario_text(text);
  CHECK(a.particles->x == b.particles->x);
  CHECK(a.particles->v == b.particles->v);
}

TEST_CASE("trajectory csv round trip") {
  const double r = 1.0;
  const Kernel k = Kernel::builtin("raised_cosine", std::span<const double>(&r, 1));
  const auto s = ParticleSystem::make({-1.0, 0.0, 1.0}, {1.0, 0.1, -1.0}, {0.3, 0.3, 0.4});
  const double snaps[] = {0.5, 1.0, 2.0};
  const auto traj = simulate(s, k, 2.0, snaps, {});
  const auto parsed = io::parse_trajectory_csv(io::trajectory_csv(traj));
  REQUIRE(parsed.states.size() == traj.states.size());
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    CHECK(parsed.states[i].time == traj.states[i].time);
    CHECK(parsed.states[i].system.x == traj.states[i].system.x);
    CHECK(parsed.states[i].system.v == traj.states[i].system.v);
    CHECK(parsed.states[i].system.cluster_start == traj.states[i].system.cluster_start);
  }
  CHECK(io::trajectory_csv(parsed).substr(0, 20) == io::trajectory_csv(traj).substr(0, 20));
}

TEST_CASE("json round trips") {
  const StepFunction M({-1.0, 0.5}, {0.25, 0.75});
  const auto M2 = io::step_function_from_json(io::to_json(M));
  CHECK(M2.breakpoints() == M.breakpoints());
  CHECK(M2.jumps() == M.jumps());
  const PiecewiseLinearFlux A({0.0, 0.3, 1.0}, {0.0, 0.6, -0.1});
  const auto A2 = io::flux_from_json(io::to_json(A));
  CHECK(A2.thetas() == A.thetas());
  CHECK(A2.values() == A.values());
  const auto cert = io::certificate_json({{0.5, 0, 1e-12, std::numeric_limits<double>::infinity()}});
  CHECK(cert.find("null") != std::string::npos);
}

TEST_CASE("atomic writes leave no temporary file") {
  const auto dir = std::filesystem::temp_directory_path() / "narz_io_test";
  std::filesystem::create_directories(dir);
  io::write_atomically(dir / "a.txt", "hello");
  CHECK(io::read_file(dir / "a.txt") == "hello");
  for (const auto& e : std::filesystem::directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");
  std::filesystem::remove_all(dir);
}

TEST_CASE("alpha ranges") {
  const auto a = cli::parse_alpha_range("0.1:0.9:0.1");
  REQUIRE(a.size() == 9);
  CHECK(a.front() == doctest::Approx(0.1));
  CHECK(a.back() == doctest::Approx(0.9));
  CHECK(cli::parse_alpha_range("0.5:0.5:0.1").size() == 1);
  CHECK_THROWS(cli::parse_alpha_range("0.1:0.9"));
  CHECK_THROWS(cli::parse_alpha_range("0.1:0.9:0"));
}
