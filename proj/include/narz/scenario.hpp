#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "narz/discretize.hpp"
#include "narz/kernel.hpp"
#include "narz/sticky.hpp"

namespace narz {

/// A validated scenario file. Either `particles` (an explicit atomic
/// system) or `datum` (initial data to discretize with N particles) is set.
struct Scenario {
  std::string kernel_family;
  std::vector<double> kernel_params;
  std::optional<Kernel> kernel;

  std::optional<ParticleSystem> particles;
  std::optional<InitialDatum> datum;

  std::size_t n = 0;                  // particles for a datum; 0 = unset
  std::vector<std::size_t> ns;        // convergence study sizes
  std::size_t n_ref = 4096;
  double horizon = 0.0;
  std::vector<double> snapshots;      // absolute times in (0, horizon]
  std::vector<double> sample_times;   // stability study sample times

  Tolerances tol;
  double certificate_tol = 1e-8;
  double entropy_tol = 1e-6;
  std::size_t time_samples = 2000;    // uniform states added for certify
  std::size_t flux_grid = 4;

  std::filesystem::path output = "narz-out";
  std::optional<std::uint64_t> seed;

  /// The t = 0 particle system (discretizing the datum when needed) and the
  /// flux of its psi values.
  DiscreteProblem initial_problem() const;
};

/// Throws Error{ParseError} for malformed JSON and Error{ValidationError}
/// whose message starts with the offending key (e.g. "particles.masses").
Scenario parse_scenario_text(std::string_view text);

/// As parse_scenario_text; Error{IoError} when the file cannot be read.
Scenario parse_scenario(const std::filesystem::path& path);

}  // namespace narz
