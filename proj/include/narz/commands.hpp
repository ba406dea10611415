#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace narz::cli {

/// Exit codes shared by every command.
enum Exit : int { kOk = 0, kAssertionFailed = 1, kInputError = 2 };

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

/// Writes trajectory.csv, events.json and summary.json into the output
/// directory (scenario "output" unless overridden).
int cmd_simulate(const std::filesystem::path& scenario,
                 const std::optional<std::filesystem::path>& out_dir,
                 std::optional<double> substep, Streams io);

/// Certifies a fresh run, or the trajectory CSV when given. `alphas` is
/// "lo:hi:step" (default 0.1:0.9:0.1).
int cmd_certify(const std::filesystem::path& scenario,
                const std::optional<std::filesystem::path>& trajectory,
                const std::optional<std::string>& alphas,
                const std::optional<std::filesystem::path>& out_dir, Streams io);

int cmd_converge(const std::filesystem::path& scenario, const std::vector<std::size_t>& ns,
                 std::optional<std::size_t> n_ref,
                 const std::optional<std::filesystem::path>& out_dir, Streams io);

int cmd_stability(const std::filesystem::path& a, const std::filesystem::path& b,
                  const std::optional<std::filesystem::path>& out_dir, Streams io);

int cmd_kernels(Streams io);

/// Parses "lo:hi:step" into the inclusive grid lo, lo + step, ... <= hi.
std::vector<double> parse_alpha_range(const std::string& spec);

}  // namespace narz::cli
