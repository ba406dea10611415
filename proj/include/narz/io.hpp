#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "narz/cumulative.hpp"
#include "narz/sticky.hpp"

namespace narz::io {

/// Writes to a sibling temporary file and renames it into place, so readers
/// never observe a partial artifact. Throws Error{IoError}.
void write_atomically(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// CSV `t,i,x,v,m,cluster,psi`, one row per particle per state; cluster is
/// the first particle index of the cluster. Numbers use %.17g.
std::string trajectory_csv(const Trajectory& traj);

/// Parses trajectory_csv output. States are grouped by consecutive equal t
/// and carry kind Snapshot; clusters follow the cluster column.
Trajectory parse_trajectory_csv(std::string_view text);

/// JSON array of {t, kind, indices} for every event.
std::string events_json(const Trajectory& traj);

std::string to_json(const StepFunction& M);
std::string to_json(const PiecewiseLinearFlux& A);
StepFunction step_function_from_json(std::string_view text);
PiecewiseLinearFlux flux_from_json(std::string_view text);

struct CertificateRow {
  double t = 0.0;
  std::size_t cluster = 0;  // first particle index
  double rh_residual = 0.0;
  double oleinik_margin = 0.0;
};

std::string certificate_json(const std::vector<CertificateRow>& rows);

}  // namespace narz::io
