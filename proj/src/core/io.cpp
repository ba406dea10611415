#include "narz/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "narz/error.hpp"

namespace narz::io {

using nlohmann::json;

namespace {

void append_number(std::string& out, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  out += buf;
}

std::vector<double> number_array(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) {
    throw Error(ErrorCode::ParseError, std::string("missing array '") + key + "'");
  }
  std::vector<double> out;
  for (const auto& e : j[key]) {
    if (!e.is_number()) throw Error(ErrorCode::ParseError, std::string("non-numeric entry in '") + key + "'");
    out.push_back(e.get<double>());
  }
  return out;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
}

}  // namespace

void write_atomically(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoError, "cannot move artifact into " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out = "t,i,x,v,m,cluster,psi\n";
  for (const auto& st : traj.states) {
    const ParticleSystem& s = st.system;
    for (std::size_t c = 0; c < s.cluster_count(); ++c) {
      const auto [first, last] = s.cluster_range(c);
      for (std::size_t i = first; i <= last; ++i) {
        append_number(out, st.time);
        out += ',' + std::to_string(i) + ',';
        append_number(out, s.x[i]);
        out += ',';
        append_number(out, s.v[i]);
        out += ',';
        append_number(out, s.m[i]);
        out += ',' + std::to_string(first) + ',';
        append_number(out, i < st.psi.size() ? st.psi[i] : 0.0);
        out += '\n';
      }
    }
  }
  return out;
}

Trajectory parse_trajectory_csv(std::string_view text) {
  Trajectory traj;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("t,i,x,v,m,cluster,psi", 0) != 0) {
    throw Error(ErrorCode::ParseError, "trajectory CSV header must be t,i,x,v,m,cluster,psi");
  }
  std::size_t lineno = 1;
  std::size_t prev_i = 0;
  std::size_t prev_cluster = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    double t, x, v, m, psi;
    unsigned long long i, cluster;
    if (std::sscanf(line.c_str(), "%lf,%llu,%lf,%lf,%lf,%llu,%lf", &t, &i, &x, &v, &m, &cluster, &psi) != 7) {
      throw Error(ErrorCode::ParseError, "malformed trajectory row at line " + std::to_string(lineno));
    }
    const bool fresh = traj.states.empty() || i == 0 || t != traj.states.back().time || i <= prev_i;
    if (fresh) {
      if (i != 0) {
        throw Error(ErrorCode::ParseError, "state must start at particle 0 (line " + std::to_string(lineno) + ")");
      }
      traj.states.emplace_back();
      traj.states.back().time = t;
      traj.states.back().system.time = t;
    } else if (i != prev_i + 1) {
      throw Error(ErrorCode::ParseError, "particle indices must be consecutive (line " + std::to_string(lineno) + ")");
    }
    TrajectoryState& st = traj.states.back();
    ParticleSystem& s = st.system;
    if (fresh || cluster != prev_cluster) {
      if (cluster != i) {
        throw Error(ErrorCode::ParseError, "cluster id must be its first particle index (line " +
                                               std::to_string(lineno) + ")");
      }
      s.cluster_start.push_back(i);
    }
    s.x.push_back(x);
    s.v.push_back(v);
    s.m.push_back(m);
    st.psi.push_back(psi);
    prev_i = i;
    prev_cluster = cluster;
  }
  if (traj.states.empty()) throw Error(ErrorCode::ParseError, "trajectory CSV has no rows");
  const std::size_t n = traj.states.front().system.size();
  for (const auto& st : traj.states) {
    if (st.system.size() != n) throw Error(ErrorCode::ParseError, "states differ in particle count");
  }
  return traj;
}

std::string events_json(const Trajectory& traj) {
  json arr = json::array();
  for (const auto& e : traj.events) {
    arr.push_back({{"t", e.time}, {"kind", to_string(e.kind)}, {"indices", e.indices}});
  }
  return arr.dump(2) + "\n";
}

std::string to_json(const StepFunction& M) {
  return json{{"breakpoints", M.breakpoints()}, {"jumps", M.jumps()}}.dump() + "\n";
}

std::string to_json(const PiecewiseLinearFlux& A) {
  return json{{"thetas", A.thetas()}, {"values", A.values()}}.dump() + "\n";
}

StepFunction step_function_from_json(std::string_view text) {
  const json j = parse_json(text);
  return StepFunction(number_array(j, "breakpoints"), number_array(j, "jumps"));
}

PiecewiseLinearFlux flux_from_json(std::string_view text) {
  const json j = parse_json(text);
  return PiecewiseLinearFlux(number_array(j, "thetas"), number_array(j, "values"));
}

std::string certificate_json(const std::vector<CertificateRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json row{{"t", r.t}, {"cluster", r.cluster}, {"rh_residual", r.rh_residual}};
    // +infinity (singletons) has no JSON spelling.
    if (std::isfinite(r.oleinik_margin)) {
      row["oleinik_margin"] = r.oleinik_margin;
    } else {
      row["oleinik_margin"] = nullptr;
    }
    arr.push_back(std::move(row));
  }
  return arr.dump(2) + "\n";
}

}  // namespace narz::io
