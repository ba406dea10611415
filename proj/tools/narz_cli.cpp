// Command-line front end; talks to the library only through narz.h.
#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "narz/narz.h"

int main(int argc, char** argv) {
  CLI::App app{"Sticky-particle simulator and entropy-solution toolkit for nonlocal ARZ traffic"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(narz_version()));

  std::string scenario, scenario_b, out_dir, trajectory, alphas;
  double substep = 0.0;
  std::vector<size_t> ns;
  size_t n_ref = 0;

  auto* sim = app.add_subcommand("simulate", "Run a scenario and write trajectory artifacts");
  sim->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", out_dir, "Output directory (overrides the scenario)");
  sim->add_option("--substep", substep, "RK4 substep")->check(CLI::PositiveNumber);

  auto* conv = app.add_subcommand("converge", "Convergence study against a reference resolution");
  conv->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  conv->add_option("--ns", ns, "Particle counts")->delimiter(',');
  conv->add_option("--nref", n_ref, "Reference particle count");
  conv->add_option("--out", out_dir, "Output directory");

  auto* stab = app.add_subcommand("stability", "Compare two scenarios against the stability bounds");
  stab->add_option("a", scenario, "First scenario JSON")->required()->check(CLI::ExistingFile);
  stab->add_option("b", scenario_b, "Second scenario JSON")->required()->check(CLI::ExistingFile);
  stab->add_option("--out", out_dir, "Output directory");

  auto* cert = app.add_subcommand("certify", "Check Rankine-Hugoniot, Oleinik and entropy certificates");
  cert->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  cert->add_option("--trajectory", trajectory, "Certify this trajectory CSV instead of a fresh run")
      ->check(CLI::ExistingFile);
  cert->add_option("--alphas", alphas, "Entropy levels lo:hi:step")->default_str("0.1:0.9:0.1");
  cert->add_option("--out", out_dir, "Output directory");

  auto* kern = app.add_subcommand("kernels", "List the built-in kernel families");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const char* out = out_dir.empty() ? nullptr : out_dir.c_str();
  if (*sim) return narz_cmd_simulate(scenario.c_str(), out, substep);
  if (*conv) return narz_cmd_converge(scenario.c_str(), ns.data(), ns.size(), n_ref, out);
  if (*stab) return narz_cmd_stability(scenario.c_str(), scenario_b.c_str(), out);
  if (*cert) {
    return narz_cmd_certify(scenario.c_str(), trajectory.empty() ? nullptr : trajectory.c_str(),
                            alphas.empty() ? nullptr : alphas.c_str(), out);
  }
  if (*kern) return narz_cmd_kernels();
  return 2;
}
