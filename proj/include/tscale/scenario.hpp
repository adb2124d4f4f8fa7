#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tscale/dynamics.hpp"
#include "tscale/solver.hpp"
#include "tscale/timescale.hpp"
#include "tscale/viability.hpp"

namespace tscale {

/// One self-contained experiment: scale, window, system, fixed control,
/// tube and numerical options.
struct Scenario {
  TimeScale timescale;
  double t0 = 0.0;
  double t1 = 0.0;
  ControlSystem system;
  std::vector<double> fixed_control;
  Tube tube;
  SolveOptions solve;
  SearchOptions search;
  EgressSampling egress;

  Mode mode() const { return system.mode(); }
  std::size_t n() const { return system.n(); }
  FixedDynamics dynamics() const { return FixedDynamics(system, fixed_control); }
  std::vector<double> grid() const { return timescale.grid(t0, t1, solve.h_dense); }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Parses and validates scenario JSON. `source` names the document in
/// diagnostics. Throws ParseError or ValidationError.
Scenario parse_scenario(std::string_view json_text, const std::string& source = "<string>");

/// Reads a scenario file (IoError when unreadable).
Scenario load_scenario(const std::filesystem::path& path);

/// Serializes to JSON text that parse_scenario reads back to an equal value.
std::string serialize_scenario(const Scenario& s);

/// Checks the cross-field invariants (window membership, dimensions, modes,
/// control feasibility, tube ordering on the window grid).
void validate_scenario(const Scenario& s);

/// Dual scenario: dual scale, window [-t1, -t0], flipped mode, dualized rhs
/// and tube. Control data and options are unchanged.
Scenario dualize_scenario(const Scenario& s);

}  // namespace tscale
