#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "tscale/calculus.hpp"

namespace tscale {

/// States on an increasing grid of time-scale members.
struct Trajectory {
  Mode mode = Mode::Delta;
  std::vector<double> grid;
  std::vector<std::vector<double>> states;

  std::size_t size() const { return grid.size(); }
  std::size_t dim() const { return states.empty() ? 0 : states.front().size(); }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

/// CSV with header "t,y1,...,yn" and 17 significant digits per value.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Inverse of write_trajectory_csv. Throws ParseError on malformed input.
Trajectory read_trajectory_csv(std::istream& is, Mode mode);

}  // namespace tscale
