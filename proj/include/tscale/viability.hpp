#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "tscale/calculus.hpp"
#include "tscale/dynamics.hpp"
#include "tscale/solver.hpp"
#include "tscale/timescale.hpp"

namespace tscale {

enum class Side { Lower, Upper };

const char* to_string(Side s);

/// Boundary face {x_i = lower_i(t)} or {x_i = upper_i(t)} of the tube graph.
struct Face {
  std::size_t index = 0;  // 0-based coordinate
  Side side = Side::Lower;

  friend bool operator==(const Face&, const Face&) = default;
};

/// Moving box {x : lower_i(t) < x_i < upper_i(t)} with bounds given as
/// expressions in t.
///
/// A tube produced by dualization keeps the bound roles of the original
/// (the lower-face expression is the dual of the old upper bound), so its
/// lower expressions lie above its upper ones. Such tubes are flagged
/// `swapped`; membership and tangential sampling use the geometric order,
/// while the egress inequalities read the formal lower/upper roles.
class Tube {
public:
  static Tube make(std::vector<Expr> lower, std::vector<Expr> upper, bool swapped = false);

  std::size_t n() const { return lower_.size(); }
  bool swapped() const { return swapped_; }
  const std::vector<Expr>& lower() const { return lower_; }
  const std::vector<Expr>& upper() const { return upper_; }
  const Expr& bound(Face f) const { return f.side == Side::Lower ? lower_[f.index] : upper_[f.index]; }

  /// Geometric interval (min, max) of coordinate i at time t.
  std::pair<double, double> interval(std::size_t i, double t) const;

  /// Throws ValidationError unless the bounds are strictly ordered (in the
  /// orientation implied by `swapped`) at every time in `times`.
  void validate(std::span<const double> times) const;

  /// Bounds as t -> -t with roles exchanged; flips `swapped`.
  Tube dual() const;

  friend bool operator==(const Tube&, const Tube&) = default;

private:
  std::vector<Expr> lower_, upper_;
  bool swapped_ = false;
};

/// min_i min(hi_i(t) - y_i, y_i - lo_i(t)); > 0 inside, 0 on a face, < 0 outside.
double tube_margin(const Tube& tube, double t, std::span<const double> y);

/// Smallest tube margin along a trajectory.
double min_tube_margin(const Tube& tube, const Trajectory& traj);

struct EgressSampling {
  std::size_t tangential_samples = 9;  // lattice points per free coordinate
  std::size_t refinement_rounds = 3;   // local refinements around the worst point
  double h_dense = 1e-3;               // t sampling on dense pieces

  friend bool operator==(const EgressSampling&, const EgressSampling&) = default;
};

struct EgressSample {
  Face face;
  double t = 0.0;
  std::vector<double> point;  // full boundary point, point[face.index] on the face
  double margin = 0.0;        // > 0 means strict egress
};

struct EgressReport {
  std::vector<EgressSample> samples;
  bool all_strict_egress = false;
  std::size_t worst = 0;  // index of the smallest margin

  const EgressSample& worst_sample() const { return samples[worst]; }
};

/// Samples every boundary face over the window grid and evaluates the strict
/// egress margin: delta lower b^Delta - f_i, delta upper f_i - c^Delta,
/// nabla lower gamma^nabla - g_i, nabla upper g_i - beta^nabla.
EgressReport check_egress(const TimeScale& ts, const FixedDynamics& dyn, const Tube& tube, double t0, double t1,
                          const EgressSampling& sampling);

struct SearchOptions {
  std::size_t lattice_size = 9;
  std::size_t refinement_levels = 12;
  bool override_egress = false;

  friend bool operator==(const SearchOptions& a, const SearchOptions& b) {
    return a.lattice_size == b.lattice_size && a.refinement_levels == b.refinement_levels;
  }
};

struct ViabilityResult {
  bool found = false;
  std::vector<double> y_bar;
  Trajectory trajectory;
  double min_tube_margin = -std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  std::size_t levels = 0;
};

/// Grid search with cell-halving refinement for an initial value at t0 whose
/// trajectory stays in the closed tube over [t0, t1]. Requires a passing
/// egress check unless options.override_egress is set (NoEgressCertificate).
ViabilityResult search_viable(const TimeScale& ts, const FixedDynamics& dyn, const Tube& tube, double t0, double t1,
                              const SolveOptions& solve, const SearchOptions& options,
                              const EgressSampling& sampling);

}  // namespace tscale
