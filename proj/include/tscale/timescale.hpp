#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace tscale {

/// Absolute tolerance used for membership tests on time values.
inline constexpr double kMemberTol = 1e-12;

/// Closed interval [lo, hi]; lo == hi is an isolated point.
struct Segment {
  double lo = 0.0;
  double hi = 0.0;

  bool degenerate() const { return lo == hi; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Jump operators and graininess at a member of a time scale.
struct PointInfo {
  double t = 0.0;
  double sigma = 0.0;  // forward jump
  double rho = 0.0;    // backward jump
  double mu = 0.0;     // sigma - t
  double nu = 0.0;     // t - rho

  bool right_dense() const { return mu == 0.0; }
  bool left_dense() const { return nu == 0.0; }
  bool right_scattered() const { return !right_dense(); }
  bool left_scattered() const { return !left_dense(); }
};

enum class KappaSide {
  Upper,  // T^kappa: drop a left-scattered supremum
  Lower,  // T_kappa: drop a right-scattered infimum
};

/// A finite union of disjoint closed bounded intervals, kept sorted.
///
/// Values are immutable after construction. Neighbouring segments that touch
/// or overlap are merged, so every member has an unambiguous point class.
/// The boundary conventions sigma(sup) = sup and rho(inf) = inf apply.
class TimeScale {
public:
  /// Normalizes (sorts, merges) the given segments. Throws EmptyScale,
  /// NonFinite, or InvalidArgument for a reversed pair.
  static TimeScale make(std::vector<Segment> segments);

  std::span<const Segment> segments() const { return segments_; }
  double inf() const { return segments_.front().lo; }
  double sup() const { return segments_.back().hi; }

  bool contains(double t, double tol = kMemberTol) const;

  /// Index of the segment holding t (within tol), if any.
  std::optional<std::size_t> segment_index(double t, double tol = kMemberTol) const;

  /// Throws NotMember when t is not in the scale.
  PointInfo classify(double t) const;

  /// {s : -s in T}.
  TimeScale dual() const;

  /// Throws DegenerateScale if the trim would leave nothing.
  TimeScale trim_kappa(KappaSide side) const;

  /// T intersected with [a, b]. Throws BadWindow if the result is empty.
  TimeScale restrict(double a, double b) const;

  /// Discretization of [t0, t1]_T: every segment endpoint and isolated point
  /// in the window plus a uniform mesh of step <= h_dense inside each dense
  /// piece. The mesh is laid out symmetrically so that the grid of the dual
  /// window is the exact negation of this one.
  std::vector<double> grid(double t0, double t1, double h_dense) const;

  friend bool operator==(const TimeScale&, const TimeScale&) = default;

private:
  explicit TimeScale(std::vector<Segment> segs) : segments_(std::move(segs)) {}

  std::vector<Segment> segments_;
};

}  // namespace tscale
