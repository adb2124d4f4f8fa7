#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tscale/calculus.hpp"
#include "tscale/expr.hpp"
#include "tscale/timescale.hpp"
#include "tscale/trajectory.hpp"

namespace tscale {

/// Tolerance for control-set membership checks.
inline constexpr double kControlTol = 1e-12;

/// Compact control set: a centred Euclidean ball or an axis-aligned box.
class ControlSet {
public:
  enum class Kind { Ball, Box };

  static ControlSet ball(std::size_t m, double radius);
  static ControlSet box(std::vector<double> lo, std::vector<double> hi);

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  double radius() const { return radius_; }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }

  bool contains(std::span<const double> v, double tol = kControlTol) const;
  /// Euclidean projection onto the set.
  std::vector<double> project(std::span<const double> v) const;
  /// Smallest box holding the set.
  std::pair<std::vector<double>, std::vector<double>> bounding_box() const;

  friend bool operator==(const ControlSet&, const ControlSet&) = default;

private:
  Kind kind_ = Kind::Ball;
  std::size_t dim_ = 0;
  double radius_ = 0.0;
  std::vector<double> lo_, hi_;
};

/// Right-hand side f(t, y, v) with a compact control set, for either
/// y^Delta = f or y^nabla = f.
class ControlSystem {
public:
  /// Validates that every component only uses t, y1..yn and v1..vm.
  static ControlSystem make(Mode mode, std::size_t n, std::vector<Expr> rhs, ControlSet controls);

  Mode mode() const { return mode_; }
  std::size_t n() const { return rhs_.size(); }
  std::size_t m() const { return controls_.dim(); }
  const std::vector<Expr>& rhs() const { return rhs_; }
  const ControlSet& controls() const { return controls_; }

  /// True when f(t, y, v) = base(t, y) + v exactly (symbolically).
  bool identity_in_control() const { return identity_in_control_; }

  void eval(double t, std::span<const double> y, std::span<const double> v, std::span<double> out) const;

  friend bool operator==(const ControlSystem& a, const ControlSystem& b) {
    return a.mode_ == b.mode_ && a.rhs_ == b.rhs_ && a.controls_ == b.controls_;
  }

private:
  Mode mode_ = Mode::Delta;
  std::vector<Expr> rhs_;
  ControlSet controls_ = ControlSet::ball(1, 1.0);
  bool identity_in_control_ = false;
};

/// A control system with the control frozen at one admissible value.
class FixedDynamics {
public:
  FixedDynamics(ControlSystem sys, std::vector<double> v) : sys_(std::move(sys)), v_(std::move(v)) {}

  const ControlSystem& system() const { return sys_; }
  const std::vector<double>& control() const { return v_; }
  Mode mode() const { return sys_.mode(); }
  std::size_t n() const { return sys_.n(); }

  void eval(double t, std::span<const double> y, std::span<double> out) const { sys_.eval(t, y, v_, out); }
  std::vector<double> eval(double t, std::span<const double> y) const;

private:
  ControlSystem sys_;
  std::vector<double> v_;
};

/// Throws InfeasibleControl when v is outside the control set.
FixedDynamics fix_control(const ControlSystem& sys, std::vector<double> v);

inline std::vector<double> eval_rhs(const FixedDynamics& dyn, double t, std::span<const double> y) {
  return dyn.eval(t, y);
}

/// The system governing x(s) = y(-s) on the dual scale: mode flipped and
/// each component replaced by -f(-s, x, v).
ControlSystem dualize_system(const ControlSystem& sys);

/// Raised by recover_control; carries the offending time and best residual.
class NoFeasibleControlError : public Error {
public:
  NoFeasibleControlError(double t, double best_residual);

  double t() const noexcept { return t_; }
  double best_residual() const noexcept { return residual_; }

private:
  double t_;
  double residual_;
};

struct ControlSample {
  double t = 0.0;
  std::vector<double> v;
  double residual = 0.0;  // || D(t) - f(t, y(t), v) ||_2
};

/// Recovers an admissible control selection from a trajectory: at every grid
/// point where the trajectory's time-scale derivative D(t) is determined, the
/// control minimizing ||D(t) - f(t, y(t), v)|| over the control set.
/// Throws NoFeasibleControl when a minimum exceeds tol.
std::vector<ControlSample> recover_control(const TimeScale& ts, const ControlSystem& sys, const Trajectory& traj,
                                           double tol);

/// Time-scale derivative of the trajectory at grid index k in its own mode,
/// or an empty vector where the grid does not determine it.
std::vector<double> trajectory_derivative(const TimeScale& ts, const Trajectory& traj, std::size_t k);

}  // namespace tscale
