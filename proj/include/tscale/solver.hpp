#pragma once

#include <optional>
#include <span>

#include "tscale/dynamics.hpp"
#include "tscale/timescale.hpp"
#include "tscale/trajectory.hpp"

namespace tscale {

struct SolveOptions {
  double h_dense = 1e-3;        // mesh step inside dense segments
  double implicit_tol = 1e-12;  // residual target of implicit nabla steps
  int implicit_max_iter = 50;
  double blowup_bound = 1e12;   // max-norm bound before BlowUp

  friend bool operator==(const SolveOptions&, const SolveOptions&) = default;
};

/// Solver failure tied to a time value (BlowUp, ImplicitSolveFailed,
/// NonRegressive).
class SolveError : public Error {
public:
  SolveError(ErrorCode code, double t, const std::string& detail);
  double t() const noexcept { return t_; }

private:
  double t_;
};

/// x^Delta = f(t, x) from x(t0) = x0 over [t0, t_end] (default sup T).
/// Right-scattered steps are exact: x(sigma) = x + mu f(t, x). Dense pieces
/// use classical RK4 on the solver grid.
Trajectory solve_delta_ivp(const TimeScale& ts, const FixedDynamics& dyn, double t0, std::span<const double> x0,
                           const SolveOptions& opts, std::optional<double> t_end = std::nullopt);

/// y^nabla = g(t, y) from y(t0) = y0. At a left-scattered point solves
/// y(t) = y(rho) + nu g(t, y(t)) by fixed-point iteration with a damped
/// Newton fallback; dense pieces use RK4.
Trajectory solve_nabla_ivp_direct(const TimeScale& ts, const FixedDynamics& dyn, double t0,
                                  std::span<const double> y0, const SolveOptions& opts,
                                  std::optional<double> t_end = std::nullopt);

/// Same problem solved on the dual scale: x(s) = y(-s) satisfies
/// x^Delta(s) = -g(-s, x(s)) with the terminal value x(-t0) = y0, stepped
/// backwards and mapped back onto T.
Trajectory solve_nabla_via_duality(const TimeScale& ts, const FixedDynamics& dyn, double t0,
                                   std::span<const double> y0, const SolveOptions& opts,
                                   std::optional<double> t_end = std::nullopt);

/// Dispatches on dyn.mode() (direct route for nabla).
Trajectory solve_ivp(const TimeScale& ts, const FixedDynamics& dyn, double t0, std::span<const double> y0,
                     const SolveOptions& opts, std::optional<double> t_end = std::nullopt);

}  // namespace tscale
