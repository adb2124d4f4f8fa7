#include "tscale/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace tscale {

namespace {

using Vec = std::vector<double>;
using Rhs = std::function<void(double, std::span<const double>, std::span<double>)>;
using Jac = std::function<void(std::span<const double>, Eigen::MatrixXd&)>;

// dg_i/dy_j as expressions; empty when some component is not differentiable.
class StateJacobian {
public:
  explicit StateJacobian(const FixedDynamics& dyn) : v_(dyn.control()), n_(dyn.n()) {
    try {
      for (const Expr& e : dyn.system().rhs())
        for (std::size_t j = 0; j < n_; ++j) d_.push_back(diff_expr(e, Variable::state(j + 1)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotDifferentiable) throw;
      d_.clear();
    }
  }

  Jac at(double t) const {
    if (d_.empty()) return {};
    return [this, t](std::span<const double> z, Eigen::MatrixXd& out) {
      const Env env{t, z, v_};
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j)
          out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d_[i * n_ + j].eval(env);
    };
  }

private:
  std::vector<Expr> d_;
  std::vector<double> v_;
  std::size_t n_;
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

double max_norm(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

void check_bounded(std::span<const double> x, double t, const SolveOptions& opts) {
  for (double v : x)
    if (!std::isfinite(v) || std::abs(v) > opts.blowup_bound)
      throw SolveError(ErrorCode::BlowUp, t, "state exceeds " + fmt(opts.blowup_bound));
}

void validate(const TimeScale& ts, const FixedDynamics& dyn, Mode mode, double t0, std::size_t y0_size,
              const SolveOptions& opts) {
  if (dyn.mode() != mode)
    throw Error(ErrorCode::InvalidArgument, std::string("dynamics are in ") + to_string(dyn.mode()) +
                                                " mode, solver expects " + to_string(mode));
  if (y0_size != dyn.n())
    throw Error(ErrorCode::InvalidArgument, "initial value has " + std::to_string(y0_size) +
                                                " components, expected " + std::to_string(dyn.n()));
  if (!(opts.h_dense > 0.0) || !(opts.implicit_tol > 0.0) || opts.implicit_max_iter <= 0 ||
      !(opts.blowup_bound > 0.0))
    throw Error(ErrorCode::InvalidArgument, "solve options must all be positive");
  if (!ts.contains(t0)) throw Error(ErrorCode::BadWindow, "t0 = " + fmt(t0) + " is not in the time scale");
}

// Classical RK4 step of size h (h may be negative).
Vec rk4_step(const Rhs& f, double t, const Vec& y, double h) {
  const std::size_t n = y.size();
  Vec k1(n), k2(n), k3(n), k4(n), tmp(n);
  f(t, y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + (h / 2) * k1[i];
  f(t + h / 2, tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + (h / 2) * k2[i];
  f(t + h / 2, tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  f(t + h, tmp, k4);
  Vec out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = y[i] + (h / 6) * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return out;
}

// Solves z = base + c * G(z). Fixed-point iteration first; if it does not
// reach the tolerance within max_iter, damped Newton on
// F(z) = z - base - c G(z), using dg when given and central differences otherwise.
Vec solve_implicit(const std::function<void(std::span<const double>, std::span<double>)>& g, const Jac& dg,
                   const Vec& base, double c, double t, const SolveOptions& opts) {
  const std::size_t n = base.size();
  auto scale = [](const Vec& z) { return std::max(1.0, max_norm(z)); };
  Vec gz(n);

  // Fixed point, followed by a few polishing sweeps while the update shrinks.
  {
    Vec z = base;
    double last_update = std::numeric_limits<double>::infinity();
    bool converged = false;
    int polish = 0;
    for (int it = 0; it < opts.implicit_max_iter + 8; ++it) {
      g(z, gz);
      Vec next(n);
      for (std::size_t i = 0; i < n; ++i) next[i] = base[i] + c * gz[i];
      double update = 0.0;
      for (std::size_t i = 0; i < n; ++i) update = std::max(update, std::abs(next[i] - z[i]));
      if (!std::isfinite(update)) break;
      if (converged) {
        if (update >= last_update || ++polish > 8) break;
        z = std::move(next);
        last_update = update;
        continue;
      }
      z = std::move(next);
      last_update = update;
      if (update <= opts.implicit_tol * scale(z)) {
        converged = true;
        if (update == 0.0) break;
      } else if (it + 1 >= opts.implicit_max_iter) {
        break;
      }
    }
    if (converged) return z;
  }

  // Newton.
  auto residual = [&](const Vec& z, Vec& out) {
    g(z, gz);
    for (std::size_t i = 0; i < n; ++i) out[i] = z[i] - base[i] - c * gz[i];
  };
  Vec z = base, fz(n), trial(n), ft(n), gp(n), gm(n);
  const auto en = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd jg(en, en);
  residual(z, fz);
  for (int it = 0; it < opts.implicit_max_iter; ++it) {
    if (max_norm(fz) <= opts.implicit_tol * scale(z)) return z;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(en, en);
    if (dg) {
      dg(z, jg);
      jac -= c * jg;
    } else {
      for (std::size_t j = 0; j < n; ++j) {
        const double h = 1e-7 * std::max(1.0, std::abs(z[j]));
        Vec zp = z, zm = z;
        zp[j] += h;
        zm[j] -= h;
        g(zp, gp);
        g(zm, gm);
        for (std::size_t i = 0; i < n; ++i) jac(i, j) -= c * (gp[i] - gm[i]) / (2 * h);
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues().minCoeff() < 1e-12)
      throw SolveError(ErrorCode::NonRegressive, t, "I - nu * dg/dy is singular");
    Eigen::VectorXd rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs(i) = -fz[i];
    const Eigen::VectorXd step = svd.solve(rhs);

    const double f0 = max_norm(fz);
    double alpha = 1.0;
    bool accepted = false;
    for (int k = 0; k < 30; ++k, alpha *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = z[i] + alpha * step(static_cast<Eigen::Index>(i));
      residual(trial, ft);
      const double f1 = max_norm(ft);
      if (std::isfinite(f1) && f1 < f0) {
        z = trial;
        fz = ft;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (max_norm(fz) <= opts.implicit_tol * scale(z)) return z;
  throw SolveError(ErrorCode::ImplicitSolveFailed, t,
                   "residual " + fmt(max_norm(fz)) + " after fixed-point and Newton iterations");
}

Rhs as_rhs(const FixedDynamics& dyn) {
  return [&dyn](double t, std::span<const double> y, std::span<double> out) { dyn.eval(t, y, out); };
}

bool same_segment(const TimeScale& ts, double a, double b) { return ts.segment_index(a) == ts.segment_index(b); }

}  // namespace

SolveError::SolveError(ErrorCode code, double t, const std::string& detail)
    : Error(code, "t = " + fmt(t) + ": " + detail), t_(t) {}

Trajectory solve_delta_ivp(const TimeScale& ts, const FixedDynamics& dyn, double t0, std::span<const double> x0,
                           const SolveOptions& opts, std::optional<double> t_end) {
  validate(ts, dyn, Mode::Delta, t0, x0.size(), opts);
  Trajectory traj;
  traj.mode = Mode::Delta;
  traj.grid = ts.grid(t0, t_end.value_or(ts.sup()), opts.h_dense);
  traj.states.reserve(traj.grid.size());
  traj.states.emplace_back(x0.begin(), x0.end());
  check_bounded(traj.states.back(), traj.grid.front(), opts);

  const Rhs f = as_rhs(dyn);
  Vec fx(dyn.n());
  for (std::size_t k = 0; k + 1 < traj.grid.size(); ++k) {
    const double t = traj.grid[k];
    const double next = traj.grid[k + 1];
    const Vec& x = traj.states.back();
    Vec out;
    if (same_segment(ts, t, next)) {
      out = rk4_step(f, t, x, next - t);
    } else {
      // Right-scattered: next = sigma(t).
      const double mu = next - t;
      f(t, x, fx);
      out.resize(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + mu * fx[i];
    }
    check_bounded(out, next, opts);
    traj.states.push_back(std::move(out));
  }
  return traj;
}

Trajectory solve_nabla_ivp_direct(const TimeScale& ts, const FixedDynamics& dyn, double t0,
                                  std::span<const double> y0, const SolveOptions& opts,
                                  std::optional<double> t_end) {
  validate(ts, dyn, Mode::Nabla, t0, y0.size(), opts);
  Trajectory traj;
  traj.mode = Mode::Nabla;
  traj.grid = ts.grid(t0, t_end.value_or(ts.sup()), opts.h_dense);
  traj.states.reserve(traj.grid.size());
  traj.states.emplace_back(y0.begin(), y0.end());
  check_bounded(traj.states.back(), traj.grid.front(), opts);

  const Rhs f = as_rhs(dyn);
  const StateJacobian jac(dyn);
  for (std::size_t k = 0; k + 1 < traj.grid.size(); ++k) {
    const double prev = traj.grid[k];
    const double t = traj.grid[k + 1];
    const Vec& y = traj.states.back();
    Vec out;
    if (same_segment(ts, prev, t)) {
      out = rk4_step(f, prev, y, t - prev);
    } else {
      // Left-scattered: prev = rho(t).
      const double nu = t - prev;
      out = solve_implicit([&](std::span<const double> z, std::span<double> gz) { f(t, z, gz); }, jac.at(t), y, nu,
                           t, opts);
    }
    check_bounded(out, t, opts);
    traj.states.push_back(std::move(out));
  }
  return traj;
}

Trajectory solve_nabla_via_duality(const TimeScale& ts, const FixedDynamics& dyn, double t0,
                                   std::span<const double> y0, const SolveOptions& opts,
                                   std::optional<double> t_end) {
  validate(ts, dyn, Mode::Nabla, t0, y0.size(), opts);
  const TimeScale dual_ts = ts.dual();
  const FixedDynamics dual_dyn(dualize_system(dyn.system()), dyn.control());
  const Rhs f = as_rhs(dual_dyn);
  const StateJacobian jac(dual_dyn);

  // Dual window [-t_end, -t0]; terminal condition at its supremum.
  const std::vector<double> s_grid = dual_ts.grid(-t_end.value_or(ts.sup()), -t0, opts.h_dense);
  std::vector<Vec> xs(s_grid.size());
  xs.back().assign(y0.begin(), y0.end());
  check_bounded(xs.back(), t0, opts);

  for (std::size_t k = s_grid.size() - 1; k-- > 0;) {
    const double s = s_grid[k];
    const double s_next = s_grid[k + 1];
    const Vec& x_next = xs[k + 1];
    if (same_segment(dual_ts, s, s_next)) {
      xs[k] = rk4_step(f, s_next, x_next, s - s_next);
    } else {
      // s is right-scattered with sigma(s) = s_next:
      // x(s_next) = x(s) + mu(s) F(s, x(s)), solved for x(s).
      const double mu = s_next - s;
      xs[k] = solve_implicit([&](std::span<const double> z, std::span<double> fz) { f(s, z, fz); }, jac.at(s),
                             x_next, -mu, -s, opts);
    }
    check_bounded(xs[k], -s, opts);
  }

  Trajectory traj;
  traj.mode = Mode::Nabla;
  traj.grid.reserve(s_grid.size());
  traj.states.reserve(s_grid.size());
  for (std::size_t k = s_grid.size(); k-- > 0;) {
    traj.grid.push_back(-s_grid[k]);
    traj.states.push_back(std::move(xs[k]));
  }
  return traj;
}

Trajectory solve_ivp(const TimeScale& ts, const FixedDynamics& dyn, double t0, std::span<const double> y0,
                     const SolveOptions& opts, std::optional<double> t_end) {
  if (dyn.mode() == Mode::Delta) return solve_delta_ivp(ts, dyn, t0, y0, opts, t_end);
  return solve_nabla_ivp_direct(ts, dyn, t0, y0, opts, t_end);
}

}  // namespace tscale
