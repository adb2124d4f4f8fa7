#include "tscale/dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "parallel.hpp"

namespace tscale {

namespace {

constexpr std::size_t kStencilWidth = 9;
constexpr std::size_t kGridPerDim = 32;
constexpr int kGridRefinements = 3;
constexpr std::size_t kStarts = 4;

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

// ||D - f(t, y, v)||_2
double mismatch(const ControlSystem& sys, double t, std::span<const double> y, std::span<const double> d,
                std::span<const double> v) {
  std::vector<double> f(sys.n());
  try {
    sys.eval(t, y, v, f);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DomainError) return std::numeric_limits<double>::infinity();
    throw;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += (d[i] - f[i]) * (d[i] - f[i]);
  return std::isfinite(s) ? std::sqrt(s) : std::numeric_limits<double>::infinity();
}

struct Candidate {
  std::vector<double> v;
  double residual = std::numeric_limits<double>::infinity();
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.residual != b.residual) return a.residual < b.residual;
  return a.v < b.v;
}

// Projected Gauss-Newton polish of a control estimate.
Candidate polish(const ControlSystem& sys, double t, std::span<const double> y, std::span<const double> d,
                 Candidate c) {
  const std::size_t n = sys.n(), m = sys.m();
  std::vector<double> f(n), fp(n), fm(n);
  for (int iter = 0; iter < 50 && c.residual > 0.0; ++iter) {
    try {
      sys.eval(t, y, c.v, f);
    } catch (const Error&) {
      break;
    }
    Eigen::MatrixXd jac(n, m);
    Eigen::VectorXd r(n);
    for (std::size_t i = 0; i < n; ++i) r(i) = d[i] - f[i];
    try {
      for (std::size_t j = 0; j < m; ++j) {
        const double h = 1e-7 * std::max(1.0, std::abs(c.v[j]));
        std::vector<double> vp = c.v, vm = c.v;
        vp[j] += h;
        vm[j] -= h;
        sys.eval(t, y, vp, fp);
        sys.eval(t, y, vm, fm);
        for (std::size_t i = 0; i < n; ++i) jac(i, j) = (fp[i] - fm[i]) / (2.0 * h);
      }
    } catch (const Error&) {
      break;
    }
    const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(r);
    bool improved = false;
    double alpha = 1.0;
    for (int k = 0; k < 12; ++k, alpha *= 0.5) {
      std::vector<double> trial(m);
      for (std::size_t j = 0; j < m; ++j) trial[j] = c.v[j] + alpha * step(j);
      trial = sys.controls().project(trial);
      const double res = mismatch(sys, t, y, d, trial);
      if (res < c.residual) {
        c = {std::move(trial), res};
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return c;
}

// Multi-start search for a general right-hand side: a kGridPerDim^m lattice
// over the bounding box (projected onto the set), local lattice refinement
// around the best starts, then a Gauss-Newton polish.
Candidate minimize_general(const ControlSystem& sys, double t, std::span<const double> y,
                           std::span<const double> d) {
  const std::size_t m = sys.m();
  const auto [lo, hi] = sys.controls().bounding_box();
  std::vector<double> spacing(m);
  for (std::size_t j = 0; j < m; ++j) spacing[j] = (hi[j] - lo[j]) / static_cast<double>(kGridPerDim - 1);

  std::vector<Candidate> pool;
  std::vector<std::size_t> idx(m, 0);
  for (;;) {
    std::vector<double> v(m);
    for (std::size_t j = 0; j < m; ++j) v[j] = lo[j] + spacing[j] * static_cast<double>(idx[j]);
    v = sys.controls().project(v);
    pool.push_back({v, mismatch(sys, t, y, d, v)});
    std::size_t j = 0;
    while (j < m && ++idx[j] == kGridPerDim) idx[j++] = 0;
    if (j == m) break;
  }
  std::sort(pool.begin(), pool.end(), better);
  pool.resize(std::min(pool.size(), kStarts));

  Candidate best = pool.front();
  for (Candidate start : pool) {
    std::vector<double> h = spacing;
    for (int round = 0; round < kGridRefinements; ++round) {
      for (double& x : h) x *= 0.5;
      Candidate local = start;
      std::vector<int> off(m, -2);
      for (;;) {
        std::vector<double> v(m);
        for (std::size_t j = 0; j < m; ++j) v[j] = start.v[j] + h[j] * off[j];
        v = sys.controls().project(v);
        Candidate c{v, mismatch(sys, t, y, d, v)};
        if (better(c, local)) local = std::move(c);
        std::size_t j = 0;
        while (j < m && ++off[j] > 2) off[j++] = -2;
        if (j == m) break;
      }
      start = std::move(local);
    }
    start = polish(sys, t, y, d, std::move(start));
    if (better(start, best)) best = std::move(start);
  }
  return best;
}

Candidate minimize(const ControlSystem& sys, double t, std::span<const double> y, std::span<const double> d) {
  if (sys.identity_in_control()) {
    // f = base + v: the minimizer is the projection of D - base.
    const std::size_t n = sys.n();
    std::vector<double> zero(sys.m(), 0.0), base(n), target(n);
    sys.eval(t, y, zero, base);
    for (std::size_t i = 0; i < n; ++i) target[i] = d[i] - base[i];
    Candidate c;
    c.v = sys.controls().project(target);
    c.residual = mismatch(sys, t, y, d, c.v);
    return c;
  }
  return minimize_general(sys, t, y, d);
}

}  // namespace

ControlSet ControlSet::ball(std::size_t m, double radius) {
  if (m == 0) throw Error(ErrorCode::InvalidArgument, "control dimension must be positive");
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw Error(ErrorCode::InvalidArgument, "ball radius must be positive and finite");
  ControlSet c;
  c.kind_ = Kind::Ball;
  c.dim_ = m;
  c.radius_ = radius;
  return c;
}

ControlSet ControlSet::box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.empty() || lo.size() != hi.size())
    throw Error(ErrorCode::InvalidArgument, "box bounds must be nonempty and of equal length");
  for (std::size_t j = 0; j < lo.size(); ++j)
    if (!(lo[j] < hi[j]) || !std::isfinite(lo[j]) || !std::isfinite(hi[j]))
      throw Error(ErrorCode::InvalidArgument, "box needs finite lo < hi in every component");
  ControlSet c;
  c.kind_ = Kind::Box;
  c.dim_ = lo.size();
  c.lo_ = std::move(lo);
  c.hi_ = std::move(hi);
  return c;
}

bool ControlSet::contains(std::span<const double> v, double tol) const {
  if (v.size() != dim_) return false;
  if (kind_ == Kind::Ball) return norm2(v) <= radius_ + tol;
  for (std::size_t j = 0; j < dim_; ++j)
    if (v[j] < lo_[j] - tol || v[j] > hi_[j] + tol) return false;
  return true;
}

std::vector<double> ControlSet::project(std::span<const double> v) const {
  std::vector<double> out(v.begin(), v.end());
  if (kind_ == Kind::Ball) {
    const double r = norm2(v);
    if (r > radius_)
      for (double& x : out) x *= radius_ / r;
  } else {
    for (std::size_t j = 0; j < dim_; ++j) out[j] = std::clamp(out[j], lo_[j], hi_[j]);
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> ControlSet::bounding_box() const {
  if (kind_ == Kind::Box) return {lo_, hi_};
  return {std::vector<double>(dim_, -radius_), std::vector<double>(dim_, radius_)};
}

ControlSystem ControlSystem::make(Mode mode, std::size_t n, std::vector<Expr> rhs, ControlSet controls) {
  if (n == 0 || rhs.size() != n)
    throw Error(ErrorCode::ValidationError,
                "rhs has " + std::to_string(rhs.size()) + " components, expected n = " + std::to_string(n));
  const std::size_t m = controls.dim();
  for (std::size_t i = 0; i < n; ++i) {
    for (const Variable& v : rhs[i].variables()) {
      const bool ok = v.kind == VarKind::Time || (v.kind == VarKind::State && v.index <= n) ||
                      (v.kind == VarKind::Control && v.index <= m);
      if (!ok)
        throw Error(ErrorCode::ValidationError,
                    "rhs[" + std::to_string(i) + "] references undeclared variable " + v.name());
    }
  }
  ControlSystem sys;
  sys.mode_ = mode;
  sys.rhs_ = std::move(rhs);
  sys.controls_ = std::move(controls);

  bool identity = (n == m);
  for (std::size_t i = 0; identity && i < n; ++i) {
    for (std::size_t j = 0; identity && j < m; ++j) {
      try {
        const Expr d = diff_expr(sys.rhs_[i], Variable::control(j + 1));
        identity = d.variables().empty() && d.eval(Env{}) == (i == j ? 1.0 : 0.0);
      } catch (const Error&) {
        identity = false;
      }
    }
  }
  sys.identity_in_control_ = identity;
  return sys;
}

void ControlSystem::eval(double t, std::span<const double> y, std::span<const double> v,
                         std::span<double> out) const {
  const Env env{t, y, v};
  for (std::size_t i = 0; i < rhs_.size(); ++i) out[i] = rhs_[i].eval(env);
}

std::vector<double> FixedDynamics::eval(double t, std::span<const double> y) const {
  std::vector<double> out(n());
  eval(t, y, out);
  return out;
}

FixedDynamics fix_control(const ControlSystem& sys, std::vector<double> v) {
  if (v.size() != sys.m())
    throw Error(ErrorCode::InfeasibleControl,
                "control has " + std::to_string(v.size()) + " components, expected " + std::to_string(sys.m()));
  if (!sys.controls().contains(v)) throw Error(ErrorCode::InfeasibleControl, "control lies outside the control set");
  return FixedDynamics(sys, std::move(v));
}

ControlSystem dualize_system(const ControlSystem& sys) {
  std::vector<Expr> rhs;
  rhs.reserve(sys.n());
  for (const Expr& e : sys.rhs()) rhs.push_back(negate(substitute_neg_time(e)));
  return ControlSystem::make(flip(sys.mode()), sys.n(), std::move(rhs), sys.controls());
}

NoFeasibleControlError::NoFeasibleControlError(double t, double best_residual)
    : Error(ErrorCode::NoFeasibleControl, "t = " + fmt(t) + ", best residual " + fmt(best_residual)),
      t_(t),
      residual_(best_residual) {}

std::vector<double> trajectory_derivative(const TimeScale& ts, const Trajectory& traj, std::size_t k) {
  const double t = traj.grid[k];
  const PointInfo p = ts.classify(t);
  const std::size_t n = traj.dim();
  std::vector<double> d(n);
  if (traj.mode == Mode::Delta && p.right_scattered()) {
    if (k + 1 >= traj.size() || std::abs(traj.grid[k + 1] - p.sigma) > kMemberTol) return {};
    for (std::size_t i = 0; i < n; ++i) d[i] = (traj.states[k + 1][i] - traj.states[k][i]) / p.mu;
    return d;
  }
  if (traj.mode == Mode::Nabla && p.left_scattered()) {
    if (k == 0 || std::abs(traj.grid[k - 1] - p.rho) > kMemberTol) return {};
    for (std::size_t i = 0; i < n; ++i) d[i] = (traj.states[k][i] - traj.states[k - 1][i]) / p.nu;
    return d;
  }
  const auto [first, last] = same_segment_stencil(ts, traj.grid, k, kStencilWidth);
  if (last - first < 2) return {};
  const std::span<const double> xs(traj.grid.data() + first, last - first);
  std::vector<double> ys(last - first);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = first; j < last; ++j) ys[j - first] = traj.states[j][i];
    d[i] = interpolation_derivative(xs, ys, t);
  }
  return d;
}

std::vector<ControlSample> recover_control(const TimeScale& ts, const ControlSystem& sys, const Trajectory& traj,
                                           double tol) {
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
  if (traj.mode != sys.mode()) throw Error(ErrorCode::InvalidArgument, "trajectory and system modes differ");
  if (traj.dim() != sys.n()) throw Error(ErrorCode::InvalidArgument, "trajectory dimension does not match system");
  for (double t : traj.grid)
    if (!ts.contains(t)) throw Error(ErrorCode::NotMember, "trajectory grid point " + fmt(t) + " is off the scale");

  std::vector<std::optional<ControlSample>> slots(traj.size());
  detail::parallel_for(traj.size(), [&](std::size_t k) {
    const std::vector<double> d = trajectory_derivative(ts, traj, k);
    if (d.empty()) return;
    Candidate c = minimize(sys, traj.grid[k], traj.states[k], d);
    slots[k] = ControlSample{traj.grid[k], std::move(c.v), c.residual};
  });

  std::vector<ControlSample> out;
  for (auto& s : slots) {
    if (!s) continue;
    if (!(s->residual <= tol)) throw NoFeasibleControlError(s->t, s->residual);
    out.push_back(std::move(*s));
  }
  return out;
}

}  // namespace tscale
