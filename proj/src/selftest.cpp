#include "tscale/selftest.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "tscale/calculus.hpp"
#include "tscale/dynamics.hpp"
#include "tscale/solver.hpp"
#include "tscale/timescale.hpp"

namespace tscale {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

// Random finite scale with endpoints on the 1/8 lattice.
TimeScale random_scale(std::mt19937& rng) {
  std::uniform_int_distribution<int> pieces(1, 5), gap(1, 12), len(0, 10), coin(0, 2);
  std::vector<Segment> segs;
  double at = std::uniform_int_distribution<int>(-40, 40)(rng) / 8.0;
  for (int k = pieces(rng); k > 0; --k) {
    const double width = coin(rng) == 0 ? 0.0 : len(rng) / 8.0;
    segs.push_back({at, at + width});
    at += width + gap(rng) / 8.0;
  }
  return TimeScale::make(segs);
}

std::vector<double> sample_points(const TimeScale& ts) {
  std::vector<double> pts;
  for (const Segment& s : ts.segments()) {
    pts.push_back(s.lo);
    if (!s.degenerate()) {
      pts.push_back(s.lo + (s.hi - s.lo) / 4);
      pts.push_back(s.hi);
    }
  }
  return pts;
}

SelfTestCase jump_duality() {
  std::mt19937 rng(20240611);
  for (int k = 0; k < 200; ++k) {
    const TimeScale ts = random_scale(rng);
    const TimeScale dual = ts.dual();
    if (!(dual.dual() == ts)) return {"jump-operator duality", false, "dual(dual(T)) != T"};
    for (double s : sample_points(dual)) {
      const PointInfo d = dual.classify(s);
      const PointInfo o = ts.classify(-s);
      if (d.sigma != -o.rho || d.rho != -o.sigma || d.mu != o.nu || d.nu != o.mu)
        return {"jump-operator duality", false, "mismatch at s = " + fmt(s)};
    }
    if (!(ts.trim_kappa(KappaSide::Upper).dual() == dual.trim_kappa(KappaSide::Lower)))
      return {"jump-operator duality", false, "kappa trims do not commute with duality"};
  }
  return {"jump-operator duality", true, "200 random scales"};
}

SelfTestCase derivative_duality() {
  const char* exprs[] = {"t^2", "t^3 - 2*t", "sin(t)", "cos(2*t) + t", "exp(t/3)"};
  const TimeScale ts = TimeScale::make({{0, 1}, {1.5, 1.5}, {2, 2.5}, {3, 3}});
  double worst_dense = 0.0, worst_scattered = 0.0;
  for (const char* text : exprs) {
    const ScaleFunction f = ScaleFunction::from_expr(ts, parse_expr(text));
    for (Mode mode : {Mode::Delta, Mode::Nabla}) {
      const TimeScale kappa = ts.trim_kappa(mode == Mode::Delta ? KappaSide::Upper : KappaSide::Lower);
      const auto pts = sample_points(kappa);
      for (const DualityResidual& r : check_derivative_duality(f, pts, mode)) {
        double& worst = r.scattered ? worst_scattered : worst_dense;
        worst = std::max(worst, std::abs(r.residual));
      }
    }
  }
  const bool ok = worst_scattered == 0.0 && worst_dense <= 1e-6;
  return {"derivative duality", ok, "scattered " + fmt(worst_scattered) + ", dense " + fmt(worst_dense)};
}

ControlSystem linear(Mode mode, const char* rhs) {
  return ControlSystem::make(mode, 1, {parse_expr(rhs)}, ControlSet::ball(1, 1.0));
}

std::vector<Segment> h_lattice(double h, int count) {
  std::vector<Segment> segs;
  for (int k = 0; k <= count; ++k) segs.push_back({k * h, k * h});
  return segs;
}

SelfTestCase discrete_oracles() {
  const TimeScale ts = TimeScale::make(h_lattice(0.1, 10));
  const std::vector<double> y0{1.0};
  const auto d = solve_delta_ivp(ts, fix_control(linear(Mode::Delta, "y1"), {0.0}), 0.0, y0, {});
  const auto nb = solve_nabla_ivp_direct(ts, fix_control(linear(Mode::Nabla, "y1"), {0.0}), 0.0, y0, {});
  double err = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) {
    const double n = static_cast<double>(k);
    err = std::max(err, std::abs(d.states[k][0] - std::pow(1.1, n)) / std::pow(1.1, n));
    err = std::max(err, std::abs(nb.states[k][0] - std::pow(0.9, -n)) / std::pow(0.9, -n));
  }
  return {"discrete closed forms", err <= 1e-12, "max rel error " + fmt(err)};
}

SelfTestCase dense_oracle() {
  const TimeScale ts = TimeScale::make({{0, 1}, {1.5, 1.5}});
  const auto traj = solve_delta_ivp(ts, fix_control(linear(Mode::Delta, "y1"), {0.0}), 0.0, std::vector{1.0}, {});
  const double at1 = traj.states[traj.size() - 2][0];
  const double at15 = traj.states.back()[0];
  const double e = std::exp(1.0);
  const double err = std::max(std::abs(at1 - e) / e, std::abs(at15 - 1.5 * e) / (1.5 * e));
  return {"dense and mixed exponential", err <= 1e-6, "max rel error " + fmt(err)};
}

SelfTestCase route_agreement() {
  const TimeScale ts = TimeScale::make({{1, 1}, {1.05, 1.05}, {1.1, 1.1}, {1.15, 1.15}, {1.2, 1.2}});
  const ControlSystem sys = ControlSystem::make(
      Mode::Nabla, 2,
      {parse_expr("2*t^5*y1 + cos(t*y2) + y2^8 + v1"), parse_expr("2*t^6*y2 + cos(t*y1) + y1^7 + v2")},
      ControlSet::ball(2, 1.0));
  const FixedDynamics dyn = fix_control(sys, {0.5, 0.5});
  const std::vector<double> y0{0.0, 0.0};
  const auto a = solve_nabla_ivp_direct(ts, dyn, 1.0, y0, {});
  const auto b = solve_nabla_via_duality(ts, dyn, 1.0, y0, {});
  double gap = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < 2; ++i) gap = std::max(gap, std::abs(a.states[k][i] - b.states[k][i]));
  return {"nabla route agreement", a.grid == b.grid && gap <= 1e-9, "max gap " + fmt(gap)};
}

}  // namespace

std::vector<SelfTestCase> run_selftest(const std::function<void(const SelfTestCase&)>& report) {
  std::vector<SelfTestCase> out;
  for (auto* test : {jump_duality, derivative_duality, discrete_oracles, dense_oracle, route_agreement}) {
    SelfTestCase c;
    try {
      c = test();
    } catch (const std::exception& e) {
      c = {"(exception)", false, e.what()};
    }
    if (report) report(c);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace tscale
