// Prints one PASS/FAIL line per acceptance criterion and exits non-zero if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "support.hpp"
#include "tscale/calculus.hpp"
#include "tscale/scenario.hpp"
#include "tscale/solver.hpp"
#include "tscale/viability.hpp"

using namespace tscale;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Accumulates failures while keeping the first diagnostic.
class Verdict {
public:
  void require(bool cond, const std::string& what) {
    if (!cond && ok_) {
      ok_ = false;
      first_ = what;
    }
  }
  Outcome done(const std::string& summary) const { return {ok_, ok_ ? summary : first_}; }

private:
  bool ok_ = true;
  std::string first_;
};

std::string num(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

int failures = 0;

void criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (o.ok && secs >= limit_s) o = {false, "runtime " + num(secs) + " s exceeds " + num(limit_s) + " s"};
  if (!o.ok) ++failures;
  std::printf("%s %d %s [%.3f s] %s\n", o.ok ? "PASS" : "FAIL", id, name, secs, o.detail.c_str());
  std::fflush(stdout);
}

const char* const kCorpus[] = {"t^2",         "t^3 - 2*t",     "sin(t)",        "cos(2*t) + t",  "exp(t/3)",
                               "1/(2 + t^2)", "t^4 - t^3 + 1", "sin(t)*cos(t)", "7",             "t*exp(-t^2)",
                               "t^5",         "cos(t)^3",      "3*t - 1",       "sqrt(4 + t^2)", "log(9 + t^2)",
                               "(t - 1)^2",   "sin(3*t) - t/2", "exp(sin(t))",  "t^2*cos(t)",    "1/(1 + exp(-t))",
                               "t^6/720",     "t^4/(5 + t^2)"};

double inf_gap(const Trajectory& a, const Trajectory& b) {
  if (a.grid != b.grid) return INFINITY;
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t i = 0; i < a.dim(); ++i) m = std::max(m, std::abs(a.states[k][i] - b.states[k][i]));
  return m;
}

Outcome duality_identities() {
  Verdict v;
  std::mt19937 rng(2024);
  std::size_t points = 0;
  for (int trial = 0; trial < 120; ++trial) {
    const auto ts = testing::random_scale(rng);
    const auto d = ts.dual();
    v.require(d.dual() == ts, "double dual differs");
    for (double s : testing::sample_points(d)) {
      const auto hat = d.classify(s);
      const auto orig = ts.classify(-s);
      v.require(hat.sigma == -orig.rho && hat.rho == -orig.sigma, "jump duality at s=" + num(s));
      v.require(hat.mu == orig.nu && hat.nu == orig.mu, "graininess duality at s=" + num(s));
      ++points;
    }
    v.require(ts.trim_kappa(KappaSide::Upper).dual() == d.trim_kappa(KappaSide::Lower), "upper kappa duality");
    v.require(ts.trim_kappa(KappaSide::Lower).dual() == d.trim_kappa(KappaSide::Upper), "lower kappa duality");
  }
  return v.done("120 scales, " + std::to_string(points) + " points, exact");
}

Outcome derivative_duality() {
  Verdict v;
  std::mt19937 rng(77);
  int scales = 0;
  double worst_dense = 0.0;
  std::size_t scattered = 0;
  while (scales < 24) {
    const auto ts = testing::random_scale(rng, 4);
    if (ts.inf() == ts.sup()) continue;
    bool has_dense = false, has_scattered = false;
    for (const Segment& s : ts.segments()) (s.degenerate() ? has_scattered : has_dense) = true;
    if (!has_dense || (!has_scattered && ts.segments().size() < 2)) continue;
    ++scales;
    for (const char* text : kCorpus) {
      const auto f = ScaleFunction::from_expr(ts, parse_expr(text));
      for (Mode mode : {Mode::Delta, Mode::Nabla}) {
        const auto kappa = ts.trim_kappa(mode == Mode::Delta ? KappaSide::Upper : KappaSide::Lower);
        for (const auto& r : check_derivative_duality(f, testing::sample_points(kappa), mode)) {
          if (r.scattered) {
            v.require(r.residual == 0.0, std::string(text) + " scattered residual " + num(r.residual));
            ++scattered;
          } else {
            v.require(std::abs(r.residual) <= 1e-6, std::string(text) + " dense residual " + num(r.residual));
            worst_dense = std::max(worst_dense, std::abs(r.residual));
          }
        }
      }
    }
  }
  return v.done("22 expressions x " + std::to_string(scales) + " mixed scales, " + std::to_string(scattered) +
                " scattered exact, dense max " + num(worst_dense));
}

Outcome solver_oracles() {
  Verdict v;
  for (double lambda : {1.0, -2.0, 0.5}) {
    const double h = 0.1;
    const auto ts = testing::h_lattice(h, 20);
    const auto rhs = (num(lambda) + "*y1");
    const auto d = solve_delta_ivp(ts, testing::scalar(Mode::Delta, rhs.c_str()), 0, std::vector{1.0}, {});
    const auto n = solve_nabla_ivp_direct(ts, testing::scalar(Mode::Nabla, rhs.c_str()), 0, std::vector{1.0}, {});
    for (std::size_t k = 0; k < d.size(); ++k) {
      const double a = std::pow(1 + h * lambda, static_cast<double>(k));
      const double b = std::pow(1 - h * lambda, -static_cast<double>(k));
      v.require(std::abs(d.states[k][0] - a) <= 1e-12 * std::max(1.0, std::abs(a)), "delta closed form");
      v.require(std::abs(n.states[k][0] - b) <= 1e-12 * std::max(1.0, std::abs(b)), "nabla closed form");
    }
  }
  const auto e = solve_delta_ivp(TimeScale::make({{0, 1}}), testing::scalar(Mode::Delta, "y1"), 0, std::vector{1.0},
                                 {});
  const double rel_e = std::abs(e.states.back()[0] / std::exp(1.0) - 1);
  v.require(rel_e <= 1e-6, "dense exponential rel " + num(rel_e));
  const auto mixed = solve_delta_ivp(TimeScale::make({{0, 1}, {1.5, 1.5}}), testing::scalar(Mode::Delta, "y1"), 0,
                                     std::vector{1.0}, {});
  const double rel_m = std::abs(mixed.states.back()[0] / (1.5 * std::exp(1.0)) - 1);
  v.require(rel_m <= 1e-6, "mixed composition rel " + num(rel_m));

  const auto ts = TimeScale::make({{0, 2}});
  const auto dyn = testing::scalar(Mode::Delta, "-2*t*y1 + cos(t)");
  auto end = [&](double h) {
    SolveOptions o;
    o.h_dense = h;
    return solve_delta_ivp(ts, dyn, 0, std::vector{1.0}, o).states.back()[0];
  };
  const double ref = end(0.05 / 8);
  const double factor = std::abs(end(0.05) - ref) / std::abs(end(0.025) - ref);
  v.require(factor >= 8 && factor <= 32, "RK4 order factor " + num(factor));
  return v.done("closed forms to 1e-12, e rel " + num(rel_e) + ", 1.5e rel " + num(rel_m) + ", order factor " +
                num(factor));
}

Outcome route_agreement() {
  Verdict v;
  double worst = 0.0;
  int runs = 0;
  for (const char* name : {"coupled_tube_discrete.json", "coupled_tube_short.json", "coupled_tube_mixed.json"}) {
    const auto s = load_scenario(testing::scenario_path(name));
    for (const auto& y0 : {std::vector{0.0, 0.0}, std::vector{0.2, -0.1}, std::vector{-0.3, 0.25}}) {
      const auto a = solve_nabla_ivp_direct(s.timescale, s.dynamics(), s.t0, y0, s.solve, s.t1);
      const auto b = solve_nabla_via_duality(s.timescale, s.dynamics(), s.t0, y0, s.solve, s.t1);
      const double gap = inf_gap(a, b);
      v.require(gap <= 1e-9, std::string(name) + " gap " + num(gap));
      worst = std::max(worst, gap);
      ++runs;
    }
  }
  return v.done(std::to_string(runs) + " solves, max inf-norm gap " + num(worst));
}

Outcome coupled_egress() {
  Verdict v;
  const auto s = load_scenario(testing::scenario_path("coupled_tube.json"));
  const auto rep = check_egress(s.timescale, s.dynamics(), s.tube, s.t0, s.t1, s.egress);
  v.require(rep.all_strict_egress, "a margin is not positive");
  const auto inv = ScaleFunction::from_expr(s.timescale, parse_expr("1/t"));
  const auto gamma = ScaleFunction::from_expr(s.timescale, parse_expr("-1/t"));
  double slack = INFINITY;
  for (const auto& e : rep.samples) {
    const double t = e.t;
    const double a = e.face.index == 0 ? 2 * std::pow(t, 4) - 1 - std::pow(t, -8) : 2 * std::pow(t, 5) - 1 - std::pow(t, -7);
    const double bound = e.face.side == Side::Upper ? a + 0.5 - nabla_derivative(inv, t).value
                                                    : nabla_derivative(gamma, t).value + a - 0.5;
    v.require(e.margin > 0, "non-positive margin at t=" + num(t));
    v.require(e.margin >= bound - 1e-12 * std::max(1.0, std::abs(bound)), "margin below analytic bound at t=" + num(t));
    slack = std::min(slack, e.margin - bound);
  }
  return v.done(std::to_string(rep.samples.size()) + " samples on V and W faces, worst margin " +
                num(rep.worst_sample().margin) + ", min slack over bound " + num(slack));
}

Outcome coupled_search() {
  Verdict v;
  const auto s = load_scenario(testing::scenario_path("coupled_tube_discrete.json"));
  const auto res = search_viable(s.timescale, s.dynamics(), s.tube, s.t0, s.t1, s.solve, s.search, s.egress);
  v.require(res.found, "no viable start found, best margin " + num(res.min_tube_margin));
  v.require(res.min_tube_margin >= 0, "negative tube margin");
  v.require(res.evaluations <= 1000000, "too many evaluations");
  const auto again = solve_ivp(s.timescale, s.dynamics(), s.t0, res.y_bar, s.solve, s.t1);
  v.require(std::abs(min_tube_margin(s.tube, again) - res.min_tube_margin) <= 1e-12, "re-solve margin differs");
  return v.done("found y_bar=(" + num(res.y_bar[0]) + ", " + num(res.y_bar[1]) + ") margin " +
                num(res.min_tube_margin) + " after " + std::to_string(res.evaluations) + " evaluations");
}

Outcome filippov_recovery() {
  Verdict v;
  double worst = 0.0;
  std::size_t points = 0;
  for (const char* name : {"coupled_tube_discrete.json", "coupled_tube_short.json", "coupled_tube_mixed.json"}) {
    const auto s = load_scenario(testing::scenario_path(name));
    for (const auto& y0 : {std::vector{0.0, 0.0}, std::vector{0.2, -0.1}}) {
      for (auto route : {solve_nabla_ivp_direct, solve_nabla_via_duality}) {
        const auto traj = route(s.timescale, s.dynamics(), s.t0, y0, s.solve, s.t1);
        for (const auto& sel : recover_control(s.timescale, s.system, traj, 1e-8)) {
          worst = std::max(worst, sel.residual);
          ++points;
        }
      }
    }
  }
  v.require(worst <= 1e-8, "residual " + num(worst));

  const auto s = load_scenario(testing::scenario_path("coupled_tube_discrete.json"));
  auto traj = solve_ivp(s.timescale, s.dynamics(), s.t0, std::vector{0.0, 0.0}, s.solve, s.t1);
  for (std::size_t k = 2; k < traj.size(); ++k) traj.states[k][0] += 10 * 0.02;
  bool rejected = false;
  try {
    recover_control(s.timescale, s.system, traj, 1e-8);
  } catch (const NoFeasibleControlError& e) {
    rejected = std::abs(e.t() - 1.04) < 1e-12;
  }
  v.require(rejected, "perturbed derivative was not rejected at t=1.04");
  return v.done(std::to_string(points) + " selections, max residual " + num(worst) +
                ", perturbed derivative rejected at t=1.04");
}

Outcome negative_egress() {
  Verdict v;
  const auto ts = TimeScale::make({{0, 1}});
  const auto tube = Tube::make({parse_expr("-1")}, {parse_expr("1")});
  const auto rep = check_egress(ts, testing::scalar(Mode::Nabla, "-y1"), tube, 0, 1, {});
  const auto& w = rep.worst_sample();
  v.require(!rep.all_strict_egress, "inward field certified as egress");
  v.require(w.margin < 0, "worst margin not negative");
  v.require(std::abs(tube_margin(tube, w.t, w.point)) == 0, "worst sample is not on a face");
  return v.done("all_strict_egress=false, worst margin " + num(w.margin) + " on " + to_string(w.face.side) +
                " face at t=" + num(w.t));
}

}  // namespace

int main() {
  criterion(1, "time scale duality suite", 5, duality_identities);
  criterion(2, "derivative duality", 10, derivative_duality);
  criterion(3, "solver oracles", 10, solver_oracles);
  criterion(4, "route agreement", 10, route_agreement);
  criterion(5, "tube egress reproduction", 5, coupled_egress);
  criterion(6, "viability at desk scale", 60, coupled_search);
  criterion(7, "Filippov recovery", 5, filippov_recovery);
  criterion(8, "negative egress control", 1, negative_egress);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
