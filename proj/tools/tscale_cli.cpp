#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tscale/tscale.h"

namespace {

constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

struct Failure {
  int code;
};

int exit_code(tsc_status st) { return st == TSC_E_INVALID_ARGUMENT ? kExitUsage : kExitDomain; }

void check(tsc_status st) {
  if (st == TSC_OK) return;
  std::fprintf(stderr, "error: %s\n", tsc_last_error());
  throw Failure{exit_code(st)};
}

class Scenario {
public:
  explicit Scenario(const std::string& path) { check(tsc_scenario_load(path.c_str(), &h_)); }
  explicit Scenario(tsc_scenario* h) : h_(h) {}
  ~Scenario() { tsc_scenario_free(h_); }
  Scenario(const Scenario&) = delete;
  Scenario& operator=(const Scenario&) = delete;
  tsc_scenario* get() const { return h_; }

private:
  tsc_scenario* h_ = nullptr;
};

class Trajectory {
public:
  Trajectory() = default;
  ~Trajectory() { tsc_trajectory_free(h_); }
  Trajectory(const Trajectory&) = delete;
  Trajectory& operator=(const Trajectory&) = delete;
  tsc_trajectory** out() { return &h_; }
  tsc_trajectory* get() const { return h_; }

private:
  tsc_trajectory* h_ = nullptr;
};

const char* c_str_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

void wrote(const std::string& path) {
  if (!path.empty()) std::printf("wrote %s\n", path.c_str());
}

int cmd_check_egress(const std::string& scenario, const std::string& out) {
  Scenario s(scenario);
  tsc_egress_summary sum{};
  check(tsc_check_egress(s.get(), c_str_or_null(out), &sum));
  std::printf("all_strict_egress=%s samples=%zu worst_face=%zu/%s worst_t=%.17g worst_margin=%.17g\n",
              sum.all_strict_egress ? "true" : "false", sum.samples, sum.worst_face,
              sum.worst_upper ? "upper" : "lower", sum.worst_t, sum.worst_margin);
  wrote(out);
  return 0;
}

int cmd_solve(const std::string& scenario, const std::vector<double>& y0, const std::string& route,
              const std::string& out) {
  Scenario s(scenario);
  Trajectory traj;
  check(tsc_solve(s.get(), y0.data(), y0.size(), route == "duality" ? TSC_ROUTE_DUALITY : TSC_ROUTE_DIRECT,
                  traj.out()));
  const std::size_t n = tsc_trajectory_size(traj.get());
  std::vector<double> last(tsc_trajectory_dim(traj.get()));
  double t = 0.0;
  check(tsc_trajectory_point(traj.get(), n - 1, &t, last.data()));
  std::printf("points=%zu t_end=%.17g y_end=", n, t);
  for (std::size_t i = 0; i < last.size(); ++i) std::printf("%s%.17g", i ? "," : "", last[i]);
  std::printf("\n");
  if (!out.empty()) check(tsc_trajectory_write_csv(traj.get(), out.c_str()));
  wrote(out);
  return 0;
}

int cmd_search(const std::string& scenario, const std::string& out, const std::string& traj_out, bool override) {
  Scenario s(scenario);
  std::size_t n = 0;
  check(tsc_scenario_dims(s.get(), &n, nullptr));
  std::vector<double> y_bar(n);
  tsc_search_summary sum{};
  Trajectory traj;
  check(tsc_search_viable(s.get(), override, &sum, y_bar.data(), traj.out(), c_str_or_null(out)));
  std::printf("found=%s min_tube_margin=%.17g evaluations=%zu y_bar=", sum.found ? "true" : "false",
              sum.min_tube_margin, sum.evaluations);
  for (std::size_t i = 0; i < n; ++i) std::printf("%s%.17g", i ? "," : "", y_bar[i]);
  std::printf("\n");
  wrote(out);
  if (!traj_out.empty()) {
    if (tsc_trajectory_size(traj.get()) == 0) {
      std::fprintf(stderr, "error: no candidate produced a trajectory\n");
      return kExitDomain;
    }
    check(tsc_trajectory_write_csv(traj.get(), traj_out.c_str()));
    wrote(traj_out);
  }
  return 0;
}

int cmd_recover(const std::string& scenario, const std::string& traj_path, double tol, const std::string& out) {
  Scenario s(scenario);
  Trajectory traj;
  check(tsc_trajectory_read_csv(s.get(), traj_path.c_str(), traj.out()));
  tsc_recovery_summary sum{};
  const tsc_status st = tsc_recover_control(s.get(), traj.get(), tol, c_str_or_null(out), &sum);
  if (st == TSC_E_NO_FEASIBLE_CONTROL)
    std::printf("recovered=false t=%.17g best_residual=%.17g\n", sum.fail_t, sum.fail_residual);
  check(st);
  std::printf("recovered=true points=%zu max_residual=%.17g\n", sum.points, sum.max_residual);
  wrote(out);
  return 0;
}

int cmd_dualize(const std::string& scenario, const std::string& out) {
  Scenario s(scenario);
  tsc_scenario* d = nullptr;
  check(tsc_scenario_dualize(s.get(), &d));
  Scenario dual(d);
  check(tsc_scenario_save(dual.get(), out.c_str()));
  double t0 = 0.0, t1 = 0.0;
  int nabla = 0;
  check(tsc_scenario_window(dual.get(), &t0, &t1));
  check(tsc_scenario_mode(dual.get(), &nabla));
  std::printf("mode=%s window=[%.17g,%.17g]\n", nabla ? "nabla" : "delta", t0, t1);
  wrote(out);
  return 0;
}

int cmd_check_duality(const std::string& scenario, const std::string& expr, bool nabla, const std::string& out) {
  Scenario s(scenario);
  double worst = 0.0;
  check(tsc_derivative_duality(s.get(), expr.c_str(), nabla, c_str_or_null(out), &worst));
  std::printf("identity=%s max_residual=%.17g\n", nabla ? "nabla" : "delta", worst);
  wrote(out);
  return 0;
}

int cmd_selftest() {
  std::size_t passed = 0, failed = 0;
  check(tsc_selftest(
      [](const char* name, int ok, const char* detail, void*) {
        std::printf("%s %s (%s)\n", ok ? "PASS" : "FAIL", name, detail);
      },
      nullptr, &passed, &failed));
  std::printf("passed=%zu failed=%zu\n", passed, failed);
  return failed == 0 ? 0 : kExitDomain;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dynamic equations, strict egress and viability on time scales"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tsc_version());

  std::string scenario, out, traj_path, route = "direct", expr;
  std::vector<double> y0;
  bool override = false, nabla = false;
  double tol = 1e-8;

  auto* egress = app.add_subcommand("check-egress", "Sample every tube face and report strict egress margins");
  egress->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  egress->add_option("--out", out, "Egress CSV (face,side,t,y1..yn,margin)");

  auto* solve = app.add_subcommand("solve", "Integrate the scenario with its fixed control");
  solve->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--y0", y0, "Initial value, comma separated")->required()->delimiter(',');
  solve->add_option("--out", out, "Trajectory CSV");
  solve->add_option("--route", route, "Nabla route")->check(CLI::IsMember({"direct", "duality"}));

  auto* search = app.add_subcommand("search", "Search for a viable initial value");
  search->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  search->add_option("--out", out, "Result JSON");
  search->add_option("--traj", traj_path, "Trajectory CSV of the best candidate");
  search->add_flag("--override", override, "Search even without an egress certificate");

  auto* recover = app.add_subcommand("recover-control", "Recover an admissible control from a trajectory");
  recover->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  recover->add_option("--traj", traj_path, "Trajectory CSV")->required()->check(CLI::ExistingFile);
  recover->add_option("--tol", tol, "Residual tolerance")->check(CLI::PositiveNumber);
  recover->add_option("--out", out, "Controls CSV (t,v1..vm,residual)");

  auto* dualize = app.add_subcommand("dualize", "Write the dual scenario");
  dualize->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  dualize->add_option("--out", out, "Dual scenario JSON")->required();

  auto* duality = app.add_subcommand("check-duality", "Derivative duality residuals of an expression in t");
  duality->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  duality->add_option("--expr", expr, "Expression in t")->required();
  duality->add_flag("--nabla", nabla, "Check the nabla identity instead of the delta one");
  duality->add_option("--out", out, "Residual CSV (t,lhs,rhs,residual)");

  auto* selftest = app.add_subcommand("selftest", "Run the built-in duality and solver checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  const auto start = std::chrono::steady_clock::now();
  int rc = 0;
  try {
    if (*egress) rc = cmd_check_egress(scenario, out);
    else if (*solve) rc = cmd_solve(scenario, y0, route, out);
    else if (*search) rc = cmd_search(scenario, out, traj_path, override);
    else if (*recover) rc = cmd_recover(scenario, traj_path, tol, out);
    else if (*dualize) rc = cmd_dualize(scenario, out);
    else if (*duality) rc = cmd_check_duality(scenario, expr, nabla, out);
    else if (*selftest) rc = cmd_selftest();
  } catch (const Failure& f) {
    rc = f.code;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::fprintf(stderr, "%s finished in %.3f s (exit %d)\n", app.get_subcommands().front()->get_name().c_str(), secs,
               rc);
  return rc;
}
