#include "tscale/tscale.h"

#include <cmath>
#include <fstream>
#include <string>

#include <json.hpp>

#include "tscale/scenario.hpp"
#include "tscale/selftest.hpp"

struct tsc_scenario {
  tscale::Scenario value;
};

struct tsc_trajectory {
  tscale::Trajectory value;
};

namespace {

using tscale::ErrorCode;

thread_local std::string g_last_error;

static_assert(static_cast<int>(ErrorCode::EmptyScale) + 1 == TSC_E_EMPTY_SCALE);
static_assert(static_cast<int>(ErrorCode::IoError) + 1 == TSC_E_IO);

tsc_status fail(tsc_status status, const std::string& what) {
  g_last_error = what;
  return status;
}

template <class F>
tsc_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return TSC_OK;
  } catch (const tscale::Error& e) {
    return fail(static_cast<tsc_status>(static_cast<int>(e.code()) + 1), e.what());
  } catch (const std::exception& e) {
    return fail(TSC_E_INTERNAL, e.what());
  }
}

void require(bool cond, const char* what) {
  if (!cond) throw tscale::Error(ErrorCode::InvalidArgument, what);
}

std::ofstream open_out(const char* path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw tscale::Error(ErrorCode::IoError, std::string("cannot write ") + path);
  os.precision(17);
  return os;
}

void close_out(std::ofstream& os, const char* path) {
  os.close();
  if (!os) throw tscale::Error(ErrorCode::IoError, std::string("write failed for ") + path);
}

}  // namespace

extern "C" {

const char* tsc_version(void) { return "0.1.0"; }

const char* tsc_status_name(tsc_status status) {
  if (status == TSC_OK) return "Ok";
  if (status == TSC_E_INTERNAL) return "Internal";
  if (status > TSC_OK && status < TSC_E_INTERNAL) return tscale::to_string(static_cast<ErrorCode>(status - 1));
  return "Unknown";
}

const char* tsc_last_error(void) { return g_last_error.c_str(); }

tsc_status tsc_scenario_load(const char* path, tsc_scenario** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new tsc_scenario{tscale::load_scenario(path)};
  });
}

tsc_status tsc_scenario_parse(const char* json_text, tsc_scenario** out) {
  return guarded([&] {
    require(json_text && out, "null argument");
    *out = new tsc_scenario{tscale::parse_scenario(json_text)};
  });
}

tsc_status tsc_scenario_save(const tsc_scenario* s, const char* path) {
  return guarded([&] {
    require(s && path, "null argument");
    auto os = open_out(path);
    os << tscale::serialize_scenario(s->value);
    close_out(os, path);
  });
}

tsc_status tsc_scenario_dualize(const tsc_scenario* s, tsc_scenario** out) {
  return guarded([&] {
    require(s && out, "null argument");
    *out = new tsc_scenario{tscale::dualize_scenario(s->value)};
  });
}

tsc_status tsc_scenario_dims(const tsc_scenario* s, size_t* n, size_t* m) {
  return guarded([&] {
    require(s, "null scenario");
    if (n) *n = s->value.n();
    if (m) *m = s->value.system.m();
  });
}

tsc_status tsc_scenario_window(const tsc_scenario* s, double* t0, double* t1) {
  return guarded([&] {
    require(s, "null scenario");
    if (t0) *t0 = s->value.t0;
    if (t1) *t1 = s->value.t1;
  });
}

tsc_status tsc_scenario_mode(const tsc_scenario* s, int* nabla) {
  return guarded([&] {
    require(s && nabla, "null argument");
    *nabla = s->value.mode() == tscale::Mode::Nabla;
  });
}

void tsc_scenario_free(tsc_scenario* s) { delete s; }

tsc_status tsc_solve(const tsc_scenario* s, const double* y0, size_t n, tsc_route route, tsc_trajectory** out) {
  return guarded([&] {
    require(s && y0 && out, "null argument");
    const tscale::Scenario& sc = s->value;
    require(n == sc.n(), "initial value length does not match the scenario dimension");
    const auto dyn = sc.dynamics();
    const std::span<const double> init(y0, n);
    tscale::Trajectory traj;
    if (route == TSC_ROUTE_DUALITY) {
      require(sc.mode() == tscale::Mode::Nabla, "the duality route applies to nabla scenarios");
      traj = tscale::solve_nabla_via_duality(sc.timescale, dyn, sc.t0, init, sc.solve, sc.t1);
    } else {
      traj = tscale::solve_ivp(sc.timescale, dyn, sc.t0, init, sc.solve, sc.t1);
    }
    *out = new tsc_trajectory{std::move(traj)};
  });
}

size_t tsc_trajectory_size(const tsc_trajectory* traj) { return traj ? traj->value.size() : 0; }

size_t tsc_trajectory_dim(const tsc_trajectory* traj) { return traj ? traj->value.dim() : 0; }

tsc_status tsc_trajectory_point(const tsc_trajectory* traj, size_t k, double* t, double* y) {
  return guarded([&] {
    require(traj, "null trajectory");
    require(k < traj->value.size(), "index out of range");
    if (t) *t = traj->value.grid[k];
    if (y)
      for (std::size_t i = 0; i < traj->value.dim(); ++i) y[i] = traj->value.states[k][i];
  });
}

tsc_status tsc_trajectory_write_csv(const tsc_trajectory* traj, const char* path) {
  return guarded([&] {
    require(traj && path, "null argument");
    auto os = open_out(path);
    tscale::write_trajectory_csv(os, traj->value);
    close_out(os, path);
  });
}

tsc_status tsc_trajectory_read_csv(const tsc_scenario* s, const char* path, tsc_trajectory** out) {
  return guarded([&] {
    require(s && path && out, "null argument");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw tscale::Error(ErrorCode::IoError, std::string("cannot open ") + path);
    auto traj = tscale::read_trajectory_csv(in, s->value.mode());
    if (traj.dim() != s->value.n())
      throw tscale::Error(ErrorCode::ParseError, std::string(path) + ": trajectory dimension does not match scenario");
    *out = new tsc_trajectory{std::move(traj)};
  });
}

void tsc_trajectory_free(tsc_trajectory* traj) { delete traj; }

tsc_status tsc_check_egress(const tsc_scenario* s, const char* csv_path, tsc_egress_summary* out) {
  return guarded([&] {
    require(s && out, "null argument");
    const tscale::Scenario& sc = s->value;
    const auto report = tscale::check_egress(sc.timescale, sc.dynamics(), sc.tube, sc.t0, sc.t1, sc.egress);
    if (csv_path) {
      auto os = open_out(csv_path);
      os << "face,side,t";
      for (std::size_t i = 1; i <= sc.n(); ++i) os << ",y" << i;
      os << ",margin\n";
      for (const auto& smp : report.samples) {
        os << smp.face.index + 1 << ',' << tscale::to_string(smp.face.side) << ',' << smp.t;
        for (double y : smp.point) os << ',' << y;
        os << ',' << smp.margin << '\n';
      }
      close_out(os, csv_path);
    }
    const auto& w = report.worst_sample();
    *out = {report.all_strict_egress, report.samples.size(), w.face.index + 1,
            w.face.side == tscale::Side::Upper, w.t, w.margin};
  });
}

tsc_status tsc_search_viable(const tsc_scenario* s, int override_egress, tsc_search_summary* out, double* y_bar,
                             tsc_trajectory** traj, const char* json_path) {
  return guarded([&] {
    require(s && out, "null argument");
    const tscale::Scenario& sc = s->value;
    tscale::SearchOptions opts = sc.search;
    opts.override_egress = override_egress != 0;
    auto result =
        tscale::search_viable(sc.timescale, sc.dynamics(), sc.tube, sc.t0, sc.t1, sc.solve, opts, sc.egress);
    if (json_path) {
      nlohmann::ordered_json doc;
      doc["found"] = result.found;
      doc["y_bar"] = result.y_bar;
      // JSON has no infinities; a search where every candidate failed reports null.
      if (std::isfinite(result.min_tube_margin))
        doc["min_tube_margin"] = result.min_tube_margin;
      else
        doc["min_tube_margin"] = nullptr;
      doc["evaluations"] = result.evaluations;
      auto os = open_out(json_path);
      os << doc.dump(2) << '\n';
      close_out(os, json_path);
    }
    *out = {result.found, result.min_tube_margin, result.evaluations, result.levels};
    if (y_bar) std::copy(result.y_bar.begin(), result.y_bar.end(), y_bar);
    if (traj) *traj = new tsc_trajectory{std::move(result.trajectory)};
  });
}

tsc_status tsc_recover_control(const tsc_scenario* s, const tsc_trajectory* traj, double tol, const char* csv_path,
                               tsc_recovery_summary* out) {
  if (out) *out = {0, 0.0, NAN, NAN};
  return guarded([&] {
    require(s && traj, "null argument");
    const tscale::Scenario& sc = s->value;
    std::vector<tscale::ControlSample> samples;
    try {
      samples = tscale::recover_control(sc.timescale, sc.system, traj->value, tol);
    } catch (const tscale::NoFeasibleControlError& e) {
      if (out) {
        out->fail_t = e.t();
        out->fail_residual = e.best_residual();
      }
      throw;
    }
    if (csv_path) {
      auto os = open_out(csv_path);
      os << 't';
      for (std::size_t j = 1; j <= sc.system.m(); ++j) os << ",v" << j;
      os << ",residual\n";
      for (const auto& c : samples) {
        os << c.t;
        for (double v : c.v) os << ',' << v;
        os << ',' << c.residual << '\n';
      }
      close_out(os, csv_path);
    }
    if (out) {
      out->points = samples.size();
      for (const auto& c : samples) out->max_residual = std::max(out->max_residual, c.residual);
    }
  });
}

tsc_status tsc_derivative_duality(const tsc_scenario* s, const char* expr, int nabla, const char* csv_path,
                                  double* max_residual) {
  return guarded([&] {
    require(s && expr, "null argument");
    const tscale::Scenario& sc = s->value;
    const tscale::Mode mode = nabla ? tscale::Mode::Nabla : tscale::Mode::Delta;
    const auto f = tscale::ScaleFunction::from_expr(sc.timescale, tscale::parse_expr(expr));
    const tscale::TimeScale kappa =
        sc.timescale.trim_kappa(nabla ? tscale::KappaSide::Lower : tscale::KappaSide::Upper);
    std::vector<double> points;
    for (double t : sc.grid())
      if (kappa.contains(t)) points.push_back(t);
    const auto residuals = tscale::check_derivative_duality(f, points, mode);
    double worst = 0.0;
    for (const auto& r : residuals) worst = std::max(worst, std::abs(r.residual));
    if (csv_path) {
      auto os = open_out(csv_path);
      os << "t,lhs,rhs,residual\n";
      for (const auto& r : residuals) os << r.t << ',' << r.lhs << ',' << r.rhs << ',' << r.residual << '\n';
      close_out(os, csv_path);
    }
    if (max_residual) *max_residual = worst;
  });
}

tsc_status tsc_selftest(tsc_selftest_callback cb, void* user, size_t* passed, size_t* failed) {
  return guarded([&] {
    const auto cases = tscale::run_selftest([&](const tscale::SelfTestCase& c) {
      if (cb) cb(c.name.c_str(), c.passed, c.detail.c_str(), user);
    });
    std::size_t ok = 0;
    for (const auto& c : cases) ok += c.passed;
    if (passed) *passed = ok;
    if (failed) *failed = cases.size() - ok;
  });
}

}  // extern "C"
