#include "tscale/viability.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "parallel.hpp"

namespace tscale {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

bool in_kappa(const TimeScale& ts, double t, Mode mode) {
  const PointInfo p = ts.classify(t);
  if (mode == Mode::Delta) return !(std::abs(t - ts.sup()) <= kMemberTol && p.left_scattered());
  return !(std::abs(t - ts.inf()) <= kMemberTol && p.right_scattered());
}

// Odometer over a lattice with per_axis points on each axis.
bool step_lattice(std::vector<std::size_t>& idx, std::size_t per_axis) {
  for (std::size_t j = 0; j < idx.size(); ++j) {
    if (++idx[j] < per_axis) return true;
    idx[j] = 0;
  }
  return false;
}

class EgressEvaluator {
public:
  EgressEvaluator(const TimeScale& ts, const FixedDynamics& dyn, const Tube& tube)
      : dyn_(dyn), f_(dyn.n()) {
    for (std::size_t i = 0; i < tube.n(); ++i) {
      lower_.push_back(ScaleFunction::from_expr(ts, tube.lower()[i]));
      upper_.push_back(ScaleFunction::from_expr(ts, tube.upper()[i]));
    }
  }

  struct FaceAtTime {
    double value = 0.0;       // bound value
    double derivative = 0.0;  // bound's time-scale derivative
  };

  FaceAtTime face_at(Face face, double t) const {
    const ScaleFunction& sf = face.side == Side::Lower ? lower_[face.index] : upper_[face.index];
    return {sf.value(t), derivative(sf, t, dyn_.mode()).value};
  }

  double margin(Face face, double t, const FaceAtTime& fb, std::span<const double> point) {
    dyn_.eval(t, point, f_);
    const double fi = f_[face.index];
    return face.side == Side::Lower ? fb.derivative - fi : fi - fb.derivative;
  }

private:
  const FixedDynamics& dyn_;
  std::vector<ScaleFunction> lower_, upper_;
  std::vector<double> f_;
};

}  // namespace

const char* to_string(Side s) { return s == Side::Lower ? "lower" : "upper"; }

Tube Tube::make(std::vector<Expr> lower, std::vector<Expr> upper, bool swapped) {
  if (lower.empty() || lower.size() != upper.size())
    throw Error(ErrorCode::ValidationError, "tube needs matching nonempty lower and upper bound lists");
  for (const auto* side : {&lower, &upper})
    for (const Expr& e : *side)
      for (const Variable& v : e.variables())
        if (v.kind != VarKind::Time)
          throw Error(ErrorCode::ValidationError, "tube bound " + e.str() + " may only depend on t");
  Tube tube;
  tube.lower_ = std::move(lower);
  tube.upper_ = std::move(upper);
  tube.swapped_ = swapped;
  return tube;
}

std::pair<double, double> Tube::interval(std::size_t i, double t) const {
  const Env env{t, {}, {}};
  const double a = lower_[i].eval(env);
  const double b = upper_[i].eval(env);
  return swapped_ ? std::pair{b, a} : std::pair{a, b};
}

void Tube::validate(std::span<const double> times) const {
  for (double t : times) {
    for (std::size_t i = 0; i < n(); ++i) {
      const Env env{t, {}, {}};
      const double lo = lower_[i].eval(env);
      const double hi = upper_[i].eval(env);
      const bool ok = swapped_ ? hi < lo : lo < hi;
      if (!ok)
        throw Error(ErrorCode::ValidationError,
                    "tube bounds of coordinate " + std::to_string(i + 1) + " are not strictly ordered at t = " +
                        fmt(t) + " (lower " + fmt(lo) + ", upper " + fmt(hi) + ")");
    }
  }
}

Tube Tube::dual() const {
  std::vector<Expr> lo, hi;
  for (const Expr& e : upper_) lo.push_back(substitute_neg_time(e));
  for (const Expr& e : lower_) hi.push_back(substitute_neg_time(e));
  return make(std::move(lo), std::move(hi), !swapped_);
}

double tube_margin(const Tube& tube, double t, std::span<const double> y) {
  if (y.size() != tube.n()) throw Error(ErrorCode::InvalidArgument, "state dimension does not match tube");
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < tube.n(); ++i) {
    const auto [lo, hi] = tube.interval(i, t);
    m = std::min({m, hi - y[i], y[i] - lo});
  }
  return m;
}

double min_tube_margin(const Tube& tube, const Trajectory& traj) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < traj.size(); ++k) m = std::min(m, tube_margin(tube, traj.grid[k], traj.states[k]));
  return m;
}

EgressReport check_egress(const TimeScale& ts, const FixedDynamics& dyn, const Tube& tube, double t0, double t1,
                          const EgressSampling& sampling) {
  if (tube.n() != dyn.n()) throw Error(ErrorCode::InvalidArgument, "tube and dynamics dimensions differ");
  if (sampling.tangential_samples == 0) throw Error(ErrorCode::InvalidArgument, "tangential_samples must be positive");
  const std::size_t n = dyn.n();
  const std::size_t k = sampling.tangential_samples;
  EgressEvaluator eval(ts, dyn, tube);

  EgressReport report;
  std::vector<std::pair<double, double>> box(n);
  for (double t : ts.grid(t0, t1, sampling.h_dense)) {
    if (!in_kappa(ts, t, dyn.mode())) continue;
    for (std::size_t j = 0; j < n; ++j) box[j] = tube.interval(j, t);
    for (std::size_t i = 0; i < n; ++i) {
      for (Side side : {Side::Lower, Side::Upper}) {
        const Face face{i, side};
        const auto fb = eval.face_at(face, t);
        std::vector<std::size_t> idx(n - 1, 0);
        do {
          std::vector<double> point(n);
          for (std::size_t j = 0, q = 0; j < n; ++j) {
            if (j == i) {
              point[j] = fb.value;
              continue;
            }
            const auto [lo, hi] = box[j];
            point[j] = lo + (hi - lo) * (static_cast<double>(idx[q++] + 1) / static_cast<double>(k + 1));
          }
          const double m = eval.margin(face, t, fb, point);
          report.samples.push_back({face, t, std::move(point), m});
        } while (step_lattice(idx, k));
      }
    }
  }
  if (report.samples.empty()) throw Error(ErrorCode::BadWindow, "window has no points where the bounds are differentiable");

  auto worst_of = [&] {
    std::size_t w = 0;
    for (std::size_t s = 1; s < report.samples.size(); ++s)
      if (report.samples[s].margin < report.samples[w].margin) w = s;
    return w;
  };
  report.worst = worst_of();

  // Local refinement of the tangential lattice around the worst sample.
  if (n >= 2) {
    for (std::size_t round = 1; round <= sampling.refinement_rounds; ++round) {
      const EgressSample centre = report.samples[report.worst];
      const double t = centre.t;
      const auto fb = eval.face_at(centre.face, t);
      const double shrink = std::ldexp(1.0, -static_cast<int>(round));
      std::vector<std::size_t> idx(n - 1, 0);
      do {
        std::vector<double> point = centre.point;
        bool inside = true, moved = false;
        for (std::size_t j = 0, q = 0; j < n; ++j) {
          if (j == centre.face.index) continue;
          const auto [lo, hi] = tube.interval(j, t);
          const int off = static_cast<int>(idx[q++]) - 1;
          moved = moved || off != 0;
          point[j] += off * (hi - lo) / static_cast<double>(k + 1) * shrink;
          inside = inside && lo < point[j] && point[j] < hi;
        }
        if (!moved || !inside) continue;
        const double m = eval.margin(centre.face, t, fb, point);
        report.samples.push_back({centre.face, t, std::move(point), m});
      } while (step_lattice(idx, 3));
      report.worst = worst_of();
    }
  }

  report.all_strict_egress = std::all_of(report.samples.begin(), report.samples.end(),
                                         [](const EgressSample& s) { return s.margin > 0.0; });
  return report;
}

ViabilityResult search_viable(const TimeScale& ts, const FixedDynamics& dyn, const Tube& tube, double t0, double t1,
                              const SolveOptions& solve, const SearchOptions& options,
                              const EgressSampling& sampling) {
  if (tube.n() != dyn.n()) throw Error(ErrorCode::InvalidArgument, "tube and dynamics dimensions differ");
  if (options.lattice_size == 0) throw Error(ErrorCode::InvalidArgument, "lattice_size must be positive");
  if (!options.override_egress) {
    const EgressReport report = check_egress(ts, dyn, tube, t0, t1, sampling);
    if (!report.all_strict_egress) {
      const EgressSample& w = report.worst_sample();
      throw Error(ErrorCode::NoEgressCertificate,
                  "face " + std::to_string(w.face.index + 1) + "/" + to_string(w.face.side) + " at t = " + fmt(w.t) +
                      " has margin " + fmt(w.margin));
    }
  }

  const std::size_t n = dyn.n();
  const std::size_t L = options.lattice_size;
  std::vector<std::pair<double, double>> section(n);
  std::vector<double> step(n);
  for (std::size_t i = 0; i < n; ++i) {
    section[i] = tube.interval(i, t0);
    step[i] = (section[i].second - section[i].first) / static_cast<double>(L + 1);
  }

  auto fitness = [&](const std::vector<double>& y0) {
    try {
      return min_tube_margin(tube, solve_ivp(ts, dyn, t0, y0, solve, t1));
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::BlowUp:
        case ErrorCode::DomainError:
        case ErrorCode::ImplicitSolveFailed:
        case ErrorCode::NonRegressive: return kNegInf;
        default: throw;
      }
    }
  };

  ViabilityResult result;
  double best_fit = kNegInf;
  auto consider = [&](std::vector<std::vector<double>>& batch) {
    std::vector<double> fit(batch.size());
    detail::parallel_for(batch.size(), [&](std::size_t c) { fit[c] = fitness(batch[c]); });
    result.evaluations += batch.size();
    for (std::size_t c = 0; c < batch.size(); ++c) {
      const bool better = result.y_bar.empty() || fit[c] > best_fit ||
                          (fit[c] == best_fit && batch[c] < result.y_bar);
      if (better) {
        best_fit = fit[c];
        result.y_bar = batch[c];
      }
    }
  };

  std::vector<std::vector<double>> batch;
  std::vector<std::size_t> idx(n, 0);
  do {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = section[i].first + step[i] * static_cast<double>(idx[i] + 1);
    batch.push_back(std::move(y));
  } while (step_lattice(idx, L));
  consider(batch);

  const double centre = (static_cast<double>(L) - 1.0) / 2.0;
  for (std::size_t level = 1; level <= options.refinement_levels; ++level) {
    const double shrink = std::ldexp(1.0, -static_cast<int>(level));
    batch.clear();
    std::fill(idx.begin(), idx.end(), 0);
    const std::vector<double> anchor = result.y_bar;
    do {
      std::vector<double> y(n);
      bool inside = true, moved = false;
      for (std::size_t i = 0; i < n; ++i) {
        const double off = static_cast<double>(idx[i]) - centre;
        moved = moved || off != 0.0;
        y[i] = anchor[i] + off * step[i] * shrink;
        inside = inside && section[i].first < y[i] && y[i] < section[i].second;
      }
      if (moved && inside) batch.push_back(std::move(y));
    } while (step_lattice(idx, L));
    consider(batch);
    result.levels = level;
  }

  result.min_tube_margin = best_fit;
  result.found = best_fit >= 0.0;
  if (std::isfinite(best_fit)) result.trajectory = solve_ivp(ts, dyn, t0, result.y_bar, solve, t1);
  return result;
}

}  // namespace tscale
