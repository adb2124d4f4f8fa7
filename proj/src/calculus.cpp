#include "tscale/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tscale {

namespace {

constexpr std::size_t kStencilWidth = 5;
constexpr double kNumericStep = 1e-6;

bool near(double a, double b) { return std::abs(a - b) <= kMemberTol; }

std::size_t sample_index(std::span<const std::pair<double, double>> samples, double t) {
  auto it = std::lower_bound(samples.begin(), samples.end(), t - kMemberTol,
                             [](const std::pair<double, double>& s, double v) { return s.first < v; });
  if (it == samples.end() || !near(it->first, t))
    throw Error(ErrorCode::MissingSample, "no sample at t = " + std::to_string(t));
  return static_cast<std::size_t>(it - samples.begin());
}

double dense_sample_derivative(const ScaleFunction& f, double t) {
  auto samples = f.samples();
  const std::size_t k = sample_index(samples, t);
  std::vector<double> xs(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) xs[i] = samples[i].first;
  auto [first, last] = same_segment_stencil(f.scale(), xs, k, kStencilWidth);
  if (last - first < 2)
    throw Error(ErrorCode::MissingSample, "not enough samples in the dense segment around t = " + std::to_string(t));
  std::vector<double> ys;
  for (std::size_t i = first; i < last; ++i) ys.push_back(samples[i].second);
  return interpolation_derivative(std::span(xs).subspan(first, last - first), ys, t);
}

// One-sided difference that stays inside the segment holding t. `forward`
// selects the preferred side.
double dense_numeric_derivative(const ScaleFunction& f, double t, bool forward) {
  const Segment seg = f.scale().segments()[*f.scale().segment_index(t)];
  const double ahead = seg.hi - t;
  const double behind = t - seg.lo;
  if ((forward && ahead > 0.0) || (!forward && behind <= 0.0 && ahead > 0.0)) {
    const double h = std::min(kNumericStep, ahead);
    return (f.value(t + h) - f.value(t)) / h;
  }
  if (behind > 0.0) {
    const double h = std::min(kNumericStep, behind);
    return (f.value(t) - f.value(t - h)) / h;
  }
  throw Error(ErrorCode::DegenerateScale, "no derivative on a single-point time scale");
}

DerivativeValue dense_derivative(const ScaleFunction& f, double t, Mode mode) {
  DerivativeValue out;
  out.mode = mode;
  if (f.is_expression()) {
    if (const auto& d = f.symbolic_derivative()) {
      out.value = d->eval(Env{t, {}, {}});
      out.method = DerivativeMethod::DenseSymbolic;
    } else {
      out.value = dense_numeric_derivative(f, t, mode == Mode::Delta);
      out.method = DerivativeMethod::DenseNumeric;
    }
  } else {
    out.value = dense_sample_derivative(f, t);
    out.method = DerivativeMethod::DenseNumeric;
  }
  return out;
}

}  // namespace

const char* to_string(Mode m) { return m == Mode::Delta ? "delta" : "nabla"; }

ScaleFunction ScaleFunction::from_expr(TimeScale ts, Expr e) {
  for (const auto& v : e.variables())
    if (v.kind != VarKind::Time)
      throw Error(ErrorCode::InvalidArgument, "scale function may only depend on t, found " + v.name());
  ScaleFunction f(std::move(ts));
  try {
    f.dexpr_ = diff_expr(e, Variable::time());
  } catch (const Error& err) {
    if (err.code() != ErrorCode::NotDifferentiable) throw;
  }
  f.expr_ = std::move(e);
  return f;
}

ScaleFunction ScaleFunction::from_samples(TimeScale ts, std::vector<std::pair<double, double>> samples) {
  std::sort(samples.begin(), samples.end());
  for (const auto& [t, y] : samples)
    if (!ts.contains(t)) throw Error(ErrorCode::NotMember, "sample at t = " + std::to_string(t) + " is off the scale");
  ScaleFunction f(std::move(ts));
  f.samples_ = std::move(samples);
  return f;
}

double ScaleFunction::value(double t) const {
  if (expr_) return expr_->eval(Env{t, {}, {}});
  return samples_[sample_index(samples_, t)].second;
}

bool operator==(const ScaleFunction& a, const ScaleFunction& b) {
  return a.ts_ == b.ts_ && a.expr_ == b.expr_ && a.samples_ == b.samples_;
}

DerivativeValue delta_derivative(const ScaleFunction& f, double t) {
  const TimeScale& ts = f.scale();
  const PointInfo p = ts.classify(t);
  if (near(t, ts.sup()) && p.left_scattered())
    throw Error(ErrorCode::OutsideKappa, "t = " + std::to_string(t) + " is a left-scattered supremum");
  if (p.right_scattered()) {
    return {(f.value(p.sigma) - f.value(t)) / p.mu, Mode::Delta, DerivativeMethod::ScatteredQuotient};
  }
  return dense_derivative(f, t, Mode::Delta);
}

DerivativeValue nabla_derivative(const ScaleFunction& f, double t) {
  const TimeScale& ts = f.scale();
  const PointInfo p = ts.classify(t);
  if (near(t, ts.inf()) && p.right_scattered())
    throw Error(ErrorCode::OutsideKappa, "t = " + std::to_string(t) + " is a right-scattered infimum");
  if (p.left_scattered()) {
    return {(f.value(t) - f.value(p.rho)) / p.nu, Mode::Nabla, DerivativeMethod::ScatteredQuotient};
  }
  return dense_derivative(f, t, Mode::Nabla);
}

ScaleFunction dualize_function(const ScaleFunction& f) {
  if (f.is_expression()) return ScaleFunction::from_expr(f.scale().dual(), substitute_neg_time(f.expression()));
  std::vector<std::pair<double, double>> out;
  out.reserve(f.samples().size());
  for (const auto& [t, y] : f.samples()) out.emplace_back(-t, y);
  return ScaleFunction::from_samples(f.scale().dual(), std::move(out));
}

std::vector<DualityResidual> check_derivative_duality(const ScaleFunction& f, std::span<const double> points,
                                                      Mode mode) {
  const ScaleFunction dual = dualize_function(f);
  std::vector<DualityResidual> out;
  out.reserve(points.size());
  for (double t : points) {
    DualityResidual r;
    r.t = t;
    const DerivativeValue lhs = derivative(f, t, mode);
    const DerivativeValue rhs = derivative(dual, -t, flip(mode));
    r.lhs = lhs.value;
    r.rhs = rhs.value;
    r.residual = lhs.value + rhs.value;
    r.scattered = lhs.method == DerivativeMethod::ScatteredQuotient;
    out.push_back(r);
  }
  return out;
}

double interpolation_derivative(std::span<const double> x, std::span<const double> y, double at) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw Error(ErrorCode::InvalidArgument, "stencil needs at least two points");
  // Fornberg's recursion for weights of orders 0 and 1.
  std::vector<double> w0(n, 0.0), w1(n, 0.0);
  double c1 = 1.0;
  double c4 = x[0] - at;
  w0[0] = 1.0;
  for (std::size_t i = 1; i < n; ++i) {
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - at;
    for (std::size_t j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        w1[i] = c1 * (w0[i - 1] - c5 * w1[i - 1]) / c2;
        w0[i] = -c1 * c5 * w0[i - 1] / c2;
      }
      w1[j] = (c4 * w1[j] - w0[j]) / c3;
      w0[j] = c4 * w0[j] / c3;
    }
    c1 = c2;
  }
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) d += w1[i] * y[i];
  return d;
}

std::pair<std::size_t, std::size_t> same_segment_stencil(const TimeScale& ts, std::span<const double> grid,
                                                         std::size_t k, std::size_t width) {
  const auto seg = ts.segment_index(grid[k]);
  auto same = [&](std::size_t i) { return ts.segment_index(grid[i]) == seg; };
  std::size_t first = k, last = k + 1;
  while (last - first < width) {
    const bool can_left = first > 0 && same(first - 1);
    const bool can_right = last < grid.size() && same(last);
    if (!can_left && !can_right) break;
    // Grow towards the nearer neighbour, keeping the stencil centred.
    if (can_left && (!can_right || k - first <= last - 1 - k)) --first;
    else ++last;
  }
  return {first, last};
}

}  // namespace tscale
