#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tscale/expr.hpp"
#include "tscale/timescale.hpp"

namespace tscale {

/// Forward (delta) or backward (nabla) calculus.
enum class Mode { Delta, Nabla };

inline Mode flip(Mode m) { return m == Mode::Delta ? Mode::Nabla : Mode::Delta; }
const char* to_string(Mode m);

enum class DerivativeMethod { ScatteredQuotient, DenseSymbolic, DenseNumeric };

struct DerivativeValue {
  double value = 0.0;
  Mode mode = Mode::Delta;
  DerivativeMethod method = DerivativeMethod::ScatteredQuotient;
};

/// A real function on a time scale, given either as an expression in t or as
/// samples on a grid of members.
class ScaleFunction {
public:
  /// The expression may only reference t.
  static ScaleFunction from_expr(TimeScale ts, Expr e);
  /// Samples must be keyed by members; they are sorted on construction.
  static ScaleFunction from_samples(TimeScale ts, std::vector<std::pair<double, double>> samples);

  const TimeScale& scale() const { return ts_; }
  bool is_expression() const { return expr_.has_value(); }
  const Expr& expression() const { return *expr_; }
  /// d/dt of the expression, absent for sample form or when abs() blocks it.
  const std::optional<Expr>& symbolic_derivative() const { return dexpr_; }
  std::span<const std::pair<double, double>> samples() const { return samples_; }

  /// Throws MissingSample for a sample-form function without a value at t.
  double value(double t) const;

  friend bool operator==(const ScaleFunction& a, const ScaleFunction& b);

private:
  ScaleFunction(TimeScale ts) : ts_(std::move(ts)) {}

  TimeScale ts_;
  std::optional<Expr> expr_;
  std::optional<Expr> dexpr_;
  std::vector<std::pair<double, double>> samples_;
};

/// f^Delta(t); t must be in T^kappa.
DerivativeValue delta_derivative(const ScaleFunction& f, double t);

/// f^nabla(t); t must be in T_kappa.
DerivativeValue nabla_derivative(const ScaleFunction& f, double t);

inline DerivativeValue derivative(const ScaleFunction& f, double t, Mode mode) {
  return mode == Mode::Delta ? delta_derivative(f, t) : nabla_derivative(f, t);
}

/// f*(s) = f(-s) on the dual scale.
ScaleFunction dualize_function(const ScaleFunction& f);

struct DualityResidual {
  double t = 0.0;
  double lhs = 0.0;       // f^Delta(t) or f^nabla(t)
  double rhs = 0.0;       // (f*)^nabla(-t) or (f*)^Delta(-t) on the dual scale
  double residual = 0.0;  // lhs + rhs
  bool scattered = false;
};

/// For mode Delta checks f^Delta(t) + (f*)^nabla(-t) = 0, for Nabla checks
/// f^nabla(t) + (f*)^Delta(-t) = 0, at each point.
std::vector<DualityResidual> check_derivative_duality(const ScaleFunction& f, std::span<const double> points,
                                                      Mode mode);

/// Derivative at `at` of the polynomial through (x[i], y[i]). Uses Fornberg
/// weights; x need not be uniform.
double interpolation_derivative(std::span<const double> x, std::span<const double> y, double at);

/// Index range [first, last) of up to `width` grid points nearest to index k
/// that lie in the same segment of `ts` as grid[k].
std::pair<std::size_t, std::size_t> same_segment_stencil(const TimeScale& ts, std::span<const double> grid,
                                                         std::size_t k, std::size_t width);

}  // namespace tscale
