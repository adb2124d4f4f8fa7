#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tscale/error.hpp"

namespace tscale {

enum class VarKind { Time, State, Control };

/// A variable of the expression language: t, y<k> or v<k> (k starts at 1).
struct Variable {
  VarKind kind = VarKind::Time;
  std::size_t index = 0;  // 1-based for State/Control, 0 for Time

  static Variable time() { return {VarKind::Time, 0}; }
  static Variable state(std::size_t k) { return {VarKind::State, k}; }
  static Variable control(std::size_t k) { return {VarKind::Control, k}; }

  /// Parses "t", "y3", "v1". Throws SyntaxError on anything else.
  static Variable from_name(std::string_view name);
  std::string name() const;

  friend auto operator<=>(const Variable&, const Variable&) = default;
};

/// Values bound to t, y1..yn and v1..vm during evaluation.
struct Env {
  double t = 0.0;
  std::span<const double> y{};
  std::span<const double> v{};
};

enum class Op { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Func { Cos, Sin, Exp, Log, Abs, Sqrt };

struct ExprNode;

/// Immutable expression tree. Copies share structure.
class Expr {
public:
  Expr();  // the constant 0

  static Expr constant(double c);
  static Expr var(Variable v);
  static Expr neg(Expr a);
  static Expr binary(Op op, Expr a, Expr b);
  static Expr call(Func f, Expr a);

  Op op() const;
  double value() const;      // Const only
  Variable variable() const; // Var only
  Func func() const;         // Call only
  Expr lhs() const;  // unary operand, call argument, or left operand
  Expr rhs() const;  // right operand of a binary node

  /// Throws UnboundVariable or DomainError.
  double eval(const Env& env) const;

  /// Text that parses back to a structurally equal tree.
  std::string str() const;

  std::set<Variable> variables() const;
  bool depends_on(Variable v) const;
  bool is_constant(double c) const;

  friend bool operator==(const Expr& a, const Expr& b);

private:
  friend struct ExprNode;
  explicit Expr(std::shared_ptr<const ExprNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const ExprNode> node_;
};

const char* function_name(Func f);

/// Syntax error carrying the byte offset and the set of tokens the parser
/// would have accepted there.
class SyntaxFailure : public Error {
public:
  SyntaxFailure(std::size_t position, std::vector<std::string> expected, const std::string& detail);

  std::size_t position() const noexcept { return position_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
  std::size_t position_;
  std::vector<std::string> expected_;
};

/// Grammar:
///   expr  := term (("+"|"-") term)*
///   term  := unary (("*"|"/") unary)*
///   unary := "-" unary | power
///   power := atom ("^" unary)?
///   atom  := number | ident | ident "(" expr ")" | "(" expr ")"
/// Exponents must not reference variables.
Expr parse_expr(std::string_view text);

/// Symbolic derivative with identity folding (x+0, x*1, x*0, x^1).
/// Throws NotDifferentiable when an abs() argument depends on `var`.
Expr diff_expr(const Expr& e, Variable var);

/// Replaces t by -t, folding -(-t) back to t.
Expr substitute_neg_time(const Expr& e);

/// -e, folding a leading negation away.
Expr negate(const Expr& e);

/// Removes double negations everywhere; used to compare dualized trees.
Expr fold_negations(const Expr& e);

}  // namespace tscale
