#include "tscale/expr.hpp"

#include <charconv>
#include <cctype>
#include <cmath>
#include <functional>

namespace tscale {

struct ExprNode {
  Op op = Op::Const;
  double value = 0.0;
  Variable var{};
  Func func = Func::Cos;
  std::shared_ptr<const ExprNode> a;
  std::shared_ptr<const ExprNode> b;
};

namespace {

using NodePtr = std::shared_ptr<const ExprNode>;

std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

bool is_integer(double x) { return std::isfinite(x) && x == std::trunc(x); }

double eval_node(const ExprNode& n, const Env& env) {
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: {
      switch (n.var.kind) {
        case VarKind::Time: return env.t;
        case VarKind::State:
          if (n.var.index == 0 || n.var.index > env.y.size())
            throw Error(ErrorCode::UnboundVariable, n.var.name());
          return env.y[n.var.index - 1];
        case VarKind::Control:
          if (n.var.index == 0 || n.var.index > env.v.size())
            throw Error(ErrorCode::UnboundVariable, n.var.name());
          return env.v[n.var.index - 1];
      }
      return 0.0;
    }
    case Op::Neg: return -eval_node(*n.a, env);
    case Op::Add: return eval_node(*n.a, env) + eval_node(*n.b, env);
    case Op::Sub: return eval_node(*n.a, env) - eval_node(*n.b, env);
    case Op::Mul: return eval_node(*n.a, env) * eval_node(*n.b, env);
    case Op::Div: {
      const double num = eval_node(*n.a, env);
      const double den = eval_node(*n.b, env);
      if (den == 0.0) throw Error(ErrorCode::DomainError, "division by zero");
      return num / den;
    }
    case Op::Pow: {
      const double base = eval_node(*n.a, env);
      const double ex = eval_node(*n.b, env);
      if (base < 0.0 && !is_integer(ex))
        throw Error(ErrorCode::DomainError, "non-integer power of a negative base");
      if (base == 0.0 && ex < 0.0) throw Error(ErrorCode::DomainError, "negative power of zero");
      return std::pow(base, ex);
    }
    case Op::Call: {
      const double x = eval_node(*n.a, env);
      switch (n.func) {
        case Func::Cos: return std::cos(x);
        case Func::Sin: return std::sin(x);
        case Func::Exp: return std::exp(x);
        case Func::Log:
          if (!(x > 0.0)) throw Error(ErrorCode::DomainError, "log of a non-positive value");
          return std::log(x);
        case Func::Abs: return std::abs(x);
        case Func::Sqrt:
          if (x < 0.0) throw Error(ErrorCode::DomainError, "sqrt of a negative value");
          return std::sqrt(x);
      }
      return 0.0;
    }
  }
  return 0.0;
}

int precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    case Op::Const:
    case Op::Var:
    case Op::Call: return 5;
  }
  return 5;
}

char op_char(Op op) {
  switch (op) {
    case Op::Add: return '+';
    case Op::Sub: return '-';
    case Op::Mul: return '*';
    case Op::Div: return '/';
    case Op::Pow: return '^';
    default: return '?';
  }
}

void print_node(const ExprNode& n, std::string& out);

void print_child(const ExprNode& child, bool parens, std::string& out) {
  if (parens) out += '(';
  print_node(child, out);
  if (parens) out += ')';
}

void print_node(const ExprNode& n, std::string& out) {
  switch (n.op) {
    case Op::Const:
      // Negative constants never come out of the parser; keep them
      // parenthesized so the text is still valid.
      if (std::signbit(n.value) && n.value != 0.0) {
        out += "(-" + format_double(-n.value) + ")";
      } else {
        out += format_double(n.value);
      }
      return;
    case Op::Var: out += n.var.name(); return;
    case Op::Neg:
      out += '-';
      print_child(*n.a, precedence(n.a->op) < precedence(Op::Neg), out);
      return;
    case Op::Call:
      out += function_name(n.func);
      out += '(';
      print_node(*n.a, out);
      out += ')';
      return;
    case Op::Pow:
      print_child(*n.a, precedence(n.a->op) <= precedence(Op::Pow), out);
      out += '^';
      print_child(*n.b, precedence(n.b->op) < precedence(Op::Neg), out);
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const int p = precedence(n.op);
      print_child(*n.a, precedence(n.a->op) < p, out);
      if (p == 1) {
        out += ' ';
        out += op_char(n.op);
        out += ' ';
      } else {
        out += op_char(n.op);
      }
      print_child(*n.b, precedence(n.b->op) <= p, out);
      return;
    }
  }
}

bool equal_nodes(const ExprNode* x, const ExprNode* y) {
  if (x == y) return true;
  if (!x || !y || x->op != y->op) return false;
  switch (x->op) {
    case Op::Const: return x->value == y->value;
    case Op::Var: return x->var == y->var;
    case Op::Neg: return equal_nodes(x->a.get(), y->a.get());
    case Op::Call: return x->func == y->func && equal_nodes(x->a.get(), y->a.get());
    default: return equal_nodes(x->a.get(), y->a.get()) && equal_nodes(x->b.get(), y->b.get());
  }
}

void collect_vars(const ExprNode& n, std::set<Variable>& out) {
  if (n.op == Op::Var) out.insert(n.var);
  if (n.a) collect_vars(*n.a, out);
  if (n.b) collect_vars(*n.b, out);
}

NodePtr make(Op op, double value, Variable var, Func f, NodePtr a, NodePtr b) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->value = value;
  n->var = var;
  n->func = f;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr parse() {
    Expr e = expr();
    skip_ws();
    if (pos_ < text_.size()) fail({"operator", "end of input"}, "unexpected trailing input");
    return e;
  }

private:
  [[noreturn]] void fail(std::vector<std::string> expected, const std::string& detail) {
    throw SyntaxFailure(pos_, std::move(expected), detail);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Expr expr() {
    Expr left = term();
    for (;;) {
      if (accept('+')) left = Expr::binary(Op::Add, left, term());
      else if (accept('-')) left = Expr::binary(Op::Sub, left, term());
      else return left;
    }
  }

  Expr term() {
    Expr left = unary();
    for (;;) {
      if (accept('*')) left = Expr::binary(Op::Mul, left, unary());
      else if (accept('/')) left = Expr::binary(Op::Div, left, unary());
      else return left;
    }
  }

  Expr unary() {
    if (accept('-')) return Expr::neg(unary());
    return power();
  }

  Expr power() {
    Expr base = atom();
    skip_ws();
    const std::size_t at = pos_;
    if (accept('^')) {
      Expr ex = unary();
      if (!ex.variables().empty()) {
        pos_ = at;
        fail({"constant exponent"}, "exponent must not depend on variables");
      }
      return Expr::binary(Op::Pow, base, ex);
    }
    return base;
  }

  Expr atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail({"number", "identifier", "(", "-"}, "unexpected end of input");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr inner = expr();
      if (!accept(')')) fail({")"}, "unbalanced parenthesis");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail({"number", "identifier", "(", "-"}, std::string("unexpected character '") + c + "'");
  }

  Expr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p < text_.size() && std::isdigit(static_cast<unsigned char>(text_[p]))) {
        pos_ = p;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double value = 0.0;
    auto res = std::from_chars(text_.data() + start, text_.data() + pos_, value);
    if (res.ec != std::errc() || res.ptr != text_.data() + pos_) {
      pos_ = start;
      fail({"number"}, "malformed number");
    }
    return Expr::constant(value);
  }

  Expr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      ++pos_;
    const std::string name(text_.substr(start, pos_ - start));
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == '(') {
      static const std::pair<const char*, Func> table[] = {
          {"cos", Func::Cos}, {"sin", Func::Sin}, {"exp", Func::Exp},
          {"log", Func::Log}, {"abs", Func::Abs}, {"sqrt", Func::Sqrt}};
      for (const auto& [fname, f] : table) {
        if (name == fname) {
          ++pos_;
          Expr arg = expr();
          if (!accept(')')) fail({")"}, "unclosed call to " + name);
          return Expr::call(f, arg);
        }
      }
      throw Error(ErrorCode::UnknownFunction, name);
    }
    try {
      return Expr::var(Variable::from_name(name));
    } catch (const Error&) {
      pos_ = start;
      fail({"t", "y<k>", "v<k>", "function call"}, "unknown identifier '" + name + "'");
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Simplifying builders used by the differentiator.

Expr num(double c) {
  if (c < 0.0) return Expr::neg(Expr::constant(-c));
  return Expr::constant(c);
}

Expr s_neg(const Expr& a) {
  if (a.is_constant(0.0)) return a;
  if (a.op() == Op::Neg) return a.lhs();
  return Expr::neg(a);
}

Expr s_add(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0)) return b;
  if (b.is_constant(0.0)) return a;
  return Expr::binary(Op::Add, a, b);
}

Expr s_sub(const Expr& a, const Expr& b) {
  if (b.is_constant(0.0)) return a;
  if (a.is_constant(0.0)) return s_neg(b);
  return Expr::binary(Op::Sub, a, b);
}

Expr s_mul(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0) || b.is_constant(0.0)) return Expr::constant(0.0);
  if (a.is_constant(1.0)) return b;
  if (b.is_constant(1.0)) return a;
  return Expr::binary(Op::Mul, a, b);
}

Expr s_div(const Expr& a, const Expr& b) {
  if (a.is_constant(0.0)) return a;
  if (b.is_constant(1.0)) return a;
  return Expr::binary(Op::Div, a, b);
}

Expr s_pow(const Expr& a, const Expr& ex) {
  if (ex.is_constant(1.0)) return a;
  if (ex.is_constant(0.0)) return Expr::constant(1.0);
  return Expr::binary(Op::Pow, a, ex);
}

Expr derive(const Expr& e, Variable var) {
  if (!e.depends_on(var)) return Expr::constant(0.0);
  switch (e.op()) {
    case Op::Const: return Expr::constant(0.0);
    case Op::Var: return Expr::constant(e.variable() == var ? 1.0 : 0.0);
    case Op::Neg: return s_neg(derive(e.lhs(), var));
    case Op::Add: return s_add(derive(e.lhs(), var), derive(e.rhs(), var));
    case Op::Sub: return s_sub(derive(e.lhs(), var), derive(e.rhs(), var));
    case Op::Mul: {
      const Expr a = e.lhs(), b = e.rhs();
      return s_add(s_mul(derive(a, var), b), s_mul(a, derive(b, var)));
    }
    case Op::Div: {
      const Expr a = e.lhs(), b = e.rhs();
      return s_div(s_sub(s_mul(derive(a, var), b), s_mul(a, derive(b, var))),
                   Expr::binary(Op::Pow, b, Expr::constant(2.0)));
    }
    case Op::Pow: {
      const Expr a = e.lhs();
      const double c = e.rhs().eval(Env{});
      return s_mul(s_mul(num(c), s_pow(a, num(c - 1.0))), derive(a, var));
    }
    case Op::Call: {
      const Expr a = e.lhs();
      const Expr da = derive(a, var);
      switch (e.func()) {
        case Func::Cos: return s_neg(s_mul(Expr::call(Func::Sin, a), da));
        case Func::Sin: return s_mul(Expr::call(Func::Cos, a), da);
        case Func::Exp: return s_mul(e, da);
        case Func::Log: return s_div(da, a);
        case Func::Sqrt: return s_div(da, Expr::binary(Op::Mul, Expr::constant(2.0), e));
        case Func::Abs:
          throw Error(ErrorCode::NotDifferentiable, "abs(" + a.str() + ") depends on " + var.name());
      }
    }
  }
  return Expr::constant(0.0);
}

Expr rebuild(const Expr& e, const std::function<Expr(const Expr&)>& f) {
  switch (e.op()) {
    case Op::Const:
    case Op::Var: return e;
    case Op::Neg: return Expr::neg(f(e.lhs()));
    case Op::Call: return Expr::call(e.func(), f(e.lhs()));
    default: return Expr::binary(e.op(), f(e.lhs()), f(e.rhs()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------

Variable Variable::from_name(std::string_view name) {
  if (name == "t") return time();
  if (name.size() >= 2 && (name[0] == 'y' || name[0] == 'v')) {
    std::size_t k = 0;
    auto res = std::from_chars(name.data() + 1, name.data() + name.size(), k);
    if (res.ec == std::errc() && res.ptr == name.data() + name.size() && k >= 1 && name[1] != '0')
      return name[0] == 'y' ? state(k) : control(k);
  }
  throw Error(ErrorCode::SyntaxError, "unknown variable '" + std::string(name) + "'");
}

std::string Variable::name() const {
  switch (kind) {
    case VarKind::Time: return "t";
    case VarKind::State: return "y" + std::to_string(index);
    case VarKind::Control: return "v" + std::to_string(index);
  }
  return "?";
}

const char* function_name(Func f) {
  switch (f) {
    case Func::Cos: return "cos";
    case Func::Sin: return "sin";
    case Func::Exp: return "exp";
    case Func::Log: return "log";
    case Func::Abs: return "abs";
    case Func::Sqrt: return "sqrt";
  }
  return "?";
}

SyntaxFailure::SyntaxFailure(std::size_t position, std::vector<std::string> expected, const std::string& detail)
    : Error(ErrorCode::SyntaxError, [&] {
        std::string msg = "at offset " + std::to_string(position) + ": " + detail + "; expected one of {";
        for (std::size_t i = 0; i < expected.size(); ++i) msg += (i ? ", " : "") + expected[i];
        return msg + "}";
      }()),
      position_(position),
      expected_(std::move(expected)) {}

Expr::Expr() : node_(make(Op::Const, 0.0, {}, Func::Cos, nullptr, nullptr)) {}

Expr Expr::constant(double c) { return Expr(make(Op::Const, c, {}, Func::Cos, nullptr, nullptr)); }
Expr Expr::var(Variable v) { return Expr(make(Op::Var, 0.0, v, Func::Cos, nullptr, nullptr)); }
Expr Expr::neg(Expr a) { return Expr(make(Op::Neg, 0.0, {}, Func::Cos, std::move(a.node_), nullptr)); }
Expr Expr::binary(Op op, Expr a, Expr b) {
  if (op != Op::Add && op != Op::Sub && op != Op::Mul && op != Op::Div && op != Op::Pow)
    throw Error(ErrorCode::InvalidArgument, "not a binary operator");
  return Expr(make(op, 0.0, {}, Func::Cos, std::move(a.node_), std::move(b.node_)));
}
Expr Expr::call(Func f, Expr a) { return Expr(make(Op::Call, 0.0, {}, f, std::move(a.node_), nullptr)); }

Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
Variable Expr::variable() const { return node_->var; }
Func Expr::func() const { return node_->func; }
Expr Expr::lhs() const { return Expr(node_->a); }
Expr Expr::rhs() const { return Expr(node_->b); }

double Expr::eval(const Env& env) const { return eval_node(*node_, env); }

std::string Expr::str() const {
  std::string out;
  print_node(*node_, out);
  return out;
}

std::set<Variable> Expr::variables() const {
  std::set<Variable> out;
  collect_vars(*node_, out);
  return out;
}

bool Expr::depends_on(Variable v) const {
  std::function<bool(const ExprNode&)> walk = [&](const ExprNode& n) {
    if (n.op == Op::Var) return n.var == v;
    return (n.a && walk(*n.a)) || (n.b && walk(*n.b));
  };
  return walk(*node_);
}

bool Expr::is_constant(double c) const { return node_->op == Op::Const && node_->value == c; }

bool operator==(const Expr& a, const Expr& b) { return equal_nodes(a.node_.get(), b.node_.get()); }

Expr parse_expr(std::string_view text) { return Parser(text).parse(); }

Expr diff_expr(const Expr& e, Variable var) { return derive(e, var); }

Expr negate(const Expr& e) {
  if (e.op() == Op::Neg) return e.lhs();
  return Expr::neg(e);
}

Expr substitute_neg_time(const Expr& e) {
  if (e.op() == Op::Var && e.variable().kind == VarKind::Time) return Expr::neg(e);
  if (e.op() == Op::Neg && e.lhs().op() == Op::Var && e.lhs().variable().kind == VarKind::Time) return e.lhs();
  return rebuild(e, substitute_neg_time);
}

Expr fold_negations(const Expr& e) {
  if (e.op() == Op::Neg && e.lhs().op() == Op::Neg) return fold_negations(e.lhs().lhs());
  return rebuild(e, fold_negations);
}

}  // namespace tscale
