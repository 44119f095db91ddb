#include "dneig/expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cctype>
#include <set>

#include "dneig/error.hpp"

namespace dneig {

struct Expr::Node {
  enum class Kind { Const, Var, Unary, Binary, Pow };
  Kind kind = Kind::Const;
  double value = 0.0;  // constant value, or the integer exponent of a Pow node
  std::string name;
  UnaryOp uop = UnaryOp::Neg;
  BinaryOp bop = BinaryOp::Add;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;
using Kind = Expr::Node::Kind;

struct FunctionName {
  const char* name;
  UnaryOp op;
};

constexpr std::array<FunctionName, 8> kFunctions{{
    {"exp", UnaryOp::Exp},
    {"log", UnaryOp::Log},
    {"sqrt", UnaryOp::Sqrt},
    {"sin", UnaryOp::Sin},
    {"cos", UnaryOp::Cos},
    {"sinh", UnaryOp::Sinh},
    {"cosh", UnaryOp::Cosh},
    {"tanh", UnaryOp::Tanh},
}};

const char* function_name(UnaryOp op) {
  for (const auto& f : kFunctions)
    if (f.op == op) return f.name;
  return "neg";
}

bool is_integer(double x) { return std::isfinite(x) && std::nearbyint(x) == x; }

// Returns false when the argument lies outside the function's domain.
bool apply_unary(UnaryOp op, double x, double& out) {
  switch (op) {
    case UnaryOp::Neg: out = -x; return true;
    case UnaryOp::Exp: out = std::exp(x); break;
    case UnaryOp::Log:
      if (!(x > 0.0)) return false;
      out = std::log(x);
      break;
    case UnaryOp::Sqrt:
      if (!(x >= 0.0)) return false;
      out = std::sqrt(x);
      break;
    case UnaryOp::Sin: out = std::sin(x); break;
    case UnaryOp::Cos: out = std::cos(x); break;
    case UnaryOp::Sinh: out = std::sinh(x); break;
    case UnaryOp::Cosh: out = std::cosh(x); break;
    case UnaryOp::Tanh: out = std::tanh(x); break;
  }
  return std::isfinite(out);
}

bool apply_binary(BinaryOp op, double a, double b, double& out) {
  switch (op) {
    case BinaryOp::Add: out = a + b; break;
    case BinaryOp::Sub: out = a - b; break;
    case BinaryOp::Mul: out = a * b; break;
    case BinaryOp::Div:
      if (b == 0.0) return false;
      out = a / b;
      break;
  }
  return std::isfinite(out);
}

bool apply_pow(double base, double exponent, double& out) {
  if (base == 0.0 && exponent < 0.0) return false;
  out = std::pow(base, exponent);
  return std::isfinite(out);
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), ptr);
}

void collect_vars(const NodePtr& n, std::set<std::string>& out) {
  if (!n) return;
  if (n->kind == Kind::Var) out.insert(n->name);
  collect_vars(n->lhs, out);
  collect_vars(n->rhs, out);
}

bool node_depends(const NodePtr& n, std::string_view var) {
  if (!n) return false;
  if (n->kind == Kind::Var) return n->name == var;
  return node_depends(n->lhs, var) || node_depends(n->rhs, var);
}

bool nodes_equal(const NodePtr& a, const NodePtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Kind::Const: return a->value == b->value;
    case Kind::Var: return a->name == b->name;
    case Kind::Unary: return a->uop == b->uop && nodes_equal(a->lhs, b->lhs);
    case Kind::Binary:
      return a->bop == b->bop && nodes_equal(a->lhs, b->lhs) && nodes_equal(a->rhs, b->rhs);
    case Kind::Pow: return a->value == b->value && nodes_equal(a->lhs, b->lhs);
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// Bindings

Bindings::Bindings(std::initializer_list<std::pair<std::string, double>> init) {
  for (const auto& [k, v] : init) set(k, v);
}

Bindings& Bindings::set(std::string_view name, double value) {
  for (auto& kv : values_) {
    if (kv.first == name) {
      kv.second = value;
      return *this;
    }
  }
  values_.emplace_back(std::string(name), value);
  return *this;
}

const double* Bindings::find(std::string_view name) const noexcept {
  for (const auto& kv : values_)
    if (kv.first == name) return &kv.second;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Construction with constant folding

Expr::Expr() : Expr(constant(0.0)) {}

Expr Expr::constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Const;
  n->value = value;
  return Expr(std::move(n));
}

Expr Expr::variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = Kind::Var;
  n->name = std::move(name);
  return Expr(std::move(n));
}

Expr Expr::unary(UnaryOp op, Expr arg) {
  if (arg.is_constant()) {
    double out = 0.0;
    if (apply_unary(op, arg.constant_value(), out)) return constant(out);
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::Unary;
  n->uop = op;
  n->lhs = std::move(arg.node_);
  return Expr(std::move(n));
}

Expr Expr::binary(BinaryOp op, Expr lhs, Expr rhs) {
  const bool lc = lhs.is_constant();
  const bool rc = rhs.is_constant();
  if (lc && rc) {
    double out = 0.0;
    if (apply_binary(op, lhs.constant_value(), rhs.constant_value(), out)) return constant(out);
  }
  const auto is = [](const Expr& e, bool c, double v) { return c && e.constant_value() == v; };
  switch (op) {
    case BinaryOp::Add:
      if (is(lhs, lc, 0.0)) return rhs;
      if (is(rhs, rc, 0.0)) return lhs;
      break;
    case BinaryOp::Sub:
      if (is(rhs, rc, 0.0)) return lhs;
      if (is(lhs, lc, 0.0)) return unary(UnaryOp::Neg, std::move(rhs));
      break;
    case BinaryOp::Mul:
      if (is(lhs, lc, 0.0) || is(rhs, rc, 0.0)) return constant(0.0);
      if (is(lhs, lc, 1.0)) return rhs;
      if (is(rhs, rc, 1.0)) return lhs;
      break;
    case BinaryOp::Div:
      if (is(rhs, rc, 1.0)) return lhs;
      if (is(lhs, lc, 0.0) && !is(rhs, rc, 0.0)) return constant(0.0);
      break;
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::Binary;
  n->bop = op;
  n->lhs = std::move(lhs.node_);
  n->rhs = std::move(rhs.node_);
  return Expr(std::move(n));
}

Expr Expr::power(Expr base, double exponent) {
  if (!std::isfinite(exponent)) throw EvalError("non-finite exponent");
  if (!is_integer(exponent)) {
    // a^b = exp(b log a), valid for a > 0
    return unary(UnaryOp::Exp, binary(BinaryOp::Mul, constant(exponent), unary(UnaryOp::Log, std::move(base))));
  }
  if (exponent == 0.0) return constant(1.0);
  if (exponent == 1.0) return base;
  if (base.is_constant()) {
    double out = 0.0;
    if (apply_pow(base.constant_value(), exponent, out)) return constant(out);
  }
  auto n = std::make_shared<Node>();
  n->kind = Kind::Pow;
  n->value = exponent;
  n->lhs = std::move(base.node_);
  return Expr(std::move(n));
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(BinaryOp::Div, a, b); }
Expr operator-(const Expr& a) { return Expr::unary(UnaryOp::Neg, a); }

bool Expr::is_constant() const noexcept { return node_->kind == Kind::Const; }

double Expr::constant_value() const {
  if (!is_constant()) throw EvalError("expression is not a constant");
  return node_->value;
}

bool operator==(const Expr& a, const Expr& b) { return nodes_equal(a.node_, b.node_); }

bool Expr::depends_on(std::string_view var) const { return node_depends(node_, var); }

std::vector<std::string> Expr::free_variables() const {
  std::set<std::string> vars;
  collect_vars(node_, vars);
  return {vars.begin(), vars.end()};
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double eval_node(const Expr::Node& n, const Bindings& b) {
  switch (n.kind) {
    case Kind::Const: return n.value;
    case Kind::Var: {
      const double* v = b.find(n.name);
      if (!v) throw EvalError("unbound variable '" + n.name + "'");
      return *v;
    }
    case Kind::Unary: {
      const double x = eval_node(*n.lhs, b);
      double out = 0.0;
      if (!apply_unary(n.uop, x, out))
        throw EvalError(std::string("domain violation: ") + function_name(n.uop) + "(" + format_number(x) + ")");
      return out;
    }
    case Kind::Binary: {
      const double x = eval_node(*n.lhs, b);
      const double y = eval_node(*n.rhs, b);
      double out = 0.0;
      if (!apply_binary(n.bop, x, y, out))
        throw EvalError("domain violation: non-finite result of arithmetic on " + format_number(x) + ", " +
                        format_number(y));
      return out;
    }
    case Kind::Pow: {
      const double x = eval_node(*n.lhs, b);
      double out = 0.0;
      if (!apply_pow(x, n.value, out))
        throw EvalError("domain violation: " + format_number(x) + "^" + format_number(n.value));
      return out;
    }
  }
  return 0.0;
}

}  // namespace

double Expr::eval(const Bindings& bindings) const { return eval_node(*node_, bindings); }

// ---------------------------------------------------------------------------
// Differentiation and substitution

Expr Expr::derivative(std::string_view var) const {
  const Node& n = *node_;
  if (!depends_on(var)) return constant(0.0);
  switch (n.kind) {
    case Kind::Const: return constant(0.0);
    case Kind::Var: return constant(1.0);
    case Kind::Unary: {
      const Expr a(n.lhs);
      const Expr da = a.derivative(var);
      switch (n.uop) {
        case UnaryOp::Neg: return -da;
        case UnaryOp::Exp: return Expr(node_) * da;
        case UnaryOp::Log: return da / a;
        case UnaryOp::Sqrt: return da / (constant(2.0) * Expr(node_));
        case UnaryOp::Sin: return unary(UnaryOp::Cos, a) * da;
        case UnaryOp::Cos: return -(unary(UnaryOp::Sin, a) * da);
        case UnaryOp::Sinh: return unary(UnaryOp::Cosh, a) * da;
        case UnaryOp::Cosh: return unary(UnaryOp::Sinh, a) * da;
        case UnaryOp::Tanh: return da / power(unary(UnaryOp::Cosh, a), 2.0);
      }
      break;
    }
    case Kind::Binary: {
      const Expr a(n.lhs);
      const Expr b(n.rhs);
      const Expr da = a.derivative(var);
      const Expr db = b.derivative(var);
      switch (n.bop) {
        case BinaryOp::Add: return da + db;
        case BinaryOp::Sub: return da - db;
        case BinaryOp::Mul: return da * b + a * db;
        case BinaryOp::Div:
          if (!b.depends_on(var)) return da / b;
          return (da * b - a * db) / power(b, 2.0);
      }
      break;
    }
    case Kind::Pow: {
      const Expr a(n.lhs);
      return constant(n.value) * power(a, n.value - 1.0) * a.derivative(var);
    }
  }
  return constant(0.0);
}

Expr Expr::substitute(std::string_view var, double value) const {
  const Node& n = *node_;
  if (!depends_on(var)) return *this;
  switch (n.kind) {
    case Kind::Const: return *this;
    case Kind::Var: return constant(value);
    case Kind::Unary: return unary(n.uop, Expr(n.lhs).substitute(var, value));
    case Kind::Binary:
      return binary(n.bop, Expr(n.lhs).substitute(var, value), Expr(n.rhs).substitute(var, value));
    case Kind::Pow: return power(Expr(n.lhs).substitute(var, value), n.value);
  }
  return *this;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

void write_node(const Expr::Node& n, std::string& out) {
  switch (n.kind) {
    case Kind::Const:
      if (std::signbit(n.value)) {
        out += "(-";
        out += format_number(-n.value);
        out += ')';
      } else {
        out += format_number(n.value);
      }
      return;
    case Kind::Var: out += n.name; return;
    case Kind::Unary:
      if (n.uop == UnaryOp::Neg) {
        out += "(-";
        write_node(*n.lhs, out);
        out += ')';
      } else {
        out += function_name(n.uop);
        out += '(';
        write_node(*n.lhs, out);
        out += ')';
      }
      return;
    case Kind::Binary: {
      static constexpr char kOps[] = {'+', '-', '*', '/'};
      out += '(';
      write_node(*n.lhs, out);
      out += ' ';
      out += kOps[static_cast<int>(n.bop)];
      out += ' ';
      write_node(*n.rhs, out);
      out += ')';
      return;
    }
    case Kind::Pow:
      out += '(';
      write_node(*n.lhs, out);
      out += '^';
      if (n.value < 0) {
        out += "(-" + format_number(-n.value) + ")";
      } else {
        out += format_number(n.value);
      }
      out += ')';
      return;
  }
}

}  // namespace

std::string Expr::to_string() const {
  std::string out;
  write_node(*node_, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Expr run() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError("empty expression", pos_);
    Expr e = sum();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
    return e;
  }

 private:
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

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) throw ParseError(std::string("expected '") + c + "' but input ended", pos_);
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
  }

  Expr sum() {
    Expr e = product();
    for (;;) {
      if (accept('+')) {
        e = e + product();
      } else if (accept('-')) {
        e = e - product();
      } else {
        return e;
      }
    }
  }

  Expr product() {
    Expr e = unary();
    for (;;) {
      if (accept('*')) {
        e = e * unary();
      } else if (accept('/')) {
        e = e / unary();
      } else {
        return e;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    return power();
  }

  Expr power() {
    Expr base = primary();
    skip_ws();
    const std::size_t at = pos_;
    if (accept('^')) {
      Expr exponent = unary();
      if (!exponent.is_constant()) throw ParseError("exponent must be a constant", at);
      return Expr::power(std::move(base), exponent.constant_value());
    }
    return base;
  }

  Expr primary() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = sum();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        ++pos_;
      const std::string name(text_.substr(start, pos_ - start));
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '(') {
        for (const auto& f : kFunctions) {
          if (name == f.name) {
            ++pos_;
            Expr arg = sum();
            expect(')');
            return Expr::unary(f.op, std::move(arg));
          }
        }
        throw ParseError("unknown function '" + name + "'", start);
      }
      return Expr::variable(name);
    }
    throw ParseError(std::string("unexpected '") + c + "'", pos_);
  }

  Expr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t nd = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      nd += digits();
    }
    if (nd == 0) throw ParseError("malformed number", start);
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      const std::size_t save = pos_;
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;  // "2e" is 2 followed by identifier e
    }
    double value = 0.0;
    const auto* first = text_.data() + start;
    const auto* last = text_.data() + pos_;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) throw ParseError("malformed number", start);
    return Expr::constant(value);
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(std::string_view text) { return Parser(text).run(); }

}  // namespace dneig
