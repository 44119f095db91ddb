#pragma once

// Symbolic scalar expressions over named chart variables.
//
// Grammar (whitespace-insensitive):
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?          right-associative, exponent must fold to a constant
//   primary := number | identifier | identifier '(' sum ')' | '(' sum ')'
//
// Built-in functions: exp log sqrt sin cos sinh cosh tanh.
// A non-integer exponent is rewritten as exp(b*log(a)), so it requires a > 0.

#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dneig {

enum class UnaryOp { Neg, Exp, Log, Sqrt, Sin, Cos, Sinh, Cosh, Tanh };
enum class BinaryOp { Add, Sub, Mul, Div };

/// Variable assignment used by Expr::eval. Lookup is linear; charts have two or three variables.
class Bindings {
 public:
  Bindings() = default;
  Bindings(std::initializer_list<std::pair<std::string, double>> init);

  Bindings& set(std::string_view name, double value);
  const double* find(std::string_view name) const noexcept;

 private:
  std::vector<std::pair<std::string, double>> values_;
};

class Expr {
 public:
  /// Zero constant.
  Expr();

  static Expr constant(double value);
  static Expr variable(std::string name);
  static Expr unary(UnaryOp op, Expr arg);
  static Expr binary(BinaryOp op, Expr lhs, Expr rhs);
  static Expr power(Expr base, double exponent);

  double eval(const Bindings& bindings) const;
  Expr derivative(std::string_view var) const;
  Expr substitute(std::string_view var, double value) const;

  bool depends_on(std::string_view var) const;
  std::vector<std::string> free_variables() const;

  bool is_constant() const noexcept;
  double constant_value() const;

  /// Canonical, fully parenthesized form. parse(to_string()) reproduces an equal tree.
  std::string to_string() const;

  friend bool operator==(const Expr& a, const Expr& b);

  struct Node;

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

Expr parse(std::string_view text);

inline double eval(const Expr& e, const Bindings& b) { return e.eval(b); }
inline Expr differentiate(const Expr& e, std::string_view var) { return e.derivative(var); }

}  // namespace dneig
