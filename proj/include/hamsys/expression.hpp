#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace hamsys {

using Complex = std::complex<double>;

class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " (at offset " + std::to_string(position) + ")"),
        position(position) {}
  std::size_t position;
};

class EvalError : public std::runtime_error {
public:
  EvalError(const std::string& what, double x)
      : std::runtime_error(what + " at x=" + std::to_string(x)), x(x) {}
  double x;
};

enum class ExprOp {
  Number,
  ImagUnit,
  Pi,
  EulerE,
  Var,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Neg,
  Exp,
  Log,
  Sin,
  Cos,
  Sinh,
  Cosh,
  Sqrt,
  Abs,
  Conj,
  Piecewise,  // value holds the breakpoint c of the guard x < c
};

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
  ExprOp op;
  double value = 0.0;
  ExprPtr a;
  ExprPtr b;
};

/// Scalar function of x, closed under symbolic differentiation.
class Expression {
public:
  Expression();  // zero

  static Expression number(double v);
  static Expression imaginary_unit();
  static Expression pi();
  static Expression euler_e();
  static Expression variable();
  static Expression piecewise(double breakpoint, Expression below, Expression from);

  friend Expression operator+(const Expression&, const Expression&);
  friend Expression operator-(const Expression&, const Expression&);
  friend Expression operator*(const Expression&, const Expression&);
  friend Expression operator/(const Expression&, const Expression&);
  Expression operator-() const;

  static Expression pow(Expression base, Expression exponent);
  static Expression apply(ExprOp unary_op, Expression arg);

  Complex eval(double x) const;
  Expression derivative() const;

  bool depends_on_x() const;
  bool is_number() const;
  double number_value() const;  // valid when is_number()

  /// Kinks and guard points that integration grids must hit exactly.
  void collect_breakpoints(std::vector<double>& out) const;

  std::string to_string() const;
  bool same_as(const Expression& other) const;

  static Expression parse(const std::string& text);

  const ExprPtr& node() const { return node_; }

private:
  explicit Expression(ExprPtr node) : node_(std::move(node)) {}
  ExprPtr node_;
};

}  // namespace hamsys
