#include "hamsys/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace hamsys {

namespace {

ExprPtr make_node(ExprOp op, double value = 0.0, ExprPtr a = nullptr, ExprPtr b = nullptr) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->value = value;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

bool node_is_number(const ExprPtr& n, double v) {
  return n->op == ExprOp::Number && n->value == v;
}

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

Expression::Expression() : node_(make_node(ExprOp::Number, 0.0)) {}

Expression Expression::number(double v) { return Expression(make_node(ExprOp::Number, v)); }
Expression Expression::imaginary_unit() { return Expression(make_node(ExprOp::ImagUnit)); }
Expression Expression::pi() { return Expression(make_node(ExprOp::Pi)); }
Expression Expression::euler_e() { return Expression(make_node(ExprOp::EulerE)); }
Expression Expression::variable() { return Expression(make_node(ExprOp::Var)); }

Expression Expression::piecewise(double breakpoint, Expression below, Expression from) {
  return Expression(make_node(ExprOp::Piecewise, breakpoint, below.node_, from.node_));
}

bool Expression::is_number() const { return node_->op == ExprOp::Number; }
double Expression::number_value() const { return node_->value; }

Expression operator+(const Expression& l, const Expression& r) {
  if (node_is_number(l.node_, 0.0)) return r;
  if (node_is_number(r.node_, 0.0)) return l;
  if (l.is_number() && r.is_number()) return Expression::number(l.number_value() + r.number_value());
  return Expression(make_node(ExprOp::Add, 0.0, l.node_, r.node_));
}

Expression operator-(const Expression& l, const Expression& r) {
  if (node_is_number(r.node_, 0.0)) return l;
  if (l.is_number() && r.is_number()) return Expression::number(l.number_value() - r.number_value());
  if (node_is_number(l.node_, 0.0)) return -r;
  return Expression(make_node(ExprOp::Sub, 0.0, l.node_, r.node_));
}

Expression operator*(const Expression& l, const Expression& r) {
  if (node_is_number(l.node_, 0.0) || node_is_number(r.node_, 0.0)) return Expression::number(0.0);
  if (node_is_number(l.node_, 1.0)) return r;
  if (node_is_number(r.node_, 1.0)) return l;
  if (l.is_number() && r.is_number()) return Expression::number(l.number_value() * r.number_value());
  return Expression(make_node(ExprOp::Mul, 0.0, l.node_, r.node_));
}

Expression operator/(const Expression& l, const Expression& r) {
  if (node_is_number(l.node_, 0.0)) return Expression::number(0.0);
  if (node_is_number(r.node_, 1.0)) return l;
  return Expression(make_node(ExprOp::Div, 0.0, l.node_, r.node_));
}

Expression Expression::operator-() const {
  if (is_number()) return number(-number_value());
  if (node_->op == ExprOp::Neg) return Expression(node_->a);
  return Expression(make_node(ExprOp::Neg, 0.0, node_));
}

Expression Expression::pow(Expression base, Expression exponent) {
  if (node_is_number(exponent.node_, 1.0)) return base;
  if (node_is_number(exponent.node_, 0.0)) return number(1.0);
  return Expression(make_node(ExprOp::Pow, 0.0, base.node_, exponent.node_));
}

Expression Expression::apply(ExprOp op, Expression arg) {
  return Expression(make_node(op, 0.0, arg.node_));
}

namespace {

Complex eval_node(const ExprNode& n, double x) {
  switch (n.op) {
    case ExprOp::Number: return Complex(n.value, 0.0);
    case ExprOp::ImagUnit: return Complex(0.0, 1.0);
    case ExprOp::Pi: return Complex(M_PI, 0.0);
    case ExprOp::EulerE: return Complex(M_E, 0.0);
    case ExprOp::Var: return Complex(x, 0.0);
    case ExprOp::Add: return eval_node(*n.a, x) + eval_node(*n.b, x);
    case ExprOp::Sub: return eval_node(*n.a, x) - eval_node(*n.b, x);
    case ExprOp::Mul: return eval_node(*n.a, x) * eval_node(*n.b, x);
    case ExprOp::Div: {
      Complex den = eval_node(*n.b, x);
      if (den == Complex(0.0, 0.0)) throw EvalError("division by zero", x);
      return eval_node(*n.a, x) / den;
    }
    case ExprOp::Pow: {
      Complex base = eval_node(*n.a, x);
      Complex exp = eval_node(*n.b, x);
      if (base == Complex(0.0, 0.0)) {
        if (exp.real() > 0.0 && exp.imag() == 0.0) return Complex(0.0, 0.0);
        throw EvalError("zero raised to non-positive power", x);
      }
      if (base.imag() == 0.0 && exp.imag() == 0.0 && base.real() > 0.0)
        return Complex(std::pow(base.real(), exp.real()), 0.0);
      return std::pow(base, exp);
    }
    case ExprOp::Neg: return -eval_node(*n.a, x);
    case ExprOp::Exp: return std::exp(eval_node(*n.a, x));
    case ExprOp::Log: {
      Complex v = eval_node(*n.a, x);
      if (v == Complex(0.0, 0.0)) throw EvalError("log of zero argument", x);
      if (v.imag() == 0.0 && v.real() > 0.0) return Complex(std::log(v.real()), 0.0);
      return std::log(v);
    }
    case ExprOp::Sin: return std::sin(eval_node(*n.a, x));
    case ExprOp::Cos: return std::cos(eval_node(*n.a, x));
    case ExprOp::Sinh: return std::sinh(eval_node(*n.a, x));
    case ExprOp::Cosh: return std::cosh(eval_node(*n.a, x));
    case ExprOp::Sqrt: return std::sqrt(eval_node(*n.a, x));
    case ExprOp::Abs: return Complex(std::abs(eval_node(*n.a, x)), 0.0);
    case ExprOp::Conj: return std::conj(eval_node(*n.a, x));
    case ExprOp::Piecewise:
      return x < n.value ? eval_node(*n.a, x) : eval_node(*n.b, x);
  }
  throw EvalError("corrupt expression node", x);
}

}  // namespace

Complex Expression::eval(double x) const {
  Complex v = eval_node(*node_, x);
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
    throw EvalError("non-finite value in expression evaluation", x);
  return v;
}

Expression Expression::derivative() const {
  const ExprNode& n = *node_;
  switch (n.op) {
    case ExprOp::Number:
    case ExprOp::ImagUnit:
    case ExprOp::Pi:
    case ExprOp::EulerE:
      return number(0.0);
    case ExprOp::Var:
      return number(1.0);
    default:
      break;
  }

  Expression a = n.a ? Expression(n.a) : Expression();
  Expression b = n.b ? Expression(n.b) : Expression();
  Expression da = n.a ? a.derivative() : Expression();
  Expression db = n.b ? b.derivative() : Expression();

  switch (n.op) {
    case ExprOp::Add: return da + db;
    case ExprOp::Sub: return da - db;
    case ExprOp::Mul: return da * b + a * db;
    case ExprOp::Div: return (da * b - a * db) / (b * b);
    case ExprOp::Pow:
      if (!b.depends_on_x()) {
        // d/dx a^c = c a^(c-1) a'
        return b * pow(a, b - number(1.0)) * da;
      }
      // general rule via the logarithm
      return pow(a, b) * (db * apply(ExprOp::Log, a) + b * da / a);
    case ExprOp::Neg: return -da;
    case ExprOp::Exp: return apply(ExprOp::Exp, a) * da;
    case ExprOp::Log: return da / a;
    case ExprOp::Sin: return apply(ExprOp::Cos, a) * da;
    case ExprOp::Cos: return -(apply(ExprOp::Sin, a) * da);
    case ExprOp::Sinh: return apply(ExprOp::Cosh, a) * da;
    case ExprOp::Cosh: return apply(ExprOp::Sinh, a) * da;
    case ExprOp::Sqrt: return da / (number(2.0) * apply(ExprOp::Sqrt, a));
    case ExprOp::Abs:
      // real-argument rule sign(a) a'
      return (a / apply(ExprOp::Abs, a)) * da;
    case ExprOp::Conj: return apply(ExprOp::Conj, da);
    case ExprOp::Piecewise: return piecewise(n.value, da, db);
    default:
      break;
  }
  return number(0.0);
}

bool Expression::depends_on_x() const {
  const ExprNode& n = *node_;
  if (n.op == ExprOp::Var) return true;
  if (n.a && Expression(n.a).depends_on_x()) return true;
  if (n.b && Expression(n.b).depends_on_x()) return true;
  return false;
}

void Expression::collect_breakpoints(std::vector<double>& out) const {
  const ExprNode& n = *node_;
  if (n.op == ExprOp::Piecewise) out.push_back(n.value);
  if (n.op == ExprOp::Abs && n.a->op == ExprOp::Var) out.push_back(0.0);
  if (n.a) Expression(n.a).collect_breakpoints(out);
  if (n.b) Expression(n.b).collect_breakpoints(out);
}

bool Expression::same_as(const Expression& other) const {
  const ExprNode& l = *node_;
  const ExprNode& r = *other.node_;
  if (l.op != r.op || l.value != r.value) return false;
  if ((l.a == nullptr) != (r.a == nullptr) || (l.b == nullptr) != (r.b == nullptr)) return false;
  if (l.a && !Expression(l.a).same_as(Expression(r.a))) return false;
  if (l.b && !Expression(l.b).same_as(Expression(r.b))) return false;
  return true;
}

namespace {

int precedence(ExprOp op) {
  switch (op) {
    case ExprOp::Add:
    case ExprOp::Sub: return 1;
    case ExprOp::Mul:
    case ExprOp::Div: return 2;
    case ExprOp::Neg: return 3;
    case ExprOp::Pow: return 4;
    default: return 5;
  }
}

const char* func_name(ExprOp op) {
  switch (op) {
    case ExprOp::Exp: return "exp";
    case ExprOp::Log: return "log";
    case ExprOp::Sin: return "sin";
    case ExprOp::Cos: return "cos";
    case ExprOp::Sinh: return "sinh";
    case ExprOp::Cosh: return "cosh";
    case ExprOp::Sqrt: return "sqrt";
    case ExprOp::Abs: return "abs";
    case ExprOp::Conj: return "conj";
    default: return nullptr;
  }
}

void print_node(const ExprNode& n, std::ostringstream& os) {
  auto child = [&os](const ExprNode& c, int parent_prec, bool right_assoc_side) {
    bool need = precedence(c.op) < parent_prec ||
                (precedence(c.op) == parent_prec && right_assoc_side);
    if (need) os << '(';
    print_node(c, os);
    if (need) os << ')';
  };
  switch (n.op) {
    case ExprOp::Number:
      if (n.value < 0) {
        os << '(' << format_double(n.value) << ')';
      } else {
        os << format_double(n.value);
      }
      return;
    case ExprOp::ImagUnit: os << 'i'; return;
    case ExprOp::Pi: os << "pi"; return;
    case ExprOp::EulerE: os << 'e'; return;
    case ExprOp::Var: os << 'x'; return;
    case ExprOp::Add: child(*n.a, 1, false); os << '+'; child(*n.b, 1, true); return;
    case ExprOp::Sub: child(*n.a, 1, false); os << '-'; child(*n.b, 1, true); return;
    case ExprOp::Mul: child(*n.a, 2, false); os << '*'; child(*n.b, 2, true); return;
    case ExprOp::Div: child(*n.a, 2, false); os << '/'; child(*n.b, 2, true); return;
    case ExprOp::Pow: child(*n.a, 4, true); os << '^'; child(*n.b, 4, false); return;
    case ExprOp::Neg: os << '-'; child(*n.a, 3, true); return;
    case ExprOp::Piecewise:
      os << "piecewise(x < " << format_double(n.value) << ", ";
      print_node(*n.a, os);
      os << ", ";
      print_node(*n.b, os);
      os << ')';
      return;
    default: {
      const char* f = func_name(n.op);
      os << f << '(';
      print_node(*n.a, os);
      os << ')';
      return;
    }
  }
}

class Parser {
public:
  explicit Parser(const std::string& text) : s_(text) {}

  Expression run() {
    Expression e = parse_expr();
    skip_ws();
    if (pos_ != s_.size()) throw ParseError("unexpected trailing input", pos_);
    return e;
  }

private:
  const std::string& s_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  Expression parse_expr() {
    Expression e = parse_term();
    for (;;) {
      if (eat('+')) e = e + parse_term();
      else if (eat('-')) e = e - parse_term();
      else return e;
    }
  }

  Expression parse_term() {
    Expression e = parse_unary();
    for (;;) {
      if (eat('*')) e = e * parse_unary();
      else if (eat('/')) e = e / parse_unary();
      else return e;
    }
  }

  Expression parse_unary() {
    if (eat('-')) return -parse_unary();
    if (eat('+')) return parse_unary();
    return parse_power();
  }

  Expression parse_power() {
    Expression base = parse_atom();
    if (eat('^')) {
      Expression exp = parse_unary();  // right associative; allows (1+x)^-2
      return Expression::pow(base, exp);
    }
    return base;
  }

  double parse_number_literal() {
    skip_ws();
    std::size_t start = pos_;
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) throw ParseError("expected a number", start);
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  std::string parse_identifier() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
      ++pos_;
    if (pos_ == start) throw ParseError("expected an identifier", start);
    return s_.substr(start, pos_ - start);
  }

  Expression parse_piecewise() {
    std::size_t at = pos_;
    if (!eat('(')) throw ParseError("expected '(' after piecewise", pos_);
    // guard of the form  x < c
    skip_ws();
    if (peek() != 'x') throw ParseError("piecewise guard must be of the form x < c", pos_);
    ++pos_;
    if (!eat('<')) throw ParseError("piecewise guard must be of the form x < c", pos_);
    double c = parse_signed_number();
    if (!eat(',')) throw ParseError("expected ',' in piecewise", pos_);
    Expression below = parse_expr();
    if (!eat(',')) throw ParseError("expected ',' in piecewise", pos_);
    Expression from = parse_expr();
    if (!eat(')')) throw ParseError("expected ')' closing piecewise", at);
    return Expression::piecewise(c, below, from);
  }

  double parse_signed_number() {
    skip_ws();
    bool neg = false;
    if (eat('-')) neg = true;
    else if (eat('+')) neg = false;
    double v = parse_number_literal();
    return neg ? -v : v;
  }

  Expression parse_atom() {
    skip_ws();
    if (pos_ >= s_.size()) throw ParseError("unexpected end of input", pos_);
    char c = s_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return Expression::number(parse_number_literal());
    if (c == '(') {
      ++pos_;
      Expression e = parse_expr();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t at = pos_;
      std::string id = parse_identifier();
      if (id == "x") return Expression::variable();
      if (id == "pi") return Expression::pi();
      if (id == "e") return Expression::euler_e();
      if (id == "i") return Expression::imaginary_unit();
      if (id == "piecewise") return parse_piecewise();
      ExprOp op;
      if (id == "exp") op = ExprOp::Exp;
      else if (id == "log") op = ExprOp::Log;
      else if (id == "sin") op = ExprOp::Sin;
      else if (id == "cos") op = ExprOp::Cos;
      else if (id == "sinh") op = ExprOp::Sinh;
      else if (id == "cosh") op = ExprOp::Cosh;
      else if (id == "sqrt") op = ExprOp::Sqrt;
      else if (id == "abs") op = ExprOp::Abs;
      else if (id == "conj") op = ExprOp::Conj;
      else throw ParseError("unknown function or identifier '" + id + "'", at);
      if (!eat('(')) throw ParseError("expected '(' after function name", pos_);
      Expression arg = parse_expr();
      if (!eat(')')) throw ParseError("expected ')'", pos_);
      return Expression::apply(op, arg);
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }
};

}  // namespace

std::string Expression::to_string() const {
  std::ostringstream os;
  print_node(*node_, os);
  return os.str();
}

Expression Expression::parse(const std::string& text) { return Parser(text).run(); }

}  // namespace hamsys
