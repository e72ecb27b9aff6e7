#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hamsys/expression.hpp"

namespace hamsys {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

class NumericsError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class SpecError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// n-by-n matrix of DSL expressions.
class MatrixFunction {
public:
  MatrixFunction() = default;
  explicit MatrixFunction(int n);
  MatrixFunction(int n, std::vector<Expression> entries);

  static MatrixFunction zero(int n);
  static MatrixFunction identity(int n);
  static MatrixFunction constant(const Matrix& m);
  static MatrixFunction scalar(Expression e) { return MatrixFunction(1, {std::move(e)}); }

  int dim() const { return n_; }
  const Expression& at(int i, int j) const { return entries_[i * n_ + j]; }
  Expression& at(int i, int j) { return entries_[i * n_ + j]; }

  Matrix eval(double x) const;
  MatrixFunction derivative() const;

  bool depends_on_x() const;
  void collect_breakpoints(std::vector<double>& out) const;

  MatrixFunction adjoint() const;       // conjugate transpose
  MatrixFunction operator+(const MatrixFunction&) const;
  MatrixFunction operator-(const MatrixFunction&) const;
  MatrixFunction operator*(const MatrixFunction&) const;
  MatrixFunction scaled(const Expression& s) const;
  MatrixFunction inverse() const;  // adjugate formula, supported for n <= 3

  /// Assemble a block matrix from equally sized blocks (row-major order).
  static MatrixFunction blocks2(const MatrixFunction& a, const MatrixFunction& b,
                                const MatrixFunction& c, const MatrixFunction& d);

  std::vector<std::string> entry_strings() const;

private:
  int n_ = 0;
  std::vector<Expression> entries_;
};

/// Coefficient matrix of a system: symbolic DSL grid or a numeric path.
class CoeffField {
public:
  CoeffField() = default;
  CoeffField(MatrixFunction m);  // implicit by design: most coefficients are symbolic

  using EvalFn = std::function<Matrix(double)>;
  static CoeffField functional(int n, EvalFn eval, EvalFn deriv = nullptr,
                               std::vector<double> breakpoints = {}, bool constant = false,
                               std::string description = "sampled");

  int dim() const { return n_; }
  Matrix eval(double x) const;
  Matrix deriv(double x) const;
  bool symbolic() const { return sym_.has_value(); }
  const MatrixFunction& sym() const { return *sym_; }
  bool is_constant() const { return constant_; }
  const std::string& description() const { return description_; }
  std::vector<double> breakpoints() const { return breakpoints_; }

private:
  int n_ = 0;
  std::optional<MatrixFunction> sym_;
  std::optional<MatrixFunction> sym_deriv_;  // lazily filled
  EvalFn eval_;
  EvalFn deriv_;
  std::vector<double> breakpoints_;
  bool constant_ = false;
  std::string description_;
};

struct IntervalSpec {
  enum class Kind { Finite, HalfLinePositive, HalfLineNegative, FullLine };
  Kind kind = Kind::HalfLinePositive;
  double a = 0.0;   // -inf for line / negative half-line
  double b = std::numeric_limits<double>::infinity();
  double x0 = 0.0;

  static IntervalSpec finite(double a, double b, double x0);
  static IntervalSpec half_line_positive(double a = 0.0);
  static IntervalSpec half_line_negative(double b = 0.0);
  static IntervalSpec full_line();

  bool contains(double x) const { return x >= a && x <= b; }
  bool is_finite() const { return kind == Kind::Finite; }
  bool unbounded_above() const { return !std::isfinite(b); }
  bool unbounded_below() const { return !std::isfinite(a); }
  std::string kind_name() const;
  void check() const;  // a < b, x0 in [a,b]
};

struct SystemSpec {
  int n = 0;
  IntervalSpec interval;
  CoeffField J, B, H;
  std::string label;

  std::vector<double> breakpoints() const;  // sorted, deduplicated, clipped to the interval
  SystemSpec restricted(const IntervalSpec& sub) const;
};

struct SturmLiouvilleSpec {
  int n = 0;
  IntervalSpec interval;
  MatrixFunction A, Q, R, H;
  std::string label;

  MatrixFunction potential() const;  // V = R - Q* A Q
};

/// 2n-dimensional system with designated blocks V, B, A, H (J block given too).
struct BlockSystemSpec {
  int n = 0;  // block size; assembled system is 2n x 2n
  IntervalSpec interval;
  MatrixFunction J, V, B, A, H;
  std::string label;

  SystemSpec assembled() const;  // J1 = [[0,J*],[-J,0]], B1 = [[V,B],[B*-J',-A]], H1 = diag(H,0)
};

struct SampleGrid {
  std::vector<double> points;

  /// Uniform points over a representative window of the interval, plus all
  /// coefficient breakpoints, with optional jitter.
  static SampleGrid standard(const SystemSpec& s, int count = 1000, double window = 32.0,
                             unsigned long seed = 0);
  static SampleGrid over(const IntervalSpec& iv, const std::vector<double>& breakpoints,
                         int count, double window, unsigned long seed);
};

struct ConditionReport {
  std::string name;
  double worst_defect = 0.0;
  double worst_location = 0.0;
  enum class Status { Pass, Warn, Fail } status = Status::Pass;
  std::string detail;
};

struct ValidationReport {
  std::vector<ConditionReport> conditions;
  int grid_points = 0;
  double tol_struct = 1e-10;
  double tol_hard = 1e-6;
  bool pass = true;   // every condition within tol_struct
  bool hard_fail = false;  // some condition beyond tol_hard
  std::string error;  // evaluation failure, if any
};

struct ValidationOptions {
  double tol_struct = 1e-10;
  double tol_hard = 1e-6;
  int grid_points = 1000;
  double window = 32.0;
  unsigned long seed = 0;
};

ValidationReport validate_system(const SystemSpec& s, const ValidationOptions& opts = {});
ValidationReport validate_system(const SystemSpec& s, const SampleGrid& grid,
                                 const ValidationOptions& opts = {});
ValidationReport validate_sturm_liouville(const SturmLiouvilleSpec& s,
                                          const ValidationOptions& opts = {});

}  // namespace hamsys
