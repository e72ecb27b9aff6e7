#pragma once

#include <functional>
#include <vector>

#include "hamsys/system.hpp"

namespace hamsys {

struct QuadOptions {
  double rel_tol = 1e-11;
  double abs_tol = 1e-14;
  int max_depth = 48;
};

/// Adaptive Simpson quadrature of a scalar function on [a,b].
double integrate_scalar(const std::function<double(double)>& f, double a, double b,
                        const QuadOptions& opts = {});

/// Adaptive Simpson quadrature of a matrix-valued function on [a,b].
Matrix integrate_matrix(const std::function<Matrix(double)>& f, double a, double b,
                        const QuadOptions& opts = {});

/// Scalar quadrature that splits [a,b] at the given interior nodes first.
double integrate_scalar_split(const std::function<double(double)>& f, double a, double b,
                              const std::vector<double>& nodes, const QuadOptions& opts = {});
Matrix integrate_matrix_split(const std::function<Matrix(double)>& f, double a, double b,
                              const std::vector<double>& nodes, const QuadOptions& opts = {});

/// Strictly increasing table of (x, F(x)) with F(x) = \int_{x_front}^{x} f,
/// supporting interpolation and inversion of monotone F.
class CumulativeTable {
public:
  CumulativeTable() = default;
  CumulativeTable(std::vector<double> xs, std::vector<double> values);

  double front_x() const { return xs_.front(); }
  double back_x() const { return xs_.back(); }
  double back_value() const { return vals_.back(); }
  double value(double x) const;            // linear interpolation
  double inverse(double v) const;          // requires nondecreasing values
  const std::vector<double>& xs() const { return xs_; }
  const std::vector<double>& values() const { return vals_; }

  /// Build by integrating f over [a,b] with at least `min_points` panels.
  static CumulativeTable build(const std::function<double(double)>& f, double a, double b,
                               int min_points = 512, const QuadOptions& opts = {});

private:
  std::vector<double> xs_, vals_;
};

}  // namespace hamsys
