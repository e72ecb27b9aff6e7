#include "hamsys/quadrature.hpp"

#include <algorithm>
#include <cmath>

namespace hamsys {

namespace {

struct ScalarSimpson {
  const std::function<double(double)>& f;
  const QuadOptions& opts;

  double recurse(double a, double b, double fa, double fm, double fb, double whole,
                 int depth) const {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (!std::isfinite(delta)) return left + right;  // overflow: stop refining
    if (depth <= 0) return left + right + delta / 15.0;
    double scale = opts.abs_tol + opts.rel_tol * std::abs(left + right);
    if (std::abs(delta) <= 15.0 * scale) return left + right + delta / 15.0;
    return recurse(a, m, fa, flm, fm, left, depth - 1) +
           recurse(m, b, fm, frm, fb, right, depth - 1);
  }

  double run(double a, double b) const {
    if (a == b) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    QuadOptions scaled = opts;
    scaled.abs_tol = std::max(opts.abs_tol, opts.rel_tol * std::abs(whole) * 1e-2);
    return ScalarSimpson{f, scaled}.recurse(a, b, fa, fm, fb, whole, opts.max_depth);
  }
};

struct MatrixSimpson {
  const std::function<Matrix(double)>& f;
  const QuadOptions& opts;

  Matrix recurse(double a, double b, const Matrix& fa, const Matrix& fm, const Matrix& fb,
                 const Matrix& whole, int depth) const {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    Matrix flm = f(lm), frm = f(rm);
    Matrix left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    Matrix right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    Matrix sum = left + right;
    Matrix delta = sum - whole;
    double err = delta.cwiseAbs().maxCoeff();
    if (!std::isfinite(err)) return sum;  // overflow: stop refining
    double scale = opts.abs_tol + opts.rel_tol * sum.cwiseAbs().maxCoeff();
    if (depth <= 0 || err <= 15.0 * scale) return sum + delta / 15.0;
    return recurse(a, m, fa, flm, fm, left, depth - 1) +
           recurse(m, b, fm, frm, fb, right, depth - 1);
  }

  Matrix run(double a, double b) const {
    Matrix fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    if (a == b) return Matrix::Zero(fa.rows(), fa.cols());
    Matrix whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    QuadOptions scaled = opts;
    scaled.abs_tol = std::max(opts.abs_tol, opts.rel_tol * whole.cwiseAbs().maxCoeff() * 1e-2);
    return MatrixSimpson{f, scaled}.recurse(a, b, fa, fm, fb, whole, opts.max_depth);
  }
};

std::vector<double> split_points(double a, double b, const std::vector<double>& nodes) {
  std::vector<double> pts{a};
  double lo = std::min(a, b), hi = std::max(a, b);
  std::vector<double> inner;
  for (double t : nodes)
    if (t > lo && t < hi) inner.push_back(t);
  std::sort(inner.begin(), inner.end());
  if (b < a) std::reverse(inner.begin(), inner.end());
  for (double t : inner) pts.push_back(t);
  pts.push_back(b);
  return pts;
}

}  // namespace

double integrate_scalar(const std::function<double(double)>& f, double a, double b,
                        const QuadOptions& opts) {
  return ScalarSimpson{f, opts}.run(a, b);
}

Matrix integrate_matrix(const std::function<Matrix(double)>& f, double a, double b,
                        const QuadOptions& opts) {
  return MatrixSimpson{f, opts}.run(a, b);
}

double integrate_scalar_split(const std::function<double(double)>& f, double a, double b,
                              const std::vector<double>& nodes, const QuadOptions& opts) {
  auto pts = split_points(a, b, nodes);
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k)
    acc += integrate_scalar(f, pts[k], pts[k + 1], opts);
  return acc;
}

Matrix integrate_matrix_split(const std::function<Matrix(double)>& f, double a, double b,
                              const std::vector<double>& nodes, const QuadOptions& opts) {
  auto pts = split_points(a, b, nodes);
  Matrix acc;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    Matrix part = integrate_matrix(f, pts[k], pts[k + 1], opts);
    acc = (k == 0) ? part : Matrix(acc + part);
  }
  return acc;
}

CumulativeTable::CumulativeTable(std::vector<double> xs, std::vector<double> values)
    : xs_(std::move(xs)), vals_(std::move(values)) {
  if (xs_.size() != vals_.size() || xs_.size() < 2)
    throw NumericsError("cumulative table needs matching arrays of length >= 2");
}

double CumulativeTable::value(double x) const {
  if (x <= xs_.front()) return vals_.front();
  if (x >= xs_.back()) return vals_.back();
  auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - xs_.begin());
  std::size_t lo = hi - 1;
  double t = (x - xs_[lo]) / (xs_[hi] - xs_[lo]);
  return vals_[lo] + t * (vals_[hi] - vals_[lo]);
}

double CumulativeTable::inverse(double v) const {
  if (v <= vals_.front()) return xs_.front();
  if (v >= vals_.back()) return xs_.back();
  auto it = std::upper_bound(vals_.begin(), vals_.end(), v);
  std::size_t hi = static_cast<std::size_t>(it - vals_.begin());
  std::size_t lo = hi - 1;
  double dv = vals_[hi] - vals_[lo];
  double t = dv > 0 ? (v - vals_[lo]) / dv : 0.0;
  return xs_[lo] + t * (xs_[hi] - xs_[lo]);
}

CumulativeTable CumulativeTable::build(const std::function<double(double)>& f, double a,
                                       double b, int min_points, const QuadOptions& opts) {
  std::vector<double> xs, vals;
  xs.reserve(min_points + 1);
  vals.reserve(min_points + 1);
  xs.push_back(a);
  vals.push_back(0.0);
  double acc = 0.0;
  for (int k = 1; k <= min_points; ++k) {
    double x0 = a + (b - a) * (k - 1) / static_cast<double>(min_points);
    double x1 = a + (b - a) * k / static_cast<double>(min_points);
    acc += integrate_scalar(f, x0, x1, opts);
    xs.push_back(x1);
    vals.push_back(acc);
  }
  return CumulativeTable(std::move(xs), std::move(vals));
}

}  // namespace hamsys
