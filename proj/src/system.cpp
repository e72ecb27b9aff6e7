#include "hamsys/system.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace hamsys {

MatrixFunction::MatrixFunction(int n) : n_(n), entries_(n * n) {}

MatrixFunction::MatrixFunction(int n, std::vector<Expression> entries)
    : n_(n), entries_(std::move(entries)) {
  if (static_cast<int>(entries_.size()) != n * n)
    throw SpecError("matrix entry grid is not n-by-n");
}

MatrixFunction MatrixFunction::zero(int n) { return MatrixFunction(n); }

MatrixFunction MatrixFunction::identity(int n) {
  MatrixFunction m(n);
  for (int i = 0; i < n; ++i) m.at(i, i) = Expression::number(1.0);
  return m;
}

MatrixFunction MatrixFunction::constant(const Matrix& v) {
  int n = static_cast<int>(v.rows());
  MatrixFunction m(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Expression e = Expression::number(v(i, j).real());
      if (v(i, j).imag() != 0.0)
        e = e + Expression::number(v(i, j).imag()) * Expression::imaginary_unit();
      m.at(i, j) = e;
    }
  return m;
}

Matrix MatrixFunction::eval(double x) const {
  Matrix out(n_, n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      try {
        out(i, j) = at(i, j).eval(x);
      } catch (const EvalError& e) {
        throw EvalError("entry (" + std::to_string(i) + "," + std::to_string(j) + "): " + e.what(),
                        x);
      }
    }
  return out;
}

MatrixFunction MatrixFunction::derivative() const {
  MatrixFunction d(n_);
  for (int i = 0; i < n_ * n_; ++i) d.entries_[i] = entries_[i].derivative();
  return d;
}

bool MatrixFunction::depends_on_x() const {
  for (const auto& e : entries_)
    if (e.depends_on_x()) return true;
  return false;
}

void MatrixFunction::collect_breakpoints(std::vector<double>& out) const {
  for (const auto& e : entries_) e.collect_breakpoints(out);
}

MatrixFunction MatrixFunction::adjoint() const {
  MatrixFunction m(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m.at(i, j) = Expression::apply(ExprOp::Conj, at(j, i));
  return m;
}

MatrixFunction MatrixFunction::operator+(const MatrixFunction& o) const {
  MatrixFunction m(n_);
  for (int i = 0; i < n_ * n_; ++i) m.entries_[i] = entries_[i] + o.entries_[i];
  return m;
}

MatrixFunction MatrixFunction::operator-(const MatrixFunction& o) const {
  MatrixFunction m(n_);
  for (int i = 0; i < n_ * n_; ++i) m.entries_[i] = entries_[i] - o.entries_[i];
  return m;
}

MatrixFunction MatrixFunction::operator*(const MatrixFunction& o) const {
  MatrixFunction m(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) {
      Expression acc;
      for (int k = 0; k < n_; ++k) acc = acc + at(i, k) * o.at(k, j);
      m.at(i, j) = acc;
    }
  return m;
}

MatrixFunction MatrixFunction::scaled(const Expression& s) const {
  MatrixFunction m(n_);
  for (int i = 0; i < n_ * n_; ++i) m.entries_[i] = s * entries_[i];
  return m;
}

MatrixFunction MatrixFunction::inverse() const {
  if (n_ == 1) {
    MatrixFunction m(1);
    m.at(0, 0) = Expression::number(1.0) / at(0, 0);
    return m;
  }
  if (n_ == 2) {
    Expression det = at(0, 0) * at(1, 1) - at(0, 1) * at(1, 0);
    MatrixFunction m(2);
    m.at(0, 0) = at(1, 1) / det;
    m.at(0, 1) = (-at(0, 1)) / det;
    m.at(1, 0) = (-at(1, 0)) / det;
    m.at(1, 1) = at(0, 0) / det;
    return m;
  }
  if (n_ == 3) {
    auto c = [&](int i, int j) { return at(i, j); };
    Expression det = c(0, 0) * (c(1, 1) * c(2, 2) - c(1, 2) * c(2, 1)) -
                     c(0, 1) * (c(1, 0) * c(2, 2) - c(1, 2) * c(2, 0)) +
                     c(0, 2) * (c(1, 0) * c(2, 1) - c(1, 1) * c(2, 0));
    MatrixFunction m(3);
    m.at(0, 0) = (c(1, 1) * c(2, 2) - c(1, 2) * c(2, 1)) / det;
    m.at(0, 1) = (c(0, 2) * c(2, 1) - c(0, 1) * c(2, 2)) / det;
    m.at(0, 2) = (c(0, 1) * c(1, 2) - c(0, 2) * c(1, 1)) / det;
    m.at(1, 0) = (c(1, 2) * c(2, 0) - c(1, 0) * c(2, 2)) / det;
    m.at(1, 1) = (c(0, 0) * c(2, 2) - c(0, 2) * c(2, 0)) / det;
    m.at(1, 2) = (c(0, 2) * c(1, 0) - c(0, 0) * c(1, 2)) / det;
    m.at(2, 0) = (c(1, 0) * c(2, 1) - c(1, 1) * c(2, 0)) / det;
    m.at(2, 1) = (c(0, 1) * c(2, 0) - c(0, 0) * c(2, 1)) / det;
    m.at(2, 2) = (c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0)) / det;
    return m;
  }
  throw SpecError("symbolic matrix inverse supported for n <= 3 only");
}

MatrixFunction MatrixFunction::blocks2(const MatrixFunction& a, const MatrixFunction& b,
                                       const MatrixFunction& c, const MatrixFunction& d) {
  int n = a.dim();
  MatrixFunction m(2 * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m.at(i, j) = a.at(i, j);
      m.at(i, j + n) = b.at(i, j);
      m.at(i + n, j) = c.at(i, j);
      m.at(i + n, j + n) = d.at(i, j);
    }
  return m;
}

std::vector<std::string> MatrixFunction::entry_strings() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.to_string());
  return out;
}

CoeffField::CoeffField(MatrixFunction m) : n_(m.dim()), sym_(std::move(m)) {
  sym_->collect_breakpoints(breakpoints_);
  std::sort(breakpoints_.begin(), breakpoints_.end());
  breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
  constant_ = !sym_->depends_on_x();
  description_ = "symbolic";
}

CoeffField CoeffField::functional(int n, EvalFn eval, EvalFn deriv,
                                  std::vector<double> breakpoints, bool constant,
                                  std::string description) {
  CoeffField f;
  f.n_ = n;
  f.eval_ = std::move(eval);
  f.deriv_ = std::move(deriv);
  f.breakpoints_ = std::move(breakpoints);
  f.constant_ = constant;
  f.description_ = std::move(description);
  return f;
}

Matrix CoeffField::eval(double x) const {
  if (sym_) return sym_->eval(x);
  return eval_(x);
}

Matrix CoeffField::deriv(double x) const {
  if (sym_) {
    if (!sym_deriv_) const_cast<CoeffField*>(this)->sym_deriv_ = sym_->derivative();
    return sym_deriv_->eval(x);
  }
  if (deriv_) return deriv_(x);
  if (constant_) return Matrix::Zero(n_, n_);
  double h = 1e-6 * (1.0 + std::abs(x));
  return (eval_(x + h) - eval_(x - h)) / (2.0 * h);
}

IntervalSpec IntervalSpec::finite(double a, double b, double x0) {
  IntervalSpec iv;
  iv.kind = Kind::Finite;
  iv.a = a;
  iv.b = b;
  iv.x0 = x0;
  iv.check();
  return iv;
}

IntervalSpec IntervalSpec::half_line_positive(double a) {
  IntervalSpec iv;
  iv.kind = Kind::HalfLinePositive;
  iv.a = a;
  iv.b = std::numeric_limits<double>::infinity();
  iv.x0 = a;
  return iv;
}

IntervalSpec IntervalSpec::half_line_negative(double b) {
  IntervalSpec iv;
  iv.kind = Kind::HalfLineNegative;
  iv.a = -std::numeric_limits<double>::infinity();
  iv.b = b;
  iv.x0 = b;
  return iv;
}

IntervalSpec IntervalSpec::full_line() {
  IntervalSpec iv;
  iv.kind = Kind::FullLine;
  iv.a = -std::numeric_limits<double>::infinity();
  iv.b = std::numeric_limits<double>::infinity();
  iv.x0 = 0.0;
  return iv;
}

std::string IntervalSpec::kind_name() const {
  switch (kind) {
    case Kind::Finite: return "finite";
    case Kind::HalfLinePositive: return "half-line-positive";
    case Kind::HalfLineNegative: return "half-line-negative";
    case Kind::FullLine: return "full-line";
  }
  return "?";
}

void IntervalSpec::check() const {
  if (!(a < b)) throw SpecError("interval endpoints must satisfy a < b");
  if (!std::isfinite(x0) || x0 < a || x0 > b)
    throw SpecError("basepoint x0 must be a finite point of [a,b]");
}

std::vector<double> SystemSpec::breakpoints() const {
  std::vector<double> pts;
  for (const CoeffField* f : {&J, &B, &H})
    for (double c : f->breakpoints()) pts.push_back(c);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<double> clipped;
  for (double c : pts)
    if (c > interval.a && c < interval.b) clipped.push_back(c);
  return clipped;
}

SystemSpec SystemSpec::restricted(const IntervalSpec& sub) const {
  SystemSpec s = *this;
  s.interval = sub;
  return s;
}

MatrixFunction SturmLiouvilleSpec::potential() const { return R - Q.adjoint() * A * Q; }

SystemSpec BlockSystemSpec::assembled() const {
  MatrixFunction zero = MatrixFunction::zero(n);
  MatrixFunction j1 = MatrixFunction::blocks2(zero, J.adjoint(), zero - J, zero);
  MatrixFunction b1 =
      MatrixFunction::blocks2(V, B, B.adjoint() - J.derivative(), zero - A);
  MatrixFunction h1 = MatrixFunction::blocks2(H, zero, zero, zero);
  SystemSpec s;
  s.n = 2 * n;
  s.interval = interval;
  s.J = CoeffField(j1);
  s.B = CoeffField(b1);
  s.H = CoeffField(h1);
  s.label = label;
  return s;
}

SampleGrid SampleGrid::over(const IntervalSpec& iv, const std::vector<double>& breakpoints,
                            int count, double window, unsigned long seed) {
  double lo, hi;
  switch (iv.kind) {
    case IntervalSpec::Kind::Finite:
      lo = iv.a;
      hi = iv.b;
      break;
    case IntervalSpec::Kind::HalfLinePositive:
      lo = iv.a;
      hi = iv.a + window;
      break;
    case IntervalSpec::Kind::HalfLineNegative:
      lo = iv.b - window;
      hi = iv.b;
      break;
    case IntervalSpec::Kind::FullLine:
    default:
      lo = iv.x0 - window;
      hi = iv.x0 + window;
      break;
  }
  SampleGrid g;
  g.points.reserve(count + breakpoints.size() + 1);
  if (count < 2) count = 2;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  double step = (hi - lo) / (count - 1);
  for (int k = 0; k < count; ++k) {
    double x = lo + k * step;
    if (seed != 0 && k > 0 && k + 1 < count) x += jitter(rng) * step;
    g.points.push_back(x);
  }
  for (double c : breakpoints)
    if (c >= lo && c <= hi) g.points.push_back(c);
  std::sort(g.points.begin(), g.points.end());
  g.points.erase(std::unique(g.points.begin(), g.points.end()), g.points.end());
  return g;
}

SampleGrid SampleGrid::standard(const SystemSpec& s, int count, double window,
                                unsigned long seed) {
  return over(s.interval, s.breakpoints(), count, window, seed);
}

namespace {

double herm_defect(const Matrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

void finish(ConditionReport& c, const ValidationOptions& o) {
  if (c.worst_defect <= o.tol_struct) c.status = ConditionReport::Status::Pass;
  else if (c.worst_defect <= o.tol_hard) c.status = ConditionReport::Status::Warn;
  else c.status = ConditionReport::Status::Fail;
}

}  // namespace

ValidationReport validate_system(const SystemSpec& s, const SampleGrid& grid,
                                 const ValidationOptions& opts) {
  ValidationReport rep;
  rep.grid_points = static_cast<int>(grid.points.size());
  rep.tol_struct = opts.tol_struct;
  rep.tol_hard = opts.tol_hard;

  ConditionReport skew{"J skew-hermitian: J* = -J"};
  ConditionReport invert{"J invertible: |det J| > 0"};
  ConditionReport symm{"B symmetry: B* = B - J'"};
  ConditionReport herm{"H hermitian: H* = H"};
  ConditionReport psd{"H nonnegative: eig H >= 0"};
  invert.worst_defect = std::numeric_limits<double>::infinity();

  try {
    for (double x : grid.points) {
      Matrix J = s.J.eval(x);
      Matrix Jp = s.J.deriv(x);
      Matrix B = s.B.eval(x);
      Matrix H = s.H.eval(x);

      double d = (J.adjoint() + J).cwiseAbs().maxCoeff();
      if (d > skew.worst_defect) skew.worst_defect = d, skew.worst_location = x;

      double det = std::abs(J.determinant());
      if (det < invert.worst_defect) invert.worst_defect = det, invert.worst_location = x;

      d = (B.adjoint() - B + Jp).cwiseAbs().maxCoeff();
      if (d > symm.worst_defect) symm.worst_defect = d, symm.worst_location = x;

      d = herm_defect(H);
      if (d > herm.worst_defect) herm.worst_defect = d, herm.worst_location = x;

      Eigen::SelfAdjointEigenSolver<Matrix> es((H + H.adjoint()) / 2.0);
      double mineig = es.eigenvalues().minCoeff();
      d = std::max(0.0, -mineig);
      if (d > psd.worst_defect) psd.worst_defect = d, psd.worst_location = x;
    }
  } catch (const EvalError& e) {
    rep.error = e.what();
    rep.pass = false;
    rep.hard_fail = true;
    return rep;
  }

  finish(skew, opts);
  finish(symm, opts);
  finish(herm, opts);
  finish(psd, opts);
  // invertibility is a lower bound, not a defect
  invert.status = invert.worst_defect > 1e-12 ? ConditionReport::Status::Pass
                                              : ConditionReport::Status::Fail;
  invert.detail = "min |det J| over grid";

  rep.conditions = {skew, invert, symm, herm, psd};
  for (const auto& c : rep.conditions) {
    if (c.status != ConditionReport::Status::Pass) rep.pass = false;
    if (c.status == ConditionReport::Status::Fail) rep.hard_fail = true;
  }
  return rep;
}

ValidationReport validate_system(const SystemSpec& s, const ValidationOptions& opts) {
  return validate_system(s, SampleGrid::standard(s, opts.grid_points, opts.window, opts.seed),
                         opts);
}

ValidationReport validate_sturm_liouville(const SturmLiouvilleSpec& s,
                                          const ValidationOptions& opts) {
  ValidationReport rep;
  rep.tol_struct = opts.tol_struct;
  rep.tol_hard = opts.tol_hard;
  std::vector<double> bps;
  s.A.collect_breakpoints(bps);
  s.Q.collect_breakpoints(bps);
  s.R.collect_breakpoints(bps);
  s.H.collect_breakpoints(bps);
  SampleGrid grid = SampleGrid::over(s.interval, bps, opts.grid_points, opts.window, opts.seed);
  rep.grid_points = static_cast<int>(grid.points.size());

  ConditionReport apos{"A positive definite"};
  ConditionReport rherm{"R hermitian: R* = R"};
  ConditionReport hherm{"H hermitian: H* = H"};
  ConditionReport hpsd{"H nonnegative: eig H >= 0"};
  apos.worst_defect = 0.0;

  try {
    for (double x : grid.points) {
      Matrix A = s.A.eval(x);
      Eigen::SelfAdjointEigenSolver<Matrix> ea((A + A.adjoint()) / 2.0);
      double mineig = ea.eigenvalues().minCoeff();
      double d = std::max(0.0, -mineig + (mineig <= 0 ? 1e-30 : 0.0));
      if (mineig <= 0.0) d = std::max(d, 1.0e-3);  // flag outright non-positivity
      if (d > apos.worst_defect) apos.worst_defect = d, apos.worst_location = x;

      double dr = herm_defect(s.R.eval(x));
      if (dr > rherm.worst_defect) rherm.worst_defect = dr, rherm.worst_location = x;

      Matrix H = s.H.eval(x);
      double dh = herm_defect(H);
      if (dh > hherm.worst_defect) hherm.worst_defect = dh, hherm.worst_location = x;
      Eigen::SelfAdjointEigenSolver<Matrix> eh((H + H.adjoint()) / 2.0);
      double m = eh.eigenvalues().minCoeff();
      double dp = std::max(0.0, -m);
      if (dp > hpsd.worst_defect) hpsd.worst_defect = dp, hpsd.worst_location = x;
    }
  } catch (const EvalError& e) {
    rep.error = e.what();
    rep.pass = false;
    rep.hard_fail = true;
    return rep;
  }

  finish(apos, opts);
  finish(rherm, opts);
  finish(hherm, opts);
  finish(hpsd, opts);
  rep.conditions = {apos, rherm, hherm, hpsd};
  for (const auto& c : rep.conditions) {
    if (c.status != ConditionReport::Status::Pass) rep.pass = false;
    if (c.status == ConditionReport::Status::Fail) rep.hard_fail = true;
  }
  return rep;
}

}  // namespace hamsys
