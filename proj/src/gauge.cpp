#include "hamsys/gauge.hpp"

#include <algorithm>
#include <cmath>

namespace hamsys {

GaugeMap GaugeMap::symbolic(MatrixFunction u, std::string description) {
  GaugeMap g;
  g.n = u.dim();
  g.sym = u;
  auto shared = std::make_shared<MatrixFunction>(std::move(u));
  auto dshared = std::make_shared<MatrixFunction>(shared->derivative());
  g.U = [shared](double x) { return shared->eval(x); };
  g.dU = [dshared](double x) { return dshared->eval(x); };
  g.description = std::move(description);
  return g;
}

GaugeMap GaugeMap::functional(int n, std::function<Matrix(double)> u,
                              std::function<Matrix(double)> du, std::string description) {
  GaugeMap g;
  g.n = n;
  g.U = std::move(u);
  g.dU = std::move(du);
  g.description = std::move(description);
  return g;
}

SystemSpec apply_gauge(const SystemSpec& s, const GaugeMap& g) {
  if (g.n != s.n) throw SpecError("gauge dimension mismatch");
  SystemSpec out;
  out.n = s.n;
  out.interval = s.interval;
  out.label = s.label.empty() ? "" : s.label + " (gauged)";

  if (g.sym && s.J.symbolic() && s.B.symbolic() && s.H.symbolic()) {
    const MatrixFunction& U = *g.sym;
    MatrixFunction Ua = U.adjoint();
    MatrixFunction Up = U.derivative();
    out.J = CoeffField(Ua * s.J.sym() * U);
    out.B = CoeffField(Ua * s.J.sym() * Up + Ua * s.B.sym() * U);
    out.H = CoeffField(Ua * s.H.sym() * U);
    return out;
  }

  // functional composition
  auto J = s.J, B = s.B, H = s.H;
  auto U = g.U, dU = g.dU;
  auto bps = s.breakpoints();
  out.J = CoeffField::functional(
      s.n, [J, U](double x) { Matrix u = U(x); return Matrix(u.adjoint() * J.eval(x) * u); },
      nullptr, bps, false, "gauged J");
  out.B = CoeffField::functional(
      s.n,
      [J, B, U, dU](double x) {
        Matrix u = U(x);
        return Matrix(u.adjoint() * (J.eval(x) * dU(x) + B.eval(x) * u));
      },
      nullptr, bps, false, "gauged B");
  out.H = CoeffField::functional(
      s.n, [H, U](double x) { Matrix u = U(x); return Matrix(u.adjoint() * H.eval(x) * u); },
      nullptr, bps, false, "gauged H");
  return out;
}

namespace {

std::pair<double, double> default_span(const IntervalSpec& iv, double window = 16.0) {
  double lo, hi;
  switch (iv.kind) {
    case IntervalSpec::Kind::Finite: lo = iv.a; hi = iv.b; break;
    case IntervalSpec::Kind::HalfLinePositive: lo = iv.a; hi = iv.a + window; break;
    case IntervalSpec::Kind::HalfLineNegative: lo = iv.b - window; hi = iv.b; break;
    default: lo = iv.x0 - window; hi = iv.x0 + window; break;
  }
  return {lo, hi};
}

bool coeff_constant_on(const CoeffField& f, double lo, double hi, double x0, double tol) {
  if (f.is_constant()) return true;
  Matrix ref = f.eval(x0);
  for (int k = 0; k <= 32; ++k) {
    double x = lo + (hi - lo) * k / 32.0;
    if ((f.eval(x) - ref).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

}  // namespace

CanonicalizeResult canonicalize(const SystemSpec& s, const CanonicalizeOptions& opts) {
  auto [lo, hi] = opts.span_set ? std::pair<double, double>{opts.lo, opts.hi}
                                : default_span(s.interval);
  SystemSpec base = s;
  std::optional<GaugeMap> pre;
  if (!coeff_constant_on(s.J, lo, hi, s.interval.x0, 1e-12)) {
    ReduceConstantJOptions ro;
    ro.lo = lo;
    ro.hi = hi;
    ro.span_set = true;
    auto red = reduce_constant_J(s, ro);
    base = red.system;
    pre = red.gauge;
  }

  auto Y = std::make_shared<FundamentalSolution>(base, Complex(0, 0), lo, hi, opts.prop);
  const SystemSpec b = base;
  auto Ueval = [Y, pre](double x) {
    Matrix u = Y->eval(x);
    return pre ? Matrix(pre->U(x) * u) : u;
  };
  auto dUeval = [Y, b, pre](double x) {
    Matrix u = Y->eval(x);
    Matrix du = Y->derivative(x);
    if (!pre) return du;
    return Matrix(pre->dU(x) * u + pre->U(x) * du);
  };

  CanonicalizeResult res;
  res.propagator = Y;
  res.gauge = GaugeMap::functional(s.n, Ueval, dUeval, "fundamental-solution gauge");

  Matrix J0 = base.J.eval(base.interval.x0);
  SystemSpec out;
  out.n = s.n;
  out.interval = s.interval;
  out.label = s.label.empty() ? "canonical" : s.label + " (canonical)";
  out.J = CoeffField::functional(
      s.n, [J0](double) { return J0; }, [J0](double) { return Matrix::Zero(J0.rows(), J0.cols()); },
      {}, true, "constant J");
  out.B = CoeffField(MatrixFunction::zero(s.n));
  const SystemSpec orig = s;
  auto U = res.gauge.U;
  out.H = CoeffField::functional(
      s.n,
      [orig, U](double x) {
        Matrix u = U(x);
        return Matrix(u.adjoint() * orig.H.eval(x) * u);
      },
      nullptr, s.breakpoints(), false, "canonical H from the gauge frame");
  res.system = out;

  // gauge-quality diagnostics on a check grid
  for (int k = 0; k <= opts.check_points; ++k) {
    double x = lo + (hi - lo) * k / static_cast<double>(opts.check_points);
    Matrix u = Ueval(x);
    Matrix du = dUeval(x);
    Matrix Jx = s.J.eval(x);
    Matrix bd = u.adjoint() * (Jx * du + s.B.eval(x) * u);
    Matrix jd = u.adjoint() * Jx * u - J0;
    res.b_defect = std::max(res.b_defect, bd.cwiseAbs().maxCoeff());
    res.j_defect = std::max(res.j_defect, jd.cwiseAbs().maxCoeff());
  }
  return res;
}

ReduceConstantJResult reduce_constant_J(const SystemSpec& s, const ReduceConstantJOptions& opts) {
  auto [lo, hi] = opts.span_set ? std::pair<double, double>{opts.lo, opts.hi}
                                : default_span(s.interval);
  const int n = s.n;
  const double x0 = s.interval.x0;

  // aligned eigenframes of iJ(x) on a reference grid
  auto grid = std::make_shared<std::vector<double>>();
  auto frames = std::make_shared<std::vector<Matrix>>();
  auto scales = std::make_shared<std::vector<Eigen::VectorXd>>();
  int m = std::max(opts.grid_points, 9);
  grid->reserve(m);

  Matrix prev_frame;
  double min_gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k < m; ++k) {
    double x = lo + (hi - lo) * k / static_cast<double>(m - 1);
    Matrix iJ = Complex(0, 1) * s.J.eval(x);
    Eigen::SelfAdjointEigenSolver<Matrix> es((iJ + iJ.adjoint()) / 2.0);
    Eigen::VectorXd d = es.eigenvalues();
    for (int i = 0; i + 1 < n; ++i) min_gap = std::min(min_gap, d[i + 1] - d[i]);
    Matrix V = es.eigenvectors();
    if (k > 0) {
      for (int j = 0; j < n; ++j) {
        Complex z = (prev_frame.col(j).adjoint() * V.col(j))(0);
        if (std::abs(z) > 0) V.col(j) *= std::conj(z) / std::abs(z);
      }
    }
    prev_frame = V;
    grid->push_back(x);
    frames->push_back(V);
    scales->push_back(d);
  }
  if (min_gap < opts.gap_min)
    throw NumericsError("eigenvalue crossing of iJ(x) detected (gap " +
                        std::to_string(min_gap) + " below the threshold); no continuous "
                        "constant-J frame is constructed");

  // constant right factor matching the x0 frame: U(x0) = I
  std::size_t i0 = static_cast<std::size_t>(
      std::min<std::ptrdiff_t>(frames->size() - 1,
                               std::lower_bound(grid->begin(), grid->end(), x0) - grid->begin()));
  Matrix iJ0 = Complex(0, 1) * s.J.eval(x0);
  Eigen::SelfAdjointEigenSolver<Matrix> es0((iJ0 + iJ0.adjoint()) / 2.0);
  Matrix V0 = es0.eigenvectors();
  for (int j = 0; j < n; ++j) {
    Complex z = ((*frames)[i0].col(j).adjoint() * V0.col(j))(0);
    if (std::abs(z) > 0) V0.col(j) *= std::conj(z) / std::abs(z);
  }
  Eigen::VectorXd d0 = es0.eigenvalues();
  Matrix W = d0.cwiseAbs().cwiseSqrt().asDiagonal().toDenseMatrix().cast<Complex>() *
             V0.adjoint();

  auto sysJ = s.J;
  auto frame_at = [grid, frames, sysJ, n](double x) {
    Matrix iJ = Complex(0, 1) * sysJ.eval(x);
    Eigen::SelfAdjointEigenSolver<Matrix> es((iJ + iJ.adjoint()) / 2.0);
    Matrix V = es.eigenvectors();
    auto it = std::lower_bound(grid->begin(), grid->end(), x);
    std::size_t i = std::min<std::size_t>(it - grid->begin(), grid->size() - 1);
    for (int j = 0; j < n; ++j) {
      Complex z = ((*frames)[i].col(j).adjoint() * V.col(j))(0);
      if (std::abs(z) > 0) V.col(j) *= std::conj(z) / std::abs(z);
    }
    Eigen::VectorXd dabs = es.eigenvalues().cwiseAbs();
    return std::pair<Matrix, Eigen::VectorXd>(V, dabs);
  };

  auto Ueval = [frame_at, W](double x) {
    auto [V, dabs] = frame_at(x);
    Matrix mid = dabs.cwiseSqrt().cwiseInverse().asDiagonal().toDenseMatrix().cast<Complex>();
    return Matrix(V * mid * W);
  };
  auto dUeval = [Ueval, lo, hi](double x) {
    double h = std::max(1e-6, (hi - lo) * 1e-7);
    return Matrix((Ueval(x + h) - Ueval(x - h)) / (2.0 * h));
  };

  ReduceConstantJResult res;
  res.gauge = GaugeMap::functional(n, Ueval, dUeval, "constant-J eigenframe gauge");
  res.system = apply_gauge(s, res.gauge);
  Matrix J0 = s.J.eval(x0);
  for (int k = 0; k <= 32; ++k) {
    double x = lo + (hi - lo) * k / 32.0;
    Matrix u = Ueval(x);
    res.j_defect =
        std::max(res.j_defect, (u.adjoint() * s.J.eval(x) * u - J0).cwiseAbs().maxCoeff());
  }
  // expose exact constancy downstream
  res.system.J = CoeffField::functional(
      n, [J0](double) { return J0; }, [J0, n](double) { return Matrix(Matrix::Zero(n, n)); }, {},
      true, "constant J from eigenframe gauge");
  return res;
}

SystemSpec embed_sturm_liouville(const SturmLiouvilleSpec& sl) {
  int n = sl.n;
  MatrixFunction zero = MatrixFunction::zero(n);
  MatrixFunction ii = MatrixFunction::identity(n).scaled(Expression::imaginary_unit());
  MatrixFunction J = MatrixFunction::blocks2(zero, ii, ii, zero);
  MatrixFunction V = sl.potential();
  MatrixFunction Qa = sl.Q.adjoint();
  MatrixFunction B = MatrixFunction::blocks2(
      V, (Qa * sl.A).scaled(-Expression::imaginary_unit()),
      (sl.A * sl.Q).scaled(Expression::imaginary_unit()), zero - sl.A);
  MatrixFunction H = MatrixFunction::blocks2(sl.H, zero, zero, zero);
  SystemSpec s;
  s.n = 2 * n;
  s.interval = sl.interval;
  s.J = CoeffField(J);
  s.B = CoeffField(B);
  s.H = CoeffField(H);
  s.label = sl.label.empty() ? "sturm-liouville embedding" : sl.label + " (embedded)";
  return s;
}

SystemSpec square_system(const SystemSpec& s) {
  if (!(s.J.symbolic() && s.B.symbolic() && s.H.symbolic()))
    throw SpecError("square of a system requires symbolic coefficients");
  int n = s.n;
  MatrixFunction zero = MatrixFunction::zero(n);
  MatrixFunction J1 = MatrixFunction::blocks2(zero, s.J.sym(), s.J.sym(), zero);
  MatrixFunction B1 =
      MatrixFunction::blocks2(zero, s.B.sym(), s.B.sym(), zero - s.H.sym());
  MatrixFunction H1 = MatrixFunction::blocks2(s.H.sym(), zero, zero, zero);
  SystemSpec sq;
  sq.n = 2 * n;
  sq.interval = s.interval;
  sq.J = CoeffField(J1);
  sq.B = CoeffField(B1);
  sq.H = CoeffField(H1);
  sq.label = s.label.empty() ? "squared system" : s.label + " (squared)";

  MatrixFunction Jinv = s.J.sym().inverse();
  MatrixFunction U = MatrixFunction::blocks2(
      MatrixFunction::identity(n), zero, zero, Jinv.scaled(Expression::imaginary_unit()));
  return apply_gauge(sq, GaugeMap::symbolic(U, "square-system normal form"));
}

SystemSpec block_normal_form(const BlockSystemSpec& blk) {
  // structural rejections on a sample grid
  std::vector<double> bps;
  blk.V.collect_breakpoints(bps);
  blk.A.collect_breakpoints(bps);
  blk.H.collect_breakpoints(bps);
  blk.J.collect_breakpoints(bps);
  SampleGrid grid = SampleGrid::over(blk.interval, bps, 128, 16.0, 0);
  for (double x : grid.points) {
    if ((blk.V.eval(x) - blk.V.eval(x).adjoint()).cwiseAbs().maxCoeff() > 1e-10)
      throw SpecError("block normal form requires V = V*");
    if ((blk.A.eval(x) - blk.A.eval(x).adjoint()).cwiseAbs().maxCoeff() > 1e-10)
      throw SpecError("block normal form requires A = A*");
    Eigen::SelfAdjointEigenSolver<Matrix> es(blk.H.eval(x));
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw SpecError("block normal form requires H >= 0");
    if (std::abs(blk.J.eval(x).determinant()) < 1e-12)
      throw SpecError("block normal form requires det J != 0");
  }

  int n = blk.n;
  SystemSpec s1 = blk.assembled();
  MatrixFunction zero = MatrixFunction::zero(n);
  MatrixFunction Jinv = blk.J.inverse();
  MatrixFunction U1 = MatrixFunction::blocks2(
      MatrixFunction::identity(n), zero, zero, Jinv.scaled(Expression::imaginary_unit()));
  SystemSpec s2 = apply_gauge(s1, GaugeMap::symbolic(U1));
  MatrixFunction U2 = MatrixFunction::blocks2(
      MatrixFunction::identity(n), zero, zero,
      MatrixFunction::identity(n).scaled(Expression::imaginary_unit()));
  SystemSpec s3 = apply_gauge(s2, GaugeMap::symbolic(U2));
  s3.label = blk.label.empty() ? "block normal form" : blk.label + " (normal form)";
  return s3;
}

}  // namespace hamsys
