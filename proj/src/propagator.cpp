#include "hamsys/propagator.hpp"

#include <algorithm>
#include <cmath>

#include "hamsys/quadrature.hpp"

namespace hamsys {

Matrix ScaledMatrix::dense() const {
  if (logscale > 690.0)
    throw NumericsError("matrix value exceeds the representable range (logscale " +
                        std::to_string(logscale) + ")");
  return std::exp(logscale) * value;
}

Matrix PropWindow::eval_W(double x) const {
  for (const auto& st : steps)
    if (st.contains(x)) {
      Vector v = st.eval(x);
      int n = static_cast<int>(std::lround(std::sqrt(double(v.size()))));
      return Eigen::Map<const Matrix>(v.data(), n, n);
    }
  throw NumericsError("window evaluation outside the solved span");
}

namespace {

struct SystemRhs {
  const SystemSpec& s;
  Complex lambda;
  int n;
  bool constant;
  Matrix A_const;
  // evaluation inset keeps stage evaluations strictly inside the current
  // smooth segment (guards piecewise coefficients at their breakpoints)
  double seg_lo = -std::numeric_limits<double>::infinity();
  double seg_hi = std::numeric_limits<double>::infinity();

  SystemRhs(const SystemSpec& sys, Complex lam) : s(sys), lambda(lam), n(sys.n) {
    constant = s.J.is_constant() && s.B.is_constant() && s.H.is_constant();
    if (constant) A_const = coefficient(s.interval.x0);
  }

  Matrix coefficient(double x) const {
    Matrix J = s.J.eval(x);
    Matrix M = lambda * s.H.eval(x) - s.B.eval(x);
    return J.partialPivLu().solve(M);
  }

  double inset(double x) const {
    if (x <= seg_lo) {
      double d = std::max(std::abs(seg_hi - seg_lo), 1.0) * 1e-14;
      return seg_lo + d;
    }
    if (x >= seg_hi) {
      double d = std::max(std::abs(seg_hi - seg_lo), 1.0) * 1e-14;
      return seg_hi - d;
    }
    return x;
  }

  void operator()(double x, const Vector& y, Vector& out) const {
    Eigen::Map<const Matrix> W(y.data(), n, n);
    out.resize(n * n);
    Eigen::Map<Matrix> O(out.data(), n, n);
    if (constant) {
      O = A_const * W;
    } else {
      O = coefficient(inset(x)) * W;
    }
  }
};

std::vector<double> march_nodes(const SystemSpec& s, double x0, double target,
                                const std::vector<double>& extra) {
  std::vector<double> nodes;
  double lo = std::min(x0, target), hi = std::max(x0, target);
  for (double c : s.breakpoints())
    if (c > lo && c < hi) nodes.push_back(c);
  for (double c : extra)
    if (c > lo && c < hi) nodes.push_back(c);
  nodes.push_back(target);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  if (target < x0) std::reverse(nodes.begin(), nodes.end());
  return nodes;
}

}  // namespace

void propagate(const SystemSpec& s, Complex lambda, double target, const PropagatorOptions& opts,
               const PropStepFn& step_fn, const PropNodeFn& node_fn,
               std::vector<PropWindow>* keep) {
  const int n = s.n;
  const double x0 = s.interval.x0;
  SystemRhs rhs(s, lambda);

  Matrix W = Matrix::Identity(n, n);
  double rho = 0.0;
  Matrix F = Matrix::Identity(n, n);
  double cur = x0;

  PropWindow win;
  win.start = cur;
  win.logscale = rho;
  win.F = F;

  auto close_and_rescale = [&](double at) {
    win.end = at;
    if (keep && !win.steps.empty()) keep->push_back(win);
    Eigen::HouseholderQR<Matrix> qr(W);
    Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    double sc = R.norm();
    if (sc <= 0.0 || !std::isfinite(sc))
      throw NumericsError("degenerate propagator factor at x=" + std::to_string(at));
    rho += std::log(sc);
    F = (R / sc) * F;
    W = qr.householderQ();
    win = PropWindow{};
    win.start = at;
    win.logscale = rho;
    win.F = F;
  };

  if (cur == target) {
    if (node_fn) node_fn(cur);
    return;
  }

  OdeOptions oo;
  oo.rtol = opts.rtol;
  oo.atol = opts.atol;

  for (double node : march_nodes(s, x0, target, opts.mandatory_nodes)) {
    while (cur != node) {
      rhs.seg_lo = std::min(cur, node);
      rhs.seg_hi = std::max(cur, node);
      Vector y0 = Eigen::Map<const Vector>(W.data(), n * n);
      auto sink = [&](const DenseStep& st, const Vector& yend) {
        if (keep) win.steps.push_back(st);
        if (step_fn) step_fn(rho, F, st);
        double m = yend.cwiseAbs().maxCoeff();
        if (!std::isfinite(m))
          throw NumericsError("propagator overflow at x=" + std::to_string(st.t1));
        return m > opts.rescale_threshold ? StepAction::Interrupt : StepAction::Continue;
      };
      OdeResult r;
      try {
        r = integrate_dense(std::cref(rhs), cur, y0, node, oo, sink);
      } catch (const EvalError& e) {
        throw NumericsError(std::string("coefficient evaluation failed: ") + e.what());
      }
      cur = r.t_end;
      W = Eigen::Map<const Matrix>(r.y_end.data(), n, n);
      close_and_rescale(cur);
    }
    if (node_fn) node_fn(node);
  }
}

FundamentalSolution::FundamentalSolution(SystemSpec s, Complex lambda, double lo, double hi,
                                         PropagatorOptions opts)
    : s_(std::move(s)), lambda_(lambda), lo_(lo), hi_(hi), opts_(std::move(opts)) {
  double x0 = s_.interval.x0;
  if (lo_ > hi_) std::swap(lo_, hi_);
  if (x0 < lo_ || x0 > hi_)
    throw SpecError("basepoint x0 must lie inside the requested span");
  if (hi_ > x0) propagate(s_, lambda_, hi_, opts_, nullptr, nullptr, &right_);
  if (lo_ < x0) propagate(s_, lambda_, lo_, opts_, nullptr, nullptr, &left_);
}

ScaledMatrix FundamentalSolution::eval_scaled(double x) const {
  double x0 = s_.interval.x0;
  if (x < lo_ - 1e-12 || x > hi_ + 1e-12)
    throw NumericsError("evaluation outside the solved span");
  if (x == x0 || (right_.empty() && left_.empty()))
    return {Matrix::Identity(s_.n, s_.n), 0.0};
  const auto& windows = x > x0 ? right_ : left_;
  if (windows.empty()) return {Matrix::Identity(s_.n, s_.n), 0.0};
  for (const auto& w : windows)
    if (w.contains(x)) return {w.eval_W(x) * w.F, w.logscale};
  // numerical fringe: clamp to nearest window end
  const auto& w = windows.back();
  return {w.eval_W(w.end) * w.F, w.logscale};
}

Matrix FundamentalSolution::eval(double x) const { return eval_scaled(x).dense(); }

double FundamentalSolution::logscale_at(double x) const {
  ScaledMatrix sm = eval_scaled(x);
  double nrm = sm.value.norm();
  return sm.logscale + (nrm > 0 ? std::log(nrm) : -std::numeric_limits<double>::infinity());
}

Matrix FundamentalSolution::derivative(double x) const {
  Matrix J = s_.J.eval(x);
  Matrix M = lambda_ * s_.H.eval(x) - s_.B.eval(x);
  return J.partialPivLu().solve(M) * eval(x);
}

std::shared_ptr<const FundamentalSolution> FundamentalSolution::companion() const {
  std::lock_guard<std::mutex> lock(companion_mutex_);
  if (!companion_) {
    if (lambda_.imag() == 0.0) {
      // conj(lambda) == lambda: reuse this solution via a non-owning alias
      companion_ = std::shared_ptr<const FundamentalSolution>(this, [](auto*) {});
    } else {
      companion_ = std::make_shared<FundamentalSolution>(s_, std::conj(lambda_), lo_, hi_, opts_);
    }
  }
  return companion_;
}

double symplectic_defect(const FundamentalSolution& Y, double x) {
  auto comp = Y.companion();
  ScaledMatrix a = Y.eval_scaled(x);
  ScaledMatrix c = comp->eval_scaled(x);
  const SystemSpec& s = Y.system();
  Matrix Jx = s.J.eval(x);
  Matrix J0 = s.J.eval(s.interval.x0);
  Matrix lhs = c.value.adjoint() * Jx * a.value;
  double total = a.logscale + c.logscale;
  Matrix rhs = std::exp(-std::min(total, 1400.0)) * J0;
  return (lhs - rhs).cwiseAbs().maxCoeff();
}

Vector Trajectory::eval(double x) const {
  if (xs.empty()) throw NumericsError("empty trajectory");
  if (x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  std::size_t lo = hi - 1;
  double h = xs[hi] - xs[lo];
  double t = (x - xs[lo]) / h;
  double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
  double h10 = t * (1 - t) * (1 - t);
  double h01 = t * t * (3 - 2 * t);
  double h11 = t * t * (t - 1);
  return h00 * ys[lo] + h10 * h * yps[lo] + h01 * ys[hi] + h11 * h * yps[hi];
}

Trajectory variation_of_constants(const SystemSpec& s, Complex lambda,
                                  const std::function<Vector(double)>& g, double lo, double hi,
                                  const PropagatorOptions& opts) {
  const int n = s.n;
  const double x0 = s.interval.x0;
  FundamentalSolution Y(s, lambda, lo, hi, opts);
  auto Yc = Y.companion();
  Matrix J0 = s.J.eval(x0);
  Eigen::PartialPivLU<Matrix> luJ0(J0);

  auto integrand = [&](double t) -> Matrix {
    Matrix Yct = Yc->eval(t);
    Matrix Ht = s.H.eval(t);
    Vector v = luJ0.solve(Yct.adjoint() * Ht * g(t));
    if (!v.allFinite())
      throw NumericsError("overflow in the variation-of-constants integrand at x=" +
                          std::to_string(t));
    return v;  // n x 1
  };

  // accumulate the primitive at a modest grid refined by the breakpoints
  std::vector<double> nodes;
  nodes.push_back(x0);
  auto add_range = [&](double from, double to) {
    const int pieces = 64;
    for (int k = 1; k <= pieces; ++k) nodes.push_back(from + (to - from) * k / double(pieces));
  };
  if (hi > x0) add_range(x0, hi);
  if (lo < x0) add_range(x0, lo);
  for (double c : s.breakpoints())
    if (c > lo && c < hi) nodes.push_back(c);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  std::size_t i0 = static_cast<std::size_t>(
      std::lower_bound(nodes.begin(), nodes.end(), x0) - nodes.begin());
  std::vector<Vector> prim(nodes.size(), Vector::Zero(n));
  QuadOptions qo;
  qo.rel_tol = 1e-11;
  for (std::size_t k = i0; k + 1 < nodes.size(); ++k)
    prim[k + 1] = prim[k] + Vector(integrate_matrix(integrand, nodes[k], nodes[k + 1], qo));
  for (std::size_t k = i0; k > 0; --k)
    prim[k - 1] = prim[k] + Vector(integrate_matrix(integrand, nodes[k], nodes[k - 1], qo));

  Trajectory tr;
  tr.lambda = lambda;
  tr.xs = nodes;
  tr.ys.resize(nodes.size());
  tr.yps.resize(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    double x = nodes[k];
    Vector y = Y.eval(x) * prim[k];
    if (!y.allFinite()) throw NumericsError("overflow in variation-of-constants solution");
    tr.ys[k] = y;
    Matrix Jx = s.J.eval(x);
    tr.yps[k] =
        Jx.partialPivLu().solve(lambda * s.H.eval(x) * y + s.H.eval(x) * g(x) - s.B.eval(x) * y);
  }
  return tr;
}

}  // namespace hamsys
