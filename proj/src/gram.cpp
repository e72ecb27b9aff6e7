#include "hamsys/gram.hpp"

#include <algorithm>
#include <cmath>

#include "hamsys/quadrature.hpp"

namespace hamsys {

Matrix ScaledPsd::dense() const {
  if (empty()) throw NumericsError("empty scaled matrix");
  if (log > 690.0)
    throw NumericsError("Gram matrix exceeds the representable range (log " +
                        std::to_string(log) + ")");
  return std::exp(std::max(log, -745.0)) * M;
}

std::vector<double> ScaledPsd::log_eigenvalues(double clamp_floor) const {
  Eigen::SelfAdjointEigenSolver<Matrix> es((M + M.adjoint()) / 2.0);
  std::vector<double> out;
  out.reserve(M.rows());
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    double v = es.eigenvalues()[i];
    double lg = v > 0 ? log + std::log(v) : clamp_floor;
    out.push_back(std::max(lg, clamp_floor));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void PsdAccumulator::add(double logw, const Matrix& d) {
  double dn = d.cwiseAbs().maxCoeff();
  if (dn <= 0.0) {
    if (m_.size() == 0) m_ = Matrix::Zero(d.rows(), d.cols());
    return;
  }
  // normalize the incoming term so stored scales stay comparable
  double lw = logw + std::log(dn);
  Matrix dd = d / dn;
  if (m_.size() == 0) {
    m_ = dd;
    log_ = lw;
    return;
  }
  if (lw > log_) {
    double f = std::exp(log_ - lw);
    m_ = dd + f * m_;
    log_ = lw;
  } else {
    m_ += std::exp(lw - log_) * dd;
  }
  // keep the stored part normalized
  double nn = m_.cwiseAbs().maxCoeff();
  if (nn > 1e8 || (nn > 0 && nn < 1e-8)) {
    log_ += std::log(nn);
    m_ /= nn;
  }
}

void PsdAccumulator::add(const ScaledPsd& p) {
  if (!p.empty()) add(p.log, p.M);
}

ScaledPsd PsdAccumulator::value() const {
  ScaledPsd out;
  if (m_.size() == 0) return out;
  out.log = log_;
  out.M = m_;
  return out;
}

namespace {

/// Streams Gram contributions for x in [clamp_lo, clamp_hi] during propagation.
class GramCollector {
public:
  GramCollector(const SystemSpec& s, double clamp_lo, double clamp_hi)
      : s_(s), lo_(clamp_lo), hi_(clamp_hi) {}

  void operator()(double logscale, const Matrix& F, const DenseStep& st) {
    double a = std::min(st.t0, st.t1), b = std::max(st.t0, st.t1);
    double qa = std::max(a, lo_), qb = std::min(b, hi_);
    if (qa >= qb) return;
    int n = s_.n;
    double span = b - a;
    auto integrand = [&](double x) -> Matrix {
      double xi = std::min(std::max(x, a + span * 1e-14), b - span * 1e-14);
      Vector v = st.eval(x);
      Eigen::Map<const Matrix> W(v.data(), n, n);
      Matrix HW = s_.H.eval(xi) * W;
      return W.adjoint() * HW;
    };
    QuadOptions qo;
    qo.rel_tol = 1e-12;
    Matrix g = integrate_matrix(integrand, qa, qb, qo);
    acc_.add(2.0 * logscale, F.adjoint() * g * F);
  }

  ScaledPsd value() const { return acc_.value(); }
  PsdAccumulator& accumulator() { return acc_; }

private:
  const SystemSpec& s_;
  double lo_, hi_;
  PsdAccumulator acc_;
};

ScaledPsd hermitize(const ScaledPsd& p, double* defect) {
  ScaledPsd out = p;
  if (p.empty()) return out;
  double scale = p.M.cwiseAbs().maxCoeff();
  double d = (p.M - p.M.adjoint()).cwiseAbs().maxCoeff();
  if (defect) *defect = scale > 0 ? d / scale : 0.0;
  out.M = (p.M + p.M.adjoint()) / 2.0;
  return out;
}

}  // namespace

GramMatrix gram_matrix(const SystemSpec& s, Complex lambda, double a, double b,
                       const PropagatorOptions& opts) {
  if (a > b) std::swap(a, b);
  double x0 = s.interval.x0;
  GramMatrix out;
  out.lambda = lambda;
  out.a = a;
  out.b = b;
  out.quad_rel_tol = 1e-12;

  GramCollector collect(s, a, b);
  auto step_fn = [&](double rho, const Matrix& F, const DenseStep& st) { collect(rho, F, st); };
  if (b > x0) propagate(s, lambda, b, opts, step_fn, nullptr, nullptr);
  if (a < x0) propagate(s, lambda, a, opts, step_fn, nullptr, nullptr);
  ScaledPsd raw = collect.value();
  if (raw.empty()) {
    raw.log = 0.0;
    raw.M = Matrix::Zero(s.n, s.n);
  }
  out.scaled = hermitize(raw, &out.herm_defect);
  return out;
}

std::vector<ScaledPsd> gram_prefixes(const SystemSpec& s, Complex lambda,
                                     const std::vector<double>& targets,
                                     const PropagatorOptions& opts) {
  std::vector<ScaledPsd> out;
  if (targets.empty()) return out;
  double x0 = s.interval.x0;
  double far = targets.back();
  PropagatorOptions po = opts;
  for (double t : targets) po.mandatory_nodes.push_back(t);

  GramCollector collect(s, std::min(x0, far), std::max(x0, far));
  std::size_t next = 0;
  auto step_fn = [&](double rho, const Matrix& F, const DenseStep& st) { collect(rho, F, st); };
  auto node_fn = [&](double x) {
    while (next < targets.size() && x == targets[next]) {
      double d = 0;
      out.push_back(hermitize(collect.value(), &d));
      ++next;
    }
  };
  propagate(s, lambda, far, po, step_fn, node_fn, nullptr);
  while (next < targets.size()) {  // degenerate targets equal to x0
    double d = 0;
    out.push_back(hermitize(collect.value(), &d));
    ++next;
  }
  for (auto& p : out)
    if (p.empty()) {
      p.log = 0.0;
      p.M = Matrix::Zero(s.n, s.n);
    }
  return out;
}

PsdRank psd_rank(const ScaledPsd& p, double rel_tol, double abs_floor) {
  PsdRank out;
  Eigen::SelfAdjointEigenSolver<Matrix> es((p.M + p.M.adjoint()) / 2.0);
  Eigen::VectorXd ev = es.eigenvalues();
  int n = static_cast<int>(ev.size());
  double vmax = std::max(ev.maxCoeff(), 0.0);
  double cut_rel = rel_tol * vmax;
  double cut_abs = abs_floor * std::exp(std::min(std::max(-p.log, -700.0), 700.0));
  double cut = std::max(cut_rel, cut_abs);
  std::vector<int> kernel_idx;
  for (int i = 0; i < n; ++i) {
    double v = ev[i];
    double lg = v > 0 ? p.log + std::log(v) : -std::numeric_limits<double>::infinity();
    out.log_spectrum.push_back(lg);
    if (v > cut) ++out.rank;
    else kernel_idx.push_back(i);
  }
  out.kernel = Matrix(n, kernel_idx.size());
  for (std::size_t k = 0; k < kernel_idx.size(); ++k)
    out.kernel.col(k) = es.eigenvectors().col(kernel_idx[k]);
  return out;
}

namespace {

std::vector<std::pair<double, double>> nested_intervals(const IntervalSpec& iv, double L,
                                                        int kmax) {
  std::vector<std::pair<double, double>> out;
  for (int k = 0; k <= kmax; ++k) {
    double r = L * std::pow(2.0, k);
    double lo = std::max(iv.a, iv.x0 - r);
    double hi = std::min(iv.b, iv.x0 + r);
    if (!out.empty() && out.back().first == lo && out.back().second == hi) {
      continue;  // interval exhausted
    }
    out.emplace_back(lo, hi);
  }
  return out;
}

}  // namespace

RankReport rank_of_system(const SystemSpec& s, const RankOptions& opts) {
  RankReport rep;
  rep.n = s.n;
  rep.rel_tol = opts.rel_tol;
  auto family = nested_intervals(s.interval, opts.base_radius, opts.max_doublings);

  // cumulative snapshots on each side of x0
  std::vector<double> right_targets, left_targets;
  for (auto& [lo, hi] : family) {
    if (hi > s.interval.x0) right_targets.push_back(hi);
    if (lo < s.interval.x0) left_targets.push_back(lo);
  }
  right_targets.erase(std::unique(right_targets.begin(), right_targets.end()),
                      right_targets.end());
  left_targets.erase(std::unique(left_targets.begin(), left_targets.end()), left_targets.end());

  std::vector<ScaledPsd> right, left;
  if (!right_targets.empty()) right = gram_prefixes(s, 0.0, right_targets, opts.prop);
  if (!left_targets.empty()) left = gram_prefixes(s, 0.0, left_targets, opts.prop);

  auto psd_for = [&](std::size_t k) -> ScaledPsd {
    auto [lo, hi] = family[k];
    PsdAccumulator acc;
    if (hi > s.interval.x0) {
      std::size_t i = std::lower_bound(right_targets.begin(), right_targets.end(), hi) -
                      right_targets.begin();
      acc.add(right[std::min(i, right.size() - 1)]);
    }
    if (lo < s.interval.x0) {
      std::size_t i = std::lower_bound(left_targets.begin(), left_targets.end(), lo,
                                       std::greater<double>()) -
                      left_targets.begin();
      acc.add(left[std::min(i, left.size() - 1)]);
    }
    ScaledPsd p = acc.value();
    if (p.empty()) {
      p.log = 0.0;
      p.M = Matrix::Zero(s.n, s.n);
    }
    return p;
  };

  int prev_rank = -1;
  for (std::size_t k = 0; k < family.size(); ++k) {
    ScaledPsd p = psd_for(k);
    PsdRank pr = psd_rank(p, opts.rel_tol, opts.abs_floor);
    rep.intervals_tried.push_back(family[k]);
    rep.ranks_seen.push_back(pr.rank);
    bool last = (k + 1 == family.size());
    bool interval_full = family[k].first <= std::max(s.interval.a, -1e307) &&
                         family[k].second >= std::min(s.interval.b, 1e307);
    if (pr.rank == prev_rank || (last && interval_full) || pr.rank == s.n) {
      rep.rank = pr.rank;
      rep.stabilized = true;
      rep.kernel = pr.kernel;
      rep.spectrum_at_i0 = pr.log_spectrum;
      std::tie(rep.i0_lo, rep.i0_hi) = family[k];
      rep.gram_at_i0 = p;
      return rep;
    }
    prev_rank = pr.rank;
  }
  // no stabilization: report the last view, flagged inconclusive
  ScaledPsd p = psd_for(family.size() - 1);
  PsdRank pr = psd_rank(p, opts.rel_tol, opts.abs_floor);
  rep.rank = pr.rank;
  rep.stabilized = false;
  rep.kernel = pr.kernel;
  rep.spectrum_at_i0 = pr.log_spectrum;
  std::tie(rep.i0_lo, rep.i0_hi) = family.back();
  rep.gram_at_i0 = p;
  return rep;
}

DefinitenessReport is_definite(const SystemSpec& s, const RankOptions& opts) {
  DefinitenessReport rep;
  rep.rank = rank_of_system(s, opts);
  rep.inconclusive = !rep.rank.stabilized;
  rep.definite = rep.rank.stabilized && rep.rank.rank == s.n;
  return rep;
}

double max_principal_angle(const Matrix& q1, const Matrix& q2) {
  if (q1.cols() == 0 && q2.cols() == 0) return 0.0;
  if (q1.cols() != q2.cols()) return M_PI / 2.0;
  if (q1.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(q1.adjoint() * q2);
  double smin = svd.singularValues().minCoeff();
  smin = std::min(1.0, std::max(-1.0, smin));
  return std::acos(smin);
}

KernelAngleReport kernel_lambda_independence(const SystemSpec& s,
                                             const std::vector<Complex>& lambdas,
                                             const RankOptions& opts) {
  if (lambdas.size() < 2) throw SpecError("need at least two spectral parameters");
  RankReport base = rank_of_system(s, opts);
  KernelAngleReport rep;
  rep.i0_lo = base.i0_lo;
  rep.i0_hi = base.i0_hi;

  std::vector<Matrix> kernels;
  for (Complex lam : lambdas) {
    GramMatrix g = gram_matrix(s, lam, base.i0_lo, base.i0_hi, opts.prop);
    PsdRank pr = psd_rank(g.scaled, opts.rel_tol, opts.abs_floor);
    rep.lambdas.push_back(lam);
    rep.ranks.push_back(pr.rank);
    kernels.push_back(pr.kernel);
  }
  for (std::size_t k = 1; k < rep.ranks.size(); ++k)
    if (rep.ranks[k] != rep.ranks[0])
      throw NumericsError("Gram rank differs across spectral parameters (numerical breakdown)");
  for (std::size_t k = 1; k < kernels.size(); ++k)
    rep.max_angle = std::max(rep.max_angle, max_principal_angle(kernels[0], kernels[k]));
  return rep;
}

PositiveTypeReport is_positive_type(const CoeffField& H, const IntervalSpec& iv,
                                    const RankOptions& opts) {
  PositiveTypeReport rep;
  auto family = nested_intervals(iv, opts.base_radius, opts.max_doublings);
  QuadOptions qo;
  qo.rel_tol = 1e-11;
  auto f = [&](double x) { return H.eval(x); };
  for (std::size_t k = 0; k < family.size(); ++k) {
    auto [lo, hi] = family[k];
    Matrix P = integrate_matrix_split(f, lo, hi, H.breakpoints(), qo);
    Eigen::SelfAdjointEigenSolver<Matrix> es((P + P.adjoint()) / 2.0);
    double mn = es.eigenvalues().minCoeff();
    double mx = std::max(es.eigenvalues().maxCoeff(), 0.0);
    rep.doublings_used = static_cast<int>(k);
    rep.window_lo = lo;
    rep.window_hi = hi;
    rep.smallest_eigenvalue = mn;
    if (mn > std::max(1e-12, 1e-12 * mx)) {
      rep.positive_type = true;
      return rep;
    }
  }
  bool covered = family.back().first <= std::max(iv.a, -1e307) &&
                 family.back().second >= std::min(iv.b, 1e307);
  rep.inconclusive = !covered;
  return rep;
}

StructuralDefinitenessVerdict structural_definiteness(const BlockSystemSpec& blk,
                                                      int grid_points, double min_fraction,
                                                      double window) {
  StructuralDefinitenessVerdict v;
  v.min_fraction = min_fraction;
  std::vector<double> bps;
  blk.A.collect_breakpoints(bps);
  blk.H.collect_breakpoints(bps);
  SampleGrid grid = SampleGrid::over(blk.interval, bps, grid_points, window, 0);
  v.grid_points = static_cast<int>(grid.points.size());
  int hits = 0;
  for (double x : grid.points) {
    Complex det = (blk.A.eval(x) * blk.H.eval(x)).determinant();
    if (std::abs(det) > 1e-12) ++hits;
  }
  v.fraction = static_cast<double>(hits) / static_cast<double>(v.grid_points);
  v.holds = v.fraction > min_fraction;
  return v;
}

}  // namespace hamsys
