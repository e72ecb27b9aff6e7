#include "hamsys/deficiency.hpp"

#include <algorithm>
#include <cmath>

namespace hamsys {

const char* to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::Bounded: return "bounded";
    case TrajectoryStatus::Divergent: return "divergent";
    case TrajectoryStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

SignatureReport signature_kappa(const SystemSpec& s) {
  Matrix J = s.J.eval(s.interval.x0);
  Matrix iJ = Complex(0, 1) * J;
  Eigen::SelfAdjointEigenSolver<Matrix> es((iJ + iJ.adjoint()) / 2.0);
  SignatureReport rep;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    double v = es.eigenvalues()[k];
    rep.eigenvalues.push_back(v);
    if (std::abs(v) < 1e-10)
      throw NumericsError("iJ(x0) has a near-zero eigenvalue; J is not invertible");
    if (v > 0) ++rep.kappa_plus;
    else ++rep.kappa_minus;
  }
  return rep;
}

TruncationPlan TruncationPlan::standard(const SystemSpec& s, const DeficiencyOptions& opts) {
  TruncationPlan plan;
  const auto& iv = s.interval;
  auto dyadic_out = [&](double sign) {
    std::vector<double> t;
    for (int k = opts.tmin_exponent; k <= opts.tmax_exponent; ++k)
      t.push_back(iv.x0 + sign * std::pow(2.0, k));
    return t;
  };
  auto dyadic_toward = [&](double endpoint) {
    std::vector<double> t;
    for (int k = 1; k <= opts.finite_refinements; ++k) {
      double c = endpoint + (iv.x0 - endpoint) * std::pow(2.0, -k);
      if (!t.empty() && c == t.back()) break;
      t.push_back(c);
    }
    return t;
  };
  switch (iv.kind) {
    case IntervalSpec::Kind::HalfLinePositive:
      plan.right_targets = dyadic_out(+1.0);
      break;
    case IntervalSpec::Kind::HalfLineNegative:
      plan.left_targets = dyadic_out(-1.0);
      break;
    case IntervalSpec::Kind::FullLine:
      plan.right_targets = dyadic_out(+1.0);
      plan.left_targets = dyadic_out(-1.0);
      break;
    case IntervalSpec::Kind::Finite:
      plan.right_targets = dyadic_toward(iv.b);
      plan.left_targets = dyadic_toward(iv.a);
      break;
  }
  return plan;
}

namespace {

double lsq_slope(const std::vector<double>& t, const std::vector<double>& y) {
  std::size_t n = t.size();
  double mt = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) mt += t[i], my += y[i];
  mt /= n;
  my /= n;
  double num = 0, den = 0;
  for (std::size_t i = 0; i < n; ++i) {
    num += (t[i] - mt) * (y[i] - my);
    den += (t[i] - mt) * (t[i] - mt);
  }
  return den > 0 ? num / den : 0.0;
}

struct StageEigs {
  std::vector<double> logval;   // log-scale eigenvalues, ascending
  std::vector<bool> resolved;   // within the solver's relative range of the top
};

StageEigs stage_eigs(const ScaledPsd& p, double resolve_rel) {
  StageEigs out;
  Eigen::SelfAdjointEigenSolver<Matrix> es((p.M + p.M.adjoint()) / 2.0);
  Eigen::VectorXd ev = es.eigenvalues();
  double vmax = std::max(ev.maxCoeff(), 0.0);
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    double v = ev[i];
    bool ok = v > resolve_rel * vmax && v > 0.0;
    double lg = v > 0 ? p.log + std::log(v) : -800.0 + p.log;
    out.logval.push_back(lg);
    out.resolved.push_back(ok);
  }
  return out;
}

}  // namespace

GrowthClassification l2_solution_count(const SystemSpec& s, Complex lambda,
                                       const TruncationPlan& plan,
                                       const DeficiencyOptions& opts) {
  const int n = s.n;
  GrowthClassification cls;
  cls.lambda = lambda;

  std::vector<ScaledPsd> right, left;
  if (!plan.right_targets.empty())
    right = gram_prefixes(s, lambda, plan.right_targets, opts.prop);
  if (!plan.left_targets.empty()) left = gram_prefixes(s, lambda, plan.left_targets, opts.prop);

  std::size_t stages = plan.stages();
  if (stages == 0) throw SpecError("empty truncation plan");

  for (std::size_t k = 0; k < stages; ++k) {
    PsdAccumulator acc;
    if (!right.empty()) acc.add(right[std::min(k, right.size() - 1)]);
    if (!left.empty()) acc.add(left[std::min(k, left.size() - 1)]);
    ScaledPsd p = acc.value();
    if (p.empty()) {
      p.log = 0.0;
      p.M = Matrix::Zero(n, n);
    }
    StageEigs se = stage_eigs(p, opts.resolve_rel);

    double dist = 0.0;
    if (k < plan.right_targets.size())
      dist = std::abs(plan.right_targets[k] - s.interval.x0);
    else if (k < plan.left_targets.size())
      dist = std::abs(plan.left_targets[k] - s.interval.x0);
    cls.T.push_back(dist);

    std::vector<double> mu(n);
    std::vector<bool> car(n);
    for (int j = 0; j < n; ++j) {
      bool resolved = se.resolved[j];
      double v = se.logval[j];
      if (!resolved && k > 0) {
        mu[j] = cls.mu[k - 1][j];
        car[j] = true;
      } else {
        mu[j] = v;
        car[j] = !resolved;
      }
      if (k > 0) mu[j] = std::max(mu[j], cls.mu[k - 1][j]);  // Gram monotonicity
    }
    cls.mu.push_back(std::move(mu));
    cls.carried.push_back(std::move(car));
  }

  // classify each sorted trajectory from its tail behaviour
  cls.trajectories.resize(n);
  std::size_t m = cls.mu.size();
  for (int j = 0; j < n; ++j) {
    TrajectoryInfo& info = cls.trajectories[j];
    if (m < 4) {
      info.status = TrajectoryStatus::Inconclusive;
      continue;
    }
    auto mu_at = [&](std::size_t k) { return cls.mu[k][j]; };

    bool cauchy = true;
    for (std::size_t k = m - 4; k + 1 < m; ++k) {
      double inc = mu_at(k + 1) - mu_at(k);
      double thr = opts.eps_cauchy * (1.0 + std::exp(-std::min(mu_at(k + 1), 40.0)));
      if (inc > thr) cauchy = false;
    }
    if (!cauchy && m >= 5) {
      // geometric decay of the increments: extrapolate the remaining tail
      bool geometric = true;
      double rmax = 0.0;
      for (std::size_t k = m - 4; k + 1 < m; ++k) {
        double d0 = mu_at(k) - mu_at(k - 1);
        double d1 = mu_at(k + 1) - mu_at(k);
        if (d1 < 0 || d0 <= 0) {
          geometric = d1 <= 0;
          continue;
        }
        double r = d1 / d0;
        rmax = std::max(rmax, r);
        if (r > 0.9) geometric = false;
      }
      double dlast = mu_at(m - 1) - mu_at(m - 2);
      double tail_est = rmax < 1.0 ? dlast * rmax / (1.0 - rmax) : 1e300;
      if (geometric && tail_est <= 0.5) cauchy = true;
    }

    std::size_t tail = std::min<std::size_t>(5, m);
    std::vector<double> lt, tt, vv;
    for (std::size_t k = m - tail; k < m; ++k) {
      lt.push_back(std::log(std::max(cls.T[k], 1e-12)));
      tt.push_back(cls.T[k]);
      vv.push_back(mu_at(k));
    }
    info.slope_logT = lsq_slope(lt, vv);
    info.slope_T = lsq_slope(tt, vv);

    if (cauchy) {
      info.status = TrajectoryStatus::Bounded;
    } else if (info.slope_logT >= opts.eps_slope) {
      info.status = TrajectoryStatus::Divergent;
      // exponential growth keeps a stable slope against T, not log T
      double lin_resid = 0, log_resid = 0;
      double mlt = 0, mtt = 0, mvv = 0;
      for (std::size_t i = 0; i < vv.size(); ++i) mlt += lt[i], mtt += tt[i], mvv += vv[i];
      mlt /= vv.size();
      mtt /= vv.size();
      mvv /= vv.size();
      for (std::size_t i = 0; i < vv.size(); ++i) {
        double dl = vv[i] - (mvv + info.slope_logT * (lt[i] - mlt));
        double dt = vv[i] - (mvv + info.slope_T * (tt[i] - mtt));
        log_resid += dl * dl;
        lin_resid += dt * dt;
      }
      info.model = lin_resid < log_resid ? "exponential" : "power";
    } else {
      bool steady = true;
      for (std::size_t k = m - std::min<std::size_t>(4, m - 1); k + 1 < m; ++k) {
        double inc = mu_at(k + 1) - mu_at(k);
        if (inc < 1e-3 * (1.0 + std::max(mu_at(k + 1), 0.0))) steady = false;
      }
      if (steady) {
        info.status = TrajectoryStatus::Divergent;
        info.model = "slow";
      } else {
        info.status = TrajectoryStatus::Inconclusive;
      }
    }
  }

  for (const auto& t : cls.trajectories) {
    if (t.status == TrajectoryStatus::Bounded) ++cls.bounded;
    else if (t.status == TrajectoryStatus::Divergent) ++cls.divergent;
    else ++cls.inconclusive;
  }
  return cls;
}

GrowthClassification l2_solution_count(const SystemSpec& s, Complex lambda,
                                       const DeficiencyOptions& opts) {
  return l2_solution_count(s, lambda, TruncationPlan::standard(s, opts), opts);
}

DeficiencyReport formal_deficiency_indices(const SystemSpec& s, const DeficiencyOptions& opts) {
  DeficiencyReport rep;
  rep.n = s.n;
  rep.kind = s.interval.kind;

  SignatureReport sig = signature_kappa(s);
  rep.kappa_plus = sig.kappa_plus;
  rep.kappa_minus = sig.kappa_minus;

  TruncationPlan plan = TruncationPlan::standard(s, opts);
  rep.at_plus_i = l2_solution_count(s, Complex(0, 1), plan, opts);
  rep.at_minus_i = l2_solution_count(s, Complex(0, -1), plan, opts);
  rep.n_plus = rep.at_plus_i.bounded;
  rep.n_minus = rep.at_minus_i.bounded;
  rep.conclusive = rep.at_plus_i.inconclusive == 0 && rep.at_minus_i.inconclusive == 0;

  RankReport rank = rank_of_system(s, opts.rank);
  rep.rank = rank.rank;
  rep.rank_stabilized = rank.stabilized;
  rep.N_plus = rep.n_plus - (rep.n - rep.rank);
  rep.N_minus = rep.n_minus - (rep.n - rep.rank);

  auto check = [&](bool ok, const std::string& what) {
    if (!ok) {
      rep.invariants_ok = false;
      rep.invariant_failures.push_back(what);
    }
  };
  if (s.interval.kind == IntervalSpec::Kind::HalfLinePositive) {
    check(rep.kappa_plus <= rep.n_plus && rep.n_plus <= rep.n, "kappa+ <= n~+ <= n");
    check(rep.kappa_minus <= rep.n_minus && rep.n_minus <= rep.n, "kappa- <= n~- <= n");
    check(rep.n_plus + rep.n_minus >= rep.n, "n~+ + n~- >= n");
  } else if (s.interval.kind == IntervalSpec::Kind::HalfLineNegative) {
    check(rep.kappa_plus <= rep.n_minus && rep.n_minus <= rep.n, "kappa+ <= n~- <= n");
    check(rep.kappa_minus <= rep.n_plus && rep.n_plus <= rep.n, "kappa- <= n~+ <= n");
    check(rep.n_plus + rep.n_minus >= rep.n, "n~+ + n~- >= n");
  }
  check(rep.N_plus >= 0 && rep.N_minus >= 0, "ordinary indices nonnegative");
  return rep;
}

FiniteIntervalIndices finite_interval_indices(const SystemSpec& s,
                                              const DeficiencyOptions& opts) {
  if (s.interval.kind != IntervalSpec::Kind::Finite)
    throw SpecError("finite-interval indices require a finite interval");
  FiniteIntervalIndices out;
  out.rank = rank_of_system(s, opts.rank);
  out.n_plus = s.n;
  out.n_minus = s.n;
  out.N_plus = out.rank.rank;
  out.N_minus = out.rank.rank;
  out.crosscheck = l2_solution_count(s, Complex(0, 1), opts);
  out.crosscheck_ok = out.crosscheck.bounded == s.n;
  return out;
}

LambdaConstancyReport lambda_constancy_check(const SystemSpec& s,
                                             const std::vector<Complex>& lambda_grid,
                                             const DeficiencyOptions& opts) {
  LambdaConstancyReport rep;
  TruncationPlan plan = TruncationPlan::standard(s, opts);
  for (Complex lam : lambda_grid) {
    if (!(lam.imag() > 0))
      throw SpecError("lambda grid must lie in the open upper half-plane");
    rep.lambdas.push_back(lam);
    rep.counts_upper.push_back(l2_solution_count(s, lam, plan, opts).bounded);
    rep.counts_lower.push_back(l2_solution_count(s, std::conj(lam), plan, opts).bounded);
  }
  for (std::size_t k = 1; k < rep.lambdas.size(); ++k) {
    if (rep.counts_upper[k] != rep.counts_upper[0] ||
        rep.counts_lower[k] != rep.counts_lower[0])
      throw NumericsError(
          "square-integrable solution count varies across the spectral grid "
          "(numerical breakdown: the count is constant on each half-plane)");
  }
  return rep;
}

DeficiencyReport glue_line_indices(const DeficiencyReport& plus_side,
                                   const DeficiencyReport& minus_side, const SystemSpec& line,
                                   const DeficiencyOptions& opts) {
  int n = line.n;
  if (plus_side.n != n || minus_side.n != n)
    throw SpecError("half-line reports have mismatched dimension");
  auto definite = [&](const DeficiencyReport& r) {
    return r.rank_stabilized && r.rank == r.n;
  };
  if (!definite(plus_side) || !definite(minus_side))
    throw GlueRefusal(
        "gluing requires both half-line systems definite (rank n); the composition "
        "formula can fail for non-definite systems");

  DeficiencyReport rep;
  rep.n = n;
  rep.kind = IntervalSpec::Kind::FullLine;
  rep.kappa_plus = plus_side.kappa_plus;
  rep.kappa_minus = plus_side.kappa_minus;
  rep.n_plus = plus_side.n_plus + minus_side.n_plus - n;
  rep.n_minus = plus_side.n_minus + minus_side.n_minus - n;
  rep.conclusive = plus_side.conclusive && minus_side.conclusive;

  RankReport rank = rank_of_system(line, opts.rank);
  rep.rank = rank.rank;
  rep.rank_stabilized = rank.stabilized;
  rep.N_plus = rep.n_plus - (n - rep.rank);
  rep.N_minus = rep.n_minus - (n - rep.rank);
  if (rep.N_plus < 0 || rep.N_minus < 0) {
    rep.invariants_ok = false;
    rep.invariant_failures.push_back("ordinary indices nonnegative");
  }
  return rep;
}

}  // namespace hamsys
