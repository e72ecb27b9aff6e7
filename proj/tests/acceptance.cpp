// Acceptance suite: reproduces every worked example and property bound at its
// stated tolerance, printing one PASS/FAIL line per criterion.

#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <vector>

#include "hamsys/analysis.hpp"
#include "hamsys/gauge.hpp"
#include "hamsys/quadrature.hpp"

using namespace hamsys;

namespace {

int failures = 0;
std::vector<std::string> notes;

void report(int number, const std::string& what, bool pass, const std::string& detail = "") {
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << number << ". " << what;
  if (!detail.empty()) std::cout << "  (" << detail << ")";
  std::cout << std::endl;
  if (!pass) ++failures;
}

SystemSpec system_of(const ExampleFixture& f) {
  return f.spec.is_system() ? f.spec.system()
                            : embed_sturm_liouville(f.spec.sturm_liouville());
}

std::pair<double, double> probe_span(const SystemSpec& s, double window = 8.0) {
  switch (s.interval.kind) {
    case IntervalSpec::Kind::Finite: return {s.interval.a, s.interval.b};
    case IntervalSpec::Kind::HalfLineNegative:
      return {s.interval.b - window, s.interval.b};
    case IntervalSpec::Kind::FullLine:
      return {s.interval.x0 - window, s.interval.x0 + window};
    default: return {s.interval.a, s.interval.a + window};
  }
}

// 1. conjugation identity at 50 random points, four spectral parameters
void criterion_1() {
  double worst = 0.0;
  std::string worst_at;
  bool pass = true;
  std::mt19937_64 rng(20260809);
  for (const auto& f : fixture_registry()) {
    SystemSpec s = system_of(f);
    auto [lo, hi] = probe_span(s);
    std::uniform_real_distribution<double> uni(lo, hi);
    for (Complex lam : {Complex(0, 0), Complex(0, 1), Complex(0, -1), Complex(1, 1)}) {
      FundamentalSolution Y(s, lam, lo, hi);
      for (int k = 0; k < 50; ++k) {
        double d = symplectic_defect(Y, uni(rng));
        if (d > worst) {
          worst = d;
          worst_at = f.id;
        }
      }
    }
  }
  pass = worst <= 1e-7;
  std::ostringstream os;
  os << "worst defect " << worst << " at " << worst_at;
  report(1, "conjugation identity <= 1e-7 at 50 random points, "
            "lambda in {0,+i,-i,1+i}, all fixtures",
         pass, os.str());
}

// 2. rotation-projector example: mass, rank, definiteness, closed form
void criterion_2() {
  SystemSpec s = fixture("mark-s1.11-1").spec.system();
  QuadOptions qo;
  qo.rel_tol = 1e-13;
  Matrix P = integrate_matrix([&](double x) { return s.H.eval(x); }, 0.0, M_PI, qo);
  double mass_defect = (P - (M_PI / 2.0) * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff();

  RankReport rank = rank_of_system(s);
  bool rank_ok = rank.rank == 1 && rank.stabilized;
  bool def_ok = !is_definite(s).definite;

  FundamentalSolution Y(s, Complex(0, 0), 0.0, M_PI);
  double y_defect = 0.0;
  for (int k = 0; k <= 64; ++k) {
    double x = M_PI * k / 64.0;
    Matrix want(2, 2);
    want << std::cos(x), -std::sin(x), std::sin(x), std::cos(x);
    y_defect = std::max(y_defect, (Y.eval(x) - want).cwiseAbs().maxCoeff());
  }
  std::ostringstream os;
  os << "mass defect " << mass_defect << ", rank " << rank.rank << ", rotation defect "
     << y_defect;
  report(2, "rotation projector: integrated mass (pi/2)I to 1e-10, Gram rank 1, "
            "not definite, rotation closed form to 1e-9",
         mass_defect <= 1e-10 && rank_ok && def_ok && y_defect <= 1e-9, os.str());
}

// 3. kernel/rank independence of the spectral parameter on all fixtures
void criterion_3() {
  bool pass = true;
  double worst_angle = 0.0;
  std::string detail;
  std::vector<Complex> lams = {Complex(0, 0), Complex(0, 1), Complex(0, -1), Complex(1, 1),
                               Complex(1, -1)};
  for (const auto& f : fixture_registry()) {
    SystemSpec s = system_of(f);
    try {
      KernelAngleReport rep = kernel_lambda_independence(s, lams);
      worst_angle = std::max(worst_angle, rep.max_angle);
      for (int r : rep.ranks)
        if (r != rep.ranks[0]) pass = false;
    } catch (const std::exception& e) {
      pass = false;
      detail = f.id + ": " + e.what();
    }
  }
  if (worst_angle > 1e-6) pass = false;
  std::ostringstream os;
  os << "worst kernel angle " << worst_angle << (detail.empty() ? "" : "; " + detail);
  report(3, "Gram rank identical and kernel angles <= 1e-6 over "
            "lambda in {0,+i,-i,1+i,1-i}, all fixtures",
         pass, os.str());
}

// 4. finite vs half-line indices of the diag(1,0)-weight system
void criterion_4() {
  SystemSpec finite = parse_system(
      R"({"n":2,"interval":{"kind":"finite","a":0,"b":1,"x0":0},
          "J":[["0","1"],["-1","0"]],"H":[["1","0"],["0","0"]]})");
  FiniteIntervalIndices fin = finite_interval_indices(finite);
  bool fin_ok = fin.n_plus == 2 && fin.n_minus == 2 && fin.N_plus == 1 && fin.N_minus == 1;

  DeficiencyReport half = formal_deficiency_indices(fixture("r3.1-4").spec.system());
  bool half_ok = half.n_plus == 1 && half.n_minus == 1 && half.N_plus == 0 &&
                 half.N_minus == 0 && half.rank == 1;
  bool identity_ok = half.N_plus == half.n_plus - (2 - half.rank);
  std::ostringstream os;
  os << "finite (n~,N) = (" << fin.n_plus << "," << fin.N_plus << "), half-line = ("
     << half.n_plus << "," << half.N_plus << ")";
  report(4, "diag(1,0) weight: finite interval n~=2, N=1; half-line n~=1, N=0; "
            "index identity N = n~ - (n - rank)",
         fin_ok && half_ok && identity_ok, os.str());
}

// 5. diagonal example with one non-integrable channel: (1,2) and swapped (2,1)
void criterion_5() {
  DeficiencyReport a = formal_deficiency_indices(fixture("ex3.1").spec.system());
  DeficiencyReport b = formal_deficiency_indices(fixture("ex3.1-swapped").spec.system());
  bool plan_ok = !a.at_plus_i.T.empty() && a.at_plus_i.T.back() >= 4096.0;
  bool clean = a.conclusive && b.conclusive;
  bool counts = a.n_plus == 1 && a.n_minus == 2 && b.n_plus == 2 && b.n_minus == 1;
  std::ostringstream os;
  os << "(" << a.n_plus << "," << a.n_minus << ") and (" << b.n_plus << "," << b.n_minus
     << "), T up to " << (a.at_plus_i.T.empty() ? 0.0 : a.at_plus_i.T.back());
  report(5, "one non-integrable channel: indices (1,2), swapped (2,1), zero "
            "inconclusive trajectories up to T = 2^12",
         plan_ok && clean && counts, os.str());
}

// 6. six-dimensional block example: (4,5) exactly
void criterion_6() {
  DeficiencyReport rep = formal_deficiency_indices(fixture("ex3.3").spec.system());
  std::ostringstream os;
  os << "(" << rep.n_plus << "," << rep.n_minus << ")";
  report(6, "6x6 block example: indices (4,5) exact", rep.n_plus == 4 && rep.n_minus == 5,
         os.str());
}

// 7. maximality dichotomy: criterion verdict and numeric estimate agree
void criterion_7() {
  CriterionVerdict v1 = evaluate_criterion("canonical-maximal", fixture("canonical-decay").spec);
  DeficiencyReport r1 = formal_deficiency_indices(fixture("canonical-decay").spec.system());
  bool decay_ok = v1.status == VerdictStatus::Holds && r1.n_plus == 2 && r1.n_minus == 2;

  CriterionVerdict v2 = evaluate_criterion("canonical-maximal", fixture("kac-krein").spec);
  DeficiencyReport r2 = formal_deficiency_indices(fixture("kac-krein").spec.system());
  bool unit_ok = v2.status == VerdictStatus::Fails && r2.n_plus == 1 && r2.n_minus == 1;
  std::ostringstream os;
  os << "decayed: " << to_string(v1.status) << "/" << r1.n_plus << "; unit: "
     << to_string(v2.status) << "/" << r2.n_plus;
  report(7, "trace dichotomy: (1+x)^-2 I gives holds with n~=2; identity weight gives "
            "fails with n~=1",
         decay_ok && unit_ok, os.str());
}

// 8. the two line criteria separate on the slow-decay pair
void criterion_8() {
  const auto& f = fixture("ex3.6");
  CriterionVerdict weight = evaluate_criterion("line-self-adjoint", f.spec);
  CriterionVerdict eig = evaluate_criterion("line-smallest-eigenvalue", f.spec);
  bool weight_ok = weight.status == VerdictStatus::Holds && weight.evidence.size() == 2 &&
                   weight.evidence[0].status == IntegralStatus::Divergent &&
                   weight.evidence[1].status == IntegralStatus::Divergent;
  bool eig_ok = eig.status == VerdictStatus::Fails && eig.evidence.size() == 2 &&
                eig.evidence[0].status == IntegralStatus::Convergent &&
                eig.evidence[1].status == IntegralStatus::Convergent;
  report(8, "slow-decay pair: smallest eigenvalue integrable yet reciprocal weight "
            "divergent; exactly one of the two line criteria holds",
         weight_ok && eig_ok,
         std::string("weight ") + to_string(weight.status) + ", eigenvalue " +
             to_string(eig.status));
}

// 9. integrable reciprocal weight with self-adjoint restricted extensions
void criterion_9() {
  const auto& f = fixture("ml-s5.33");
  CriterionVerdict v = evaluate_criterion("halfline-minimal", f.spec);
  bool limit_ok = !v.evidence.empty() &&
                  v.evidence[0].status == IntegralStatus::Convergent &&
                  std::abs(v.evidence[0].limit_estimate - 1.0) <= 1e-6;
  bool honest = v.status == VerdictStatus::Fails &&
                v.conclusion.find("no conclusion") != std::string::npos;
  DeficiencyReport rep = formal_deficiency_indices(f.spec.system());
  bool idx_ok = rep.n_plus == 1 && rep.n_minus == 1;
  std::ostringstream os;
  os << "limit " << (v.evidence.empty() ? 0.0 : v.evidence[0].limit_estimate) << ", indices ("
     << rep.n_plus << "," << rep.n_minus << ")";
  report(9, "integrable 1/c (limit 1 within 1e-6): indices (1,1); the sufficient "
            "criterion reports non-holds without claiming non-self-adjointness",
         limit_ok && honest && idx_ok, os.str());
}

// 10. scalar two-term problems: 2 / 1 / 2
void criterion_10() {
  CriterionVerdict quartic = evaluate_criterion("sl-scalar", fixture("sl-quartic").spec);
  CriterionVerdict slow = evaluate_criterion("sl-scalar", fixture("sl-slow").spec);
  CriterionVerdict resid = evaluate_criterion("sl-constant-potential", fixture("re5.40").spec);
  int i1 = quartic.extra.value("indices", -1);
  int i2 = slow.extra.value("indices", -1);
  int i3 = resid.extra.value("indices", -1);
  DeficiencyReport n1 = formal_deficiency_indices(system_of(fixture("sl-quartic")));
  DeficiencyReport n2 = formal_deficiency_indices(system_of(fixture("sl-slow")));
  DeficiencyReport n3 = formal_deficiency_indices(system_of(fixture("re5.40")));
  bool ok = i1 == 2 && i2 == 1 && i3 == 2 && n1.n_plus == 2 && n2.n_plus == 1 &&
            n3.n_plus == 2 && n1.n_minus == 2 && n2.n_minus == 1 && n3.n_minus == 2;
  std::ostringstream os;
  os << "criteria " << i1 << "/" << i2 << "/" << i3 << ", numeric " << n1.n_plus << "/"
     << n2.n_plus << "/" << n3.n_plus;
  report(10, "scalar problems: quartic weight 2, slow weight 1, negative constant "
             "potential 2 (exact integers, criterion and numeric)",
         ok, os.str());
}

// 11. composition over the line and its refusal on a non-definite weight
void criterion_11() {
  SystemSpec line = system_of(fixture("line-glue"));
  SystemSpec plus = line.restricted(IntervalSpec::half_line_positive(0.0));
  SystemSpec minus = line.restricted(IntervalSpec::half_line_negative(0.0));
  DeficiencyReport rp = formal_deficiency_indices(plus);
  DeficiencyReport rm = formal_deficiency_indices(minus);
  bool glue_ok = false, direct_ok = false;
  std::ostringstream os;
  try {
    DeficiencyReport glued = glue_line_indices(rp, rm, line);
    DeficiencyReport direct = formal_deficiency_indices(line);
    glue_ok = glued.N_plus == rp.N_plus + rm.N_plus - 2 && glued.N_plus == 2 &&
              glued.n_minus == 2;
    direct_ok = direct.n_plus == glued.n_plus && direct.n_minus == glued.n_minus;
    os << "glued N = " << glued.N_plus << ", direct n~ = " << direct.n_plus;
  } catch (const std::exception& e) {
    os << "unexpected refusal: " << e.what();
  }

  bool refused = false;
  SystemSpec bad = parse_system(
      R"({"n":2,"interval":{"kind":"full-line","x0":0},
          "J":[["0","1"],["-1","0"]],"H":[["1","0"],["0","0"]]})");
  try {
    DeficiencyReport bp =
        formal_deficiency_indices(bad.restricted(IntervalSpec::half_line_positive(0.0)));
    DeficiencyReport bm =
        formal_deficiency_indices(bad.restricted(IntervalSpec::half_line_negative(0.0)));
    glue_line_indices(bp, bm, bad);
  } catch (const GlueRefusal&) {
    refused = true;
  }
  report(11, "composition over the line: N(line) = N(+) + N(-) - n, matching the direct "
             "two-ended classification; refusal on the non-definite weight",
         glue_ok && direct_ok && refused, os.str());
}

// 12. constructive procedures at their stated tolerances
void criterion_12() {
  bool cut_ok = true;
  ScalarFunction one{[](double) { return 1.0; }, "one"};
  ScalarFunction harm{[](double x) { return 1.0 / (1.0 + x); }, "harmonic"};
  for (const ScalarFunction* f : {&one, &harm}) {
    CutoffFunction chi = construct_cutoff(*f, 1);
    CutoffCheck c = verify_cutoff(chi, *f);
    if (!c.pass(1e-10) || chi.K < 1.0) cut_ok = false;
  }

  bool qreg_ok = true;
  auto cone = [](double) { return 1.0; };
  {
    QRegularization reg = regularize_q([](double) { return 1.0; }, cone);
    QRegCheck c = verify_q_regularization(reg);
    if (c.min_margin < -1e-9 || c.lipschitz_excess > 1e-6 ||
        c.tail.status != IntegralStatus::Divergent)
      qreg_ok = false;
  }
  {
    QRegularization reg = regularize_q([](double x) { return 1.0 + x; }, cone);
    QRegCheck c = verify_q_regularization(reg);
    if (c.min_margin < -1e-9 || c.lipschitz_excess > 1e-6 ||
        c.tail.status != IntegralStatus::Divergent)
      qreg_ok = false;
    for (int m : {0, 3, 10})
      if (std::abs(reg.eval(m) - (2.0 + m)) > 1e-6) qreg_ok = false;
  }

  bool uv_ok = true;
  AsymptoticOptions aopts;
  aopts.x_far = 2048.0;
  {
    AsymptoticPair p = asymptotic_solutions_UV(MatrixFunction::identity(1),
                                               MatrixFunction::zero(1), aopts);
    if (p.k_defect(0, 1000) > 1e-8) uv_ok = false;
    if ((p.eval_U(1000.0) - Matrix::Identity(1, 1)).cwiseAbs().maxCoeff() > 1e-10)
      uv_ok = false;
    if (std::abs(p.eval_V(1000.0)(0, 0).real() - 1000.0) > 1e-4) uv_ok = false;
  }
  {
    MatrixFunction R(1, {Expression::parse("piecewise(x < 1, 1, 0)")});
    AsymptoticPair p = asymptotic_solutions_UV(MatrixFunction::identity(1), R, aopts);
    if (p.k_defect(0, 1000) > 1e-8) uv_ok = false;
    if ((p.eval_U(1000.0) - Matrix::Identity(1, 1)).cwiseAbs().maxCoeff() > 1e-8)
      uv_ok = false;
  }
  {
    MatrixFunction R(1, {Expression::parse("(1+x)^-3")});
    AsymptoticPair p = asymptotic_solutions_UV(MatrixFunction::identity(1), R, aopts);
    if (p.k_defect(0, 1000) > 1e-8) uv_ok = false;
    if ((p.eval_U(1000.0) - Matrix::Identity(1, 1)).cwiseAbs().maxCoeff() > 3e-3)
      uv_ok = false;
    if (std::abs(p.eval_V(1000.0)(0, 0).real() / 1000.0 - 1.0) > 0.05) uv_ok = false;
  }
  std::ostringstream os;
  os << "cutoff " << (cut_ok ? "ok" : "FAIL") << ", regularization "
     << (qreg_ok ? "ok" : "FAIL") << ", asymptotic pair " << (uv_ok ? "ok" : "FAIL");
  report(12, "constructive procedures: cutoff properties to 1e-10, regularization "
             "invariants, asymptotic pair constancy to 1e-8 and normalizations at 10^3",
         cut_ok && qreg_ok && uv_ok, os.str());
}

// 13. index inequalities and the equal-index symmetry on real fixtures
void criterion_13() {
  bool pass = true;
  std::string detail;
  for (const auto& f : fixture_registry()) {
    SystemSpec s = system_of(f);
    if (s.interval.kind != IntervalSpec::Kind::HalfLinePositive &&
        s.interval.kind != IntervalSpec::Kind::HalfLineNegative)
      continue;
    DeficiencyReport rep = formal_deficiency_indices(s);
    if (!rep.invariants_ok) {
      pass = false;
      detail = f.id;
    }
    // equal indices whenever J^-1 B and J^-1 H are real on a sample grid
    bool real = true;
    for (int k = 0; k <= 64 && real; ++k) {
      double x = s.interval.x0 +
                 (s.interval.kind == IntervalSpec::Kind::HalfLineNegative ? -1 : 1) * k * 0.25;
      Matrix jb = s.J.eval(x).partialPivLu().solve(s.B.eval(x));
      Matrix jh = s.J.eval(x).partialPivLu().solve(s.H.eval(x));
      if (jb.imag().cwiseAbs().maxCoeff() > 1e-10 ||
          jh.imag().cwiseAbs().maxCoeff() > 1e-10)
        real = false;
    }
    if (real && rep.n_plus != rep.n_minus) {
      pass = false;
      detail = f.id + " (equal-index symmetry)";
    }
  }
  report(13, "half-line inequalities kappa <= n~ <= n, n~+ + n~- >= n on every report; "
             "equal indices on every real-coefficient fixture",
         pass, detail);
}

// 14. gauge coherence of rank, definiteness and indices
void criterion_14() {
  MatrixFunction rot(2, {Expression::parse("cos(x)"), Expression::parse("-sin(x)"),
                         Expression::parse("sin(x)"), Expression::parse("cos(x)")});
  MatrixFunction d1i(2, {Expression::number(1), Expression::number(0), Expression::number(0),
                         Expression::imaginary_unit()});
  bool pass = true;
  std::string detail;

  {  // rotation gauge on the rotation-frame example (finite interval)
    SystemSpec s = fixture("mark-s1.11-1").spec.system();
    SystemSpec t = apply_gauge(s, GaugeMap::symbolic(rot));
    RankReport ra = rank_of_system(s), rb = rank_of_system(t);
    FiniteIntervalIndices fa = finite_interval_indices(s), fb = finite_interval_indices(t);
    if (ra.rank != rb.rank || fa.N_plus != fb.N_plus || fa.n_plus != fb.n_plus) {
      pass = false;
      detail = "rotation gauge";
    }
  }
  for (const char* id : {"kac-krein", "r3.1-4", "ex3.1"}) {
    SystemSpec s = fixture(id).spec.system();
    SystemSpec t = apply_gauge(s, GaugeMap::symbolic(d1i));
    RankReport ra = rank_of_system(s), rb = rank_of_system(t);
    DeficiencyReport da = formal_deficiency_indices(s), db = formal_deficiency_indices(t);
    bool same = ra.rank == rb.rank && da.n_plus == db.n_plus && da.n_minus == db.n_minus &&
                (ra.rank == s.n) == (rb.rank == s.n);
    if (!same) {
      pass = false;
      detail = id;
    }
  }
  report(14, "rank, definiteness and indices are invariant under the rotation and "
             "diag(1,i) gauges",
         pass, detail);
}

}  // namespace

int main() {
  std::cout << "hamsys acceptance suite" << std::endl;
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  criterion_10();
  criterion_11();
  criterion_12();
  criterion_13();
  criterion_14();
  std::cout << (failures == 0 ? "all criteria passed" : "criteria failed: ") << std::endl;
  return failures;
}
