#pragma once

#include "hamsys/deficiency.hpp"
#include "hamsys/gauge.hpp"
#include "hamsys/improper.hpp"
#include "hamsys/json_io.hpp"

namespace hamsys {

/// Weyl weight c(x) = ||H^{-1/2} J H^{-1/2}|| (infinity where H is singular).
double weyl_weight_c(const SystemSpec& s, double x, double sing_tol = 1e-30);
/// Its reciprocal, 0 where H is singular (always finite and locally integrable).
double weyl_inv_c(const SystemSpec& s, double x, double sing_tol = 1e-30);
/// Designated-block variant c(x) = max(1, ||A^{-1/2} J H^{-1/2}||),
/// infinity where det(A H) = 0.
double block_weight_c(const Matrix& A, const Matrix& J, const Matrix& H,
                      double sing_tol = 1e-30);

enum class VerdictStatus { Holds, Fails, Inconclusive };
const char* to_string(VerdictStatus s);

struct HypothesisCheck {
  std::string name;
  enum class State { Pass, Fail, Unknown } state = State::Unknown;
  std::string detail;
};

struct CriterionVerdict {
  std::string id;
  VerdictStatus status = VerdictStatus::Inconclusive;
  bool equivalence = false;  // verdict characterizes the conclusion both ways
  std::string conclusion;    // attached when status != inconclusive
  std::vector<HypothesisCheck> checks;
  std::vector<DivergenceClassification> evidence;
  Json extra;  // criterion-specific numbers (constants, probe results)
};

struct CriterionInfo {
  std::string id;
  std::string statement;   // self-contained mathematical statement
  std::string applies_to;  // "system" | "sturm-liouville" | "line-system" | ...
  bool equivalence = false;
};

const std::vector<CriterionInfo>& criteria_registry();

struct CriteriaOptions {
  std::optional<std::string> q_expression;  // lower-control function for V >= -qH
  std::optional<double> constant_potential_k2;  // k^2 for R = k^2 I + R1
  ImproperOptions improper;
  DeficiencyOptions deficiency;
  RankOptions rank;
  double grid_window = 32.0;
  int grid_points = 513;
};

CriterionVerdict evaluate_criterion(const std::string& id, const ProblemSpec& spec,
                                    const CriteriaOptions& opts = {});

/// All registry entries applicable to the given spec kind.
std::vector<CriterionVerdict> evaluate_all_criteria(const ProblemSpec& spec,
                                                    const CriteriaOptions& opts = {});

Json verdict_to_json(const CriterionVerdict& v);

// ---------------------------------------------------------------------------
// constructive procedures
// ---------------------------------------------------------------------------

/// Cutoff function built from a divergent-mass profile f: equals 1 below n,
/// vanishes beyond x_n, with |chi'| <= f/n.
struct CutoffFunction {
  int n = 0;
  double C = 0.0;     // clip level of min(C, f/n)
  double N = 0.0;     // support end x_n
  double K = 0.0;     // normalizing mass, >= 1
  CumulativeTable mass;  // cumulative of min(C, f/n) on [n, N]

  double eval(double x) const;
  double deriv_bound() const { return C / K; }
};

CutoffFunction construct_cutoff(const ScalarFunction& f, int n,
                                const ImproperOptions& opts = {});

struct CutoffCheck {
  double defect_left = 0.0;    // |chi(n) - 1| and below
  double defect_support = 0.0; // |chi(x_n)|
  double sup_deriv = 0.0;      // sup |chi'|
  double defect_bound = 0.0;   // max(0, |chi'| - f/n) over samples
  bool pass(double tol) const {
    return defect_left <= tol && defect_support <= tol && defect_bound <= tol &&
           std::isfinite(sup_deriv);
  }
};
CutoffCheck verify_cutoff(const CutoffFunction& chi, const ScalarFunction& f);

/// Monotone regularization q~ >= q with Lipschitz-controlled q~^{-1/2} and
/// divergent \int q~^{-1/2} / c.
struct QRegularization {
  CumulativeTable phi;          // phi(x) = int_0^x 1/c
  std::vector<double> qt1_nodes;   // q~1 at integer arguments (shifted samples)
  double C1 = 0.0;              // Lipschitz constant of q~1^{-1/2}
  std::function<double(double)> q;  // original q
  std::function<double(double)> c;

  double psi(double t) const;      // numeric inverse of phi
  double qt1(double t) const;      // piecewise-linear in q~1^{-1/2}
  double eval(double x) const;     // q~(x) = q~1(phi(x))
};

struct QRegularizationOptions {
  double x_max = 4096.0;  // construction horizon
  int phi_points = 4096;
  ImproperOptions improper;
};

QRegularization regularize_q(const std::function<double(double)>& q,
                             const std::function<double(double)>& c,
                             const QRegularizationOptions& opts = {});

struct QRegCheck {
  double min_margin = 0.0;          // min (q~ - q), should be >= -tol
  double lipschitz_excess = 0.0;    // max(|d/dx q~^{-1/2}| c - C1)
  DivergenceClassification tail;    // of \int q~^{-1/2} / c
};
QRegCheck verify_q_regularization(const QRegularization& reg, double x_hi = 2048.0);

/// Matrix solution pair of -(A^{-1} u')' + R u = 0 with U -> I and V ~ \int A.
struct AsymptoticPair {
  int n = 0;
  double N = 0.0;          // contraction threshold from the tail bound
  std::vector<double> xs;  // sample grid on [0, x_far]
  std::vector<Matrix> U, P;  // P = A^{-1} U'
  std::vector<Matrix> V;

  Matrix eval_U(double x) const;
  Matrix eval_V(double x) const;
  Matrix eval_P(double x) const;
  /// K(x) = U* P - P* U, constant (= 0) for this pair.
  double k_defect(double lo, double hi) const;
};

struct AsymptoticOptions {
  double x_far = 4096.0;
  int grid_per_unit = 8;
  double series_tol = 1e-13;
  int max_terms = 64;
};

AsymptoticPair asymptotic_solutions_UV(const MatrixFunction& A, const MatrixFunction& R,
                                       const AsymptoticOptions& opts = {});

}  // namespace hamsys
