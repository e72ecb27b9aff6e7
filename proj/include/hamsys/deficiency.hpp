#pragma once

#include "hamsys/gram.hpp"

namespace hamsys {

struct SignatureReport {
  int kappa_plus = 0;
  int kappa_minus = 0;
  std::vector<double> eigenvalues;  // of i J(x0), ascending
};

/// Counts of positive/negative eigenvalues of i J(x0).  Throws NumericsError
/// on a near-zero eigenvalue (contradicts det J != 0).
SignatureReport signature_kappa(const SystemSpec& s);

struct DeficiencyOptions {
  int tmin_exponent = 3;
  int tmax_exponent = 12;
  int finite_refinements = 20;   // finite-interval plans approach the endpoint dyadically
  double eps_cauchy = 1e-6;
  double eps_slope = 1e-2;
  double resolve_rel = 1e-13;    // eigenvalues this far below the top are carried forward
  RankOptions rank;
  PropagatorOptions prop;
};

struct TruncationPlan {
  std::vector<double> right_targets;  // strictly increasing, all > x0
  std::vector<double> left_targets;   // strictly decreasing, all < x0

  std::size_t stages() const {
    return std::max(right_targets.size(), left_targets.size());
  }
  static TruncationPlan standard(const SystemSpec& s, const DeficiencyOptions& opts);
};

enum class TrajectoryStatus { Bounded, Divergent, Inconclusive };
const char* to_string(TrajectoryStatus s);

struct TrajectoryInfo {
  TrajectoryStatus status = TrajectoryStatus::Inconclusive;
  double slope_logT = 0.0;  // least-squares slope of mu against log distance
  double slope_T = 0.0;     // against distance (exponential model)
  std::string model;        // "exponential", "power", "slow", "" when bounded
};

/// Sorted Gram-eigenvalue trajectories mu_j(T_k) in log scale, with the
/// bounded/divergent classification of each.
struct GrowthClassification {
  Complex lambda;
  std::vector<double> T;                   // plan stages (right target or radius)
  std::vector<std::vector<double>> mu;     // mu[k][j], ascending in j
  std::vector<std::vector<bool>> carried;  // value carried from the previous stage
  std::vector<TrajectoryInfo> trajectories;
  int bounded = 0, divergent = 0, inconclusive = 0;
};

GrowthClassification l2_solution_count(const SystemSpec& s, Complex lambda,
                                       const TruncationPlan& plan,
                                       const DeficiencyOptions& opts = {});
GrowthClassification l2_solution_count(const SystemSpec& s, Complex lambda,
                                       const DeficiencyOptions& opts = {});

struct DeficiencyReport {
  int n = 0;
  IntervalSpec::Kind kind = IntervalSpec::Kind::HalfLinePositive;
  int n_plus = 0, n_minus = 0;  // formal indices dim E_{+i}, dim E_{-i}
  int N_plus = 0, N_minus = 0;  // ordinary indices: N = n~ - (n - rank)
  int rank = 0;
  bool rank_stabilized = true;
  int kappa_plus = 0, kappa_minus = 0;
  GrowthClassification at_plus_i, at_minus_i;
  bool conclusive = true;  // no inconclusive trajectories at either parameter
  bool invariants_ok = true;
  std::vector<std::string> invariant_failures;
};

DeficiencyReport formal_deficiency_indices(const SystemSpec& s,
                                           const DeficiencyOptions& opts = {});

struct FiniteIntervalIndices {
  int n_plus = 0, n_minus = 0;
  int N_plus = 0, N_minus = 0;
  RankReport rank;
  GrowthClassification crosscheck;  // all trajectories bounded on the finite span
  bool crosscheck_ok = false;
};

FiniteIntervalIndices finite_interval_indices(const SystemSpec& s,
                                              const DeficiencyOptions& opts = {});

struct LambdaConstancyReport {
  std::vector<Complex> lambdas;         // probes in the open upper half-plane
  std::vector<int> counts_upper;       // bounded counts at lambda
  std::vector<int> counts_lower;       // bounded counts at conj(lambda)
};

/// Checks that the bounded-trajectory count is constant over the upper
/// half-plane probes (and over their conjugates).  Throws NumericsError on
/// disagreement: constancy is guaranteed, so disagreement means breakdown.
LambdaConstancyReport lambda_constancy_check(const SystemSpec& s,
                                             const std::vector<Complex>& lambda_grid,
                                             const DeficiencyOptions& opts = {});

class GlueRefusal : public NumericsError {
public:
  using NumericsError::NumericsError;
};

/// Combine half-line reports into a whole-line report:
///   N(line) = N(R+) + N(R-) - n  (and the same for the formal indices).
/// Requires both half-line systems definite; refuses otherwise.
DeficiencyReport glue_line_indices(const DeficiencyReport& plus_side,
                                   const DeficiencyReport& minus_side, const SystemSpec& line,
                                   const DeficiencyOptions& opts = {});

}  // namespace hamsys
