#pragma once

#include "hamsys/propagator.hpp"

namespace hamsys {

/// A frame change U(x): invertible, absolutely continuous, with U' available
/// (symbolically or through the defining ODE / finite differences).
struct GaugeMap {
  int n = 0;
  std::function<Matrix(double)> U;
  std::function<Matrix(double)> dU;
  std::optional<MatrixFunction> sym;
  std::string description;

  static GaugeMap symbolic(MatrixFunction u, std::string description = "symbolic gauge");
  static GaugeMap functional(int n, std::function<Matrix(double)> u,
                             std::function<Matrix(double)> du,
                             std::string description = "numeric gauge");
  Matrix eval(double x) const { return U(x); }
  Matrix deriv(double x) const { return dU(x); }
};

/// (J, B, H) -> (U*JU, U*JU' + U*BU, U*HU).
SystemSpec apply_gauge(const SystemSpec& s, const GaugeMap& g);

struct CanonicalizeResult {
  SystemSpec system;  // constant J, B = 0, sampled H
  GaugeMap gauge;     // U(x) = Y(x, 0)
  double b_defect = 0.0;   // max ||U*JU' + U*BU|| over the check grid
  double j_defect = 0.0;   // max ||U*JU - J(x0)|| over the check grid
  std::shared_ptr<const FundamentalSolution> propagator;
};

struct CanonicalizeOptions {
  double lo = 0.0, hi = 0.0;  // span; defaults to a representative window
  bool span_set = false;
  double tol_gauge = 1e-8;
  int check_points = 65;
  PropagatorOptions prop;
};

/// Gauge by the fundamental solution at lambda = 0; needs constant J (the
/// constant-J reduction is applied first when necessary).
CanonicalizeResult canonicalize(const SystemSpec& s, const CanonicalizeOptions& opts = {});

struct ReduceConstantJOptions {
  double lo = 0.0, hi = 0.0;
  bool span_set = false;
  double gap_min = 1e-6;   // refuse on eigenvalue crossings of iJ(x)
  int grid_points = 513;
};

struct ReduceConstantJResult {
  SystemSpec system;  // J constant = J(x0)
  GaugeMap gauge;     // U = V |D|^{-1/2} W from the eigenframe of iJ(x)
  double j_defect = 0.0;
};

ReduceConstantJResult reduce_constant_J(const SystemSpec& s,
                                        const ReduceConstantJOptions& opts = {});

/// Embed the Sturm-Liouville problem into a 2n first-order system:
///   J = [[0, iI], [iI, 0]],  B = [[R - Q*AQ, -iQ*A], [iAQ, -A]],  H = diag(H, 0).
SystemSpec embed_sturm_liouville(const SturmLiouvilleSpec& sl);

/// The square of a system as a 2n system, gauged to the normal form
///   J = [[0, iI], [iI, 0]],  B = [[0, iB*J^-1], [iJ^-1 B, -(J^-1)* H J^-1]],
///   H = diag(H, 0).
SystemSpec square_system(const SystemSpec& s);

/// Designated-block system brought to the J3 = [[0,-I],[I,0]] normal form.
/// Rejects inputs violating V = V*, A = A*, H >= 0 or det J = 0.
SystemSpec block_normal_form(const BlockSystemSpec& blk);

}  // namespace hamsys
