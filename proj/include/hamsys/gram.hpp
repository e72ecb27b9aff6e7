#pragma once

#include "hamsys/propagator.hpp"

namespace hamsys {

/// Hermitian positive semidefinite matrix held as e^{log} * M.
struct ScaledPsd {
  double log = -std::numeric_limits<double>::infinity();
  Matrix M;

  bool empty() const { return M.size() == 0; }
  Matrix dense() const;
  /// Unscaled eigenvalues in log form: log + log(eig_j), ascending.
  std::vector<double> log_eigenvalues(double clamp_floor = -745.0) const;
};

/// Scale-aware sum of positive semidefinite contributions.
class PsdAccumulator {
public:
  void add(double logw, const Matrix& d);
  void add(const ScaledPsd& p);
  ScaledPsd value() const;
  bool empty() const { return m_.size() == 0; }

private:
  double log_ = -std::numeric_limits<double>::infinity();
  Matrix m_;
};

struct GramMatrix {
  Complex lambda;
  double a = 0.0, b = 0.0;
  ScaledPsd scaled;        // hermitized
  double herm_defect = 0;  // relative asymmetry before hermitization
  double quad_rel_tol = 0;

  Matrix dense() const { return scaled.dense(); }
};

/// M_{[a,b]}(lambda) = \int_a^b Y(x,lambda)^* H(x) Y(x,lambda) dx, assembled
/// window by window from the rescaled factors.
GramMatrix gram_matrix(const SystemSpec& s, Complex lambda, double a, double b,
                       const PropagatorOptions& opts = {});

/// Cumulative Gram snapshots at the given march targets on one side of x0
/// (targets strictly monotone away from x0).  Returns one ScaledPsd per target.
std::vector<ScaledPsd> gram_prefixes(const SystemSpec& s, Complex lambda,
                                     const std::vector<double>& targets,
                                     const PropagatorOptions& opts = {});

struct RankOptions {
  double rel_tol = 1e-8;    // singular values below rel_tol * sigma_max are noise
  double abs_floor = 1e-12; // unscaled absolute floor
  double base_radius = 1.0;
  int max_doublings = 8;
  PropagatorOptions prop;
};

struct RankReport {
  int n = 0;
  int rank = -1;
  bool stabilized = false;
  Matrix kernel;                       // orthonormal columns spanning ker M_{I0}
  double i0_lo = 0.0, i0_hi = 0.0;     // stabilization interval
  std::vector<std::pair<double, double>> intervals_tried;
  std::vector<int> ranks_seen;
  std::vector<double> spectrum_at_i0;  // unscaled log eigenvalues
  double rel_tol = 0.0;
  ScaledPsd gram_at_i0;
};

RankReport rank_of_system(const SystemSpec& s, const RankOptions& opts = {});

struct DefinitenessReport {
  bool definite = false;
  bool inconclusive = false;
  RankReport rank;
};

DefinitenessReport is_definite(const SystemSpec& s, const RankOptions& opts = {});

struct KernelAngleReport {
  std::vector<Complex> lambdas;
  std::vector<int> ranks;
  double max_angle = 0.0;  // radians
  double i0_lo = 0.0, i0_hi = 0.0;
};

/// Kernels of M_{I0}(lambda) across the given spectral parameters; throws
/// NumericsError if the ranks disagree (numerical breakdown).
KernelAngleReport kernel_lambda_independence(const SystemSpec& s,
                                             const std::vector<Complex>& lambdas,
                                             const RankOptions& opts = {});

struct PositiveTypeReport {
  bool positive_type = false;
  bool inconclusive = false;  // search exhausted without covering the interval
  int doublings_used = 0;
  double window_lo = 0.0, window_hi = 0.0;
  double smallest_eigenvalue = 0.0;  // of \int H over the last window tried
};

/// Is \int_{I0} H invertible for some compact window (searched over the
/// nested family)?
PositiveTypeReport is_positive_type(const CoeffField& H, const IntervalSpec& iv,
                                    const RankOptions& opts = {});

struct StructuralDefinitenessVerdict {
  bool holds = false;
  double fraction = 0.0;   // grid fraction with det(A H) != 0
  double min_fraction = 1e-3;
  int grid_points = 0;
};

/// Definiteness of a designated-block system via the measure of
/// {x : det(A(x) H(x)) != 0}.
StructuralDefinitenessVerdict structural_definiteness(const BlockSystemSpec& blk,
                                                      int grid_points = 2048,
                                                      double min_fraction = 1e-3,
                                                      double window = 32.0);

/// Largest principal angle between the column spans of two orthonormal bases.
double max_principal_angle(const Matrix& q1, const Matrix& q2);

/// Numerical rank and kernel of a scaled PSD matrix.
struct PsdRank {
  int rank = 0;
  Matrix kernel;
  std::vector<double> log_spectrum;
};
PsdRank psd_rank(const ScaledPsd& p, double rel_tol, double abs_floor);

}  // namespace hamsys
