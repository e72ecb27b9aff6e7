#pragma once

#include <memory>
#include <mutex>

#include "hamsys/ode.hpp"
#include "hamsys/system.hpp"

namespace hamsys {

struct PropagatorOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  /// Column-rescale the propagator whenever the scaled norm exceeds this.
  double rescale_threshold = 1e4;
  /// Additional x positions that must be hit exactly (plan nodes).
  std::vector<double> mandatory_nodes;
};

/// Value of a matrix held as e^{logscale} * value with moderate `value`.
struct ScaledMatrix {
  Matrix value;
  double logscale = 0.0;

  Matrix dense() const;  // throws NumericsError if not representable
};

/// One rescaling window of the propagation: on it
///   Y(x) = e^{logscale} * W(x) * F
/// where W is carried by the dense steps and stays of moderate norm.
struct PropWindow {
  double start = 0.0, end = 0.0;  // in march order (end < start when marching left)
  double logscale = 0.0;
  Matrix F;
  std::vector<DenseStep> steps;

  bool contains(double x) const {
    return start <= end ? (x >= start && x <= end) : (x <= start && x >= end);
  }
  Matrix eval_W(double x) const;
};

/// Per-step callback used by scale-aware quadrature consumers.  The step
/// carries W; the current window factors are passed alongside.
using PropStepFn =
    std::function<void(double logscale, const Matrix& F, const DenseStep& step)>;
/// Callback fired exactly at each mandatory node (and at the march target).
using PropNodeFn = std::function<void(double x)>;

/// Marches the matrix initial value problem  J Y' + B Y = lambda H Y,
/// Y(x0) = I, in one direction, maintaining the windowed rescaled
/// representation.  Streaming consumers receive every accepted step; the
/// window list is retained only when `keep` is non-null.
void propagate(const SystemSpec& s, Complex lambda, double target, const PropagatorOptions& opts,
               const PropStepFn& step_fn, const PropNodeFn& node_fn,
               std::vector<PropWindow>* keep);

class FundamentalSolution {
public:
  FundamentalSolution(SystemSpec s, Complex lambda, double lo, double hi,
                      PropagatorOptions opts = {});

  const SystemSpec& system() const { return s_; }
  Complex lambda() const { return lambda_; }
  double x0() const { return s_.interval.x0; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const PropagatorOptions& options() const { return opts_; }

  ScaledMatrix eval_scaled(double x) const;
  Matrix eval(double x) const;          // dense value, throws if out of range
  double logscale_at(double x) const;
  /// Unscaled derivative Y'(x) = J(x)^{-1} (lambda H - B) Y(x).
  Matrix derivative(double x) const;

  const std::vector<PropWindow>& right_windows() const { return right_; }
  const std::vector<PropWindow>& left_windows() const { return left_; }

  /// Solution at the conjugate spectral parameter on the same span (cached).
  std::shared_ptr<const FundamentalSolution> companion() const;

private:
  SystemSpec s_;
  Complex lambda_;
  double lo_, hi_;
  PropagatorOptions opts_;
  std::vector<PropWindow> right_, left_;
  mutable std::shared_ptr<const FundamentalSolution> companion_;
  mutable std::mutex companion_mutex_;
};

/// Scale-aware defect of the conjugation identity
///   Y(x, conj(lambda))^* J(x) Y(x, lambda) = J(x0):
/// both sides are compared at the representation's own scale, i.e.
///   || F_c^* (W_c^* J W) F  -  e^{-(rho+rho_c)} J(x0) ||.
double symplectic_defect(const FundamentalSolution& Y, double x);

struct Trajectory {
  Complex lambda;
  std::vector<double> xs;
  std::vector<Vector> ys;
  std::vector<Vector> yps;  // derivatives at the nodes

  Vector eval(double x) const;  // cubic Hermite between stored nodes
};

/// Variation of constants: the solution of
///   J y' + B y = lambda H y + H g,   y(x0) = 0
/// evaluated via  y(x) = Y(x,lambda) \int_{x0}^x J(x0)^{-1} Y(t,conj lambda)^* H(t) g(t) dt.
Trajectory variation_of_constants(const SystemSpec& s, Complex lambda,
                                  const std::function<Vector(double)>& g, double lo, double hi,
                                  const PropagatorOptions& opts = {});

}  // namespace hamsys
