#pragma once

#include <functional>

#include "hamsys/system.hpp"

namespace hamsys {

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 50'000'000;
};

/// Dense output of one accepted Dormand-Prince step on [t0, t1]
/// (t1 < t0 for leftward integration).
struct DenseStep {
  double t0 = 0.0, t1 = 0.0;
  Vector c1, c2, c3, c4, c5;

  Vector eval(double t) const {
    double theta = (t - t0) / (t1 - t0);
    double s1 = 1.0 - theta;
    return c1 + theta * (c2 + s1 * (c3 + theta * (c4 + s1 * c5)));
  }
  bool contains(double t) const {
    return t0 <= t1 ? (t >= t0 && t <= t1) : (t <= t0 && t >= t1);
  }
};

enum class StepAction { Continue, Interrupt };

using OdeRhs = std::function<void(double, const Vector&, Vector&)>;
using StepSink = std::function<StepAction(const DenseStep&, const Vector& y_end)>;

struct OdeResult {
  double t_end = 0.0;
  Vector y_end;
  bool interrupted = false;
  long steps_accepted = 0;
  long steps_rejected = 0;
};

/// Integrate y' = f(t,y) from t0 to t1 with an embedded 5(4) Dormand-Prince
/// pair and 4th-order dense output.  The sink sees every accepted step and can
/// interrupt, in which case the result carries the state at the interrupt
/// point.  Throws NumericsError on step-size underflow.
OdeResult integrate_dense(const OdeRhs& f, double t0, const Vector& y0, double t1,
                          const OdeOptions& opts, const StepSink& sink = nullptr);

}  // namespace hamsys
