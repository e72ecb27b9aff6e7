#include "hamsys/ode.hpp"

#include <cmath>

namespace hamsys {

namespace {

// Dormand-Prince 5(4) tableau
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
// b - bhat
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
// dense-output weights
constexpr double d1 = -12715105075.0 / 11282082432.0;
constexpr double d3 = 87487479700.0 / 32700410799.0;
constexpr double d4 = -10690763975.0 / 1880347072.0;
constexpr double d5 = 701980252875.0 / 199316789632.0;
constexpr double d6 = -1453857185.0 / 822651844.0;
constexpr double d7 = 69997945.0 / 29380423.0;

double error_norm(const Vector& err, const Vector& y0, const Vector& y1, double atol,
                  double rtol) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    double q = std::abs(err[i]) / sc;
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(err.size()));
}

}  // namespace

OdeResult integrate_dense(const OdeRhs& f, double t0, const Vector& y0, double t1,
                          const OdeOptions& opts, const StepSink& sink) {
  OdeResult res;
  res.t_end = t0;
  res.y_end = y0;
  if (t0 == t1) return res;

  const double dir = t1 > t0 ? 1.0 : -1.0;
  const Eigen::Index n = y0.size();
  Vector y = y0;
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  double t = t0;

  f(t, y, k1);

  // initial step: conservative heuristic based on the first derivative
  double span = std::abs(t1 - t0);
  double d0 = y.cwiseAbs().maxCoeff();
  double d1n = k1.cwiseAbs().maxCoeff();
  double h = (d1n > 1e-10) ? 0.01 * (opts.atol + opts.rtol * d0 + 1e-6) / (opts.rtol + 1e-16) /
                                 (d1n + 1.0)
                           : 1e-4 * span;
  h = std::min({h, span, opts.max_step});
  h = std::max(h, span * 1e-12);
  h *= dir;

  bool fsal_valid = true;
  for (long step = 0; step < opts.max_steps; ++step) {
    if ((t - t1) * dir >= 0.0) break;
    if ((t + h - t1) * dir > 0.0) h = t1 - t;
    if (std::abs(h) < 16.0 * std::numeric_limits<double>::epsilon() * (std::abs(t) + 1.0))
      throw NumericsError("step-size underflow near x=" + std::to_string(t));

    if (!fsal_valid) f(t, y, k1);

    ytmp = y + h * (a21 * k1);
    f(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * k1 + a32 * k2);
    f(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + h, ytmp, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(t + h, ynew, k7);

    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = error_norm(err, y, ynew, opts.atol, opts.rtol);

    if (en <= 1.0) {
      DenseStep ds;
      ds.t0 = t;
      ds.t1 = t + h;
      ds.c1 = y;
      ds.c2 = ynew - y;
      ds.c3 = h * k1 - ds.c2;
      ds.c4 = ds.c2 - h * k7 - ds.c3;
      ds.c5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);

      t += h;
      y = ynew;
      k1 = k7;  // FSAL
      fsal_valid = true;
      ++res.steps_accepted;

      if (sink && sink(ds, y) == StepAction::Interrupt) {
        res.t_end = t;
        res.y_end = y;
        res.interrupted = true;
        return res;
      }

      double fac = 0.9 * std::pow(std::max(en, 1e-10), -0.2);
      fac = std::min(5.0, std::max(0.2, fac));
      h *= fac;
      if (std::abs(h) > opts.max_step) h = dir * opts.max_step;
    } else {
      double fac = std::max(0.1, 0.9 * std::pow(en, -0.2));
      h *= fac;
      fsal_valid = true;  // k1 still holds f(t,y)
      ++res.steps_rejected;
    }
  }

  if ((t - t1) * dir < 0.0)
    throw NumericsError("integrator exceeded the step budget before reaching the target");

  res.t_end = t;
  res.y_end = y;
  return res;
}

}  // namespace hamsys
