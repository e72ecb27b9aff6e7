#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hamsys/quadrature.hpp"

namespace hamsys {

/// Nonnegative (or signed, see options) scalar function of x with provenance.
struct ScalarFunction {
  std::function<double(double)> f;
  std::string provenance;
};

enum class IntegralStatus { Convergent, Divergent, Inconclusive };

struct ImproperOptions {
  int k_min = 0;
  int k_max = 20;               // truncations T_k = from +/- 2^k
  double rel_tol = 1e-8;        // Cauchy threshold on relative increments
  double decay_exponent_convergent = 1.5;  // increments ~ k^-s with s above: convergent
  double decay_exponent_divergent = 1.1;   // s below: divergent (log-type growth)
  bool signed_integrand = false;
  std::vector<double> breakpoints;
  QuadOptions quad;
};

struct DivergenceClassification {
  IntegralStatus status = IntegralStatus::Inconclusive;
  double limit_estimate = 0.0;   // meaningful when convergent
  std::string growth_model;      // "exponential", "power", "log-type", "" when convergent
  double model_rate = 0.0;       // exponent/slope of the fitted growth model
  double increment_decay = 0.0;  // fitted s in  increment_k ~ k^{-s}
  std::vector<double> truncations;  // T_k
  std::vector<double> values;       // I(T_k)
  std::string integrand;
};

/// Classify \int f over [from, +inf) (direction +1) or (-inf, from] (-1) by
/// truncation at T_k = from +/- 2^k.
DivergenceClassification classify_improper_integral(const ScalarFunction& f, double from,
                                                    int direction,
                                                    const ImproperOptions& opts = {});

/// Convenience wrapper: classify over the unbounded side(s) of the interval.
/// For a full line this classifies both ends and combines: divergent only if
/// both are divergent etc.  Use classify_improper_integral per side instead
/// when the per-side evidence is needed.
const char* to_string(IntegralStatus s);

}  // namespace hamsys
