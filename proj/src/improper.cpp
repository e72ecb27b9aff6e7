#include "hamsys/improper.hpp"

#include <algorithm>
#include <cmath>

namespace hamsys {

const char* to_string(IntegralStatus s) {
  switch (s) {
    case IntegralStatus::Convergent: return "convergent";
    case IntegralStatus::Divergent: return "divergent";
    case IntegralStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

// least-squares slope of y against t
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

}  // namespace

DivergenceClassification classify_improper_integral(const ScalarFunction& fn, double from,
                                                    int direction,
                                                    const ImproperOptions& opts) {
  DivergenceClassification out;
  out.integrand = fn.provenance;
  double sign = direction >= 0 ? 1.0 : -1.0;

  auto f = [&](double x) { return fn.f(x); };

  double acc = 0.0;
  double prev_T = from;
  bool overflowed = false;
  for (int k = opts.k_min; k <= opts.k_max; ++k) {
    double T = from + sign * std::pow(2.0, k);
    double seg = integrate_scalar_split(f, prev_T, T, opts.breakpoints, opts.quad);
    acc += sign * seg;  // oriented integral measured away from `from`
    prev_T = T;
    out.truncations.push_back(T);
    out.values.push_back(acc);
    if (!std::isfinite(acc) || std::abs(acc) > 1e280) {
      overflowed = true;
      break;
    }
  }

  std::size_t m = out.values.size();
  if (overflowed || m < 4) {
    if (overflowed) {
      out.status = IntegralStatus::Divergent;
      out.growth_model = "exponential";
      return out;
    }
    out.status = IntegralStatus::Inconclusive;
    return out;
  }

  std::vector<double> inc(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) inc[i] = out.values[i + 1] - out.values[i];

  // (1) plain Cauchy test on the last 3 increments
  double scale = 1.0 + std::abs(out.values.back());
  bool cauchy = true;
  for (std::size_t i = m - 4; i + 1 < m; ++i)
    if (std::abs(inc[i]) > opts.rel_tol * scale) cauchy = false;
  if (cauchy) {
    out.status = IntegralStatus::Convergent;
    out.limit_estimate = out.values.back();
    // geometric tail correction when the ratio is stable
    double r = std::abs(inc[m - 2]) > 0 ? inc[m - 2] / (inc[m - 3] != 0 ? inc[m - 3] : 1.0) : 0.0;
    if (r > 0 && r < 0.9) out.limit_estimate += inc[m - 2] * r / (1 - r);
    return out;
  }

  // (2) growing increments: divergence with a power or exponential model
  std::size_t tail = std::min<std::size_t>(6, inc.size());
  bool growing = true;
  for (std::size_t i = inc.size() - tail; i + 1 < inc.size(); ++i)
    if (!(inc[i + 1] > 0.5 * inc[i]) || inc[i] <= 0) growing = false;
  if (growing && inc.back() > 1.05 * inc[inc.size() - tail]) {
    out.status = IntegralStatus::Divergent;
    std::vector<double> lt, lv, tv;
    for (std::size_t i = m - tail; i < m; ++i) {
      if (out.values[i] <= 0) continue;
      lt.push_back(std::log(std::abs(out.truncations[i] - from)));
      tv.push_back(std::abs(out.truncations[i] - from));
      lv.push_back(std::log(out.values[i]));
    }
    if (lv.size() >= 3) {
      auto residual = [&](const std::vector<double>& t) {
        double sl = lsq_slope(t, lv);
        double mt = 0, mv = 0;
        for (std::size_t i = 0; i < t.size(); ++i) mt += t[i], mv += lv[i];
        mt /= t.size();
        mv /= t.size();
        double r = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
          double d = lv[i] - (mv + sl * (t[i] - mt));
          r += d * d;
        }
        return std::pair<double, double>(r, sl);
      };
      auto [r_pow, p_power] = residual(lt);
      auto [r_exp, c_exp] = residual(tv);
      if (r_pow <= r_exp) {
        out.growth_model = "power";
        out.model_rate = p_power;
      } else {
        out.growth_model = "exponential";
        out.model_rate = c_exp;
      }
    } else {
      out.growth_model = "power";
    }
    return out;
  }

  // (3a) geometric decay of the increments: extrapolate the tail exactly
  {
    bool geometric = true;
    double rmin = 2.0, rmax = 0.0;
    for (std::size_t i = inc.size() - std::min<std::size_t>(4, inc.size() - 1);
         i + 1 < inc.size(); ++i) {
      if (inc[i] == 0.0 || !(inc[i + 1] * inc[i] > 0)) {
        geometric = false;
        break;
      }
      double r = inc[i + 1] / inc[i];
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
    }
    if (geometric && rmax < 0.9 && rmax - rmin < 0.1 * std::max(rmax, 0.1)) {
      out.status = IntegralStatus::Convergent;
      out.limit_estimate = out.values.back() + inc.back() * rmax / (1.0 - rmax);
      out.increment_decay = -std::log(rmax);
      return out;
    }
  }

  // (3b) decaying-but-not-summable increments: fit increment_k ~ k^{-s}
  std::vector<double> lk, li;
  for (std::size_t i = inc.size() - std::min<std::size_t>(6, inc.size()); i < inc.size(); ++i) {
    if (std::abs(inc[i]) <= 0) continue;
    lk.push_back(std::log(static_cast<double>(i + 1)));
    li.push_back(std::log(std::abs(inc[i])));
  }
  if (lk.size() >= 4) {
    double s = -lsq_slope(lk, li);
    out.increment_decay = s;
    bool monotone = !opts.signed_integrand;
    if (s >= opts.decay_exponent_convergent) {
      out.status = IntegralStatus::Convergent;
      // power-law tail estimate: sum_{j>k} c j^{-s} ~ inc_k * k/(s-1)
      double k_last = static_cast<double>(inc.size());
      out.limit_estimate = out.values.back() + inc.back() * k_last / (s - 1.0);
      return out;
    }
    if (monotone && s <= opts.decay_exponent_divergent) {
      out.status = IntegralStatus::Divergent;
      out.growth_model = "log-type";
      out.model_rate = inc.back() / std::log(2.0);
      return out;
    }
  }

  out.status = IntegralStatus::Inconclusive;
  return out;
}

}  // namespace hamsys
