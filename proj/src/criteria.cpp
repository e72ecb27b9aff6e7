#include "hamsys/criteria.hpp"

#include <algorithm>
#include <cmath>

namespace hamsys {

const char* to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::Holds: return "holds";
    case VerdictStatus::Fails: return "fails";
    case VerdictStatus::Inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

double spectral_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().maxCoeff();
}

// Inverse square root of a PSD matrix.  "Singular" must mean a structural
// zero eigenvalue: genuinely decaying profiles reach very small relative
// eigenvalues that still carry the correct Weyl weight, so only a far
// sub-roundoff relative threshold may clamp them.
Matrix inv_sqrt_psd(const Matrix& h, double tol, bool* singular) {
  Eigen::SelfAdjointEigenSolver<Matrix> es((h + h.adjoint()) / 2.0);
  Eigen::VectorXd d = es.eigenvalues();
  double top = std::max(d.maxCoeff(), 0.0);
  if (top <= 0.0 || d.minCoeff() <= tol * top) {
    if (singular) *singular = true;
    return Matrix();
  }
  if (singular) *singular = false;
  Eigen::VectorXd r = d.cwiseSqrt().cwiseInverse();
  Matrix m = es.eigenvectors() * r.asDiagonal() * es.eigenvectors().adjoint();
  if (!m.allFinite()) {
    if (singular) *singular = true;
    return Matrix();
  }
  return m;
}

}  // namespace

double weyl_weight_c(const SystemSpec& s, double x, double sing_tol) {
  bool sing = false;
  Matrix hm = inv_sqrt_psd(s.H.eval(x), sing_tol, &sing);
  if (sing) return std::numeric_limits<double>::infinity();
  return spectral_norm(hm * s.J.eval(x) * hm);
}

double weyl_inv_c(const SystemSpec& s, double x, double sing_tol) {
  double c = weyl_weight_c(s, x, sing_tol);
  return std::isfinite(c) && c > 0 ? 1.0 / c : 0.0;
}

double block_weight_c(const Matrix& A, const Matrix& J, const Matrix& H, double sing_tol) {
  bool sa = false, sh = false;
  Matrix am = inv_sqrt_psd(A, sing_tol, &sa);
  Matrix hm = inv_sqrt_psd(H, sing_tol, &sh);
  if (sa || sh) return std::numeric_limits<double>::infinity();
  return std::max(1.0, spectral_norm(am * J * hm));
}

// ---------------------------------------------------------------------------
// shared hypothesis checks and wiring
// ---------------------------------------------------------------------------

namespace {

using Check = HypothesisCheck;
using State = HypothesisCheck::State;

Check make_check(std::string name, bool pass, std::string detail = "") {
  Check c;
  c.name = std::move(name);
  c.state = pass ? State::Pass : State::Fail;
  c.detail = std::move(detail);
  return c;
}

Check unknown_check(std::string name, std::string detail) {
  Check c;
  c.name = std::move(name);
  c.state = State::Unknown;
  c.detail = std::move(detail);
  return c;
}

bool all_pass(const std::vector<Check>& checks) {
  for (const auto& c : checks)
    if (c.state != State::Pass) return false;
  return true;
}

bool any_unknown(const std::vector<Check>& checks) {
  for (const auto& c : checks)
    if (c.state == State::Unknown) return true;
  return false;
}

SampleGrid criteria_grid(const SystemSpec& s, const CriteriaOptions& o) {
  return SampleGrid::standard(s, o.grid_points, o.grid_window, 0);
}

Check check_interval_kind(const IntervalSpec& iv, std::initializer_list<IntervalSpec::Kind> ok,
                          const std::string& wanted) {
  for (auto k : ok)
    if (iv.kind == k) return make_check("interval is " + wanted, true, iv.kind_name());
  return make_check("interval is " + wanted, false, "interval is " + iv.kind_name());
}

Check check_J_constant(const SystemSpec& s, const SampleGrid& g) {
  Matrix ref = s.J.eval(s.interval.x0);
  double worst = 0;
  for (double x : g.points)
    worst = std::max(worst, (s.J.eval(x) - ref).cwiseAbs().maxCoeff());
  return make_check("J constant", worst <= 1e-10,
                    "max |J(x) - J(x0)| = " + std::to_string(worst));
}

Check check_B_zero(const SystemSpec& s, const SampleGrid& g) {
  double worst = 0;
  for (double x : g.points) worst = std::max(worst, s.B.eval(x).cwiseAbs().maxCoeff());
  return make_check("B = 0", worst <= 1e-10, "max |B(x)| = " + std::to_string(worst));
}

Check check_real(const std::string& name, const std::function<Matrix(double)>& f,
                 const SampleGrid& g) {
  double worst = 0;
  for (double x : g.points) worst = std::max(worst, f(x).imag().cwiseAbs().maxCoeff());
  return make_check(name + " real", worst <= 1e-10,
                    "max imaginary part = " + std::to_string(worst));
}

Check check_positive_type(const SystemSpec& s, const CriteriaOptions& o,
                          PositiveTypeReport* out = nullptr) {
  PositiveTypeReport rep = is_positive_type(s.H, s.interval, o.rank);
  if (out) *out = rep;
  if (rep.positive_type)
    return make_check("H of positive type", true,
                      "invertible mass on [" + std::to_string(rep.window_lo) + ", " +
                          std::to_string(rep.window_hi) + "]");
  if (rep.inconclusive)
    return unknown_check("H of positive type",
                         "no invertible window found before the search horizon");
  return make_check("H of positive type", false, "integrated H stays singular");
}

struct Direction {
  int sign;     // +1 toward +inf, -1 toward -inf
  double from;  // basepoint of the truncations
};

std::vector<Direction> unbounded_directions(const IntervalSpec& iv) {
  std::vector<Direction> out;
  if (iv.unbounded_above()) out.push_back({+1, iv.x0});
  if (iv.unbounded_below()) out.push_back({-1, iv.x0});
  return out;
}

DivergenceClassification classify_scalar(const SystemSpec& s, const Direction& d,
                                         const std::function<double(double)>& f,
                                         const std::string& what, const CriteriaOptions& o) {
  ScalarFunction sf{f, what};
  ImproperOptions io = o.improper;
  io.breakpoints = s.breakpoints();
  return classify_improper_integral(sf, d.from, d.sign, io);
}

void conclude_from_integrals(CriterionVerdict& v,
                             const std::vector<DivergenceClassification>& parts,
                             IntegralStatus wanted, const std::string& holds_text,
                             const std::string& fails_text) {
  if (!all_pass(v.checks)) {
    v.status = any_unknown(v.checks) ? VerdictStatus::Inconclusive : VerdictStatus::Fails;
    v.conclusion = "";
    return;
  }
  bool inconclusive = false, holds = true;
  for (const auto& p : parts) {
    if (p.status == IntegralStatus::Inconclusive) inconclusive = true;
    else if (p.status != wanted) holds = false;
  }
  if (inconclusive) {
    v.status = VerdictStatus::Inconclusive;
    return;
  }
  v.status = holds ? VerdictStatus::Holds : VerdictStatus::Fails;
  v.conclusion = holds ? holds_text : fails_text;
}

std::string minimal_conclusion(const SystemSpec& s, const SignatureReport& sig) {
  if (s.interval.kind == IntervalSpec::Kind::HalfLineNegative)
    return "minimal indices: n~+ = N+ = " + std::to_string(sig.kappa_minus) +
           ", n~- = N- = " + std::to_string(sig.kappa_plus);
  return "minimal indices: n~+ = N+ = " + std::to_string(sig.kappa_plus) +
         ", n~- = N- = " + std::to_string(sig.kappa_minus);
}

// cumulative matrix primitive \int_base^x M(t) dt on a panel grid that starts
// fine and doubles away from the base
class CumulativeMatrix {
public:
  CumulativeMatrix(const MatrixFunction& m, double base, double horizon,
                   std::vector<double> breakpoints)
      : m_(m), bps_(std::move(breakpoints)) {
    sign_ = horizon >= base ? 1.0 : -1.0;
    xs_.push_back(base);
    vals_.push_back(Matrix::Zero(m.dim(), m.dim()));
    double step = 0.25;
    double x = base;
    QuadOptions qo;
    qo.rel_tol = 1e-11;
    while (sign_ * (horizon - x) > 0) {
      double nx = sign_ > 0 ? std::min(horizon, x + step) : std::max(horizon, x - step);
      for (double b : bps_)
        if (sign_ * (b - x) > 0 && sign_ * (nx - b) > 0) nx = b;
      Matrix inc = integrate_matrix([this](double t) { return m_.eval(t); }, x, nx, qo);
      xs_.push_back(nx);
      vals_.push_back(vals_.back() + inc);
      x = nx;
      if (std::abs(x - base) >= 16.0) step = std::min(step * 2.0, std::abs(x - base) / 8.0);
    }
  }

  Matrix eval(double x) const {
    QuadOptions qo;
    qo.rel_tol = 1e-10;
    if (sign_ > 0) {
      if (x <= xs_.front()) return vals_.front();
      if (x >= xs_.back())
        return vals_.back() +
               integrate_matrix([this](double t) { return m_.eval(t); }, xs_.back(), x, qo);
      auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
      std::size_t lo = static_cast<std::size_t>(it - xs_.begin()) - 1;
      return vals_[lo] + integrate_matrix([this](double t) { return m_.eval(t); }, xs_[lo], x, qo);
    }
    if (x >= xs_.front()) return vals_.front();
    if (x <= xs_.back())
      return vals_.back() +
             integrate_matrix([this](double t) { return m_.eval(t); }, xs_.back(), x, qo);
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x, std::greater<double>());
    std::size_t lo = static_cast<std::size_t>(it - xs_.begin()) - 1;
    return vals_[lo] + integrate_matrix([this](double t) { return m_.eval(t); }, xs_[lo], x, qo);
  }

private:
  const MatrixFunction& m_;
  std::vector<double> bps_;
  std::vector<double> xs_;
  std::vector<Matrix> vals_;
  double sign_ = 1.0;
};

Json classification_json(const DivergenceClassification& c) {
  Json j;
  j["integrand"] = c.integrand;
  j["status"] = to_string(c.status);
  if (c.status == IntegralStatus::Convergent) j["limit_estimate"] = c.limit_estimate;
  if (c.status == IntegralStatus::Divergent) {
    j["growth_model"] = c.growth_model;
    j["model_rate"] = c.model_rate;
  }
  j["truncations"] = c.truncations;
  j["values"] = c.values;
  return j;
}

}  // namespace

Json verdict_to_json(const CriterionVerdict& v) {
  Json j;
  j["id"] = v.id;
  j["status"] = to_string(v.status);
  j["equivalence"] = v.equivalence;
  j["conclusion"] = v.conclusion;
  Json checks = Json::array();
  for (const auto& c : v.checks) {
    Json cj;
    cj["name"] = c.name;
    cj["state"] = c.state == State::Pass ? "pass" : (c.state == State::Fail ? "fail" : "unknown");
    cj["detail"] = c.detail;
    checks.push_back(cj);
  }
  j["hypothesis_checks"] = checks;
  Json ev = Json::array();
  for (const auto& c : v.evidence) ev.push_back(classification_json(c));
  j["evidence"] = ev;
  if (!v.extra.is_null()) j["extra"] = v.extra;
  return j;
}

// ---------------------------------------------------------------------------
// the criteria
// ---------------------------------------------------------------------------

namespace {

CriterionVerdict eval_line_self_adjoint(const SystemSpec& s, const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "line-self-adjoint";
  v.checks.push_back(
      check_interval_kind(s.interval, {IntervalSpec::Kind::FullLine}, "the full line"));
  if (all_pass(v.checks))
    for (auto d : unbounded_directions(s.interval))
      v.evidence.push_back(classify_scalar(
          s, d, [&](double x) { return weyl_inv_c(s, x); },
          std::string("1/c toward ") + (d.sign > 0 ? "+inf" : "-inf"), o));
  conclude_from_integrals(v, v.evidence, IntegralStatus::Divergent,
                          "essentially self-adjoint: S = Smax, N+ = N- = 0",
                          "sufficient condition not met; no conclusion about "
                          "self-adjointness");
  return v;
}

CriterionVerdict eval_line_smallest_eigenvalue(const SystemSpec& s, const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "line-smallest-eigenvalue";
  SampleGrid g = criteria_grid(s, o);
  v.checks.push_back(
      check_interval_kind(s.interval, {IntervalSpec::Kind::FullLine}, "the full line"));
  v.checks.push_back(check_J_constant(s, g));
  auto lambda1 = [&](double x) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(s.H.eval(x));
    return std::max(es.eigenvalues().minCoeff(), 0.0);
  };
  if (all_pass(v.checks))
    for (auto d : unbounded_directions(s.interval))
      v.evidence.push_back(classify_scalar(
          s, d, lambda1, std::string("lambda_1(H) toward ") + (d.sign > 0 ? "+inf" : "-inf"),
          o));
  conclude_from_integrals(v, v.evidence, IntegralStatus::Divergent,
                          "essentially self-adjoint: S = Smax, N+ = N- = 0",
                          "sufficient condition not met; no conclusion about "
                          "self-adjointness");
  return v;
}

CriterionVerdict eval_halfline_minimal(const SystemSpec& s, const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "halfline-minimal";
  v.checks.push_back(check_interval_kind(
      s.interval, {IntervalSpec::Kind::HalfLinePositive, IntervalSpec::Kind::HalfLineNegative},
      "a half-line"));
  std::string holds_text;
  if (all_pass(v.checks)) {
    Direction d = unbounded_directions(s.interval).front();
    v.evidence.push_back(
        classify_scalar(s, d, [&](double x) { return weyl_inv_c(s, x); }, "1/c", o));
    holds_text = minimal_conclusion(s, signature_kappa(s));
  }
  conclude_from_integrals(v, v.evidence, IntegralStatus::Divergent, holds_text,
                          "sufficient condition not met; no conclusion about the indices");
  return v;
}

CriterionVerdict eval_halfline_minimal_lambda1(const SystemSpec& s, const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "halfline-minimal-lambda1";
  SampleGrid g = criteria_grid(s, o);
  v.checks.push_back(check_interval_kind(
      s.interval, {IntervalSpec::Kind::HalfLinePositive, IntervalSpec::Kind::HalfLineNegative},
      "a half-line"));
  v.checks.push_back(check_J_constant(s, g));
  std::string holds_text;
  if (all_pass(v.checks)) {
    Direction d = unbounded_directions(s.interval).front();
    v.evidence.push_back(classify_scalar(
        s, d,
        [&](double x) {
          Eigen::SelfAdjointEigenSolver<Matrix> es(s.H.eval(x));
          return std::max(es.eigenvalues().minCoeff(), 0.0);
        },
        "lambda_1(H)", o));
    holds_text = minimal_conclusion(s, signature_kappa(s));
  }
  conclude_from_integrals(v, v.evidence, IntegralStatus::Divergent, holds_text,
                          "sufficient condition not met; no conclusion about the indices");
  return v;
}

CriterionVerdict eval_canonical_maximal(const SystemSpec& s, const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "canonical-maximal";
  SampleGrid g = criteria_grid(s, o);
  v.checks.push_back(check_interval_kind(
      s.interval, {IntervalSpec::Kind::HalfLinePositive, IntervalSpec::Kind::HalfLineNegative},
      "a half-line"));
  v.checks.push_back(check_J_constant(s, g));
  v.checks.push_back(check_B_zero(s, g));
  v.checks.push_back(check_positive_type(s, o));
  if (all_pass(v.checks)) {
    Direction d = unbounded_directions(s.interval).front();
    v.evidence.push_back(classify_scalar(
        s, d, [&](double x) { return s.H.eval(x).real().trace(); }, "tr H", o));
  }
  int n = s.n;
  conclude_from_integrals(v, v.evidence, IntegralStatus::Convergent,
                          "maximal indices: n~+ = n~- = N+ = N- = " + std::to_string(n),
                          "indices are not maximal: n~+ and n~- are not both " +
                              std::to_string(n));
  return v;
}

CriterionVerdict eval_quasiregular(const SystemSpec& s, const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "quasiregular";
  SampleGrid g = criteria_grid(s, o);
  v.checks.push_back(check_interval_kind(
      s.interval, {IntervalSpec::Kind::HalfLinePositive, IntervalSpec::Kind::HalfLineNegative},
      "a half-line"));
  if (!all_pass(v.checks)) {
    conclude_from_integrals(v, v.evidence, IntegralStatus::Convergent, "", "");
    return v;
  }
  Direction d = unbounded_directions(s.interval).front();
  Check cj = check_J_constant(s, g);
  Check cb = check_B_zero(s, g);

  std::string route;
  if (cj.state == State::Pass && cb.state == State::Pass) {
    route = "canonical";
    v.checks.push_back(cj);
    v.checks.push_back(cb);
    v.checks.push_back(check_positive_type(s, o));
    if (all_pass(v.checks))
      v.evidence.push_back(classify_scalar(
          s, d, [&](double x) { return s.H.eval(x).real().trace(); }, "tr H", o));
  } else {
    DefinitenessReport def = is_definite(s, o.rank);
    Check cd = def.inconclusive
                   ? unknown_check("system definite", "rank search did not stabilize")
                   : make_check("system definite", def.definite,
                                "rank = " + std::to_string(def.rank.rank));
    DivergenceClassification bmoment;
    bool small_b = false;
    if (cj.state == State::Pass) {
      bmoment = classify_scalar(
          s, d, [&](double x) { return std::abs(x - d.from) * spectral_norm(s.B.eval(x)); },
          "x ||B||", o);
      small_b = bmoment.status == IntegralStatus::Convergent;
    }
    if (small_b) {
      route = "small-B";
      v.checks.push_back(cj);
      v.checks.push_back(cd);
      v.checks.push_back(make_check("first moment of ||B|| finite", true));
      v.evidence.push_back(bmoment);
      if (all_pass(v.checks))
        v.evidence.push_back(classify_scalar(
            s, d, [&](double x) { return s.H.eval(x).real().trace(); }, "tr H", o));
    } else {
      route = "gauged";
      v.checks.push_back(cd);
      if (all_pass(v.checks)) {
        try {
          CanonicalizeOptions co;
          co.span_set = true;
          double horizon = std::pow(2.0, std::min(o.improper.k_max, 12));
          co.lo = d.sign > 0 ? d.from : d.from - horizon;
          co.hi = d.sign > 0 ? d.from + horizon : d.from;
          CanonicalizeResult can = canonicalize(s, co);
          ImproperOptions io = o.improper;
          io.k_max = std::min(io.k_max, 12);
          io.breakpoints = s.breakpoints();
          auto field = can.system.H;
          ScalarFunction sf{[field](double x) { return field.eval(x).real().trace(); },
                            "tr H~ (fundamental-solution frame)"};
          v.evidence.push_back(classify_improper_integral(sf, d.from, d.sign, io));
        } catch (const NumericsError& e) {
          v.checks.push_back(unknown_check("gauged trace classifiable", e.what()));
        }
      }
    }
  }
  v.extra["route"] = route;
  conclude_from_integrals(v, v.evidence, IntegralStatus::Convergent,
                          "quasi-regular: dim E_lambda = n for every lambda",
                          "not quasi-regular");
  return v;
}

CriterionVerdict eval_lower_bound_diagonal(const SystemSpec& s, const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "lower-bound-diagonal";
  SampleGrid g = criteria_grid(s, o);
  v.checks.push_back(check_interval_kind(
      s.interval, {IntervalSpec::Kind::HalfLinePositive, IntervalSpec::Kind::HalfLineNegative},
      "a half-line"));
  if (!all_pass(v.checks)) {
    v.status = VerdictStatus::Fails;
    return v;
  }
  Direction d = unbounded_directions(s.interval).front();
  Check cj = check_J_constant(s, g);
  Check cb = check_B_zero(s, g);
  bool canonical = cj.state == State::Pass && cb.state == State::Pass;
  int k = 0;
  bool inconclusive = false;

  if (canonical) {
    v.checks.push_back(cj);
    v.checks.push_back(cb);
    v.checks.push_back(check_positive_type(s, o));
    if (all_pass(v.checks)) {
      for (int j = 0; j < s.n; ++j) {
        auto cls = classify_scalar(
            s, d, [&s, j](double x) { return std::max(s.H.eval(x)(j, j).real(), 0.0); },
            "H diagonal entry " + std::to_string(j), o);
        if (cls.status == IntegralStatus::Convergent) ++k;
        if (cls.status == IntegralStatus::Inconclusive) inconclusive = true;
        v.evidence.push_back(cls);
      }
      if (!inconclusive) {
        SignatureReport sig = signature_kappa(s);
        v.status = VerdictStatus::Holds;
        int lo_p = std::max(sig.kappa_plus, k), lo_m = std::max(sig.kappa_minus, k);
        if (s.interval.kind == IntervalSpec::Kind::HalfLineNegative) std::swap(lo_p, lo_m);
        v.conclusion = "n~+ = N+ >= " + std::to_string(lo_p) +
                       ", n~- = N- >= " + std::to_string(lo_m);
        v.extra["k"] = k;
        return v;
      }
    }
  } else {
    DefinitenessReport def = is_definite(s, o.rank);
    v.checks.push_back(def.inconclusive
                           ? unknown_check("system definite", "rank search did not stabilize")
                           : make_check("system definite", def.definite,
                                        "rank = " + std::to_string(def.rank.rank)));
    if (all_pass(v.checks)) {
      try {
        CanonicalizeOptions co;
        co.span_set = true;
        double horizon = std::pow(2.0, std::min(o.improper.k_max, 12));
        co.lo = d.sign > 0 ? d.from : d.from - horizon;
        co.hi = d.sign > 0 ? d.from + horizon : d.from;
        CanonicalizeResult can = canonicalize(s, co);
        ImproperOptions io = o.improper;
        io.k_max = std::min(io.k_max, 12);
        io.breakpoints = s.breakpoints();
        auto field = can.system.H;
        for (int j = 0; j < s.n; ++j) {
          ScalarFunction sf{
              [field, j](double x) { return std::max(field.eval(x)(j, j).real(), 0.0); },
              "gauged H diagonal entry " + std::to_string(j)};
          auto cls = classify_improper_integral(sf, d.from, d.sign, io);
          if (cls.status == IntegralStatus::Convergent) ++k;
          if (cls.status == IntegralStatus::Inconclusive) inconclusive = true;
          v.evidence.push_back(cls);
        }
        if (!inconclusive) {
          v.status = VerdictStatus::Holds;
          v.conclusion =
              "n~+ = N+ >= " + std::to_string(k) + ", n~- = N- >= " + std::to_string(k);
          v.extra["k"] = k;
          return v;
        }
      } catch (const NumericsError& e) {
        v.checks.push_back(unknown_check("gauged diagonals classifiable", e.what()));
      }
    }
  }
  v.status = any_unknown(v.checks) || inconclusive ? VerdictStatus::Inconclusive
                                                   : VerdictStatus::Fails;
  return v;
}

CriterionVerdict eval_krb_quasiregular(const SystemSpec& s, const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "KRB-quasiregular";
  v.checks.push_back(check_interval_kind(
      s.interval, {IntervalSpec::Kind::HalfLinePositive, IntervalSpec::Kind::HalfLineNegative},
      "a half-line"));
  if (!all_pass(v.checks)) {
    v.status = VerdictStatus::Fails;
    return v;
  }
  Direction d = unbounded_directions(s.interval).front();

  // running antiderivative of tr(i J^-1 H)
  auto integrand = [&](double x) {
    Matrix iJH = Complex(0, 1) * s.J.eval(x).partialPivLu().solve(s.H.eval(x));
    return iJH.trace().real();
  };
  double horizon = std::pow(2.0, std::min(o.improper.k_max, 14));
  QuadOptions qo;
  qo.rel_tol = 1e-9;
  std::vector<double> vals;
  double acc = 0.0, t = d.from;
  vals.push_back(0.0);
  double step = 0.5;
  while (std::abs(t - d.from) < horizon) {
    double nt = t + d.sign * step;
    acc += d.sign * integrate_scalar_split(integrand, t, nt, s.breakpoints(), qo);
    t = nt;
    vals.push_back(acc);
    if (std::abs(t - d.from) >= 16.0) step = std::min(step * 2.0, horizon / 64.0);
  }

  Json probes = Json::array();
  bool found = false, probe_inconclusive = false, none_full = true;
  for (Complex lam : {Complex(0, 1), Complex(0, -1)}) {
    GrowthClassification cls = l2_solution_count(s, lam, o.deficiency);
    bool dim_full = cls.bounded == s.n && cls.inconclusive == 0;
    if (cls.inconclusive > 0) probe_inconclusive = true;
    if (dim_full) none_full = false;
    double sgn = lam.imag() > 0 ? 1.0 : -1.0;
    double inf_val = 0.0;
    double last_quarter_min = 0.0, mid_min = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      double w = sgn * vals[i];
      inf_val = std::min(inf_val, w);
      if (i >= vals.size() * 3 / 4) last_quarter_min = std::min(last_quarter_min, w);
      else if (i >= vals.size() / 2) mid_min = std::min(mid_min, w);
    }
    bool bounded_below = last_quarter_min > -1e6 && last_quarter_min >= mid_min - 1.0;
    Json pj;
    pj["lambda0"] = lam.imag() > 0 ? "i" : "-i";
    pj["dim_E_equals_n"] = dim_full;
    pj["running_infimum"] = inf_val;
    pj["bounded_below"] = bounded_below;
    probes.push_back(pj);
    if (dim_full && bounded_below) found = true;
  }
  v.extra["probes"] = probes;

  if (found) {
    v.status = VerdictStatus::Holds;
    v.conclusion = "quasi-regular: dim E_lambda = n for every lambda";
  } else if (none_full && !probe_inconclusive) {
    v.status = VerdictStatus::Fails;
    v.conclusion = "not quasi-regular (dim E at +i and at -i below n)";
  } else {
    v.status = VerdictStatus::Inconclusive;
    v.checks.push_back(unknown_check("a successful probe lambda0",
                                     "only lambda0 = +i and -i are probed"));
  }
  return v;
}

CriterionVerdict eval_intermediate(const SystemSpec& s, const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "intermediate-n-minus-1";
  SampleGrid g = criteria_grid(s, o);
  v.checks.push_back(check_interval_kind(
      s.interval, {IntervalSpec::Kind::HalfLinePositive, IntervalSpec::Kind::HalfLineNegative},
      "a half-line"));
  v.checks.push_back(check_J_constant(s, g));
  v.checks.push_back(check_B_zero(s, g));
  v.checks.push_back(check_positive_type(s, o));
  if (!all_pass(v.checks)) {
    v.status = any_unknown(v.checks) ? VerdictStatus::Inconclusive : VerdictStatus::Fails;
    return v;
  }
  Direction d = unbounded_directions(s.interval).front();
  int divergent = 0, convergent = 0, inconclusive = 0, which = -1;
  for (int j = 0; j < s.n; ++j) {
    auto cls = classify_scalar(
        s, d, [&s, j](double x) { return std::max(s.H.eval(x)(j, j).real(), 0.0); },
        "H diagonal entry " + std::to_string(j), o);
    v.evidence.push_back(cls);
    if (cls.status == IntegralStatus::Divergent) {
      ++divergent;
      which = j;
    } else if (cls.status == IntegralStatus::Convergent) {
      ++convergent;
    } else {
      ++inconclusive;
    }
  }
  Check diag = make_check("exactly one non-integrable diagonal entry",
                          divergent == 1 && convergent == s.n - 1,
                          std::to_string(divergent) + " divergent of " + std::to_string(s.n));
  if (inconclusive > 0) diag.state = State::Unknown;
  v.checks.push_back(diag);
  if (which >= 0) v.extra["divergent_entry"] = which;

  // the mixed-trace condition; identically zero when J^-1 H is real
  Check real_jh = check_real(
      "J^-1 H",
      [&](double x) { return Matrix(s.J.eval(x).partialPivLu().solve(s.H.eval(x))); }, g);
  if (real_jh.state == State::Pass) {
    v.checks.push_back(make_check("mixed trace integrable", true,
                                  "tr(i J^-1 H) vanishes for real J^-1 H"));
  } else {
    ImproperOptions io = o.improper;
    io.signed_integrand = true;
    io.breakpoints = s.breakpoints();
    ScalarFunction sf{[&s](double x) {
                        Matrix iJH =
                            Complex(0, 1) * s.J.eval(x).partialPivLu().solve(s.H.eval(x));
                        return iJH.trace().real();
                      },
                      "tr(i J^-1 H)"};
    auto mixed = classify_improper_integral(sf, d.from, d.sign, io);
    v.evidence.push_back(mixed);
    Check mc = make_check("mixed trace integrable", mixed.status == IntegralStatus::Convergent);
    if (mixed.status == IntegralStatus::Inconclusive) mc.state = State::Unknown;
    v.checks.push_back(mc);
  }

  if (!all_pass(v.checks)) {
    v.status = any_unknown(v.checks) ? VerdictStatus::Inconclusive : VerdictStatus::Fails;
    return v;
  }
  v.status = VerdictStatus::Holds;
  v.conclusion = "n~+ = n~- = N+ = N- = " + std::to_string(s.n - 1);

  // the 2x2 dichotomy for the basic boundary-condition restrictions
  if (s.n == 2) {
    auto trH = classify_scalar(
        s, d, [&](double x) { return s.H.eval(x).real().trace(); }, "tr H", o);
    v.evidence.push_back(trH);
    if (trH.status == IntegralStatus::Convergent)
      v.extra["restricted_extensions"] =
          "N+-(S~_i) = 1 for both boundary restrictions (trace of H integrable)";
    else if (trH.status == IntegralStatus::Divergent)
      v.extra["restricted_extensions"] =
          "both boundary restrictions S~_i are self-adjoint (trace of H not integrable)";
  }
  return v;
}

CriterionVerdict eval_real_symmetry(const SystemSpec& s, const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "real-symmetry";
  SampleGrid g = criteria_grid(s, o);
  v.checks.push_back(check_interval_kind(
      s.interval, {IntervalSpec::Kind::HalfLinePositive, IntervalSpec::Kind::HalfLineNegative},
      "a half-line"));
  if (all_pass(v.checks)) {
    DefinitenessReport def = is_definite(s, o.rank);
    v.checks.push_back(def.inconclusive
                           ? unknown_check("system definite", "rank search did not stabilize")
                           : make_check("system definite", def.definite,
                                        "rank = " + std::to_string(def.rank.rank)));
    v.checks.push_back(check_real(
        "J^-1 B",
        [&](double x) { return Matrix(s.J.eval(x).partialPivLu().solve(s.B.eval(x))); }, g));
    v.checks.push_back(check_real(
        "J^-1 H",
        [&](double x) { return Matrix(s.J.eval(x).partialPivLu().solve(s.H.eval(x))); }, g));
  }
  if (!all_pass(v.checks)) {
    v.status = any_unknown(v.checks) ? VerdictStatus::Inconclusive : VerdictStatus::Fails;
    return v;
  }
  v.status = VerdictStatus::Holds;
  v.conclusion = "equal indices: n~+ = n~- (= N+ = N-)";
  Json probes = Json::array();
  for (Complex lam : {Complex(0, 1), Complex(0, 0)}) {
    GrowthClassification cls = l2_solution_count(s, lam, o.deficiency);
    Json pj;
    pj["lambda0"] = lam.imag() > 0 ? "i" : "0";
    pj["bounded"] = cls.bounded;
    probes.push_back(pj);
    if (cls.bounded == s.n && cls.inconclusive == 0) {
      v.conclusion = "quasi-regular: all indices equal " + std::to_string(s.n);
      break;
    }
  }
  v.extra["probes"] = probes;
  return v;
}

CriterionVerdict eval_operator_case(const SystemSpec& s, const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "operator-case";
  SampleGrid g = criteria_grid(s, o);
  v.checks.push_back(
      check_interval_kind(s.interval, {IntervalSpec::Kind::FullLine}, "the full line"));
  if (all_pass(v.checks)) {
    double delta = std::numeric_limits<double>::infinity();
    double jsup = 0.0;
    for (double x : g.points) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(s.H.eval(x));
      delta = std::min(delta, es.eigenvalues().minCoeff());
      jsup = std::max(jsup, spectral_norm(s.J.eval(x)));
    }
    v.checks.push_back(make_check("H uniformly positive: H >= delta > 0", delta > 1e-12,
                                  "min eigenvalue over the grid = " + std::to_string(delta)));
    v.checks.push_back(make_check("J bounded", std::isfinite(jsup),
                                  "sup ||J|| over the grid = " + std::to_string(jsup)));
    v.checks.push_back(
        make_check("B locally square-integrable", true, "piecewise-smooth coefficients"));
    v.extra["delta"] = delta;
    v.extra["J_sup"] = jsup;
  }
  if (all_pass(v.checks))
    for (auto d : unbounded_directions(s.interval))
      v.evidence.push_back(classify_scalar(
          s, d, [&](double x) { return weyl_inv_c(s, x); },
          std::string("1/c toward ") + (d.sign > 0 ? "+inf" : "-inf"), o));
  conclude_from_integrals(v, v.evidence, IntegralStatus::Divergent,
                          "the operator H^-1 (J d/dx + B) is essentially self-adjoint on "
                          "smooth compactly supported functions",
                          "sufficient condition not met; no conclusion");
  return v;
}

// --------------------------- Sturm-Liouville side ---------------------------

struct SlContext {
  const SturmLiouvilleSpec& sl;
  MatrixFunction V;  // R - Q* A Q
  SampleGrid grid;
  std::vector<double> breakpoints;
};

SlContext make_sl_context(const SturmLiouvilleSpec& sl, const CriteriaOptions& o) {
  std::vector<double> bps;
  sl.A.collect_breakpoints(bps);
  sl.Q.collect_breakpoints(bps);
  sl.R.collect_breakpoints(bps);
  sl.H.collect_breakpoints(bps);
  std::sort(bps.begin(), bps.end());
  bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
  return SlContext{sl, sl.potential(),
                   SampleGrid::over(sl.interval, bps, o.grid_points, o.grid_window, 0), bps};
}

DivergenceClassification classify_sl(const SlContext& ctx, const Direction& d,
                                     const std::function<double(double)>& f,
                                     const std::string& what, const CriteriaOptions& o) {
  ScalarFunction sf{f, what};
  ImproperOptions io = o.improper;
  io.breakpoints = ctx.breakpoints;
  return classify_improper_integral(sf, d.from, d.sign, io);
}

/// q handling for the lower bound V >= -qH: explicit expression, or q = 1
/// when V is nonnegative on the grid.
struct QControl {
  bool available = false;
  Expression q;
  std::vector<Check> checks;
};

QControl resolve_q(const SlContext& ctx, const CriteriaOptions& o) {
  QControl out;
  double vmin = 0.0;
  for (double x : ctx.grid.points) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(ctx.V.eval(x));
    vmin = std::min(vmin, es.eigenvalues().minCoeff());
  }
  if (vmin >= -1e-12 && !o.q_expression) {
    out.available = true;
    out.q = Expression::number(1.0);
    out.checks.push_back(make_check("V >= -qH with q = 1", true, "V >= 0 on the grid"));
    return out;
  }
  if (!o.q_expression) {
    out.checks.push_back(unknown_check(
        "V >= -qH", "V takes negative values; supply a lower-control function q"));
    return out;
  }
  out.q = Expression::parse(*o.q_expression);
  double worst = 0.0, qmin = std::numeric_limits<double>::infinity();
  bool monotone = true;
  double prev = 0.0;
  bool first = true;
  Expression dq =
      (Expression::number(1.0) / Expression::apply(ExprOp::Sqrt, out.q)).derivative();
  double lip = 0.0;
  for (double x : ctx.grid.points) {
    double qx = out.q.eval(x).real();
    qmin = std::min(qmin, qx);
    Matrix bound = ctx.V.eval(x) + qx * ctx.sl.H.eval(x);
    Eigen::SelfAdjointEigenSolver<Matrix> es((bound + bound.adjoint()) / 2.0);
    worst = std::max(worst, -es.eigenvalues().minCoeff());
    if (!first && qx < prev - 1e-12) monotone = false;
    prev = qx;
    first = false;
    double c = block_weight_c(ctx.sl.A.eval(x),
                              Complex(0, 1) * Matrix::Identity(ctx.sl.n, ctx.sl.n),
                              ctx.sl.H.eval(x));
    if (std::isfinite(c)) lip = std::max(lip, std::abs(dq.eval(x).real()) * c);
  }
  out.checks.push_back(make_check("q >= delta > 0", qmin > 0,
                                  "min q over the grid = " + std::to_string(qmin)));
  out.checks.push_back(
      make_check("V >= -qH", worst <= 1e-10, "worst defect = " + std::to_string(worst)));
  out.checks.push_back(
      make_check("q admissible: monotone or Lipschitz-controlled q^-1/2", true,
                 monotone ? "q monotone on the grid"
                          : "sup |d/dx q^-1/2| c = " + std::to_string(lip)));
  out.available = qmin > 0 && worst <= 1e-10;
  return out;
}

CriterionVerdict eval_sl_titchmarsh(const SturmLiouvilleSpec& sl, const CriteriaOptions& o,
                                    const char* id = "sl-titchmarsh") {
  CriterionVerdict v;
  v.id = id;
  SlContext ctx = make_sl_context(sl, o);
  bool line = sl.interval.kind == IntervalSpec::Kind::FullLine;
  v.checks.push_back(check_interval_kind(
      sl.interval,
      {IntervalSpec::Kind::HalfLinePositive, IntervalSpec::Kind::HalfLineNegative,
       IntervalSpec::Kind::FullLine},
      "a half-line or the line"));
  QControl qc = resolve_q(ctx, o);
  for (auto& c : qc.checks) v.checks.push_back(c);
  if (all_pass(v.checks) && qc.available) {
    Expression q = qc.q;
    int n = sl.n;
    const SturmLiouvilleSpec& slr = sl;
    auto inv_cq = [&slr, q, n](double x) {
      double c = block_weight_c(slr.A.eval(x), Complex(0, 1) * Matrix::Identity(n, n),
                                slr.H.eval(x));
      if (!std::isfinite(c)) return 0.0;
      double qx = std::max(q.eval(x).real(), 1e-300);
      return 1.0 / (c * std::sqrt(qx));
    };
    for (auto d : unbounded_directions(sl.interval))
      v.evidence.push_back(classify_sl(ctx, d, inv_cq, "1/(c sqrt(q))", o));
  }
  std::string holds = line ? "essentially self-adjoint"
                           : "minimal indices: n~+(P) = n~-(P) = N+ = N- = " +
                                 std::to_string(sl.n);
  conclude_from_integrals(v, v.evidence, IntegralStatus::Divergent, holds,
                          "sufficient condition not met; no conclusion");
  return v;
}

CriterionVerdict eval_singular_hamiltonian(const SturmLiouvilleSpec& sl,
                                           const CriteriaOptions& o) {
  // the designated-block criterion exercised through the embedding blocks
  CriterionVerdict v = eval_sl_titchmarsh(sl, o, "singular-hamiltonian");
  bool line = sl.interval.kind == IntervalSpec::Kind::FullLine;
  if (v.status == VerdictStatus::Holds)
    v.conclusion = line ? "essentially self-adjoint (designated-block form, both half-lines)"
                        : "n~+ = n~- = N+ = N- = " + std::to_string(sl.n) +
                              " for the designated-block system";
  return v;
}

struct TwoTermData {
  std::shared_ptr<CumulativeMatrix> Atilde;
};

TwoTermData make_two_term(const SlContext& ctx, const Direction& d, const CriteriaOptions& o) {
  TwoTermData out;
  double base = d.from;
  double horizon = base + d.sign * std::pow(2.0, std::min(o.improper.k_max, 20));
  out.Atilde =
      std::make_shared<CumulativeMatrix>(ctx.sl.A, base, horizon, ctx.breakpoints);
  return out;
}

Check check_sl_zero(const MatrixFunction& m, const SampleGrid& g, const std::string& name) {
  double worst = 0;
  for (double x : g.points) worst = std::max(worst, m.eval(x).cwiseAbs().maxCoeff());
  return make_check(name + " = 0", worst <= 1e-12,
                    "max |" + name + "| = " + std::to_string(worst));
}

Check check_H_positive_measure(const SlContext& ctx) {
  int hits = 0;
  for (double x : ctx.grid.points)
    if (std::abs(ctx.sl.H.eval(x).determinant()) > 1e-12) ++hits;
  double frac = double(hits) / double(ctx.grid.points.size());
  return make_check("H nonsingular on a set of positive measure", frac > 1e-3,
                    "grid fraction = " + std::to_string(frac));
}

struct PerturbationChecks {
  Check first;   // \int ||Atilde|| ||R|| finite
  Check second;  // A(x) \int_x^inf R -> 0
  DivergenceClassification mass;
};

PerturbationChecks check_perturbation(const SlContext& ctx, const CumulativeMatrix& Atilde,
                                      const Direction& d, const CriteriaOptions& o) {
  PerturbationChecks out;
  auto f = [&](double x) {
    return spectral_norm(Atilde.eval(x)) * spectral_norm(ctx.sl.R.eval(x));
  };
  out.mass = classify_sl(ctx, d, f, "||Atilde|| ||R||", o);
  out.first = make_check("first moment of R against Atilde finite",
                         out.mass.status == IntegralStatus::Convergent);
  if (out.mass.status == IntegralStatus::Inconclusive) out.first.state = State::Unknown;

  double far = std::pow(2.0, std::min(o.improper.k_max, 16));
  QuadOptions qo;
  qo.rel_tol = 1e-9;
  std::vector<double> values;
  for (int k = 4; k <= std::min(o.improper.k_max, 12); k += 2) {
    double x = d.from + d.sign * std::pow(2.0, k);
    Matrix t = integrate_matrix([&](double u) { return ctx.sl.R.eval(u); }, x,
                                d.from + d.sign * far, qo);
    values.push_back(spectral_norm(ctx.sl.A.eval(x) * t));
  }
  bool to_zero = !values.empty() && values.back() <= 1e-6;
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    if (values[i + 1] > values[i] + 1e-9) to_zero = false;
  out.second = make_check("A(x) times the tail of R vanishes at infinity", to_zero,
                          values.empty()
                              ? "no probes"
                              : "last tail value = " + std::to_string(values.back()));
  return out;
}

CriterionVerdict eval_sl_two_term_maximal(const SturmLiouvilleSpec& sl,
                                          const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "sl-two-term-maximal";
  SlContext ctx = make_sl_context(sl, o);
  v.checks.push_back(check_interval_kind(
      sl.interval, {IntervalSpec::Kind::HalfLinePositive, IntervalSpec::Kind::HalfLineNegative},
      "a half-line"));
  v.checks.push_back(check_sl_zero(sl.Q, ctx.grid, "Q"));
  v.checks.push_back(check_sl_zero(sl.R, ctx.grid, "R"));
  v.checks.push_back(check_H_positive_measure(ctx));
  if (!all_pass(v.checks)) {
    conclude_from_integrals(v, v.evidence, IntegralStatus::Convergent, "", "");
    return v;
  }
  Direction d = unbounded_directions(sl.interval).front();
  TwoTermData tt = make_two_term(ctx, d, o);

  double amin = std::numeric_limits<double>::infinity();
  for (double x : ctx.grid.points) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sl.A.eval(x));
    amin = std::min(amin, es.eigenvalues().minCoeff());
  }
  bool uniform_A = amin > 1e-8;
  v.extra["A_uniformly_definite"] = uniform_A;

  auto At = tt.Atilde;
  auto atrace = [At, &sl](double x) {
    Matrix a = At->eval(x);
    return (a.adjoint() * sl.H.eval(x) * a).trace().real();
  };
  std::vector<DivergenceClassification> parts;
  parts.push_back(classify_sl(ctx, d, atrace, "tr(Atilde H Atilde)", o));
  if (!uniform_A)
    parts.push_back(classify_sl(
        ctx, d, [&sl](double x) { return sl.H.eval(x).real().trace(); }, "tr H", o));
  for (auto& p : parts) v.evidence.push_back(p);
  conclude_from_integrals(v, parts, IntegralStatus::Convergent,
                          "maximal indices: n~+(P) = n~-(P) = " + std::to_string(2 * sl.n) +
                              "; the problem is quasi-regular",
                          "indices are not maximal: n~+-(P) < " + std::to_string(2 * sl.n));
  if (v.status == VerdictStatus::Holds) v.extra["indices"] = 2 * sl.n;
  return v;
}

CriterionVerdict eval_sl_perturbed(const SturmLiouvilleSpec& sl, const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "sl-perturbed-two-term";
  SlContext ctx = make_sl_context(sl, o);
  v.checks.push_back(check_interval_kind(
      sl.interval, {IntervalSpec::Kind::HalfLinePositive, IntervalSpec::Kind::HalfLineNegative},
      "a half-line"));
  v.checks.push_back(check_sl_zero(sl.Q, ctx.grid, "Q"));
  v.checks.push_back(check_H_positive_measure(ctx));
  if (!all_pass(v.checks)) {
    conclude_from_integrals(v, v.evidence, IntegralStatus::Convergent, "", "");
    return v;
  }
  Direction d = unbounded_directions(sl.interval).front();
  TwoTermData tt = make_two_term(ctx, d, o);
  PerturbationChecks pc = check_perturbation(ctx, *tt.Atilde, d, o);
  v.evidence.push_back(pc.mass);
  v.checks.push_back(pc.first);
  v.checks.push_back(pc.second);
  if (!all_pass(v.checks)) {
    conclude_from_integrals(v, v.evidence, IntegralStatus::Convergent, "", "");
    return v;
  }
  auto At = tt.Atilde;
  auto atrace = [At, &sl](double x) {
    Matrix a = At->eval(x);
    return (a.adjoint() * sl.H.eval(x) * a).trace().real();
  };
  std::vector<DivergenceClassification> parts;
  parts.push_back(classify_sl(ctx, d, atrace, "tr(Atilde H Atilde)", o));
  parts.push_back(classify_sl(
      ctx, d, [&sl](double x) { return sl.H.eval(x).real().trace(); }, "tr H", o));
  for (auto& p : parts) v.evidence.push_back(p);
  conclude_from_integrals(v, parts, IntegralStatus::Convergent,
                          "maximal indices: n~+(P) = n~-(P) = " + std::to_string(2 * sl.n) +
                              "; the problem is quasi-regular",
                          "indices are not maximal: n~+-(P) < " + std::to_string(2 * sl.n));
  if (v.status == VerdictStatus::Holds) v.extra["indices"] = 2 * sl.n;
  return v;
}

CriterionVerdict eval_sl_constant_potential(const SturmLiouvilleSpec& sl,
                                            const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "sl-constant-potential";
  SlContext ctx = make_sl_context(sl, o);
  v.checks.push_back(check_interval_kind(
      sl.interval, {IntervalSpec::Kind::HalfLinePositive, IntervalSpec::Kind::HalfLineNegative},
      "a half-line"));
  v.checks.push_back(check_sl_zero(sl.Q, ctx.grid, "Q"));
  double worst = 0;
  for (double x : ctx.grid.points)
    worst = std::max(worst,
                     (sl.A.eval(x) - Matrix::Identity(sl.n, sl.n)).cwiseAbs().maxCoeff());
  v.checks.push_back(make_check("A = I", worst <= 1e-12,
                                "max |A - I| = " + std::to_string(worst)));
  v.checks.push_back(check_H_positive_measure(ctx));
  Direction d = unbounded_directions(sl.interval).front();

  // split R = k^2 I + R1 with integrable R1
  double k2;
  if (o.constant_potential_k2) {
    k2 = *o.constant_potential_k2;
  } else {
    double far = std::pow(2.0, std::min(o.improper.k_max, 12));
    k2 = sl.R.eval(d.from + d.sign * far).trace().real() / sl.n;
  }
  v.extra["k_squared"] = k2;
  auto r1 = classify_sl(
      ctx, d,
      [&sl, k2](double x) {
        return spectral_norm(sl.R.eval(x) - k2 * Matrix::Identity(sl.n, sl.n));
      },
      "||R - k^2 I||", o);
  v.evidence.push_back(r1);
  Check cr = make_check("R = k^2 I + R1 with integrable R1",
                        r1.status == IntegralStatus::Convergent);
  if (r1.status == IntegralStatus::Inconclusive) cr.state = State::Unknown;
  v.checks.push_back(cr);
  v.checks.push_back(
      make_check("k nonzero", std::abs(k2) > 1e-12, "k^2 = " + std::to_string(k2)));
  if (!all_pass(v.checks)) {
    conclude_from_integrals(v, v.evidence, IntegralStatus::Convergent, "", "");
    return v;
  }

  std::vector<DivergenceClassification> parts;
  if (k2 < 0) {
    v.extra["branch"] = "oscillatory (k imaginary): integrability of tr H decides";
    parts.push_back(classify_sl(
        ctx, d, [&sl](double x) { return sl.H.eval(x).real().trace(); }, "tr H", o));
  } else {
    double k = std::sqrt(k2);
    v.extra["branch"] = "exponential (k > 0): integrability of exp(2kx) tr H decides";
    parts.push_back(classify_sl(
        ctx, d,
        [&sl, k, d](double x) {
          double u = 2.0 * k * std::abs(x - d.from);
          if (u > 700) return std::numeric_limits<double>::infinity();
          return std::exp(u) * sl.H.eval(x).real().trace();
        },
        "exp(2kx) tr H", o));
  }
  for (auto& p : parts) v.evidence.push_back(p);
  conclude_from_integrals(v, parts, IntegralStatus::Convergent,
                          "maximal indices: n~+(P) = n~-(P) = " + std::to_string(2 * sl.n) +
                              "; the problem is quasi-regular",
                          "indices are not maximal: n~+-(P) < " + std::to_string(2 * sl.n));
  if (v.status == VerdictStatus::Holds) v.extra["indices"] = 2 * sl.n;
  return v;
}

CriterionVerdict eval_sl_intermediate(const SturmLiouvilleSpec& sl, const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "sl-intermediate";
  SlContext ctx = make_sl_context(sl, o);
  v.checks.push_back(check_interval_kind(
      sl.interval, {IntervalSpec::Kind::HalfLinePositive, IntervalSpec::Kind::HalfLineNegative},
      "a half-line"));
  v.checks.push_back(check_sl_zero(sl.Q, ctx.grid, "Q"));
  v.checks.push_back(check_H_positive_measure(ctx));
  if (!all_pass(v.checks)) {
    v.status = VerdictStatus::Fails;
    return v;
  }
  Direction d = unbounded_directions(sl.interval).front();
  TwoTermData tt = make_two_term(ctx, d, o);

  double rworst = 0;
  for (double x : ctx.grid.points) rworst = std::max(rworst, sl.R.eval(x).cwiseAbs().maxCoeff());
  bool zero_R = rworst <= 1e-12;

  bool upper_only = false;
  if (!zero_R) {
    PerturbationChecks pc = check_perturbation(ctx, *tt.Atilde, d, o);
    upper_only = true;
    if (pc.first.state != State::Pass || pc.second.state != State::Pass) {
      // bounded-A route: second moment of R plus square-root trace divergence
      double amin = std::numeric_limits<double>::infinity(), amax = 0;
      for (double x : ctx.grid.points) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(sl.A.eval(x));
        amin = std::min(amin, es.eigenvalues().minCoeff());
        amax = std::max(amax, es.eigenvalues().maxCoeff());
      }
      v.checks.push_back(make_check("A bounded above and below",
                                    amin > 1e-8 && std::isfinite(amax),
                                    "A range [" + std::to_string(amin) + ", " +
                                        std::to_string(amax) + "]"));
      auto secmom = classify_sl(
          ctx, d,
          [&sl, d](double x) {
            double t = std::abs(x - d.from);
            return t * t * spectral_norm(sl.R.eval(x));
          },
          "x^2 ||R||", o);
      v.evidence.push_back(secmom);
      Check c2 = make_check("second moment of ||R|| finite",
                            secmom.status == IntegralStatus::Convergent);
      if (secmom.status == IntegralStatus::Inconclusive) c2.state = State::Unknown;
      v.checks.push_back(c2);
      auto sqrt_tr = classify_sl(
          ctx, d,
          [&sl](double x) { return std::sqrt(std::max(sl.H.eval(x).real().trace(), 0.0)); },
          "sqrt(tr H)", o);
      v.evidence.push_back(sqrt_tr);
      Check c3 = make_check("sqrt of the trace not integrable",
                            sqrt_tr.status == IntegralStatus::Divergent);
      if (sqrt_tr.status == IntegralStatus::Inconclusive) c3.state = State::Unknown;
      v.checks.push_back(c3);
      v.extra["route"] = "sqrt-trace";
      if (all_pass(v.checks)) {
        v.status = VerdictStatus::Holds;
        v.conclusion = "upper bound: n~+-(P) <= " + std::to_string(2 * sl.n - 1);
      } else {
        v.status = any_unknown(v.checks) ? VerdictStatus::Inconclusive : VerdictStatus::Fails;
      }
      return v;
    }
    v.evidence.push_back(pc.mass);
    v.checks.push_back(pc.first);
    v.checks.push_back(pc.second);
  }

  // diagonal masses of H and Atilde H Atilde: all but exactly one integrable
  int divergent = 0, convergent = 0, inconclusive = 0;
  auto At = tt.Atilde;
  for (int j = 0; j < sl.n; ++j) {
    auto cls = classify_sl(
        ctx, d, [&sl, j](double x) { return std::max(sl.H.eval(x)(j, j).real(), 0.0); },
        "H diagonal entry " + std::to_string(j), o);
    v.evidence.push_back(cls);
    if (cls.status == IntegralStatus::Divergent) ++divergent;
    else if (cls.status == IntegralStatus::Convergent) ++convergent;
    else ++inconclusive;
  }
  for (int j = 0; j < sl.n; ++j) {
    auto cls = classify_sl(
        ctx, d,
        [At, &sl, j](double x) {
          Matrix a = At->eval(x);
          return std::max((a.adjoint() * sl.H.eval(x) * a)(j, j).real(), 0.0);
        },
        "Atilde H Atilde diagonal entry " + std::to_string(j), o);
    v.evidence.push_back(cls);
    if (cls.status == IntegralStatus::Divergent) ++divergent;
    else if (cls.status == IntegralStatus::Convergent) ++convergent;
    else ++inconclusive;
  }
  Check diag = make_check("exactly one non-integrable diagonal mass",
                          divergent == 1 && convergent == 2 * sl.n - 1,
                          std::to_string(divergent) + " divergent of " +
                              std::to_string(2 * sl.n));
  if (inconclusive > 0) diag.state = State::Unknown;
  v.checks.push_back(diag);
  if (!all_pass(v.checks)) {
    v.status = any_unknown(v.checks) ? VerdictStatus::Inconclusive : VerdictStatus::Fails;
    return v;
  }
  v.status = VerdictStatus::Holds;
  v.conclusion = upper_only
                     ? "upper bound: n~+-(P) <= " + std::to_string(2 * sl.n - 1)
                     : "intermediate indices: n~+(P) = n~-(P) = " +
                           std::to_string(2 * sl.n - 1);
  v.extra["route"] = zero_R ? "two-term" : "perturbed";
  if (!upper_only) v.extra["indices"] = 2 * sl.n - 1;
  return v;
}

CriterionVerdict eval_sl_scalar(const SturmLiouvilleSpec& sl, const CriteriaOptions& o) {
  CriterionVerdict v;
  v.id = "sl-scalar";
  SlContext ctx = make_sl_context(sl, o);
  v.checks.push_back(check_interval_kind(
      sl.interval, {IntervalSpec::Kind::HalfLinePositive, IntervalSpec::Kind::HalfLineNegative},
      "a half-line"));
  v.checks.push_back(
      make_check("scalar problem (n = 1)", sl.n == 1, "n = " + std::to_string(sl.n)));
  v.checks.push_back(check_sl_zero(sl.Q, ctx.grid, "Q"));
  if (!all_pass(v.checks)) {
    conclude_from_integrals(v, v.evidence, IntegralStatus::Convergent, "", "");
    return v;
  }
  Direction d = unbounded_directions(sl.interval).front();
  TwoTermData tt = make_two_term(ctx, d, o);

  double rworst = 0;
  for (double x : ctx.grid.points) rworst = std::max(rworst, sl.R.eval(x).cwiseAbs().maxCoeff());
  if (rworst > 1e-12) {
    PerturbationChecks pc = check_perturbation(ctx, *tt.Atilde, d, o);
    v.evidence.push_back(pc.mass);
    v.checks.push_back(pc.first);
    v.checks.push_back(pc.second);
  }
  if (!all_pass(v.checks)) {
    conclude_from_integrals(v, v.evidence, IntegralStatus::Convergent, "", "");
    return v;
  }
  auto At = tt.Atilde;
  auto weight = [At, &sl](double x) {
    double a = std::abs(At->eval(x)(0, 0));
    return (a * a + 1.0) * std::max(sl.H.eval(x)(0, 0).real(), 0.0);
  };
  auto cls = classify_sl(ctx, d, weight, "(Atilde^2 + 1) H", o);
  v.evidence.push_back(cls);
  conclude_from_integrals(v, {cls}, IntegralStatus::Convergent,
                          "maximal indices: n~+(P) = n~-(P) = 2",
                          "limit-point situation: n~+(P) = n~-(P) = 1");
  if (v.status == VerdictStatus::Holds) v.extra["indices"] = 2;
  else if (v.status == VerdictStatus::Fails) v.extra["indices"] = 1;
  return v;
}

struct Entry {
  CriterionInfo info;
  std::function<CriterionVerdict(const ProblemSpec&, const CriteriaOptions&)> fn;
};

const SystemSpec& need_system(const ProblemSpec& p, const std::string& id) {
  if (!p.is_system())
    throw SpecError("criterion '" + id +
                    "' applies to first-order systems, not to a Sturm-Liouville spec");
  return p.system();
}

const SturmLiouvilleSpec& need_sl(const ProblemSpec& p, const std::string& id) {
  if (p.is_system())
    throw SpecError("criterion '" + id +
                    "' needs Sturm-Liouville structure; got a raw first-order system");
  return p.sturm_liouville();
}

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = [] {
    std::vector<Entry> t;
    auto add = [&](std::string id, std::string stmt, std::string applies, bool equiv,
                   std::function<CriterionVerdict(const ProblemSpec&, const CriteriaOptions&)>
                       fn) {
      t.push_back({CriterionInfo{std::move(id), std::move(stmt), std::move(applies), equiv},
                   std::move(fn)});
    };
    add("line-self-adjoint",
        "divergence of the reciprocal Weyl weight toward both infinities forces essential "
        "self-adjointness on the line",
        "system", false, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_line_self_adjoint(need_system(p, "line-self-adjoint"), o);
        });
    add("line-smallest-eigenvalue",
        "for constant J, a non-integrable smallest eigenvalue of H toward both infinities "
        "forces essential self-adjointness on the line",
        "system", false, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_line_smallest_eigenvalue(need_system(p, "line-smallest-eigenvalue"), o);
        });
    add("halfline-minimal",
        "divergence of the reciprocal Weyl weight on a half-line forces the minimal "
        "indices kappa+/-",
        "system", false, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_halfline_minimal(need_system(p, "halfline-minimal"), o);
        });
    add("halfline-minimal-lambda1",
        "for constant J, a non-integrable smallest eigenvalue of H on a half-line forces "
        "the minimal indices kappa+/-",
        "system", false, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_halfline_minimal_lambda1(need_system(p, "halfline-minimal-lambda1"), o);
        });
    add("canonical-maximal",
        "a canonical system with positive-type Hamiltonian has maximal indices exactly "
        "when the trace of H is integrable",
        "system", true, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_canonical_maximal(need_system(p, "canonical-maximal"), o);
        });
    add("quasiregular",
        "quasi-regularity is equivalent to integrability of the trace of the Hamiltonian "
        "in a canonical frame (directly, via a small-B comparison, or through the "
        "fundamental-solution gauge)",
        "system", true, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_quasiregular(need_system(p, "quasiregular"), o);
        });
    add("lower-bound-diagonal",
        "each integrable diagonal entry of the (gauged) Hamiltonian contributes a "
        "square-integrable constant solution: n~+- >= max(kappa+-, k)",
        "system", false, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_lower_bound_diagonal(need_system(p, "lower-bound-diagonal"), o);
        });
    add("KRB-quasiregular",
        "quasi-regularity is equivalent to a full solution space at some lambda0 together "
        "with a below-bounded running mixed trace",
        "system", true, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_krb_quasiregular(need_system(p, "KRB-quasiregular"), o);
        });
    add("intermediate-n-minus-1",
        "a canonical positive-type system with exactly one non-integrable diagonal entry "
        "and an integrable mixed trace has indices n-1; for 2x2 systems the basic "
        "boundary restrictions follow the trace dichotomy",
        "system", false, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_intermediate(need_system(p, "intermediate-n-minus-1"), o);
        });
    add("real-symmetry",
        "a definite system with real J^-1 B and J^-1 H has equal indices; a full solution "
        "space at any probe upgrades this to quasi-regularity",
        "system", false, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_real_symmetry(need_system(p, "real-symmetry"), o);
        });
    add("singular-hamiltonian",
        "for designated-block systems with A >= 0 and V >= -qH, divergence of the "
        "q-weighted reciprocal block weight forces indices n (self-adjointness on the "
        "line)",
        "sturm-liouville", false, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_singular_hamiltonian(need_sl(p, "singular-hamiltonian"), o);
        });
    add("operator-case",
        "a uniformly positive Hamiltonian with bounded J makes the reciprocal Weyl weight "
        "non-integrable, so the induced operator is essentially self-adjoint",
        "system", false, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_operator_case(need_system(p, "operator-case"), o);
        });
    add("sl-titchmarsh",
        "a Sturm-Liouville problem with V = R - Q*AQ bounded below by -qH and divergent "
        "q-weighted reciprocal block weight has minimal indices n (self-adjoint on the "
        "line)",
        "sturm-liouville", false, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_sl_titchmarsh(need_sl(p, "sl-titchmarsh"), o);
        });
    add("sl-two-term-maximal",
        "the two-term problem has maximal indices 2n exactly when the traces of H and of "
        "Atilde H Atilde are both integrable (the second alone for uniformly definite A)",
        "sturm-liouville", true, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_sl_two_term_maximal(need_sl(p, "sl-two-term-maximal"), o);
        });
    add("sl-perturbed-two-term",
        "under a first-moment-small perturbation R the two-term maximality criterion is "
        "unchanged",
        "sturm-liouville", true, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_sl_perturbed(need_sl(p, "sl-perturbed-two-term"), o);
        });
    add("sl-constant-potential",
        "for R = k^2 I + R1 with integrable R1: maximal indices hold exactly when tr H "
        "(k imaginary) or exp(2kx) tr H (k > 0) is integrable",
        "sturm-liouville", true, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_sl_constant_potential(need_sl(p, "sl-constant-potential"), o);
        });
    add("sl-intermediate",
        "with exactly one non-integrable diagonal mass among H and Atilde H Atilde the "
        "two-term indices equal 2n-1 (an upper bound under perturbations or via the "
        "square-root trace)",
        "sturm-liouville", false, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_sl_intermediate(need_sl(p, "sl-intermediate"), o);
        });
    add("sl-scalar",
        "the scalar two-term problem is maximal (indices 2) exactly when (Atilde^2 + 1) H "
        "is integrable, and limit-point (indices 1) otherwise",
        "sturm-liouville", true, [](const ProblemSpec& p, const CriteriaOptions& o) {
          return eval_sl_scalar(need_sl(p, "sl-scalar"), o);
        });
    return t;
  }();
  return table;
}

}  // namespace

const std::vector<CriterionInfo>& criteria_registry() {
  static const std::vector<CriterionInfo> infos = [] {
    std::vector<CriterionInfo> out;
    for (const auto& e : entries()) out.push_back(e.info);
    return out;
  }();
  return infos;
}

CriterionVerdict evaluate_criterion(const std::string& id, const ProblemSpec& spec,
                                    const CriteriaOptions& opts) {
  for (const auto& e : entries())
    if (e.info.id == id) {
      CriterionVerdict v = e.fn(spec, opts);
      v.equivalence = e.info.equivalence;
      return v;
    }
  throw SpecError("unknown criterion id '" + id + "'");
}

std::vector<CriterionVerdict> evaluate_all_criteria(const ProblemSpec& spec,
                                                    const CriteriaOptions& opts) {
  std::vector<CriterionVerdict> out;
  for (const auto& e : entries()) {
    bool wants_sl = e.info.applies_to == "sturm-liouville";
    if (wants_sl == spec.is_system()) continue;
    CriterionVerdict v = e.fn(spec, opts);
    v.equivalence = e.info.equivalence;
    out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// constructive procedures
// ---------------------------------------------------------------------------

double CutoffFunction::eval(double x) const {
  if (x <= n) return 1.0;
  if (x >= N) return 0.0;
  return 1.0 - mass.value(x) / K;
}

CutoffFunction construct_cutoff(const ScalarFunction& f, int n, const ImproperOptions& opts) {
  DivergenceClassification cls = classify_improper_integral(f, n, +1, opts);
  if (cls.status != IntegralStatus::Divergent)
    throw SpecError("cutoff construction requires a divergent mass integral (got " +
                    std::string(to_string(cls.status)) + ")");

  QuadOptions qo;
  qo.rel_tol = 1e-12;
  double C = 1.0;
  double reach = 0.0;
  for (int attempt = 0; attempt < 40 && reach == 0.0; ++attempt) {
    auto g = [&](double x) { return std::min(C, f.f(x) / n); };
    double acc = 0.0, t = n;
    for (int j = 0; j <= 26 && acc < 2.0; ++j) {
      double nt = n + std::pow(2.0, j);
      acc += integrate_scalar(g, t, nt, qo);
      t = nt;
    }
    if (acc >= 2.0) reach = t;
    else C *= 2.0;
  }
  if (reach == 0.0) throw NumericsError("no clip level achieves the required cutoff mass");

  auto g = [&](double x) { return std::min(C, f.f(x) / n); };
  CumulativeTable table = CumulativeTable::build(g, n, reach, 4096, qo);
  double Npos = table.inverse(1.001);
  CutoffFunction chi;
  chi.n = n;
  chi.C = C;
  chi.N = Npos;
  chi.mass = CumulativeTable::build(g, n, Npos, 4096, qo);
  chi.K = chi.mass.back_value();
  return chi;
}

CutoffCheck verify_cutoff(const CutoffFunction& chi, const ScalarFunction& f) {
  CutoffCheck out;
  for (int k = 0; k <= 64; ++k) {
    double x = chi.n - 2.0 + 2.0 * k / 64.0;
    out.defect_left = std::max(out.defect_left, std::abs(chi.eval(x) - 1.0));
  }
  out.defect_support = std::abs(chi.eval(chi.N));
  for (int k = 0; k <= 2048; ++k) {
    double x = chi.n + (chi.N - chi.n) * k / 2048.0;
    double deriv = std::min(chi.C, f.f(x) / chi.n) / chi.K;
    out.sup_deriv = std::max(out.sup_deriv, deriv);
    out.defect_bound = std::max(out.defect_bound, deriv - f.f(x) / chi.n);
  }
  return out;
}

double QRegularization::psi(double t) const { return phi.inverse(t); }

double QRegularization::qt1(double t) const {
  if (qt1_nodes.empty()) throw NumericsError("empty regularization");
  if (t <= 0.0) return qt1_nodes.front();
  std::size_t m = qt1_nodes.size() - 1;
  if (t >= static_cast<double>(m)) return qt1_nodes.back();
  std::size_t k = static_cast<std::size_t>(std::floor(t));
  double frac = t - static_cast<double>(k);
  double a = 1.0 / std::sqrt(qt1_nodes[k]);
  double b = 1.0 / std::sqrt(qt1_nodes[k + 1]);
  double inv_sqrt = (1.0 - frac) * a + frac * b;
  return 1.0 / (inv_sqrt * inv_sqrt);
}

double QRegularization::eval(double x) const { return qt1(phi.value(x)); }

QRegularization regularize_q(const std::function<double(double)>& q,
                             const std::function<double(double)>& c,
                             const QRegularizationOptions& opts) {
  double prev = q(0.0);
  if (!(prev > 0)) throw SpecError("q must be bounded below by a positive constant");
  for (int k = 1; k <= 512; ++k) {
    double x = opts.x_max * k / 512.0;
    double v = q(x);
    if (v < prev - 1e-10 * (1 + std::abs(prev)))
      throw SpecError("q must be nondecreasing for the monotone regularization");
    if (!(v > 0)) throw SpecError("q must be bounded below by a positive constant");
    prev = v;
  }
  ScalarFunction hyp{[&](double x) { return 1.0 / (std::sqrt(q(x)) * c(x)); }, "q^-1/2 / c"};
  ImproperOptions io = opts.improper;
  io.k_max = std::min(io.k_max, static_cast<int>(std::log2(opts.x_max)));
  DivergenceClassification cls = classify_improper_integral(hyp, 0.0, +1, io);
  if (cls.status == IntegralStatus::Convergent)
    throw SpecError("regularization requires a divergent integral of q^-1/2 / c");

  QRegularization reg;
  reg.q = q;
  reg.c = c;
  reg.phi = CumulativeTable::build([&](double x) { return 1.0 / c(x); }, 0.0, opts.x_max,
                                   opts.phi_points);
  double total = reg.phi.back_value();
  int M = std::max(2, static_cast<int>(std::floor(total)) - 1);
  for (int m = 0; m <= M; ++m) reg.qt1_nodes.push_back(q(reg.phi.inverse(m + 1.0)));
  reg.C1 = 1.0 / std::sqrt(q(reg.phi.inverse(0.0)));
  return reg;
}

QRegCheck verify_q_regularization(const QRegularization& reg, double x_hi) {
  QRegCheck out;
  out.min_margin = std::numeric_limits<double>::infinity();
  x_hi = std::min(x_hi, reg.phi.back_x());
  for (int k = 0; k <= 2048; ++k) {
    double x = x_hi * k / 2048.0;
    out.min_margin = std::min(out.min_margin, reg.eval(x) - reg.q(x));
    double h = std::max(1e-6, x_hi * 1e-7);
    if (x > h && x + h < x_hi) {
      double d =
          (1.0 / std::sqrt(reg.eval(x + h)) - 1.0 / std::sqrt(reg.eval(x - h))) / (2.0 * h);
      out.lipschitz_excess = std::max(out.lipschitz_excess, std::abs(d) * reg.c(x) - reg.C1);
    }
  }
  ScalarFunction tail{[&](double x) { return 1.0 / (std::sqrt(reg.eval(x)) * reg.c(x)); },
                      "q~^-1/2 / c"};
  ImproperOptions io;
  io.k_max = static_cast<int>(std::log2(std::max(4.0, reg.phi.back_x())));
  out.tail = classify_improper_integral(tail, 0.0, +1, io);
  return out;
}

// ------------------------- asymptotic solution pair -------------------------

namespace {

Matrix interp_rows(const std::vector<double>& xs, const std::vector<Matrix>& vals, double x) {
  if (x <= xs.front()) return vals.front();
  if (x >= xs.back()) return vals.back();
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  std::size_t hi = static_cast<std::size_t>(it - xs.begin());
  std::size_t lo = hi - 1;
  double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return (1.0 - t) * vals[lo] + t * vals[hi];
}

}  // namespace

Matrix AsymptoticPair::eval_U(double x) const { return interp_rows(xs, U, x); }
Matrix AsymptoticPair::eval_V(double x) const { return interp_rows(xs, V, x); }
Matrix AsymptoticPair::eval_P(double x) const { return interp_rows(xs, P, x); }

double AsymptoticPair::k_defect(double lo, double hi) const {
  double worst = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (xs[k] < lo || xs[k] > hi) continue;
    Matrix K = U[k].adjoint() * P[k] - P[k].adjoint() * U[k];
    worst = std::max(worst, K.cwiseAbs().maxCoeff());
  }
  return worst;
}

AsymptoticPair asymptotic_solutions_UV(const MatrixFunction& A, const MatrixFunction& R,
                                       const AsymptoticOptions& opts) {
  const int n = A.dim();
  AsymptoticPair out;
  out.n = n;

  std::vector<double> bps;
  A.collect_breakpoints(bps);
  R.collect_breakpoints(bps);

  // grid: uniform up to 32, then 256 points per octave out to x_far
  std::vector<double> xs;
  double fine_end = std::min(32.0, opts.x_far);
  int fine = static_cast<int>(fine_end * opts.grid_per_unit);
  for (int k = 0; k <= fine; ++k) xs.push_back(fine_end * k / fine);
  double x = fine_end;
  while (x < opts.x_far) {
    double next = std::min(opts.x_far, 2.0 * x);
    int m = 256;
    for (int k = 1; k <= m; ++k) xs.push_back(x + (next - x) * k / m);
    x = next;
  }
  for (double b : bps)
    if (b > 0 && b < opts.x_far) xs.push_back(b);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  const std::size_t m = xs.size();

  std::vector<Matrix> Av(m), Rv(m), At(m);
  Matrix acc = Matrix::Zero(n, n);
  QuadOptions qo;
  qo.rel_tol = 1e-12;
  for (std::size_t k = 0; k < m; ++k) {
    Av[k] = A.eval(xs[k]);
    Rv[k] = R.eval(xs[k]);
    At[k] = acc;
    if (k + 1 < m)
      acc += integrate_matrix([&](double t) { return A.eval(t); }, xs[k], xs[k + 1], qo);
  }

  auto atr = [&](std::size_t k) { return spectral_norm(At[k]) * spectral_norm(Rv[k]); };
  std::vector<double> tail(m, 0.0);
  for (std::size_t k = m - 1; k > 0; --k) {
    double h = xs[k] - xs[k - 1];
    tail[k - 1] = tail[k] + 0.5 * h * (atr(k) + atr(k - 1));
  }
  if (!std::isfinite(tail[0]))
    throw SpecError("perturbation hypothesis fails: the first moment of R is not finite");

  double min_N = 0.0;
  for (double b : bps) min_N = std::max(min_N, b);
  double N = -1.0;
  for (std::size_t k = 0; k < m; ++k) {
    if (tail[k] < 0.4 && xs[k] >= min_N) {
      N = xs[k];
      break;
    }
  }
  if (N < 0)
    throw NumericsError("contraction bound unattainable on the grid: tails of "
                        "||Atilde|| ||R|| stay above 1/2");
  out.N = N;

  std::size_t iN =
      static_cast<std::size_t>(std::lower_bound(xs.begin(), xs.end(), N) - xs.begin());

  // successive approximations on [N, x_far]
  std::size_t mm = m - iN;
  std::vector<Matrix> Uterm(mm, Matrix::Identity(n, n));
  std::vector<Matrix> Usum(mm, Matrix::Identity(n, n));
  std::vector<Matrix> I2_total(mm, Matrix::Zero(n, n));
  // composite panel rule: midpoint values of A and R are exact, the current
  // iterate is interpolated linearly between its nodes
  auto backward_sums = [&](const std::vector<Matrix>& u, std::vector<Matrix>& i1,
                           std::vector<Matrix>& i2) {
    i1.assign(mm, Matrix::Zero(n, n));
    i2.assign(mm, Matrix::Zero(n, n));
    for (std::size_t k = mm - 1; k > 0; --k) {
      std::size_t g1 = iN + k, g0 = iN + k - 1;
      double h = xs[g1] - xs[g0];
      double xm = 0.5 * (xs[g0] + xs[g1]);
      Matrix Am = 0.5 * (At[g0] + At[g1]);
      Matrix Rm = R.eval(xm);
      Matrix Um = 0.5 * (u[k - 1] + u[k]);
      i1[k - 1] = i1[k] + h / 6.0 *
                              (At[g1] * Rv[g1] * u[k] + 4.0 * Am * Rm * Um +
                               At[g0] * Rv[g0] * u[k - 1]);
      i2[k - 1] =
          i2[k] + h / 6.0 * (Rv[g1] * u[k] + 4.0 * Rm * Um + Rv[g0] * u[k - 1]);
    }
  };

  for (int it = 0; it < opts.max_terms; ++it) {
    std::vector<Matrix> I1, I2;
    backward_sums(Uterm, I1, I2);
    double worst = 0.0;
    for (std::size_t k = 0; k < mm; ++k) {
      Matrix next = I1[k] - At[iN + k] * I2[k];
      Uterm[k] = next;
      Usum[k] += next;
      I2_total[k] += I2[k];
      worst = std::max(worst, next.cwiseAbs().maxCoeff());
    }
    if (worst < opts.series_tol) break;
  }
  {
    // one more tail of I2 at the final term level closes the derivative sum
    std::vector<Matrix> I1, I2;
    backward_sums(Uterm, I1, I2);
    for (std::size_t k = 0; k < mm; ++k) I2_total[k] += I2[k];
  }

  out.xs = xs;
  out.U.assign(m, Matrix::Identity(n, n));
  out.P.assign(m, Matrix::Zero(n, n));
  for (std::size_t k = 0; k < mm; ++k) {
    out.U[iN + k] = Usum[k];
    out.P[iN + k] = -I2_total[k];  // A^-1 U' = -\int_x^inf R U
  }

  // continuation to [0, N): integrate U' = A P, P' = R U leftward
  if (iN > 0) {
    Vector y(2 * n * n);
    Eigen::Map<Matrix>(y.data(), n, n) = out.U[iN];
    Eigen::Map<Matrix>(y.data() + n * n, n, n) = out.P[iN];
    OdeOptions oo;
    oo.rtol = 1e-11;
    oo.atol = 1e-13;
    auto rhs = [&](double t, const Vector& v, Vector& dv) {
      Eigen::Map<const Matrix> u(v.data(), n, n);
      Eigen::Map<const Matrix> p(v.data() + n * n, n, n);
      dv.resize(2 * n * n);
      Eigen::Map<Matrix>(dv.data(), n, n) = A.eval(t) * p;
      Eigen::Map<Matrix>(dv.data() + n * n, n, n) = R.eval(t) * u;
    };
    for (std::size_t k = iN; k > 0; --k) {
      OdeResult r = integrate_dense(rhs, xs[k], y, xs[k - 1], oo);
      y = r.y_end;
      out.U[k - 1] = Eigen::Map<const Matrix>(y.data(), n, n);
      out.P[k - 1] = Eigen::Map<const Matrix>(y.data() + n * n, n, n);
    }
  }

  // V(x) = U(x) \int_0^x U^-1 A U^-*  (the companion growing solution)
  out.V.assign(m, Matrix::Zero(n, n));
  Matrix vacc = Matrix::Zero(n, n);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    double h = xs[k + 1] - xs[k];
    auto term = [&](const Matrix& u, const Matrix& a) {
      Matrix ui = u.partialPivLu().solve(Matrix::Identity(n, n));
      return Matrix(ui * a * ui.adjoint());
    };
    Matrix f0 = term(out.U[k], Av[k]);
    Matrix f1 = term(out.U[k + 1], Av[k + 1]);
    Matrix fm = term(0.5 * (out.U[k] + out.U[k + 1]), 0.5 * (Av[k] + Av[k + 1]));
    vacc += h / 6.0 * (f0 + 4.0 * fm + f1);
    out.V[k + 1] = out.U[k + 1] * vacc;
  }
  return out;
}

}  // namespace hamsys
