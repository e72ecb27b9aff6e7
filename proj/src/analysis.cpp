#include "hamsys/analysis.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <random>
#include <thread>

#include "hamsys/gauge.hpp"

namespace hamsys {

int effective_thread_cap(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("HAMSYS_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

void run_parallel(const std::vector<std::function<void()>>& tasks, int max_threads) {
  int cap = std::min<int>(effective_thread_cap(max_threads), static_cast<int>(tasks.size()));
  if (cap <= 1) {
    for (const auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(cap);
  std::vector<std::exception_ptr> errors(tasks.size());
  for (int w = 0; w < cap; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t k = next.fetch_add(1);
        if (k >= tasks.size()) return;
        try {
          tasks[k]();
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

SystemSpec effective_system(const ProblemSpec& spec) {
  if (spec.is_system()) return spec.system();
  return embed_sturm_liouville(spec.sturm_liouville());
}

namespace {

Json rank_report_json(const RankReport& r) {
  Json j;
  j["rank"] = r.rank;
  j["stabilized"] = r.stabilized;
  j["rel_tol"] = r.rel_tol;
  j["interval"] = Json::array({r.i0_lo, r.i0_hi});
  Json tried = Json::array();
  for (std::size_t k = 0; k < r.intervals_tried.size(); ++k)
    tried.push_back(Json::array(
        {r.intervals_tried[k].first, r.intervals_tried[k].second, r.ranks_seen[k]}));
  j["growth_sequence"] = tried;
  j["log_spectrum"] = r.spectrum_at_i0;
  if (r.kernel.cols() > 0) j["kernel_basis"] = matrix_to_json(r.kernel);
  return j;
}

Json classification_tables_json(const GrowthClassification& c) {
  Json j;
  j["lambda"] = complex_to_json(c.lambda);
  j["T"] = c.T;
  Json mu = Json::array();
  for (const auto& row : c.mu) mu.push_back(row);
  j["mu_log"] = mu;
  Json carried = Json::array();
  for (const auto& row : c.carried) {
    Json r = Json::array();
    for (bool b : row) r.push_back(b);
    carried.push_back(r);
  }
  j["carried"] = carried;
  Json traj = Json::array();
  for (const auto& t : c.trajectories) {
    Json tj;
    tj["status"] = to_string(t.status);
    tj["slope_log_distance"] = t.slope_logT;
    tj["slope_distance"] = t.slope_T;
    if (!t.model.empty()) tj["model"] = t.model;
    traj.push_back(tj);
  }
  j["trajectories"] = traj;
  j["bounded"] = c.bounded;
  j["divergent"] = c.divergent;
  j["inconclusive"] = c.inconclusive;
  return j;
}

Json deficiency_json(const DeficiencyReport& r) {
  Json j;
  j["n_plus"] = r.n_plus;
  j["n_minus"] = r.n_minus;
  j["N_plus"] = r.N_plus;
  j["N_minus"] = r.N_minus;
  j["rank"] = r.rank;
  j["rank_stabilized"] = r.rank_stabilized;
  j["kappa_plus"] = r.kappa_plus;
  j["kappa_minus"] = r.kappa_minus;
  j["conclusive"] = r.conclusive;
  j["invariants_ok"] = r.invariants_ok;
  if (!r.invariant_failures.empty()) j["invariant_failures"] = r.invariant_failures;
  j["at_plus_i"] = classification_tables_json(r.at_plus_i);
  j["at_minus_i"] = classification_tables_json(r.at_minus_i);
  return j;
}

}  // namespace

AnalysisReport analyze_problem(const ProblemSpec& spec, const AnalysisOptions& opts) {
  using Clock = std::chrono::steady_clock;
  auto t_start = Clock::now();
  AnalysisReport out;
  Json& j = out.json;
  j["tool"] = "hamsys";
  j["version"] = HAMSYS_VERSION;
  j["label"] = spec.label();
  j["kind"] = spec.is_system() ? "system" : "sturm-liouville";
  {
    Json params;
    params["seed"] = opts.seed;
    params["tol_struct"] = opts.validation.tol_struct;
    params["ode_rtol"] = opts.deficiency.prop.rtol;
    params["ode_atol"] = opts.deficiency.prop.atol;
    params["rescale_threshold"] = opts.deficiency.prop.rescale_threshold;
    params["tmax_exponent"] = opts.deficiency.tmax_exponent;
    params["rank_rel_tol"] = opts.rank.rel_tol;
    params["eps_cauchy"] = opts.deficiency.eps_cauchy;
    params["eps_slope"] = opts.deficiency.eps_slope;
    params["improper_k_max"] = opts.criteria.improper.k_max;
    j["parameters"] = params;
  }

  // 1. structural validation
  ValidationReport val;
  SystemSpec sys = effective_system(spec);
  if (spec.is_system()) {
    val = validate_system(spec.system(), opts.validation);
    j["validation"] = validation_to_json(val);
  } else {
    ValidationReport sl_val = validate_sturm_liouville(spec.sturm_liouville(), opts.validation);
    val = validate_system(sys, opts.validation);
    j["validation"] = validation_to_json(sl_val);
    j["embedded_validation"] = validation_to_json(val);
    val.pass = val.pass && sl_val.pass;
    val.hard_fail = val.hard_fail || sl_val.hard_fail;
  }
  out.validation_pass = !val.hard_fail;
  if (!out.validation_pass) return out;

  double t_val = std::chrono::duration<double>(Clock::now() - t_start).count();

  // 2. rank / definiteness / positive type
  RankOptions ro = opts.rank;
  ro.prop = opts.deficiency.prop;
  RankReport rank = rank_of_system(sys, ro);
  j["rank_report"] = rank_report_json(rank);
  j["definite"] = rank.stabilized && rank.rank == sys.n;
  PositiveTypeReport pt = is_positive_type(sys.H, sys.interval, ro);
  {
    Json pj;
    pj["positive_type"] = pt.positive_type;
    pj["inconclusive"] = pt.inconclusive;
    pj["window"] = Json::array({pt.window_lo, pt.window_hi});
    j["positive_type"] = pj;
  }
  double t_rank = std::chrono::duration<double>(Clock::now() - t_start).count();

  // 3. deficiency indices
  bool inconclusive_core = !rank.stabilized;
  if (sys.interval.kind == IntervalSpec::Kind::Finite) {
    FiniteIntervalIndices fin = finite_interval_indices(sys, opts.deficiency);
    Json fj;
    fj["n_plus"] = fin.n_plus;
    fj["n_minus"] = fin.n_minus;
    fj["N_plus"] = fin.N_plus;
    fj["N_minus"] = fin.N_minus;
    fj["crosscheck_all_bounded"] = fin.crosscheck_ok;
    j["deficiency"] = fj;
  } else {
    DeficiencyReport rep = formal_deficiency_indices(sys, opts.deficiency);
    j["deficiency"] = deficiency_json(rep);
    inconclusive_core = inconclusive_core || !rep.conclusive;
    if (sys.interval.kind == IntervalSpec::Kind::FullLine) {
      // composition through the half-lines, when both are definite
      Json gj;
      try {
        SystemSpec plus = sys.restricted(IntervalSpec::half_line_positive(sys.interval.x0));
        SystemSpec minus = sys.restricted(IntervalSpec::half_line_negative(sys.interval.x0));
        DeficiencyReport rp = formal_deficiency_indices(plus, opts.deficiency);
        DeficiencyReport rm = formal_deficiency_indices(minus, opts.deficiency);
        DeficiencyReport glued = glue_line_indices(rp, rm, sys, opts.deficiency);
        gj["refused"] = false;
        gj["half_plus"] = Json::array({rp.n_plus, rp.n_minus});
        gj["half_minus"] = Json::array({rm.n_plus, rm.n_minus});
        gj["n_plus"] = glued.n_plus;
        gj["n_minus"] = glued.n_minus;
        gj["N_plus"] = glued.N_plus;
        gj["N_minus"] = glued.N_minus;
        gj["matches_direct"] = glued.n_plus == rep.n_plus && glued.n_minus == rep.n_minus;
      } catch (const GlueRefusal& e) {
        gj["refused"] = true;
        gj["reason"] = e.what();
      }
      j["glue"] = gj;
    }
  }
  double t_def = std::chrono::duration<double>(Clock::now() - t_start).count();

  // 4. conjugation-identity spot check at seeded random points
  {
    double lo, hi;
    switch (sys.interval.kind) {
      case IntervalSpec::Kind::Finite: lo = sys.interval.a; hi = sys.interval.b; break;
      case IntervalSpec::Kind::HalfLineNegative:
        lo = sys.interval.b - 8.0;
        hi = sys.interval.b;
        break;
      case IntervalSpec::Kind::FullLine: lo = sys.interval.x0 - 8.0; hi = sys.interval.x0 + 8.0; break;
      default: lo = sys.interval.a; hi = sys.interval.a + 8.0; break;
    }
    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> uni(lo, hi);
    double worst = 0.0;
    for (Complex lam : {Complex(0, 0), Complex(0, 1), Complex(1, 1)}) {
      FundamentalSolution Y(sys, lam, lo, hi, opts.deficiency.prop);
      for (int k = 0; k < opts.symplectic_points; ++k)
        worst = std::max(worst, symplectic_defect(Y, uni(rng)));
    }
    Json sj;
    sj["max_defect"] = worst;
    sj["points_per_lambda"] = opts.symplectic_points;
    sj["span"] = Json::array({lo, hi});
    j["conjugation_identity"] = sj;
  }
  double t_symp = std::chrono::duration<double>(Clock::now() - t_start).count();

  // 5. criteria
  if (opts.run_criteria) {
    CriteriaOptions co = opts.criteria;
    co.deficiency = opts.deficiency;
    co.rank = ro;
    std::vector<CriterionVerdict> verdicts = evaluate_all_criteria(spec, co);
    Json cj = Json::array();
    for (const auto& v : verdicts) cj.push_back(verdict_to_json(v));
    j["criteria"] = cj;
  }
  double t_total = std::chrono::duration<double>(Clock::now() - t_start).count();

  out.inconclusive_core = inconclusive_core;
  j["inconclusive_core"] = inconclusive_core;

  Json timings;
  timings["validation_s"] = t_val;
  timings["rank_s"] = t_rank - t_val;
  timings["deficiency_s"] = t_def - t_rank;
  timings["conjugation_check_s"] = t_symp - t_def;
  timings["criteria_s"] = t_total - t_symp;
  timings["total_s"] = t_total;
  j["timings"] = std::move(timings);
  return out;
}

ExampleRun run_example(const std::string& id, const AnalysisOptions& opts) {
  const ExampleFixture& f = fixture(id);
  ExampleRun run;
  run.report = analyze_problem(f.spec, opts);
  const Json& j = run.report.json;

  auto mismatch = [&](const std::string& what) {
    run.pass = false;
    run.mismatches.push_back(what);
  };
  const ExpectedValues& e = f.expected;
  if (!run.report.validation_pass) mismatch("structural validation failed");

  if (e.rank && j.contains("rank_report") &&
      j["rank_report"]["rank"].get<int>() != *e.rank)
    mismatch("rank: expected " + std::to_string(*e.rank) + ", got " +
             std::to_string(j["rank_report"]["rank"].get<int>()));
  if (e.definite && j.contains("definite") && j["definite"].get<bool>() != *e.definite)
    mismatch(std::string("definiteness: expected ") + (*e.definite ? "true" : "false"));
  auto check_idx = [&](const char* key, const std::optional<int>& want) {
    if (!want || !j.contains("deficiency")) return;
    int got = j["deficiency"][key].get<int>();
    if (got != *want)
      mismatch(std::string(key) + ": expected " + std::to_string(*want) + ", got " +
               std::to_string(got));
  };
  check_idx("n_plus", e.n_plus);
  check_idx("n_minus", e.n_minus);
  check_idx("N_plus", e.N_plus);
  check_idx("N_minus", e.N_minus);

  if (!e.criterion_status.empty() && j.contains("criteria")) {
    for (const auto& [id_want, status_want] : e.criterion_status) {
      bool found = false;
      for (const auto& vj : j["criteria"]) {
        if (vj["id"].get<std::string>() != id_want) continue;
        found = true;
        std::string got = vj["status"].get<std::string>();
        if (got != status_want)
          mismatch("criterion " + id_want + ": expected " + status_want + ", got " + got);
      }
      if (!found) mismatch("criterion " + id_want + " missing from the report");
    }
  }
  run.report.json["example"] = Json{{"id", f.id},
                                    {"pass", run.pass},
                                    {"mismatches", run.mismatches},
                                    {"source", e.source}};
  return run;
}

}  // namespace hamsys
