// hamsys: analysis of symmetric first-order systems J f' + B f = lambda H f.
//
// Subcommands: validate, propagate, gauge, gram, deficiency, criteria,
// analyze, example, list.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "hamsys/analysis.hpp"
#include "hamsys/gauge.hpp"

using namespace hamsys;

namespace {

struct GlobalArgs {
  std::string spec_path;
  std::string out_path;
  bool json = false;
  double tol_ode = 1e-10;
  int tmax_exponent = 12;
  unsigned long seed = 12345;
};

void add_common(CLI::App* cmd, GlobalArgs& g, bool needs_spec = true) {
  auto* opt = cmd->add_option("--spec", g.spec_path, "path to the JSON problem spec");
  if (needs_spec) opt->required();
  cmd->add_option("--out", g.out_path, "write the JSON report to this file");
  cmd->add_flag("--json", g.json, "machine-readable output");
  cmd->add_option("--tol-ode", g.tol_ode, "relative tolerance of the propagator");
  cmd->add_option("--tmax-exponent", g.tmax_exponent,
                  "largest truncation exponent k (T = 2^k) of the deficiency plan");
  cmd->add_option("--seed", g.seed, "seed for randomized grid points");
}

AnalysisOptions make_options(const GlobalArgs& g) {
  AnalysisOptions opts;
  opts.seed = g.seed;
  opts.deficiency.tmax_exponent = g.tmax_exponent;
  opts.deficiency.prop.rtol = g.tol_ode;
  opts.deficiency.prop.atol = std::min(1e-12, g.tol_ode * 0.01);
  opts.validation.seed = g.seed;
  return opts;
}

void emit(const Json& j, const GlobalArgs& g) {
  std::string text = j.dump(2);
  if (!g.out_path.empty()) {
    std::ofstream out(g.out_path);
    if (!out) throw std::runtime_error("cannot open output file '" + g.out_path + "'");
    out << text << "\n";
  } else {
    std::cout << text << "\n";
  }
}

int exit_code_for(const AnalysisReport& rep) {
  if (!rep.validation_pass) return 2;
  if (rep.inconclusive_core) return 3;
  return 0;
}

int cmd_validate(const GlobalArgs& g) {
  ProblemSpec p = load_problem_file(g.spec_path);
  AnalysisOptions opts = make_options(g);
  Json j;
  bool hard_fail;
  if (p.is_system()) {
    ValidationReport rep = validate_system(p.system(), opts.validation);
    j = validation_to_json(rep);
    hard_fail = rep.hard_fail;
  } else {
    ValidationReport rep = validate_sturm_liouville(p.sturm_liouville(), opts.validation);
    ValidationReport emb = validate_system(effective_system(p), opts.validation);
    j = validation_to_json(rep);
    j["embedded"] = validation_to_json(emb);
    hard_fail = rep.hard_fail || emb.hard_fail;
  }
  emit(j, g);
  return hard_fail ? 2 : 0;
}

int cmd_propagate(const GlobalArgs& g, const std::string& lambda_text, double a, double b,
                  int points) {
  ProblemSpec p = load_problem_file(g.spec_path);
  SystemSpec s = effective_system(p);
  Complex lam = parse_complex(lambda_text);
  AnalysisOptions opts = make_options(g);
  FundamentalSolution Y(s, lam, a, b, opts.deficiency.prop);
  Json j;
  j["lambda"] = complex_to_json(lam);
  j["span"] = Json::array({a, b});
  Json samples = Json::array();
  for (int k = 0; k <= points; ++k) {
    double x = a + (b - a) * k / points;
    ScaledMatrix sm = Y.eval_scaled(x);
    Json e;
    e["x"] = x;
    e["logscale"] = sm.logscale;
    e["scaled_value"] = matrix_to_json(sm.value);
    e["conjugation_defect"] = symplectic_defect(Y, x);
    samples.push_back(e);
  }
  j["samples"] = samples;
  emit(j, g);
  return 0;
}

int cmd_gauge(const GlobalArgs& g, const std::string& to, double lo, double hi, int grid) {
  ProblemSpec p = load_problem_file(g.spec_path);
  Json j;
  if (to == "sl-embed") {
    if (p.is_system()) throw SpecError("sl-embed needs a Sturm-Liouville spec");
    SystemSpec s = embed_sturm_liouville(p.sturm_liouville());
    j = system_to_json(s);
    j["form"] = "symbolic";
  } else if (to == "square") {
    if (!p.is_system()) throw SpecError("square applies to first-order systems");
    SystemSpec s = square_system(p.system());
    j = system_to_json(s);
    j["form"] = "symbolic";
  } else if (to == "canonical" || to == "constant-j") {
    if (!p.is_system()) throw SpecError("gauge reductions apply to first-order systems");
    const SystemSpec& s = p.system();
    double span_lo = lo, span_hi = hi;
    if (span_lo == span_hi) {
      span_lo = std::isfinite(s.interval.a) ? s.interval.a : s.interval.x0 - 16.0;
      span_hi = std::isfinite(s.interval.b) ? s.interval.b : s.interval.x0 + 16.0;
    }
    SystemSpec out;
    if (to == "canonical") {
      CanonicalizeOptions co;
      co.span_set = true;
      co.lo = span_lo;
      co.hi = span_hi;
      CanonicalizeResult res = canonicalize(s, co);
      out = res.system;
      j["b_defect"] = res.b_defect;
      j["j_defect"] = res.j_defect;
    } else {
      ReduceConstantJOptions ro;
      ro.span_set = true;
      ro.lo = span_lo;
      ro.hi = span_hi;
      ReduceConstantJResult res = reduce_constant_J(s);
      out = res.system;
      j["j_defect"] = res.j_defect;
    }
    j["form"] = "sampled";
    j["n"] = out.n;
    j["interval"] = interval_to_json(out.interval);
    Json xs = Json::array(), Jv = Json::array(), Bv = Json::array(), Hv = Json::array();
    for (int k = 0; k <= grid; ++k) {
      double x = span_lo + (span_hi - span_lo) * k / grid;
      xs.push_back(x);
      Jv.push_back(matrix_to_json(out.J.eval(x)));
      Bv.push_back(matrix_to_json(out.B.eval(x)));
      Hv.push_back(matrix_to_json(out.H.eval(x)));
    }
    j["grid"] = xs;
    j["J"] = Jv;
    j["B"] = Bv;
    j["H"] = Hv;
  } else {
    throw SpecError("unknown gauge target '" + to + "'");
  }
  emit(j, g);
  return 0;
}

int cmd_gram(const GlobalArgs& g, const std::string& lambda_text, double a, double b) {
  ProblemSpec p = load_problem_file(g.spec_path);
  SystemSpec s = effective_system(p);
  Complex lam = parse_complex(lambda_text);
  AnalysisOptions opts = make_options(g);
  if (a == b) {
    a = s.interval.x0;
    b = std::isfinite(s.interval.b) ? s.interval.b : s.interval.x0 + 8.0;
  }
  GramMatrix m = gram_matrix(s, lam, a, b, opts.deficiency.prop);
  RankOptions ro = opts.rank;
  ro.prop = opts.deficiency.prop;
  RankReport rank = rank_of_system(s, ro);
  Json j;
  j["lambda"] = complex_to_json(lam);
  j["interval"] = Json::array({m.a, m.b});
  j["log_scale"] = m.scaled.log;
  j["scaled_matrix"] = matrix_to_json(m.scaled.M);
  if (m.scaled.log < 690.0) j["matrix"] = matrix_to_json(m.dense());
  j["hermiticity_defect"] = m.herm_defect;
  j["rank"] = rank.rank;
  j["rank_stabilized"] = rank.stabilized;
  j["definite"] = rank.stabilized && rank.rank == s.n;
  j["log_spectrum"] = rank.spectrum_at_i0;
  if (rank.kernel.cols() > 0) j["kernel_basis"] = matrix_to_json(rank.kernel);
  emit(j, g);
  return rank.stabilized ? 0 : 3;
}

int cmd_deficiency(const GlobalArgs& g, const std::string& lambda_grid) {
  ProblemSpec p = load_problem_file(g.spec_path);
  SystemSpec s = effective_system(p);
  AnalysisOptions opts = make_options(g);
  DeficiencyReport rep = formal_deficiency_indices(s, opts.deficiency);
  Json j;
  j["n_plus"] = rep.n_plus;
  j["n_minus"] = rep.n_minus;
  j["N_plus"] = rep.N_plus;
  j["N_minus"] = rep.N_minus;
  j["rank"] = rep.rank;
  j["kappa_plus"] = rep.kappa_plus;
  j["kappa_minus"] = rep.kappa_minus;
  j["conclusive"] = rep.conclusive;
  j["invariants_ok"] = rep.invariants_ok;
  {
    Json tables;
    tables["at_plus_i"] = Json{{"T", rep.at_plus_i.T}};
    Json mu_p = Json::array(), mu_m = Json::array();
    for (const auto& row : rep.at_plus_i.mu) mu_p.push_back(row);
    for (const auto& row : rep.at_minus_i.mu) mu_m.push_back(row);
    tables["at_plus_i"]["mu_log"] = mu_p;
    tables["at_minus_i"] = Json{{"T", rep.at_minus_i.T}};
    tables["at_minus_i"]["mu_log"] = mu_m;
    j["trajectories"] = tables;
  }
  if (!lambda_grid.empty()) {
    std::vector<Complex> grid;
    std::string token;
    std::stringstream ss(lambda_grid);
    while (std::getline(ss, token, ',')) grid.push_back(parse_complex(token));
    LambdaConstancyReport lc = lambda_constancy_check(s, grid, opts.deficiency);
    Json lj = Json::array();
    for (std::size_t k = 0; k < lc.lambdas.size(); ++k)
      lj.push_back(Json{{"lambda", complex_to_json(lc.lambdas[k])},
                        {"count_upper", lc.counts_upper[k]},
                        {"count_lower", lc.counts_lower[k]}});
    j["lambda_grid"] = lj;
  }
  emit(j, g);
  return rep.conclusive ? 0 : 3;
}

int cmd_criteria(const GlobalArgs& g, const std::string& id, const std::string& explain,
                 const std::string& q_expr) {
  if (!explain.empty()) {
    for (const auto& info : criteria_registry()) {
      if (info.id != explain) continue;
      std::cout << info.id << "\n  " << info.statement << "\n  applies to: " << info.applies_to
                << (info.equivalence ? " (equivalence)" : " (sufficient condition)") << "\n";
      return 0;
    }
    std::cerr << "unknown criterion id '" << explain << "'\n";
    return 1;
  }
  ProblemSpec p = load_problem_file(g.spec_path);
  AnalysisOptions opts = make_options(g);
  CriteriaOptions co = opts.criteria;
  co.deficiency = opts.deficiency;
  co.rank = opts.rank;
  if (!q_expr.empty()) co.q_expression = q_expr;
  Json arr = Json::array();
  if (id == "all" || id.empty()) {
    for (const auto& v : evaluate_all_criteria(p, co)) arr.push_back(verdict_to_json(v));
  } else {
    arr.push_back(verdict_to_json(evaluate_criterion(id, p, co)));
  }
  emit(arr, g);
  return 0;
}

int cmd_analyze(const GlobalArgs& g) {
  ProblemSpec p = load_problem_file(g.spec_path);
  AnalysisReport rep = analyze_problem(p, make_options(g));
  emit(rep.json, g);
  return exit_code_for(rep);
}

int cmd_example(const GlobalArgs& g, const std::string& id) {
  ExampleRun run = run_example(id, make_options(g));
  if (g.json || !g.out_path.empty()) {
    emit(run.report.json, g);
  } else {
    std::cout << (run.pass ? "PASS " : "FAIL ") << id << "\n";
    for (const auto& m : run.mismatches) std::cout << "  mismatch: " << m << "\n";
  }
  if (!run.report.validation_pass) return 2;
  return run.pass ? 0 : 1;
}

int cmd_list(const GlobalArgs& g, const std::string& kind) {
  if (kind == "criteria") {
    if (g.json) {
      Json arr = Json::array();
      for (const auto& info : criteria_registry())
        arr.push_back(Json{{"id", info.id},
                           {"statement", info.statement},
                           {"applies_to", info.applies_to},
                           {"equivalence", info.equivalence}});
      emit(arr, g);
    } else {
      for (const auto& info : criteria_registry())
        std::cout << info.id << "\t" << info.applies_to
                  << (info.equivalence ? "\tiff" : "\tsufficient") << "\t" << info.statement
                  << "\n";
    }
    return 0;
  }
  if (kind == "examples") {
    if (g.json) {
      Json arr = Json::array();
      for (const auto& f : fixture_registry())
        arr.push_back(Json{{"id", f.id},
                           {"description", f.description},
                           {"source", f.expected.source}});
      emit(arr, g);
    } else {
      for (const auto& f : fixture_registry())
        std::cout << f.id << "\t" << f.description << "\n";
    }
    return 0;
  }
  std::cerr << "unknown list kind '" << kind << "' (use criteria or examples)\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"analysis of symmetric first-order systems J f' + B f = lambda H f"};
  app.require_subcommand(1);

  GlobalArgs g;
  std::string lambda_text = "i", gauge_to = "canonical", criteria_id = "all";
  std::string explain_id, lambda_grid, list_kind, example_id, q_expr;
  double span_a = 0.0, span_b = 0.0;
  int points = 32, grid = 64;

  auto* validate = app.add_subcommand("validate", "check the structural conditions");
  add_common(validate, g);

  auto* propagate = app.add_subcommand("propagate", "sample the fundamental solution");
  add_common(propagate, g);
  propagate->add_option("--lambda", lambda_text, "spectral parameter, e.g. i or 1+2i");
  propagate->add_option("--a", span_a, "left end of the span")->required();
  propagate->add_option("--b", span_b, "right end of the span")->required();
  propagate->add_option("--points", points, "number of samples");

  auto* gauge = app.add_subcommand("gauge", "apply a structural reduction");
  add_common(gauge, g);
  gauge->add_option("--to", gauge_to, "canonical | constant-j | sl-embed | square")
      ->required();
  gauge->add_option("--a", span_a, "left end of the sampling span");
  gauge->add_option("--b", span_b, "right end of the sampling span");
  gauge->add_option("--grid", grid, "samples of a numeric gauge output");

  auto* gram = app.add_subcommand("gram", "Gram matrix, rank and definiteness");
  add_common(gram, g);
  gram->add_option("--lambda", lambda_text, "spectral parameter");
  gram->add_option("--a", span_a, "left end of the Gram interval");
  gram->add_option("--b", span_b, "right end of the Gram interval");

  auto* deficiency = app.add_subcommand("deficiency", "estimate the deficiency indices");
  add_common(deficiency, g);
  deficiency->add_option("--lambda-grid", lambda_grid,
                         "comma-separated upper-half-plane probes, e.g. i,2i,1+1i");

  auto* criteria = app.add_subcommand("criteria", "evaluate the registered criteria");
  add_common(criteria, g, false);
  criteria->add_option("--id", criteria_id, "criterion id or 'all'");
  criteria->add_option("--explain", explain_id, "print the statement of one criterion");
  criteria->add_option("--q", q_expr, "lower-control function q(x) for V >= -qH");

  auto* analyze = app.add_subcommand("analyze", "full pipeline with a JSON report");
  add_common(analyze, g);

  auto* example = app.add_subcommand("example", "run a registered example and diff");
  add_common(example, g, false);
  example->add_option("id", example_id, "example id (see: list examples)")->required();

  auto* list = app.add_subcommand("list", "list criteria or examples");
  add_common(list, g, false);
  list->add_option("kind", list_kind, "criteria | examples")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(validate)) return cmd_validate(g);
    if (app.got_subcommand(propagate))
      return cmd_propagate(g, lambda_text, span_a, span_b, points);
    if (app.got_subcommand(gauge)) return cmd_gauge(g, gauge_to, span_a, span_b, grid);
    if (app.got_subcommand(gram)) return cmd_gram(g, lambda_text, span_a, span_b);
    if (app.got_subcommand(deficiency)) return cmd_deficiency(g, lambda_grid);
    if (app.got_subcommand(criteria))
      return cmd_criteria(g, criteria_id, explain_id, q_expr);
    if (app.got_subcommand(analyze)) return cmd_analyze(g);
    if (app.got_subcommand(example)) return cmd_example(g, example_id);
    if (app.got_subcommand(list)) return cmd_list(g, list_kind);
  } catch (const SpecError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
