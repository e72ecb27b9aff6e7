#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hamsys/analysis.hpp"
#include "hamsys/gauge.hpp"

namespace py = pybind11;
using namespace hamsys;

namespace {

py::object json_to_py(const Json& j) {
  py::module_ json = py::module_::import("json");
  return json.attr("loads")(j.dump());
}

AnalysisOptions options_from_kwargs(int tmax_exponent, double tol_ode, unsigned long seed) {
  AnalysisOptions opts;
  opts.deficiency.tmax_exponent = tmax_exponent;
  opts.deficiency.prop.rtol = tol_ode;
  opts.deficiency.prop.atol = std::min(1e-12, tol_ode * 0.01);
  opts.seed = seed;
  return opts;
}

}  // namespace

PYBIND11_MODULE(_hamsys, m) {
  m.doc() = "analysis of symmetric first-order systems J f' + B f = lambda H f";
  m.attr("__version__") = HAMSYS_VERSION;

  py::register_exception<SpecError>(m, "SpecError");
  py::register_exception<NumericsError>(m, "NumericsError");
  py::register_exception<ParseError>(m, "ExpressionParseError");

  py::class_<ProblemSpec>(m, "Problem")
      .def_property_readonly("label", &ProblemSpec::label)
      .def_property_readonly("is_system", [](const ProblemSpec& p) { return p.is_system(); })
      .def_property_readonly("n",
                             [](const ProblemSpec& p) {
                               return p.is_system() ? p.system().n : p.sturm_liouville().n;
                             })
      .def("validate",
           [](const ProblemSpec& p) {
             if (p.is_system())
               return json_to_py(validation_to_json(validate_system(p.system())));
             return json_to_py(
                 validation_to_json(validate_sturm_liouville(p.sturm_liouville())));
           })
      .def(
          "analyze",
          [](const ProblemSpec& p, int tmax_exponent, double tol_ode, unsigned long seed) {
            AnalysisReport rep =
                analyze_problem(p, options_from_kwargs(tmax_exponent, tol_ode, seed));
            return json_to_py(rep.json);
          },
          py::arg("tmax_exponent") = 12, py::arg("tol_ode") = 1e-10,
          py::arg("seed") = 12345)
      .def(
          "deficiency_indices",
          [](const ProblemSpec& p, int tmax_exponent) {
            DeficiencyOptions opts;
            opts.tmax_exponent = tmax_exponent;
            SystemSpec s = effective_system(p);
            if (s.interval.kind == IntervalSpec::Kind::Finite) {
              FiniteIntervalIndices fin = finite_interval_indices(s, opts);
              return py::make_tuple(fin.n_plus, fin.n_minus, fin.N_plus, fin.N_minus);
            }
            DeficiencyReport rep = formal_deficiency_indices(s, opts);
            return py::make_tuple(rep.n_plus, rep.n_minus, rep.N_plus, rep.N_minus);
          },
          py::arg("tmax_exponent") = 12)
      .def("rank",
           [](const ProblemSpec& p) {
             RankReport rep = rank_of_system(effective_system(p));
             return py::make_tuple(rep.rank, rep.stabilized);
           })
      .def("is_definite",
           [](const ProblemSpec& p) { return is_definite(effective_system(p)).definite; })
      .def(
          "evaluate_criterion",
          [](const ProblemSpec& p, const std::string& id, py::object q) {
            CriteriaOptions opts;
            if (!q.is_none()) opts.q_expression = q.cast<std::string>();
            return json_to_py(verdict_to_json(evaluate_criterion(id, p, opts)));
          },
          py::arg("id"), py::arg("q") = py::none())
      .def("criteria", [](const ProblemSpec& p) {
        Json arr = Json::array();
        for (const auto& v : evaluate_all_criteria(p)) arr.push_back(verdict_to_json(v));
        return json_to_py(arr);
      });

  m.def("load", [](const std::string& text) { return parse_problem(text); },
        "parse a problem from JSON text");
  m.def("load_file", [](const std::string& path) { return load_problem_file(path); },
        "load a problem from a JSON file");

  m.def("criteria_registry", [] {
    Json arr = Json::array();
    for (const auto& info : criteria_registry())
      arr.push_back(Json{{"id", info.id},
                         {"statement", info.statement},
                         {"applies_to", info.applies_to},
                         {"equivalence", info.equivalence}});
    return json_to_py(arr);
  });

  m.def("examples", [] {
    std::vector<std::string> out;
    for (const auto& f : fixture_registry()) out.push_back(f.id);
    return out;
  });

  m.def(
      "run_example",
      [](const std::string& id, int tmax_exponent) {
        AnalysisOptions opts;
        opts.deficiency.tmax_exponent = tmax_exponent;
        ExampleRun run = run_example(id, opts);
        return json_to_py(run.report.json);
      },
      py::arg("id"), py::arg("tmax_exponent") = 12);

  m.def("example_spec", [](const std::string& id) { return fixture(id).spec; });
}
