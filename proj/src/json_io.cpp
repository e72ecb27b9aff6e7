#include "hamsys/json_io.hpp"

#include <cmath>
#include <fstream>

namespace hamsys {

namespace {

double endpoint_from_json(const Json& j, double fallback) {
  if (j.is_null()) return fallback;
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw SpecError("bad interval endpoint '" + s + "'");
  }
  throw SpecError("bad interval endpoint");
}

MatrixFunction matrix_from_json(const Json& j, int n, const std::string& name) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    throw SpecError("field '" + name + "' must be an " + std::to_string(n) + "x" +
                    std::to_string(n) + " array of expression strings");
  MatrixFunction m(n);
  for (int i = 0; i < n; ++i) {
    const Json& row = j[i];
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw SpecError("field '" + name + "', row " + std::to_string(i) +
                      ": expected " + std::to_string(n) + " entries");
    for (int k = 0; k < n; ++k) {
      const Json& cell = row[k];
      try {
        if (cell.is_number()) {
          m.at(i, k) = Expression::number(cell.get<double>());
        } else if (cell.is_string()) {
          m.at(i, k) = Expression::parse(cell.get<std::string>());
        } else {
          throw SpecError("entry must be a number or an expression string");
        }
      } catch (const ParseError& e) {
        throw SpecError("field '" + name + "' entry (" + std::to_string(i) + "," +
                        std::to_string(k) + "): " + e.what());
      }
    }
  }
  return m;
}

}  // namespace

IntervalSpec interval_from_json(const Json& j) {
  if (!j.is_object()) throw SpecError("'interval' must be an object");
  std::string kind = j.value("kind", "half-line-positive");
  IntervalSpec iv;
  if (kind == "finite") {
    double a = endpoint_from_json(j.contains("a") ? j["a"] : Json(), 0.0);
    double b = endpoint_from_json(j.contains("b") ? j["b"] : Json(), 1.0);
    double x0 = j.value("x0", (a + b) / 2.0);
    iv = IntervalSpec::finite(a, b, x0);
  } else if (kind == "half-line-positive") {
    double a = endpoint_from_json(j.contains("a") ? j["a"] : Json(), 0.0);
    iv = IntervalSpec::half_line_positive(a);
    if (j.contains("x0")) iv.x0 = j["x0"].get<double>();
  } else if (kind == "half-line-negative") {
    double b = endpoint_from_json(j.contains("b") ? j["b"] : Json(), 0.0);
    iv = IntervalSpec::half_line_negative(b);
    if (j.contains("x0")) iv.x0 = j["x0"].get<double>();
  } else if (kind == "full-line") {
    iv = IntervalSpec::full_line();
    if (j.contains("x0")) iv.x0 = j["x0"].get<double>();
  } else {
    throw SpecError("unknown interval kind '" + kind + "'");
  }
  if (!std::isfinite(iv.x0) || iv.x0 < iv.a || iv.x0 > iv.b)
    throw SpecError("basepoint x0 outside the interval");
  return iv;
}

Json interval_to_json(const IntervalSpec& iv) {
  Json j;
  j["kind"] = iv.kind_name();
  j["a"] = std::isfinite(iv.a) ? Json(iv.a) : Json("-inf");
  j["b"] = std::isfinite(iv.b) ? Json(iv.b) : Json("inf");
  j["x0"] = iv.x0;
  return j;
}

SystemSpec system_from_json(const Json& j) {
  if (!j.contains("n")) throw SpecError("missing field 'n'");
  int n = j["n"].get<int>();
  if (n < 1) throw SpecError("dimension n must be >= 1");
  SystemSpec s;
  s.n = n;
  s.interval = j.contains("interval") ? interval_from_json(j["interval"])
                                      : IntervalSpec::half_line_positive();
  for (const char* f : {"J", "H"})
    if (!j.contains(f)) throw SpecError(std::string("missing field '") + f + "'");
  s.J = CoeffField(matrix_from_json(j["J"], n, "J"));
  s.B = CoeffField(j.contains("B") ? matrix_from_json(j["B"], n, "B") : MatrixFunction::zero(n));
  s.H = CoeffField(matrix_from_json(j["H"], n, "H"));
  s.label = j.value("label", "");
  return s;
}

SturmLiouvilleSpec sturm_liouville_from_json(const Json& j) {
  if (!j.contains("n")) throw SpecError("missing field 'n'");
  int n = j["n"].get<int>();
  if (n < 1) throw SpecError("dimension n must be >= 1");
  SturmLiouvilleSpec s;
  s.n = n;
  s.interval = j.contains("interval") ? interval_from_json(j["interval"])
                                      : IntervalSpec::half_line_positive();
  s.A = j.contains("A") ? matrix_from_json(j["A"], n, "A") : MatrixFunction::identity(n);
  s.Q = j.contains("Q") ? matrix_from_json(j["Q"], n, "Q") : MatrixFunction::zero(n);
  s.R = j.contains("R") ? matrix_from_json(j["R"], n, "R") : MatrixFunction::zero(n);
  if (!j.contains("H")) throw SpecError("missing field 'H'");
  s.H = matrix_from_json(j["H"], n, "H");
  s.label = j.value("label", "");
  return s;
}

ProblemSpec parse_problem(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError(std::string("JSON parse error: ") + e.what());
  }
  ProblemSpec p;
  if (j.contains("J")) p.value = system_from_json(j);
  else if (j.contains("A") || j.contains("R") || j.contains("Q"))
    p.value = sturm_liouville_from_json(j);
  else throw SpecError("spec must contain either J,B,H or A,Q,R,H");
  return p;
}

SystemSpec parse_system(const std::string& text) {
  ProblemSpec p = parse_problem(text);
  if (!p.is_system()) throw SpecError("expected a first-order system spec");
  return p.system();
}

ProblemSpec load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_problem(text);
}

namespace {

Json matrix_function_to_json(const MatrixFunction& m) {
  Json rows = Json::array();
  for (int i = 0; i < m.dim(); ++i) {
    Json row = Json::array();
    for (int k = 0; k < m.dim(); ++k) row.push_back(m.at(i, k).to_string());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

Json system_to_json(const SystemSpec& s) {
  Json j;
  j["n"] = s.n;
  j["interval"] = interval_to_json(s.interval);
  if (s.J.symbolic() && s.B.symbolic() && s.H.symbolic()) {
    j["J"] = matrix_function_to_json(s.J.sym());
    j["B"] = matrix_function_to_json(s.B.sym());
    j["H"] = matrix_function_to_json(s.H.sym());
  } else {
    j["form"] = "sampled";
  }
  if (!s.label.empty()) j["label"] = s.label;
  return j;
}

Json sturm_liouville_to_json(const SturmLiouvilleSpec& s) {
  Json j;
  j["n"] = s.n;
  j["interval"] = interval_to_json(s.interval);
  j["A"] = matrix_function_to_json(s.A);
  j["Q"] = matrix_function_to_json(s.Q);
  j["R"] = matrix_function_to_json(s.R);
  j["H"] = matrix_function_to_json(s.H);
  if (!s.label.empty()) j["label"] = s.label;
  return j;
}

Json complex_to_json(const Complex& z) { return Json::array({z.real(), z.imag()}); }

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(row);
  }
  return rows;
}

Json real_matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Complex parse_complex(const std::string& text) {
  // accepted forms: "2", "-1.5", "i", "-i", "2i", "1+2i", "1-i", "0.5+0.5i"
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw SpecError("empty complex literal");

  auto parse_part = [](const std::string& part, bool& is_imag) -> double {
    is_imag = false;
    std::string p = part;
    if (!p.empty() && p.back() == 'i') {
      is_imag = true;
      p.pop_back();
      if (p.empty() || p == "+") return 1.0;
      if (p == "-") return -1.0;
    }
    size_t used = 0;
    double v = std::stod(p, &used);
    if (used != p.size()) throw SpecError("bad complex literal part '" + part + "'");
    return v;
  };

  // split at the last +/- that is not a leading sign and not part of an exponent
  size_t split = std::string::npos;
  for (size_t k = 1; k < s.size(); ++k) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') split = k;
  }
  try {
    if (split == std::string::npos) {
      bool imag;
      double v = parse_part(s, imag);
      return imag ? Complex(0.0, v) : Complex(v, 0.0);
    }
    bool imag1, imag2;
    double v1 = parse_part(s.substr(0, split), imag1);
    double v2 = parse_part(s.substr(split), imag2);
    Complex z(0.0, 0.0);
    (imag1 ? z.imag(v1) : z.real(v1));
    if (imag2) z.imag(z.imag() + v2);
    else z.real(z.real() + v2);
    return z;
  } catch (const std::exception&) {
    throw SpecError("bad complex literal '" + text + "'");
  }
}

Json validation_to_json(const ValidationReport& rep) {
  Json j;
  j["pass"] = rep.pass;
  j["hard_fail"] = rep.hard_fail;
  j["grid_points"] = rep.grid_points;
  j["tol_struct"] = rep.tol_struct;
  j["tol_hard"] = rep.tol_hard;
  if (!rep.error.empty()) j["error"] = rep.error;
  Json conds = Json::array();
  for (const auto& c : rep.conditions) {
    Json cj;
    cj["name"] = c.name;
    cj["worst_defect"] = c.worst_defect;
    cj["worst_location"] = c.worst_location;
    cj["status"] = c.status == ConditionReport::Status::Pass
                       ? "pass"
                       : (c.status == ConditionReport::Status::Warn ? "warn" : "fail");
    if (!c.detail.empty()) cj["detail"] = c.detail;
    conds.push_back(cj);
  }
  j["conditions"] = conds;
  return j;
}

}  // namespace hamsys
