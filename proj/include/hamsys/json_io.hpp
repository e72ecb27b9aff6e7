#pragma once

#include <json.hpp>
#include <variant>

#include "hamsys/system.hpp"

namespace hamsys {

using Json = nlohmann::ordered_json;

/// A loaded problem: either a first-order system (J,B,H) or a
/// Sturm-Liouville problem (A,Q,R,H).
struct ProblemSpec {
  std::variant<SystemSpec, SturmLiouvilleSpec> value;

  bool is_system() const { return std::holds_alternative<SystemSpec>(value); }
  const SystemSpec& system() const { return std::get<SystemSpec>(value); }
  const SturmLiouvilleSpec& sturm_liouville() const {
    return std::get<SturmLiouvilleSpec>(value);
  }
  std::string label() const {
    return is_system() ? system().label : sturm_liouville().label;
  }
};

SystemSpec parse_system(const std::string& text);
SystemSpec system_from_json(const Json& j);
SturmLiouvilleSpec sturm_liouville_from_json(const Json& j);
ProblemSpec parse_problem(const std::string& text);
ProblemSpec load_problem_file(const std::string& path);

Json system_to_json(const SystemSpec& s);
Json sturm_liouville_to_json(const SturmLiouvilleSpec& s);
Json interval_to_json(const IntervalSpec& iv);
IntervalSpec interval_from_json(const Json& j);

Json complex_to_json(const Complex& z);
Json matrix_to_json(const Matrix& m);
Json real_matrix_to_json(const Eigen::MatrixXd& m);
Complex parse_complex(const std::string& text);  // forms like "1+2i", "-i", "3"

Json validation_to_json(const ValidationReport& rep);

}  // namespace hamsys
