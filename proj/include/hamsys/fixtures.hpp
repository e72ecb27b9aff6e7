#pragma once

#include <map>

#include "hamsys/json_io.hpp"

namespace hamsys {

/// Expected outputs of a worked example, with a note on how each number was
/// obtained ("closed-form solutions", "direct integration", ...).
struct ExpectedValues {
  std::optional<int> rank;
  std::optional<bool> definite;
  std::optional<int> n_plus, n_minus;  // formal indices
  std::optional<int> N_plus, N_minus;  // ordinary indices
  std::map<std::string, std::string> criterion_status;  // id -> holds/fails
  std::string source;
};

struct ExampleFixture {
  std::string id;
  std::string description;  // what the example demonstrates
  ProblemSpec spec;
  ExpectedValues expected;
};

const std::vector<ExampleFixture>& fixture_registry();
const ExampleFixture& fixture(const std::string& id);
bool has_fixture(const std::string& id);

}  // namespace hamsys
