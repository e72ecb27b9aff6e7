#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "hamsys/analysis.hpp"

using namespace hamsys;

namespace {

struct CommandResult {
  int exit_code;
  std::string output;
};

CommandResult run_cli(const std::string& args) {
  std::string cmd = std::string(HAMSYS_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  while (size_t n = fread(buf, 1, sizeof(buf), pipe)) out.append(buf, n);
  int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

std::string write_temp(const std::string& name, const std::string& text) {
  std::string path = std::string("/tmp/hamsys_test_") + name + ".json";
  std::ofstream f(path);
  f << text;
  return path;
}

}  // namespace

TEST_CASE("analysis reports are byte-stable given identical inputs") {
  AnalysisOptions opts;
  AnalysisReport a = analyze_problem(fixture("r3.1-4").spec, opts);
  AnalysisReport b = analyze_problem(fixture("r3.1-4").spec, opts);
  Json ja = a.json, jb = b.json;
  ja.erase("timings");
  jb.erase("timings");
  CHECK(ja.dump() == jb.dump());
}

TEST_CASE("analysis report structure") {
  AnalysisReport rep = analyze_problem(fixture("ml-s2.2").spec);
  const Json& j = rep.json;
  CHECK(j["tool"] == "hamsys");
  CHECK(j.contains("version"));
  CHECK(j.contains("parameters"));
  CHECK(j["validation"]["pass"].get<bool>());
  CHECK(j["rank_report"]["rank"].get<int>() == 1);
  CHECK(j["deficiency"]["n_plus"].get<int>() == 2);
  CHECK(j["criteria"].is_array());
  CHECK(j["conjugation_identity"]["max_defect"].get<double>() <= 1e-7);
  CHECK(j.contains("timings"));
  CHECK_FALSE(rep.inconclusive_core);
}

TEST_CASE("sturm-liouville analysis embeds and reports both validations") {
  AnalysisReport rep = analyze_problem(fixture("sl-quartic").spec);
  CHECK(rep.json.contains("embedded_validation"));
  CHECK(rep.json["deficiency"]["n_plus"].get<int>() == 2);
}

TEST_CASE("line analysis reports the half-line composition") {
  AnalysisReport rep = analyze_problem(fixture("line-glue").spec);
  REQUIRE(rep.json.contains("glue"));
  CHECK_FALSE(rep.json["glue"]["refused"].get<bool>());
  CHECK(rep.json["glue"]["n_plus"].get<int>() == 2);
  CHECK(rep.json["glue"]["matches_direct"].get<bool>());
}

TEST_CASE("every registered example reproduces its expectations") {
  for (const auto& f : fixture_registry()) {
    ExampleRun run = run_example(f.id);
    CAPTURE(f.id);
    for (const auto& m : run.mismatches) CAPTURE(m);
    CHECK(run.pass);
  }
}

TEST_CASE("thread cap parser") {
  CHECK(effective_thread_cap(4) == 4);
  CHECK(effective_thread_cap(0) >= 1);
}

TEST_CASE("parallel map preserves order and propagates work") {
  std::vector<int> out(16, 0);
  std::vector<std::function<void()>> tasks;
  for (int k = 0; k < 16; ++k) tasks.push_back([&out, k] { out[k] = k * k; });
  run_parallel(tasks, 4);
  for (int k = 0; k < 16; ++k) CHECK(out[k] == k * k);
}

TEST_CASE("cli: list commands") {
  CommandResult criteria = run_cli("list criteria");
  CHECK(criteria.exit_code == 0);
  int lines = 0;
  for (char c : criteria.output)
    if (c == '\n') ++lines;
  CHECK(lines >= 18);

  CommandResult examples = run_cli("list examples --json");
  CHECK(examples.exit_code == 0);
  Json arr = Json::parse(examples.output);
  CHECK(arr.size() >= 9);
}

TEST_CASE("cli: exit-code contract") {
  SUBCASE("malformed file exits 2 with a diagnostic") {
    std::string path = write_temp("malformed", "{ not json");
    CommandResult r = run_cli("analyze --spec " + path);
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("error") != std::string::npos);
  }
  SUBCASE("validation failure exits 2") {
    std::string path = write_temp("notskew",
                                  R"({"n":2,"J":[["0","1"],["1","0"]],
                                      "H":[["1","0"],["0","1"]]})");
    CommandResult r = run_cli("validate --spec " + path);
    CHECK(r.exit_code == 2);
  }
  SUBCASE("clean system analyzes with exit 0") {
    std::string path = write_temp("clean",
                                  R"({"n":2,"interval":{"kind":"finite","a":0,"b":1,"x0":0.5},
                                      "J":[["0","1"],["-1","0"]],
                                      "H":[["1","0"],["0","1"]]})");
    CommandResult r = run_cli("analyze --spec " + path);
    CHECK(r.exit_code == 0);
  }
}

TEST_CASE("cli: example runner and criteria subcommand") {
  CommandResult ok = run_cli("example ml-s2.2");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("PASS") != std::string::npos);

  CommandResult unknown = run_cli("example not-a-fixture");
  CHECK(unknown.exit_code == 2);

  CommandResult explain = run_cli("criteria --explain line-self-adjoint");
  CHECK(explain.exit_code == 0);
  CHECK(explain.output.find("self-adjoint") != std::string::npos);
}

TEST_CASE("cli: gram subcommand emits the matrix and rank report") {
  std::string path = write_temp("gram",
                                R"({"n":2,"interval":{"kind":"finite","a":0,"b":1,"x0":0},
                                    "J":[["0","1"],["-1","0"]],
                                    "H":[["1","0"],["0","0"]]})");
  CommandResult r = run_cli("gram --spec " + path + " --lambda 0 --a 0 --b 1 --json");
  CHECK(r.exit_code == 0);
  Json j = Json::parse(r.output);
  CHECK(j["rank"].get<int>() == 1);
  CHECK(j["matrix"][0][0][0].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cli: deficiency subcommand carries the raw trajectory tables") {
  std::string path = write_temp("deficiency",
                                R"({"n":2,"interval":{"kind":"half-line-positive","a":0},
                                    "J":[["i","0"],["0","-i"]],
                                    "H":[["1","0"],["0","(1+x)^-2"]]})");
  CommandResult r =
      run_cli("deficiency --spec " + path + " --tmax-exponent 10 --json");
  CHECK(r.exit_code == 0);
  Json j = Json::parse(r.output);
  CHECK(j["n_plus"].get<int>() == 1);
  CHECK(j["n_minus"].get<int>() == 2);
  CHECK(j["trajectories"]["at_plus_i"]["mu_log"].size() >= 5);
}
