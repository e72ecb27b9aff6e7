#pragma once

#include "hamsys/criteria.hpp"
#include "hamsys/fixtures.hpp"

namespace hamsys {

struct AnalysisOptions {
  ValidationOptions validation;
  DeficiencyOptions deficiency;
  CriteriaOptions criteria;
  RankOptions rank;
  unsigned long seed = 12345;
  int symplectic_points = 8;
  bool run_criteria = true;
  int max_threads = 0;  // 0: HAMSYS_THREADS or hardware concurrency
};

struct AnalysisReport {
  Json json;                      // byte-stable payload (timings segregated)
  bool validation_pass = false;
  bool inconclusive_core = false; // rank or the +-i classifications inconclusive
};

/// validate -> rank/definiteness -> deficiency -> criteria, as one report.
AnalysisReport analyze_problem(const ProblemSpec& spec, const AnalysisOptions& opts = {});

/// Embedded 2n-system of a problem (identity embedding for plain systems).
SystemSpec effective_system(const ProblemSpec& spec);

struct ExampleRun {
  AnalysisReport report;
  bool pass = true;
  std::vector<std::string> mismatches;
};

ExampleRun run_example(const std::string& id, const AnalysisOptions& opts = {});

/// Bounded-concurrency map over a batch of tasks; results keep input order.
/// Cap: max_threads, else HAMSYS_THREADS, else the hardware concurrency.
void run_parallel(const std::vector<std::function<void()>>& tasks, int max_threads = 0);
int effective_thread_cap(int requested = 0);

}  // namespace hamsys
