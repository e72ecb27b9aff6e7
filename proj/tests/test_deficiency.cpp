#include <doctest.h>

#include "hamsys/deficiency.hpp"
#include "hamsys/fixtures.hpp"
#include "hamsys/gauge.hpp"

using namespace hamsys;

TEST_CASE("signature of iJ(x0)") {
  SUBCASE("standard symplectic J") {
    SignatureReport rep = signature_kappa(fixture("kac-krein").spec.system());
    CHECK(rep.kappa_plus == 1);
    CHECK(rep.kappa_minus == 1);
  }
  SUBCASE("diag(i,-i)") {
    SignatureReport rep = signature_kappa(fixture("ex3.1").spec.system());
    CHECK(rep.kappa_plus == 1);
    CHECK(rep.kappa_minus == 1);
  }
  SUBCASE("J = iI is definite: (0, n)") {
    SystemSpec s = parse_system(R"JSON({"n":2,"interval":{"kind":"half-line-positive","a":0},
      "J":[["i","0"],["0","i"]],"H":[["1","0"],["0","1"]]})JSON");
    SignatureReport rep = signature_kappa(s);
    CHECK(rep.kappa_plus == 0);
    CHECK(rep.kappa_minus == 2);
  }
  SUBCASE("near-singular J is rejected") {
    SystemSpec s = parse_system(R"JSON({"n":1,"interval":{"kind":"half-line-positive","a":0},
      "J":[["i*1e-14"]],"H":[["1"]]})JSON");
    CHECK_THROWS_AS(signature_kappa(s), NumericsError);
  }
}

TEST_CASE("square-integrable solution counts for the diagonal example") {
  SystemSpec s = fixture("ex3.1").spec.system();
  GrowthClassification up = l2_solution_count(s, Complex(0, 1));
  CHECK(up.bounded == 1);
  CHECK(up.divergent == 1);
  CHECK(up.inconclusive == 0);
  GrowthClassification down = l2_solution_count(s, Complex(0, -1));
  CHECK(down.bounded == 2);
  CHECK(down.inconclusive == 0);
}

TEST_CASE("exponential dichotomy of the identity weight") {
  SystemSpec s = fixture("kac-krein").spec.system();
  GrowthClassification cls = l2_solution_count(s, Complex(0, 1));
  CHECK(cls.bounded == 1);
  CHECK(cls.divergent == 1);
  CHECK(cls.trajectories[1].model == "exponential");
}

TEST_CASE("zero Hamiltonian: every trajectory sits at zero and is bounded") {
  SystemSpec s = parse_system(R"JSON({"n":2,"interval":{"kind":"half-line-positive","a":0},
    "J":[["0","1"],["-1","0"]],"H":[["0","0"],["0","0"]]})JSON");
  GrowthClassification cls = l2_solution_count(s, Complex(0, 1));
  CHECK(cls.bounded == 2);
}

TEST_CASE("trajectories are monotone in the truncation") {
  SystemSpec s = fixture("ex3.1").spec.system();
  for (Complex lam : {Complex(0, 1), Complex(0, -1)}) {
    GrowthClassification cls = l2_solution_count(s, lam);
    for (std::size_t k = 0; k + 1 < cls.mu.size(); ++k)
      for (int j = 0; j < 2; ++j) CHECK(cls.mu[k + 1][j] >= cls.mu[k][j] - 1e-10);
  }
}

TEST_CASE("formal indices with kernel corrections") {
  DeficiencyReport rep = formal_deficiency_indices(fixture("r3.1-4").spec.system());
  CHECK(rep.n_plus == 1);
  CHECK(rep.n_minus == 1);
  CHECK(rep.rank == 1);
  CHECK(rep.N_plus == 0);
  CHECK(rep.N_minus == 0);
  CHECK(rep.invariants_ok);
  CHECK(rep.conclusive);
}

TEST_CASE("half-line inequalities hold on every shipped half-line fixture") {
  for (const auto& f : fixture_registry()) {
    SystemSpec s = f.spec.is_system() ? f.spec.system()
                                      : embed_sturm_liouville(f.spec.sturm_liouville());
    if (s.interval.kind != IntervalSpec::Kind::HalfLinePositive) continue;
    DeficiencyReport rep = formal_deficiency_indices(s);
    CAPTURE(f.id);
    CHECK(rep.invariants_ok);
    CHECK(rep.kappa_plus <= rep.n_plus);
    CHECK(rep.n_plus <= rep.n);
    CHECK(rep.kappa_minus <= rep.n_minus);
    CHECK(rep.n_minus <= rep.n);
    CHECK(rep.n_plus + rep.n_minus >= rep.n);
  }
}

TEST_CASE("real-coefficient systems have equal indices") {
  for (const char* id : {"kac-krein", "r3.1-4", "ml-s5.33", "canonical-decay"}) {
    DeficiencyReport rep = formal_deficiency_indices(fixture(id).spec.system());
    CAPTURE(id);
    CHECK(rep.n_plus == rep.n_minus);
  }
}

TEST_CASE("finite-interval indices: n~ = n and N = rank") {
  SUBCASE("constant-coefficient example") {
    FiniteIntervalIndices fin = finite_interval_indices(fixture("ml-s2.2").spec.system());
    CHECK(fin.n_plus == 2);
    CHECK(fin.n_minus == 2);
    CHECK(fin.N_plus == 1);
    CHECK(fin.N_minus == 1);
    CHECK(fin.crosscheck_ok);
  }
  SUBCASE("identity weight on the unit interval") {
    SystemSpec s = parse_system(R"JSON({"n":2,"interval":{"kind":"finite","a":0,"b":1,"x0":0},
      "J":[["0","1"],["-1","0"]],"H":[["1","0"],["0","1"]]})JSON");
    FiniteIntervalIndices fin = finite_interval_indices(s);
    CHECK(fin.N_plus == 2);
    CHECK(fin.N_minus == 2);
    CHECK(fin.crosscheck_ok);
  }
}

TEST_CASE("solution counts are constant over each half-plane") {
  SUBCASE("diagonal example") {
    LambdaConstancyReport rep = lambda_constancy_check(
        fixture("ex3.1").spec.system(), {Complex(0, 1), Complex(0, 2), Complex(1, 1)});
    for (int c : rep.counts_upper) CHECK(c == 1);
    for (int c : rep.counts_lower) CHECK(c == 2);
  }
  SUBCASE("identity weight") {
    LambdaConstancyReport rep = lambda_constancy_check(fixture("kac-krein").spec.system(),
                                                       {Complex(0, 1), Complex(1, 1)});
    for (int c : rep.counts_upper) CHECK(c == 1);
    for (int c : rep.counts_lower) CHECK(c == 1);
  }
  SUBCASE("real parameters are rejected in the grid") {
    CHECK_THROWS_AS(
        lambda_constancy_check(fixture("kac-krein").spec.system(), {Complex(1, 0)}),
        SpecError);
  }
}

TEST_CASE("composition of half-line indices over the line") {
  SUBCASE("diagonal identity-weight system composes to zero") {
    SystemSpec line = parse_system(R"JSON({"n":2,"interval":{"kind":"full-line","x0":0},
      "J":[["i","0"],["0","-i"]],"H":[["1","0"],["0","1"]]})JSON");
    SystemSpec plus = line.restricted(IntervalSpec::half_line_positive(0.0));
    SystemSpec minus = line.restricted(IntervalSpec::half_line_negative(0.0));
    DeficiencyReport rp = formal_deficiency_indices(plus);
    DeficiencyReport rm = formal_deficiency_indices(minus);
    CHECK(rp.n_plus == 1);
    CHECK(rm.n_plus == 1);
    DeficiencyReport glued = glue_line_indices(rp, rm, line);
    CHECK(glued.n_plus == 0);
    CHECK(glued.n_minus == 0);
    // direct two-ended classification agrees
    DeficiencyReport direct = formal_deficiency_indices(line);
    CHECK(direct.n_plus == 0);
    CHECK(direct.n_minus == 0);
  }
  SUBCASE("non-definite half-lines are refused") {
    SystemSpec line = parse_system(R"JSON({"n":2,"interval":{"kind":"full-line","x0":0},
      "J":[["0","1"],["-1","0"]],"H":[["1","0"],["0","0"]]})JSON");
    SystemSpec plus = line.restricted(IntervalSpec::half_line_positive(0.0));
    SystemSpec minus = line.restricted(IntervalSpec::half_line_negative(0.0));
    DeficiencyReport rp = formal_deficiency_indices(plus);
    DeficiencyReport rm = formal_deficiency_indices(minus);
    CHECK_THROWS_AS(glue_line_indices(rp, rm, line), GlueRefusal);
  }
}

TEST_CASE("maximal indices imply a full bounded count at lambda = 0") {
  SystemSpec s = fixture("canonical-decay").spec.system();
  DeficiencyReport rep = formal_deficiency_indices(s);
  REQUIRE(rep.n_plus == 2);
  REQUIRE(rep.n_minus == 2);
  GrowthClassification at0 = l2_solution_count(s, Complex(0, 0));
  CHECK(at0.bounded == 2);
}

TEST_CASE("six-dimensional block example classifies cleanly") {
  DeficiencyReport rep = formal_deficiency_indices(fixture("ex3.3").spec.system());
  CHECK(rep.n_plus == 4);
  CHECK(rep.n_minus == 5);
  CHECK(rep.conclusive);
  CHECK(rep.invariants_ok);
}
