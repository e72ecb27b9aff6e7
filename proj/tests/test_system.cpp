#include <doctest.h>

#include <random>

#include "hamsys/fixtures.hpp"
#include "hamsys/gauge.hpp"
#include "hamsys/json_io.hpp"

using namespace hamsys;

TEST_CASE("parse_system accepts the documented JSON layout") {
  SystemSpec s = parse_system(R"JSON({
    "n": 2,
    "interval": {"kind": "finite", "a": 0, "b": 1, "x0": 0.5},
    "J": [["0","1"],["-1","0"]],
    "B": [["0","0"],["0","0"]],
    "H": [["1","0"],["0","0"]],
    "label": "toy"
  })JSON");
  CHECK(s.n == 2);
  CHECK(s.label == "toy");
  CHECK(s.J.eval(0.3)(0, 1).real() == doctest::Approx(1.0));
  CHECK(s.H.eval(0.3)(1, 1).real() == doctest::Approx(0.0));
}

TEST_CASE("smallest legal system: 1x1 with an imaginary J entry") {
  SystemSpec s = parse_system(R"JSON({"n":1,"interval":{"kind":"half-line-positive","a":0},
    "J":[["i"]],"H":[["1"]]})JSON");
  CHECK(s.n == 1);
  CHECK(s.J.eval(1.0)(0, 0) == Complex(0, 1));
  CHECK(validate_system(s).pass);
}

TEST_CASE("dimension mismatches are rejected with the offending field") {
  CHECK_THROWS_AS(parse_system(R"JSON({"n":2,"J":[["0","1","2"],["-1","0","0"]],
    "H":[["1","0"],["0","0"]]})JSON"),
                  SpecError);
  CHECK_THROWS_AS(parse_system(R"JSON({"n":2,"J":[["0","1"]],"H":[["1","0"],["0","0"]]})JSON"),
                  SpecError);
  CHECK_THROWS_AS(parse_system(R"JSON({"n":2,"H":[["1","0"],["0","0"]]})JSON"), SpecError);
  CHECK_THROWS_AS(parse_system(R"JSON({"n":2,"J":[["0","frob(x)"],["-1","0"]],
    "H":[["1","0"],["0","0"]]})JSON"),
                  SpecError);
}

TEST_CASE("validation accepts every shipped example at the strict tolerance") {
  for (const auto& f : fixture_registry()) {
    ValidationOptions opts;
    opts.grid_points = 1000;
    CAPTURE(f.id);
    if (f.spec.is_system()) {
      CHECK(validate_system(f.spec.system(), opts).pass);
    } else {
      CHECK(validate_sturm_liouville(f.spec.sturm_liouville(), opts).pass);
      CHECK(validate_system(embed_sturm_liouville(f.spec.sturm_liouville()), opts).pass);
    }
  }
}

TEST_CASE("validation flags a symmetric (non-skew) J") {
  SystemSpec s = parse_system(R"JSON({"n":2,"J":[["0","1"],["1","0"]],
    "H":[["1","0"],["0","1"]]})JSON");
  ValidationReport rep = validate_system(s);
  CHECK_FALSE(rep.pass);
  bool skew_failed = false;
  for (const auto& c : rep.conditions)
    if (c.name.find("skew") != std::string::npos &&
        c.status == ConditionReport::Status::Fail)
      skew_failed = true;
  CHECK(skew_failed);
}

TEST_CASE("validation reports evaluation failures with location") {
  SystemSpec s = parse_system(R"JSON({"n":1,"interval":{"kind":"finite","a":0,"b":1,"x0":0.5},
    "J":[["i"]],"H":[["log(x)"]]})JSON");
  ValidationReport rep = validate_system(s);
  CHECK_FALSE(rep.pass);
  CHECK(!rep.error.empty());
}

TEST_CASE("symbolic derivative of coefficient matrices") {
  MatrixFunction m(1, {Expression::parse("(1+x)^-2")});
  CHECK(m.derivative().eval(0.0)(0, 0).real() == doctest::Approx(-2.0));
  MatrixFunction sinm(1, {Expression::parse("sin(x)")});
  CHECK(sinm.derivative().eval(0.0)(0, 0).real() == doctest::Approx(1.0));
  MatrixFunction c = MatrixFunction::constant((Matrix(1, 1) << Complex(2, 3)).finished());
  CHECK(c.derivative().eval(5.0)(0, 0) == Complex(0, 0));
}

TEST_CASE("matrix evaluation matches hand arithmetic") {
  MatrixFunction h(2, {Expression::parse("(1+x)^-2"), Expression::number(0),
                       Expression::number(0), Expression::parse("(1+x)^-2")});
  Matrix v = h.eval(1.0);
  CHECK(v(0, 0).real() == doctest::Approx(0.25));
  CHECK(v(1, 1).real() == doctest::Approx(0.25));
  const auto& mark = fixture("mark-s1.11-1").spec.system();
  Matrix H0 = mark.H.eval(0.0);
  CHECK(H0(0, 0).real() == doctest::Approx(1.0));
  CHECK(H0(0, 1).real() == doctest::Approx(0.0));
  CHECK(H0(1, 1).real() == doctest::Approx(0.0));
}

TEST_CASE("spec serialization round-trips to an identical tree") {
  for (const char* id : {"ml-s2.2", "ex3.1", "ex3.6", "ml-s5.33"}) {
    const SystemSpec& s = fixture(id).spec.system();
    Json j = system_to_json(s);
    SystemSpec again = parse_system(j.dump());
    REQUIRE(again.n == s.n);
    for (int r = 0; r < s.n; ++r)
      for (int c = 0; c < s.n; ++c) {
        CAPTURE(id);
        CHECK(s.J.sym().at(r, c).same_as(again.J.sym().at(r, c)));
        CHECK(s.B.sym().at(r, c).same_as(again.B.sym().at(r, c)));
        CHECK(s.H.sym().at(r, c).same_as(again.H.sym().at(r, c)));
      }
  }
}

TEST_CASE("finite-difference agreement for all shipped coefficient entries") {
  std::mt19937_64 rng(7);
  for (const auto& f : fixture_registry()) {
    if (!f.spec.is_system()) continue;
    const SystemSpec& s = f.spec.system();
    auto bps = s.breakpoints();
    std::uniform_real_distribution<double> uni(
        s.interval.a + (std::isfinite(s.interval.a) ? 0.01 : 0.0),
        std::isfinite(s.interval.b) ? s.interval.b - 0.01 : s.interval.x0 + 20.0);
    for (const CoeffField* fld : {&s.J, &s.B, &s.H}) {
      if (!fld->symbolic()) continue;
      MatrixFunction d = fld->sym().derivative();
      for (int k = 0; k < 100; ++k) {
        double x = std::isfinite(s.interval.a) ? uni(rng)
                                               : s.interval.x0 + 0.01 + 20.0 * k / 99.0;
        bool near_kink = false;
        for (double b : bps)
          if (std::abs(x - b) < 1e-3) near_kink = true;
        if (near_kink) continue;
        double h = 1e-6;
        Matrix fd = (fld->eval(x + h) - fld->eval(x - h)) / (2 * h);
        Matrix sym = d.eval(x);
        double scale = 1.0 + sym.cwiseAbs().maxCoeff();
        CAPTURE(f.id);
        CHECK((sym - fd).cwiseAbs().maxCoeff() <= 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("complex literal parsing") {
  CHECK(parse_complex("i") == Complex(0, 1));
  CHECK(parse_complex("-i") == Complex(0, -1));
  CHECK(parse_complex("2") == Complex(2, 0));
  CHECK(parse_complex("1+2i") == Complex(1, 2));
  CHECK(parse_complex("1-i") == Complex(1, -1));
  CHECK(parse_complex("0.5+0.5i") == Complex(0.5, 0.5));
  CHECK_THROWS_AS(parse_complex("nonsense"), SpecError);
}
