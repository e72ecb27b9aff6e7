#include "hamsys/fixtures.hpp"

namespace hamsys {

namespace {

ExampleFixture make(const std::string& id, const std::string& description,
                    const std::string& spec_json, ExpectedValues expected) {
  ExampleFixture f;
  f.id = id;
  f.description = description;
  f.spec = parse_problem(spec_json);
  f.expected = std::move(expected);
  return f;
}

std::vector<ExampleFixture> build_registry() {
  std::vector<ExampleFixture> out;

  {
    ExpectedValues e;
    e.rank = 1;
    e.definite = false;
    e.n_plus = e.n_minus = 2;
    e.N_plus = e.N_minus = 1;
    e.source = "constant coefficients; the Gram matrix integrates to diag(1,0)";
    out.push_back(make(
        "ml-s2.2",
        "finite-interval system whose relation is neither densely defined nor single-valued",
        R"JSON({"n":2,"interval":{"kind":"finite","a":0,"b":1,"x0":0.5},
            "J":[["0","1"],["-1","0"]],"B":[["0","0"],["0","0"]],
            "H":[["1","0"],["0","0"]],"label":"ml-s2.2"})JSON",
        e));
  }
  {
    ExpectedValues e;
    e.rank = 1;
    e.definite = false;
    e.n_plus = e.n_minus = 2;
    e.N_plus = e.N_minus = 1;
    e.source = "rotation-frame closed form: Y is the plane rotation, the gauged "
               "Hamiltonian is diag(1,0)";
    out.push_back(make(
        "mark-s1.11-1",
        "non-definite system with invertible integrated Hamiltonian (rotation projector)",
        R"JSON({"n":2,"interval":{"kind":"finite","a":0,"b":3.141592653589793,"x0":0},
            "J":[["0","1"],["-1","0"]],"B":[["-1","0"],["0","-1"]],
            "H":[["cos(x)^2","sin(x)*cos(x)"],["sin(x)*cos(x)","sin(x)^2"]],
            "label":"mark-s1.11-1"})JSON",
        e));
  }
  {
    ExpectedValues e;
    e.rank = 2;
    e.definite = true;
    e.n_plus = e.n_minus = 2;
    e.N_plus = e.N_minus = 2;
    e.source = "second-order reduction: solutions are Wronskian pairs, so the Gram "
               "matrix is invertible";
    out.push_back(make(
        "mark-s1.11-2",
        "definite finite-interval system equivalent to a second-order scalar problem",
        R"JSON({"n":2,"interval":{"kind":"finite","a":0,"b":1,"x0":0.5},
            "J":[["0","-1"],["1","0"]],"B":[["0","0"],["0","-1"]],
            "H":[["1","0"],["0","0"]],"label":"mark-s1.11-2"})JSON",
        e));
  }
  {
    ExpectedValues e;
    e.rank = 2;
    e.definite = true;
    e.n_plus = 1;
    e.n_minus = 2;
    e.N_plus = 1;
    e.N_minus = 2;
    e.source = "diagonal closed form: solutions exp(-i lambda \\int h_jj) with one "
               "integrable channel";
    out.push_back(make("ex3.1",
                       "diagonal system with one non-integrable channel: unequal indices (1,2)",
                       R"JSON({"n":2,"interval":{"kind":"half-line-positive","a":0},
            "J":[["i","0"],["0","-i"]],"B":[["0","0"],["0","0"]],
            "H":[["1","0"],["0","(1+x)^-2"]],"label":"ex3.1"})JSON",
                       e));
  }
  {
    ExpectedValues e;
    e.rank = 2;
    e.definite = true;
    e.n_plus = 2;
    e.n_minus = 1;
    e.N_plus = 2;
    e.N_minus = 1;
    e.source = "diagonal closed form with the channel roles swapped";
    out.push_back(make("ex3.1-swapped",
                       "diagonal system with the channel roles swapped: indices (2,1)",
                       R"JSON({"n":2,"interval":{"kind":"half-line-positive","a":0},
            "J":[["i","0"],["0","-i"]],"B":[["0","0"],["0","0"]],
            "H":[["(1+x)^-2","0"],["0","1"]],"label":"ex3.1-swapped"})JSON",
                       e));
  }
  {
    ExpectedValues e;
    e.rank = 2;
    e.definite = true;
    e.n_plus = 1;
    e.n_minus = 1;
    e.N_plus = 1;
    e.N_minus = 1;
    e.source = "diagonal closed form: comparable channels, equal indices (1,1)";
    out.push_back(make("ex3.2",
                       "diagonal system with comparable non-integrable channels: indices (1,1)",
                       R"JSON({"n":2,"interval":{"kind":"half-line-positive","a":0},
            "J":[["i","0"],["0","-i"]],"B":[["0","0"],["0","0"]],
            "H":[["2/(1+x)","0"],["0","1/(1+x)"]],"label":"ex3.2"})JSON",
                       e));
  }
  {
    ExpectedValues e;
    e.rank = 6;
    e.definite = true;
    e.n_plus = 4;
    e.n_minus = 5;
    e.N_plus = 4;
    e.N_minus = 5;
    e.source = "three diagonal blocks with closed-form solutions: counts 1+1+2 and 2+2+1";
    out.push_back(make("ex3.3",
                       "6x6 block-diagonal system with unequal indices (4,5) despite a "
                       "vanishing mixed trace",
                       R"JSON({"n":6,"interval":{"kind":"half-line-positive","a":0},
            "J":[["i","0","0","0","0","0"],["0","-i","0","0","0","0"],
                 ["0","0","i","0","0","0"],["0","0","0","-i","0","0"],
                 ["0","0","0","0","i","0"],["0","0","0","0","0","-i"]],
            "H":[["(1+x)^-1","0","0","0","0","0"],["0","(1+x)^-2","0","0","0","0"],
                 ["0","0","(1+x)^-1","0","0","0"],["0","0","0","(1+x)^-2","0","0"],
                 ["0","0","0","0","2*(1+x)^-2","0"],["0","0","0","0","0","2*(1+x)^-1"]],
            "label":"ex3.3"})JSON",
                       e));
  }
  {
    ExpectedValues e;
    e.rank = 2;
    e.definite = true;
    e.n_plus = 0;
    e.n_minus = 0;
    e.N_plus = 0;
    e.N_minus = 0;
    e.criterion_status["line-self-adjoint"] = "holds";
    e.criterion_status["line-smallest-eigenvalue"] = "fails";
    e.source = "the geometric mean of the eigenvalue profiles is not integrable while "
               "the smaller profile is";
    out.push_back(make(
        "ex3.6",
        "line system separating the Weyl-weight criterion from the smallest-eigenvalue "
        "criterion",
        R"JSON({"n":2,"interval":{"kind":"full-line","x0":0},
            "J":[["0","1"],["-1","0"]],
            "H":[["(abs(x)+2)^-1*log(abs(x)+2)^-2","0"],["0","(2+abs(x))^-1"]],
            "label":"ex3.6"})JSON",
        e));
  }
  {
    ExpectedValues e;
    e.rank = 2;
    e.definite = true;
    e.n_plus = 1;
    e.n_minus = 1;
    e.N_plus = 1;
    e.N_minus = 1;
    e.criterion_status["halfline-minimal"] = "fails";
    e.criterion_status["intermediate-n-minus-1"] = "holds";
    e.source = "1/c = (1+x)^-2 integrates to 1; one channel carries all the escaping mass";
    out.push_back(make(
        "ml-s5.33",
        "half-line system whose restricted extensions are self-adjoint although the "
        "Weyl-weight condition fails",
        R"JSON({"n":2,"interval":{"kind":"half-line-positive","a":0},
            "J":[["0","1"],["-1","0"]],
            "H":[["(1+x)^-4","0"],["0","1"]],"label":"ml-s5.33"})JSON",
        e));
  }
  {
    ExpectedValues e;
    e.rank = 1;
    e.definite = false;
    e.n_plus = 1;
    e.n_minus = 1;
    e.N_plus = 0;
    e.N_minus = 0;
    e.source = "kernel direction sits identically at zero; the surviving channel is "
               "non-integrable";
    out.push_back(make("r3.1-4",
                       "non-definite half-line system: formal indices 1, ordinary indices 0",
                       R"JSON({"n":2,"interval":{"kind":"half-line-positive","a":0},
            "J":[["0","1"],["-1","0"]],
            "H":[["1","0"],["0","0"]],"label":"r3.1-4"})JSON",
                       e));
  }
  {
    ExpectedValues e;
    e.rank = 2;
    e.definite = true;
    e.n_plus = 1;
    e.n_minus = 1;
    e.N_plus = 1;
    e.N_minus = 1;
    e.criterion_status["canonical-maximal"] = "fails";
    e.source = "solutions exp(+-x): exactly one square-integrable against the identity "
               "weight";
    out.push_back(make("kac-krein",
                       "canonical identity-weight system: exponential dichotomy, indices (1,1)",
                       R"JSON({"n":2,"interval":{"kind":"half-line-positive","a":0},
            "J":[["0","1"],["-1","0"]],
            "H":[["1","0"],["0","1"]],"label":"kac-krein"})JSON",
                       e));
  }
  {
    ExpectedValues e;
    e.rank = 2;
    e.definite = true;
    e.n_plus = 2;
    e.n_minus = 2;
    e.N_plus = 2;
    e.N_minus = 2;
    e.criterion_status["canonical-maximal"] = "holds";
    e.criterion_status["quasiregular"] = "holds";
    e.source = "integrable trace: all solutions stay square-integrable";
    out.push_back(make("canonical-decay",
                       "canonical system with integrable trace: maximal indices (2,2)",
                       R"JSON({"n":2,"interval":{"kind":"half-line-positive","a":0},
            "J":[["0","1"],["-1","0"]],
            "H":[["(1+x)^-2","0"],["0","(1+x)^-2"]],"label":"canonical-decay"})JSON",
                       e));
  }
  {
    ExpectedValues e;
    e.n_plus = 2;
    e.n_minus = 2;
    e.N_plus = 2;
    e.N_minus = 2;
    e.rank = 2;
    e.definite = true;
    e.criterion_status["sl-scalar"] = "holds";
    e.criterion_status["sl-two-term-maximal"] = "holds";
    e.source = "(x^2+1)(1+x)^-4 integrates; both solutions 1 and x are square-integrable "
               "against the weight";
    out.push_back(make("sl-quartic",
                       "scalar two-term problem with quartic-decay weight: indices 2",
                       R"JSON({"n":1,"interval":{"kind":"half-line-positive","a":0},
            "A":[["1"]],"Q":[["0"]],"R":[["0"]],
            "H":[["(1+x)^-4"]],"label":"sl-quartic"})JSON",
                       e));
  }
  {
    ExpectedValues e;
    e.n_plus = 1;
    e.n_minus = 1;
    e.N_plus = 1;
    e.N_minus = 1;
    e.rank = 2;
    e.definite = true;
    e.criterion_status["sl-scalar"] = "fails";
    e.source = "(x^2+1)(1+x)^-1 is not integrable: the growing solution escapes the weight";
    out.push_back(make("sl-slow",
                       "scalar two-term problem with slow-decay weight: limit point, indices 1",
                       R"JSON({"n":1,"interval":{"kind":"half-line-positive","a":0},
            "A":[["1"]],"Q":[["0"]],"R":[["0"]],
            "H":[["(1+x)^-1"]],"label":"sl-slow"})JSON",
                       e));
  }
  {
    ExpectedValues e;
    e.n_plus = 2;
    e.n_minus = 2;
    e.N_plus = 2;
    e.N_minus = 2;
    e.rank = 2;
    e.definite = true;
    e.criterion_status["sl-constant-potential"] = "holds";
    e.source = "negative constant potential with integrable weight trace: oscillatory "
               "branch keeps both solutions";
    out.push_back(make("re5.40",
                       "scalar problem with negative constant potential: indices 2 although "
                       "the square root of the weight is not integrable",
                       R"JSON({"n":1,"interval":{"kind":"half-line-positive","a":0},
            "A":[["1"]],"Q":[["0"]],"R":[["-1"]],
            "H":[["(1+x)^-1.5"]],"label":"re5.40"})JSON",
                       e));
  }
  {
    ExpectedValues e;
    e.n_plus = 2;
    e.n_minus = 2;
    e.N_plus = 2;
    e.N_minus = 2;
    e.rank = 2;
    e.definite = true;
    e.source = "all solutions asymptotically linear and square-integrable against the "
               "quartic-decay weight on both half-lines";
    out.push_back(make("line-glue",
                       "whole-line scalar two-term problem assembled from two definite "
                       "half-line problems",
                       R"JSON({"n":1,"interval":{"kind":"full-line","x0":0},
            "A":[["1"]],"Q":[["0"]],"R":[["0"]],
            "H":[["(1+abs(x))^-4"]],"label":"line-glue"})JSON",
                       e));
  }
  return out;
}

}  // namespace

const std::vector<ExampleFixture>& fixture_registry() {
  static const std::vector<ExampleFixture> reg = build_registry();
  return reg;
}

const ExampleFixture& fixture(const std::string& id) {
  for (const auto& f : fixture_registry())
    if (f.id == id) return f;
  throw SpecError("unknown example id '" + id + "'");
}

bool has_fixture(const std::string& id) {
  for (const auto& f : fixture_registry())
    if (f.id == id) return true;
  return false;
}

}  // namespace hamsys
