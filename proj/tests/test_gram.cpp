#include <doctest.h>

#include "hamsys/fixtures.hpp"
#include "hamsys/gauge.hpp"
#include "hamsys/gram.hpp"
#include "hamsys/quadrature.hpp"

using namespace hamsys;

TEST_CASE("integrated rotation projector is (pi/2) I") {
  SystemSpec s = fixture("mark-s1.11-1").spec.system();
  auto H = [&](double x) { return s.H.eval(x); };
  QuadOptions qo;
  qo.rel_tol = 1e-13;
  Matrix P = integrate_matrix(H, 0.0, M_PI, qo);
  Matrix want = (M_PI / 2.0) * Matrix::Identity(2, 2);
  CHECK((P - want).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("Gram matrix of the rotation-frame system has rank one") {
  SystemSpec s = fixture("mark-s1.11-1").spec.system();
  GramMatrix m = gram_matrix(s, Complex(0, 0), 0.0, M_PI);
  // the gauged Hamiltonian is diag(1,0): mass pi in one direction only
  PsdRank pr = psd_rank(m.scaled, 1e-8, 1e-12);
  CHECK(pr.rank == 1);
  RankReport rank = rank_of_system(s);
  CHECK(rank.rank == 1);
  CHECK(rank.stabilized);
  CHECK_FALSE(is_definite(s).definite);
}

TEST_CASE("Gram matrix with identity propagator integrates H directly") {
  SystemSpec s = fixture("ml-s2.2").spec.system();
  GramMatrix m = gram_matrix(s, Complex(0, 0), 0.0, 1.0);
  Matrix d = m.dense();
  CHECK(d(0, 0).real() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(d(0, 1)) <= 1e-12);
  CHECK(std::abs(d(1, 1)) <= 1e-12);
  RankReport rank = rank_of_system(s);
  CHECK(rank.rank == 1);
  REQUIRE(rank.kernel.cols() == 1);
  CHECK(std::abs(rank.kernel(1, 0)) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("zero Hamiltonian gives the zero Gram matrix") {
  SystemSpec s = parse_system(R"JSON({"n":2,"interval":{"kind":"half-line-positive","a":0},
    "J":[["0","1"],["-1","0"]],"H":[["0","0"],["0","0"]]})JSON");
  GramMatrix m = gram_matrix(s, Complex(0, 1), 0.0, 4.0);
  CHECK(m.scaled.M.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("identity weight is full rank (definite)") {
  SystemSpec s = fixture("kac-krein").spec.system();
  DefinitenessReport rep = is_definite(s);
  CHECK(rep.definite);
  CHECK(rep.rank.rank == 2);
}

TEST_CASE("kernel is independent of the spectral parameter") {
  SUBCASE("rotation-frame example across four parameters") {
    SystemSpec s = fixture("mark-s1.11-1").spec.system();
    KernelAngleReport rep = kernel_lambda_independence(
        s, {Complex(0, 0), Complex(0, 1), Complex(0, -1), Complex(1, 1)});
    for (int r : rep.ranks) CHECK(r == 1);
    CHECK(rep.max_angle <= 1e-6);
  }
  SUBCASE("constant-coefficient example has kernel e2 at every parameter") {
    SystemSpec s = fixture("ml-s2.2").spec.system();
    KernelAngleReport rep = kernel_lambda_independence(s, {Complex(0, 0), Complex(0, 1)});
    CHECK(rep.max_angle <= 1e-8);
  }
  SUBCASE("definite systems have the zero-angle convention") {
    SystemSpec s = fixture("kac-krein").spec.system();
    KernelAngleReport rep = kernel_lambda_independence(s, {Complex(0, 1), Complex(1, 1)});
    CHECK(rep.max_angle == 0.0);
  }
}

TEST_CASE("Gram monotonicity in the interval") {
  SystemSpec s = fixture("ex3.1").spec.system();
  for (Complex lam : {Complex(0, 1), Complex(0, -1)}) {
    Matrix m1 = gram_matrix(s, lam, 0.0, 2.0).dense();
    Matrix m2 = gram_matrix(s, lam, 0.0, 4.0).dense();
    Eigen::SelfAdjointEigenSolver<Matrix> es(m2 - m1);
    CAPTURE(lam.imag());
    CHECK(es.eigenvalues().minCoeff() >= -1e-10 * m2.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("positive type detection") {
  CHECK_FALSE(
      is_positive_type(fixture("ml-s2.2").spec.system().H,
                       fixture("ml-s2.2").spec.system().interval)
          .positive_type);
  CHECK(is_positive_type(fixture("mark-s1.11-1").spec.system().H,
                         fixture("mark-s1.11-1").spec.system().interval)
            .positive_type);
  CHECK(is_positive_type(fixture("kac-krein").spec.system().H,
                         fixture("kac-krein").spec.system().interval)
            .positive_type);
}

TEST_CASE("canonical systems: definite iff the Hamiltonian is of positive type") {
  for (const char* id : {"ml-s2.2", "kac-krein", "canonical-decay", "r3.1-4", "ex3.1",
                         "ex3.1-swapped", "ex3.2", "ex3.3"}) {
    const SystemSpec& s = fixture(id).spec.system();
    bool definite = is_definite(s).definite;
    bool ptype = is_positive_type(s.H, s.interval).positive_type;
    CAPTURE(id);
    CHECK(definite == ptype);
  }
}

TEST_CASE("structural definiteness of designated-block systems") {
  auto scalar = [](double v) { return MatrixFunction::constant(Matrix::Constant(1, 1, v)); };
  BlockSystemSpec blk;
  blk.n = 1;
  blk.interval = IntervalSpec::half_line_positive();
  blk.J = MatrixFunction::constant(Matrix::Constant(1, 1, Complex(0, 1)));
  blk.V = scalar(0.0);
  blk.B = scalar(0.0);
  blk.A = scalar(1.0);

  SUBCASE("A = 1, H = 1 holds") {
    blk.H = scalar(1.0);
    CHECK(structural_definiteness(blk).holds);
  }
  SUBCASE("compactly supported H still holds (positive measure)") {
    blk.H = MatrixFunction(1, {Expression::parse("piecewise(x < 1, 1, 0)")});
    StructuralDefinitenessVerdict v = structural_definiteness(blk);
    CHECK(v.holds);
    CHECK(v.fraction > 1e-3);
  }
  SUBCASE("H = 0 fails") {
    blk.H = scalar(0.0);
    CHECK_FALSE(structural_definiteness(blk).holds);
  }
}

TEST_CASE("rank report carries the stabilization evidence") {
  RankReport rep = rank_of_system(fixture("r3.1-4").spec.system());
  CHECK(rep.rank == 1);
  CHECK(rep.stabilized);
  CHECK(rep.ranks_seen.size() >= 2);
  CHECK(rep.intervals_tried.size() == rep.ranks_seen.size());
  CHECK(rep.rank + rep.kernel.cols() == rep.n);
}
