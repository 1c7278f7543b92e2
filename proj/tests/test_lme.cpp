#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cspop/lme.hpp"
#include "cspop/problem_io.hpp"

using namespace cspop;

namespace {

const std::string kData = CSPOP_DATA_DIR;

struct Rng {
  uint64_t s;
  uint64_t next() {
    s += 0x9e3779b97f4a7c15ull;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  int range(int lo, int hi) { return lo + static_cast<int>(next() % (hi - lo + 1)); }
  double uniform(double lo, double hi) {
    return lo + (next() >> 11) * 0x1.0p-53 * (hi - lo);
  }
};

CspProblem single_block(int n, std::vector<Poly> ineqs, std::vector<Poly> eqs,
                        Poly obj = {}) {
  CspProblem p;
  p.n = n;
  CspBlock b;
  b.clique.resize(n);
  for (int v = 1; v <= n; ++v) b.clique[v - 1] = v;
  b.objective = std::move(obj);
  b.ineqs = std::move(ineqs);
  b.eqs = std::move(eqs);
  p.blocks.push_back(std::move(b));
  return p;
}

VarTable table(int n) {
  VarTable t;
  t.n_x = n;
  return t;
}

// Random block from the template families (sizes 1..6).
CspProblem random_template_block(Rng& rng, std::string* family) {
  int n = rng.range(1, 6);
  VarTable t = table(n);
  std::vector<Poly> ineqs, eqs;
  int pick = rng.range(0, 5);
  auto rational = [&](int lo, int hi) {
    int num = rng.range(lo, hi);
    if (num == 0) num = 1;
    return Rational(num, rng.range(1, 3));
  };
  switch (pick) {
    case 0: {  // simplex: b + w'z with random subset of coordinate rows
      *family = "simplex";
      Poly c0 = Poly::constant(Rational(rng.range(1, 4)));
      for (int v = 1; v <= n; ++v)
        c0 += Poly::variable(v).scaled(-rational(1, 6));
      ineqs.push_back(c0);
      for (int v = 1; v <= n; ++v)
        if (rng.range(0, 1)) ineqs.push_back(Poly::variable(v).scaled(rational(1, 3)));
      break;
    }
    case 1: {  // ball over a subset, plus optional coordinate rows
      *family = "ball";
      Poly c0 = Poly::constant(Rational(rng.range(1, 4)));
      int used = 0;
      for (int v = 1; v <= n; ++v)
        if (rng.range(0, 1) || (v == n && used == 0)) {
          c0 += Poly::variable(v, 2).scaled(-rational(1, 4));
          ++used;
        }
      ineqs.push_back(c0);
      for (int v = 1; v <= n; ++v)
        if (rng.range(0, 3) == 0) ineqs.push_back(Poly::variable(v));
      break;
    }
    case 2: {  // pure nonnegativity on a subset
      *family = "nonneg";
      for (int v = 1; v <= n; ++v)
        if (rng.range(0, 1) || v == 1)
          ineqs.push_back(Poly::variable(v).scaled(rational(1, 3)));
      break;
    }
    case 3: {  // box faces, one or two per variable
      *family = "box";
      for (int v = 1; v <= n; ++v) {
        int faces = rng.range(0, 2);
        if (faces >= 1)
          ineqs.push_back(Poly::constant(Rational(rng.range(1, 3))) -
                          Poly::variable(v));
        if (faces == 2)
          ineqs.push_back(Poly::variable(v) + Poly::constant(Rational(rng.range(1, 3))));
      }
      if (ineqs.empty()) ineqs.push_back(Poly::constant(2) - Poly::variable(1));
      break;
    }
    case 4: {  // sphere equality
      *family = "sphere";
      Poly c0 = Poly::constant(Rational(rng.range(1, 4)));
      for (int v = 1; v <= n; ++v) c0 += Poly::variable(v, 2).scaled(-rational(1, 4));
      eqs.push_back(c0);
      break;
    }
    default: {  // single linear equality
      *family = "linear-eq";
      Poly h = Poly::constant(Rational(rng.range(-2, 2)));
      for (int v = 1; v <= n; ++v) h += Poly::variable(v).scaled(rational(-3, 3));
      if (h.degree() < 1) h += Poly::variable(1);
      eqs.push_back(h);
      break;
    }
  }
  return single_block(n, std::move(ineqs), std::move(eqs));
}

}  // namespace

TEST_CASE("gradient matrix: simplex block of example 3.1") {
  auto pf = parse_problem_file(kData + "/ex5_1.popb");
  GradientMatrix gm = build_gradient_matrix(pf.problem, 1);
  CHECK(gm.mat.rows == 6);
  CHECK(gm.mat.cols == 3);
  VarTable t = table(6);
  // top rows: gradients of (1-x1-x2-x3, x1, x2) w.r.t. (x1,x2,x3)
  CHECK(gm.mat.at(0, 0) == Poly::constant(-1));
  CHECK(gm.mat.at(1, 0) == Poly::constant(-1));
  CHECK(gm.mat.at(2, 0) == Poly::constant(-1));
  CHECK(gm.mat.at(0, 1) == Poly::constant(1));
  CHECK(gm.mat.at(1, 1).is_zero());
  CHECK(gm.mat.at(0, 2).is_zero());
  CHECK(gm.mat.at(1, 2) == Poly::constant(1));
  // bottom block: diag of the constraints
  CHECK(gm.mat.at(3, 0) == parse_poly("1 - x1 - x2 - x3", t));
  CHECK(gm.mat.at(4, 1) == parse_poly("x1", t));
  CHECK(gm.mat.at(5, 2) == parse_poly("x2", t));
  CHECK(gm.mat.at(3, 1).is_zero());
}

TEST_CASE("gradient matrix: single equality and ball") {
  VarTable t1 = table(1);
  auto p1 = single_block(1, {}, {parse_poly("x1", t1)});
  GradientMatrix g1 = build_gradient_matrix(p1, 1);
  CHECK(g1.mat.rows == 2);
  CHECK(g1.mat.at(0, 0) == Poly::constant(1));
  CHECK(g1.mat.at(1, 0) == parse_poly("x1", t1));

  VarTable t4 = table(4);
  auto p4 = single_block(4, {parse_poly("1 - x1^2 - x2^2 - x3^2 - x4^2", t4)}, {});
  GradientMatrix g4 = build_gradient_matrix(p4, 1);
  for (int v = 0; v < 4; ++v)
    CHECK(g4.mat.at(v, 0) ==
          Poly::variable(v + 1).scaled(Rational(-2)));
  CHECK(g4.mat.at(4, 0) == parse_poly("1 - x1^2 - x2^2 - x3^2 - x4^2", t4));
}

TEST_CASE("template: simplex block of example 3.2") {
  auto pf = parse_problem_file(kData + "/ex5_1.popb");
  auto pair = template_lme(pf.problem, 1);
  REQUIRE(pair.has_value());
  VarTable t = table(6);
  // lambda_1 = -(x1 F1 + x2 F2 + x3 F3): row 1 of L is -x^(1)
  CHECK(pair->L.at(0, 0) == parse_poly("0 - x1", t));
  CHECK(pair->L.at(0, 1) == parse_poly("0 - x2", t));
  CHECK(pair->L.at(0, 2) == parse_poly("0 - x3", t));
  // lambda_2 = F_1 + lambda_1, lambda_3 = F_2 + lambda_1
  CHECK(pair->L.at(1, 0) == parse_poly("1 - x1", t));
  CHECK(pair->L.at(1, 1) == parse_poly("0 - x2", t));
  CHECK(pair->L.at(2, 1) == parse_poly("1 - x2", t));
  CHECK(verify_lme(build_gradient_matrix(pf.problem, 1), *pair).all_zero());

  // block 2: lambda_1 = -(1/2) x^(2)' F_2
  auto pair2 = template_lme(pf.problem, 2);
  REQUIRE(pair2.has_value());
  CHECK(pair2->L.at(0, 0) == Poly::variable(3).scaled(Rational(-1, 2)));
  CHECK(pair2->L.at(0, 3) == Poly::variable(6).scaled(Rational(-1, 2)));
  CHECK(verify_lme(build_gradient_matrix(pf.problem, 2), *pair2).all_zero());
}

TEST_CASE("template: unit ball gives L = -x'/2") {
  VarTable t = table(3);
  auto p = single_block(3, {parse_poly("1 - x1^2 - x2^2 - x3^2", t)}, {});
  auto pair = template_lme(p, 1);
  REQUIRE(pair.has_value());
  for (int v = 0; v < 3; ++v)
    CHECK(pair->L.at(0, v) == Poly::variable(v + 1).scaled(Rational(-1, 2)));
  CHECK(verify_lme(build_gradient_matrix(p, 1), *pair).all_zero());
}

TEST_CASE("template: unconstrained block gives the empty pair") {
  VarTable t = table(2);
  auto p = single_block(2, {}, {}, parse_poly("x1^2 + x2^2", t));
  auto pair = template_lme(p, 1);
  REQUIRE(pair.has_value());
  CHECK(pair->L.rows == 0);
  CHECK(pair->D.rows == 0);
}

TEST_CASE("template: example 5.3 families") {
  auto pf = parse_problem_file(kData + "/ex5_3.popb");
  // block 1: four x_j^2 - 1 rows -> lambda_j = x_j F_j / 2
  auto p1 = template_lme(pf.problem, 1);
  REQUIRE(p1.has_value());
  for (int j = 0; j < 4; ++j)
    CHECK(p1->L.at(j, j) == Poly::variable(j + 1).scaled(Rational(1, 2)));
  // block 2: single equality with constant gradient in x4 -> lambda = F_1
  auto p2 = template_lme(pf.problem, 2);
  REQUIRE(p2.has_value());
  CHECK(p2->L.at(0, 0) == Poly::constant(1));
  CHECK(p2->provenance == "constant-gradient");
  // block 3: pure nonnegativity rows on x7, x8 (local 2, 3)
  auto p3 = template_lme(pf.problem, 3);
  REQUIRE(p3.has_value());
  CHECK(p3->L.at(0, 1) == Poly::constant(1));
  CHECK(p3->L.at(1, 2) == Poly::constant(1));
  for (int i = 1; i <= 3; ++i)
    CHECK(verify_lme(build_gradient_matrix(pf.problem, i),
                     *template_lme(pf.problem, i))
              .all_zero());
}

TEST_CASE("template: example 5.4 box and weighted simplex") {
  auto pf = parse_problem_file(kData + "/ex5_4.popb");
  // block 1: paired faces 1-x_j, x_j+1 -> lambda^+ = -(1/2)(1+x_j) F_j
  auto p1 = template_lme(pf.problem, 1);
  REQUIRE(p1.has_value());
  VarTable t = table(20);
  CHECK(p1->L.at(0, 0) == parse_poly("0 - 1/2 - 1/2*x1", t));
  CHECK(p1->L.at(7, 0) == parse_poly("1/2 - 1/2*x1", t));  // x1+1 row
  CHECK(p1->L.at(4, 4) == Poly::constant(-1));              // single face 1-x17
  // block 2: b = 3 and weight-2 variables get 2*lambda_0 + F_j
  auto p2 = template_lme(pf.problem, 2);
  REQUIRE(p2.has_value());
  CHECK(p2->L.at(0, 0) == Poly::variable(5).scaled(Rational(-1, 3)));
  // lambda for x5 row: e_1 + 2*lambda_0 row
  CHECK(p2->L.at(1, 0) == Poly::constant(1) + Poly::variable(5).scaled(Rational(-2, 3)));
  // block 4: ball
  auto p4 = template_lme(pf.problem, 4);
  REQUIRE(p4.has_value());
  CHECK(p4->L.at(0, 0) == Poly::variable(11).scaled(Rational(-1, 2)));
  for (int i = 1; i <= 5; ++i)
    CHECK(verify_lme(build_gradient_matrix(pf.problem, i),
                     *template_lme(pf.problem, i))
              .all_zero());
}

TEST_CASE("synthesize: ansatz solves example 5.2 block 1 (no template match)") {
  auto pf = parse_problem_file(kData + "/ex5_2.popb");
  CHECK(!template_lme(pf.problem, 1).has_value());
  LmePair pair = synthesize_lme(pf.problem, 1);
  CHECK(verify_lme(build_gradient_matrix(pf.problem, 1), pair).all_zero());
  CHECK(pair.provenance.rfind("ansatz", 0) == 0);
  // lambda_1 = F_{1,1} is the sparsest choice under the pivot order
  CHECK(pair.L.at(0, 0) == Poly::constant(1));
}

TEST_CASE("synthesize: proportional pair {x1>=0, -x1>=0} has no pair") {
  VarTable t = table(2);
  auto p = single_block(2, {parse_poly("x1", t), parse_poly("0 - x1", t)}, {});
  CHECK_THROWS_AS(synthesize_lme(p, 1, 3), LmeSynthesisError);
}

TEST_CASE("synthesize: h = x1^2 + 1 admits L = -x/2, D = 1") {
  // -x/2 * 2x + 1 * (x^2+1) == 1 exactly; the bordered matrix never loses
  // rank over the complex numbers, so a pair must exist.
  VarTable t = table(1);
  auto p = single_block(1, {}, {parse_poly("x1^2 + 1", t)});
  LmePair pair = synthesize_lme(p, 1, 2);
  CHECK(pair.L.at(0, 0) == Poly::variable(1).scaled(Rational(-1, 2)));
  CHECK(pair.D.at(0, 0) == Poly::constant(1));
  CHECK(verify_lme(build_gradient_matrix(p, 1), pair).all_zero());
}

TEST_CASE("synthesize: h = x1^2 is singular at the origin, no pair") {
  // any row gives l*2x + d*x^2, which vanishes at x = 0 and can never be 1
  VarTable t = table(1);
  auto p = single_block(1, {}, {parse_poly("x1^2", t)});
  CHECK_THROWS_AS(synthesize_lme(p, 1, 4), LmeSynthesisError);
}

TEST_CASE("verify_lme flags a perturbed pair") {
  auto pf = parse_problem_file(kData + "/ex5_1.popb");
  auto gm = build_gradient_matrix(pf.problem, 1);
  LmePair pair = synthesize_lme(pf.problem, 1);
  CHECK(verify_lme(gm, pair).all_zero());
  pair.L.at(0, 0) += Poly::variable(1);
  PolyMatrix res = verify_lme(gm, pair);
  CHECK(!res.all_zero());
  // entry (1,1) picks up x1 * dc_1/dx_1 = -x1
  VarTable t = table(6);
  CHECK(res.at(0, 0) == parse_poly("0 - x1", t));
}

TEST_CASE("verify_lme: shape mismatch raises") {
  auto pf = parse_problem_file(kData + "/ex5_1.popb");
  auto gm = build_gradient_matrix(pf.problem, 1);
  LmePair pair = synthesize_lme(pf.problem, 2);
  CHECK_THROWS(verify_lme(gm, pair));
}

TEST_CASE("property: template families verify exactly (50 random blocks)") {
  Rng rng{271828};
  for (int trial = 0; trial < 50; ++trial) {
    std::string family;
    CspProblem p = random_template_block(rng, &family);
    auto pair = template_lme(p, 1);
    if (!pair) {
      // every generated family instance must be template-matchable
      CAPTURE(family);
      CHECK(pair.has_value());
      continue;
    }
    CHECK(verify_lme(build_gradient_matrix(p, 1), *pair).all_zero());
  }
}

TEST_CASE("property: ball rows of I - L*Gtop vanish on the active set") {
  Rng rng{5};
  VarTable t = table(3);
  auto p = single_block(3, {parse_poly("1 - x1^2 - x2^2 - x3^2", t)}, {});
  auto pair = template_lme(p, 1);
  REQUIRE(pair.has_value());
  auto gm = build_gradient_matrix(p, 1);
  // I - L*Gtop = D*diag(c): every entry vanishes where the constraints are
  // active; sample points on the sphere
  PolyMatrix LG(1, 1);
  Poly acc;
  for (int v = 0; v < 3; ++v) acc += pair->L.at(0, v) * gm.mat.at(v, 0);
  Poly residual = Poly::constant(1) - acc;
  for (int trial = 0; trial < 50; ++trial) {
    double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1), c = rng.uniform(-1, 1);
    double nrm = std::sqrt(a * a + b * b + c * c);
    if (nrm < 1e-6) continue;
    std::vector<double> pt{0, a / nrm, b / nrm, c / nrm};
    CHECK(std::fabs(residual.eval(pt)) <= 1e-10);
  }
}

TEST_CASE("ansatz degree monotonicity on template blocks") {
  // success at k implies success at k+1: the ansatz nests; spot-check by
  // synthesizing with a higher cap and confirming it still verifies
  Rng rng{888};
  for (int trial = 0; trial < 10; ++trial) {
    std::string family;
    CspProblem p = random_template_block(rng, &family);
    LmePair a = synthesize_lme(p, 1, 2);
    LmePair b = synthesize_lme(p, 1, 3);
    auto gm = build_gradient_matrix(p, 1);
    CHECK(verify_lme(gm, a).all_zero());
    CHECK(verify_lme(gm, b).all_zero());
  }
}
