#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cspop/poly.hpp"
#include "cspop/poly_text.hpp"

using namespace cspop;

namespace {

VarTable table(int n) {
  VarTable t;
  t.n_x = n;
  return t;
}

// splitmix64, kept local so generator changes elsewhere cannot shift these tests
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
};

Poly random_poly(Rng& rng, int nvars, int maxdeg, int terms) {
  Poly p;
  for (int t = 0; t < terms; ++t) {
    Monomial m;
    int deg = rng.range(0, maxdeg);
    for (int d = 0; d < deg; ++d) m = m.times(rng.range(1, nvars), 1);
    int num = rng.range(-9, 9);
    int den = rng.range(1, 9);
    p.add_term(m, Rational(num, den));
  }
  return p;
}

}  // namespace

TEST_CASE("monomial graded-lex order") {
  auto x = [](int i, int e = 1) { return Monomial::variable(i, e); };
  CHECK(Monomial{} < x(1));
  CHECK(x(1) < x(2));
  CHECK(x(2) < x(1, 2));           // degree first
  CHECK(x(1, 2) < x(1) * x(2));    // within degree: higher power on x1 first
  CHECK(x(1) * x(2) < x(2, 2));
  CHECK(x(1) * x(3) < x(2, 2));    // x1x3 before x2^2
}

TEST_CASE("parse examples") {
  VarTable t = table(6);
  Poly g = parse_poly("1 - x1 - x2 - x3", t);
  CHECK(g.num_terms() == 4);
  CHECK(g.degree() == 1);

  Poly z = parse_poly("0", t);
  CHECK(z.is_zero());
  CHECK(z.degree() == 0);  // zero polynomial has degree 0 by convention

  Poly p = parse_poly("3/2*x1^2*x4 - x4", t);
  CHECK(p.num_terms() == 2);
  CHECK(p.degree() == 3);
  CHECK(p.coeff(Monomial::variable(1, 2) * Monomial::variable(4)) == Rational(3, 2));

  CHECK_THROWS_AS(parse_poly("x7 + 1", t), ParseError);
  CHECK_THROWS_AS(parse_poly("1 + + 2", t), ParseError);
  CHECK_THROWS_AS(parse_poly("", t), ParseError);
}

TEST_CASE("parse error carries byte offset") {
  VarTable t = table(2);
  try {
    parse_poly("x1 + qq", t);
    FAIL("expected throw");
  } catch (const ParseError& e) {
    CHECK(e.offset == 5);
  }
}

TEST_CASE("add: additive inverse and merge") {
  VarTable t = table(3);
  Poly a = parse_poly("x1", t), b = parse_poly("0 - x1", t);
  CHECK((a + b).is_zero());
  Poly c = parse_poly("x1 + x2", t) + parse_poly("x2", t);
  CHECK(c == parse_poly("x1 + 2*x2", t));
}

TEST_CASE("example 5.1 objective sum") {
  VarTable t = table(6);
  Poly f1 = parse_poly("x1*x2*x3 - x1^2 - x2^2", t);
  Poly f2 = parse_poly("x4^3 + x5^3 + x6^3 + x3*x4^2 + x3*x5^2 + x3*x6^2 + x4*x5 + x6", t);
  Poly s = f1 + f2;
  // expansion checked independently with a symbolic tool: 11 terms, degree 3
  CHECK(s.num_terms() == 11);
  CHECK(s.degree() == 3);
  std::vector<double> zero(7, 0.0);
  CHECK(s.eval(zero) == doctest::Approx(0.0));
}

TEST_CASE("mul: identity and difference of squares") {
  VarTable t = table(2);
  Poly p = parse_poly("2*x1^2 - x2 + 1/3", t);
  CHECK(p * Poly::constant(1) == p);
  Poly d = parse_poly("x1 - x2", t) * parse_poly("x1 + x2", t);
  CHECK(d == parse_poly("x1^2 - x2^2", t));
}

TEST_CASE("complementarity product of example 3.2 block 1") {
  // g^(1)_1 * p with p = x1 + x2: product expanded by hand
  VarTable t = table(6);
  Poly g = parse_poly("1 - x1 - x2 - x3", t);
  Poly p = parse_poly("x1 + x2", t);
  Poly prod = g * p;
  CHECK(prod == parse_poly("x1 + x2 - x1^2 - 2*x1*x2 - x2^2 - x1*x3 - x2*x3", t));
}

TEST_CASE("differentiate") {
  VarTable t = table(3);
  Poly p = parse_poly("x1^2*x2", t);
  CHECK(p.derivative(1) == parse_poly("2*x1*x2", t));
  CHECK(parse_poly("5", t).derivative(2).is_zero());

  // grad of f_1 from example 5.1
  Poly f1 = parse_poly("x1*x2*x3 - x1^2 - x2^2", t);
  CHECK(f1.derivative(1) == parse_poly("x2*x3 - 2*x1", t));
  CHECK(f1.derivative(2) == parse_poly("x1*x3 - 2*x2", t));
  CHECK(f1.derivative(3) == parse_poly("x1*x2", t));
}

TEST_CASE("evaluate") {
  VarTable t = table(3);
  Poly g = parse_poly("1 - x1 - x2 - x3", t);
  std::vector<double> pt{0, 1, 0, 0};
  CHECK(g.eval(pt) == doctest::Approx(0.0));
  CHECK(parse_poly("7/2", t).eval(pt) == doctest::Approx(3.5));
  CHECK_THROWS(parse_poly("x3", t).eval(std::vector<double>{0, 1}));
}

TEST_CASE("degree and support") {
  VarTable t = table(8);
  Poly z;
  CHECK(z.degree() == 0);
  CHECK(z.vars().empty());

  Poly p = parse_poly("x1*x2*x3 - x1^2 - x2^2", t);
  CHECK(p.degree() == 3);
  CHECK(p.num_terms() == 3);
  CHECK(p.vars() == std::set<int>{1, 2, 3});

  // f_3 of example 5.3: (x4*x7*x8 + x7 + x8)*x8 expanded
  Poly f3 = parse_poly("x4*x7*x8^2 + x7*x8 + x8^2", t);
  CHECK(f3.degree() == 4);
  CHECK(f3.vars() == std::set<int>{4, 7, 8});
}

TEST_CASE("ring axioms on random polynomials") {
  Rng rng{42};
  for (int trial = 0; trial < 100; ++trial) {
    Poly a = random_poly(rng, 5, 4, 5);
    Poly b = random_poly(rng, 5, 4, 5);
    Poly c = random_poly(rng, 5, 4, 5);
    CHECK(a + b == b + a);
    CHECK(a * b == b * a);
    CHECK((a + b) + c == a + (b + c));
    CHECK((a * b) * c == a * (b * c));
    CHECK(a * (b + c) == a * b + a * c);
  }
}

TEST_CASE("product rule, exact") {
  Rng rng{7};
  for (int trial = 0; trial < 100; ++trial) {
    Poly p = random_poly(rng, 4, 4, 4);
    Poly q = random_poly(rng, 4, 4, 4);
    int v = rng.range(1, 4);
    CHECK((p * q).derivative(v) == p.derivative(v) * q + p * q.derivative(v));
  }
}

TEST_CASE("derivative matches central finite differences") {
  Rng rng{99};
  for (int trial = 0; trial < 20; ++trial) {
    Poly p = random_poly(rng, 3, 4, 6);
    int v = rng.range(1, 3);
    std::vector<double> pt{0, 0.3, -0.7, 0.9};
    double h = 1e-5;
    auto ptp = pt, ptm = pt;
    ptp[v] += h;
    ptm[v] -= h;
    double fd = (p.eval(ptp) - p.eval(ptm)) / (2 * h);
    double ex = p.derivative(v).eval(pt);
    CHECK(std::fabs(fd - ex) <= 1e-5 * (1 + std::fabs(ex)));
  }
}

TEST_CASE("serialize/parse round trip") {
  Rng rng{2024};
  VarTable t = table(5);
  for (int trial = 0; trial < 100; ++trial) {
    Poly p = random_poly(rng, 5, 4, 6);
    CHECK(parse_poly(poly_to_string(p, t), t) == p);
  }
  CHECK(poly_to_string(Poly{}, t) == "0");
  CHECK(parse_poly("0", t) == Poly{});
}

TEST_CASE("rational text forms") {
  CHECK(*parse_rational("3/2") == Rational(3, 2));
  CHECK(*parse_rational("-0.25") == Rational(-1, 4));
  CHECK(*parse_rational("2e3") == Rational(2000));
  CHECK(!parse_rational("1/0"));
  CHECK(rational_to_string(Rational(-7, 3)) == "-7/3");
  CHECK(reconstruct_rational(0.5) == Rational(1, 2));
  CHECK(reconstruct_rational(-1.0 / 3.0) == Rational(-1, 3));
}
