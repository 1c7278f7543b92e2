#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "cspop/monomial.hpp"
#include "cspop/rational.hpp"

namespace cspop {

// Sparse multivariate polynomial with exact rational coefficients. Immutable
// in spirit: arithmetic returns new values, so instances can be shared freely
// across threads. Terms are kept in graded-lex order; zero coefficients are
// never stored. The zero polynomial has degree 0 by convention.
class Poly {
 public:
  using TermMap = std::map<Monomial, Rational>;

  Poly() = default;
  static Poly constant(Rational c);
  static Poly variable(int id, int exp = 1);
  static Poly term(Monomial m, Rational c);

  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  Rational constant_term() const;
  int degree() const;
  int num_terms() const { return static_cast<int>(terms_.size()); }
  std::set<int> vars() const;
  int max_var() const;
  Rational coeff(const Monomial& m) const;
  Rational max_abs_coeff() const;

  Poly operator+(const Poly& q) const;
  Poly operator-(const Poly& q) const;
  Poly operator-() const;
  Poly operator*(const Poly& q) const;
  Poly& operator+=(const Poly& q);
  Poly& operator-=(const Poly& q);
  Poly scaled(const Rational& c) const;

  Poly derivative(int var) const;

  // Evaluation at a point given as a vector indexed by variable id (slot 0
  // unused). Throws if some variable of the polynomial has no slot.
  double eval(const std::vector<double>& point) const;
  Rational eval_exact(const std::vector<Rational>& point) const;

  bool operator==(const Poly& q) const { return terms_ == q.terms_; }
  bool operator!=(const Poly& q) const { return terms_ != q.terms_; }

  void add_term(const Monomial& m, const Rational& c);  // drops zeros

 private:
  TermMap terms_;
};

using PolyVector = std::vector<Poly>;

struct PolyMatrix {
  int rows = 0, cols = 0;
  std::vector<Poly> entries;  // row-major

  PolyMatrix() = default;
  PolyMatrix(int r, int c) : rows(r), cols(c), entries(r * c) {}
  Poly& at(int r, int c) { return entries[r * cols + c]; }
  const Poly& at(int r, int c) const { return entries[r * cols + c]; }
  bool all_zero() const;
};

// [L D] * G, shapes (r x n | r x m) * ((n+m) x m) -> r x m.
PolyMatrix lme_product(const PolyMatrix& L, const PolyMatrix& D,
                       const PolyMatrix& G);

}  // namespace cspop
