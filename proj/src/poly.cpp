#include "cspop/poly.hpp"

#include <algorithm>
#include <cmath>

namespace cspop {

Poly Poly::constant(Rational c) {
  Poly p;
  if (c != 0) p.terms_.emplace(Monomial{}, std::move(c));
  return p;
}

Poly Poly::variable(int id, int exp) {
  Poly p;
  if (exp < 0) throw std::invalid_argument("negative exponent");
  if (exp == 0) return constant(1);
  p.terms_.emplace(Monomial::variable(id, exp), Rational(1));
  return p;
}

Poly Poly::term(Monomial m, Rational c) {
  Poly p;
  if (c != 0) p.terms_.emplace(std::move(m), std::move(c));
  return p;
}

bool Poly::is_constant() const {
  return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.is_constant());
}

Rational Poly::constant_term() const {
  auto it = terms_.find(Monomial{});
  return it == terms_.end() ? Rational(0) : it->second;
}

int Poly::degree() const {
  if (terms_.empty()) return 0;
  return terms_.rbegin()->first.degree();  // grlex: last term has max degree
}

std::set<int> Poly::vars() const {
  std::set<int> s;
  for (auto& [m, c] : terms_)
    for (int v : m.support()) s.insert(v);
  return s;
}

int Poly::max_var() const {
  int mv = 0;
  for (auto& [m, c] : terms_) mv = std::max(mv, m.max_var());
  return mv;
}

Rational Poly::coeff(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? Rational(0) : it->second;
}

Rational Poly::max_abs_coeff() const {
  Rational best(0);
  for (auto& [m, c] : terms_) {
    Rational a = c < 0 ? Rational(-c) : c;
    if (a > best) best = a;
  }
  return best;
}

void Poly::add_term(const Monomial& m, const Rational& c) {
  if (c == 0) return;
  auto [it, inserted] = terms_.try_emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Poly Poly::operator+(const Poly& q) const {
  Poly r = *this;
  r += q;
  return r;
}

Poly& Poly::operator+=(const Poly& q) {
  for (auto& [m, c] : q.terms_) add_term(m, c);
  return *this;
}

Poly Poly::operator-(const Poly& q) const {
  Poly r = *this;
  r -= q;
  return r;
}

Poly& Poly::operator-=(const Poly& q) {
  for (auto& [m, c] : q.terms_) add_term(m, -c);
  return *this;
}

Poly Poly::operator-() const {
  Poly r;
  for (auto& [m, c] : terms_) r.terms_.emplace(m, -c);
  return r;
}

Poly Poly::operator*(const Poly& q) const {
  Poly r;
  for (auto& [m1, c1] : terms_)
    for (auto& [m2, c2] : q.terms_) r.add_term(m1 * m2, c1 * c2);
  return r;
}

Poly Poly::scaled(const Rational& c) const {
  Poly r;
  if (c == 0) return r;
  for (auto& [m, k] : terms_) r.terms_.emplace(m, k * c);
  return r;
}

Poly Poly::derivative(int var) const {
  Poly r;
  for (auto& [m, c] : terms_) {
    int e = m.exponent_of(var);
    if (e > 0) r.add_term(m.derivative_monomial(var), c * e);
  }
  return r;
}

double Poly::eval(const std::vector<double>& point) const {
  double acc = 0.0;
  for (auto& [m, c] : terms_) {  // grlex order: deterministic summation
    double t = to_double(c);
    for (auto& [v, e] : m.exponents()) {
      if (v >= static_cast<int>(point.size()))
        throw std::out_of_range("evaluation point misses variable x" + std::to_string(v));
      t *= std::pow(point[v], e);
    }
    acc += t;
  }
  return acc;
}

Rational Poly::eval_exact(const std::vector<Rational>& point) const {
  Rational acc(0);
  for (auto& [m, c] : terms_) {
    Rational t = c;
    for (auto& [v, e] : m.exponents()) {
      if (v >= static_cast<int>(point.size()))
        throw std::out_of_range("evaluation point misses variable x" + std::to_string(v));
      for (int i = 0; i < e; ++i) t *= point[v];
    }
    acc += t;
  }
  return acc;
}

bool PolyMatrix::all_zero() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const Poly& p) { return p.is_zero(); });
}

PolyMatrix lme_product(const PolyMatrix& L, const PolyMatrix& D,
                       const PolyMatrix& G) {
  int n = L.cols, mh = D.cols, r = L.rows;
  if (D.rows != r || G.rows != n + mh || G.cols != mh)
    throw std::invalid_argument("lme_product: shape mismatch");
  PolyMatrix out(r, mh);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < mh; ++j) {
      Poly acc;
      for (int k = 0; k < n; ++k) acc += L.at(i, k) * G.at(k, j);
      for (int k = 0; k < mh; ++k) acc += D.at(i, k) * G.at(n + k, j);
      out.at(i, j) = std::move(acc);
    }
  return out;
}

}  // namespace cspop
