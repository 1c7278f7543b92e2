#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cspop {

// Power product over a global 1-based variable index space. Exponents are
// stored sparsely, sorted by variable id, never zero.
class Monomial {
 public:
  Monomial() = default;
  static Monomial variable(int id, int exp = 1);

  const std::vector<std::pair<int, int>>& exponents() const { return e_; }
  bool is_constant() const { return e_.empty(); }
  int degree() const;
  int exponent_of(int id) const;
  std::vector<int> support() const;
  int max_var() const { return e_.empty() ? 0 : e_.back().first; }

  Monomial operator*(const Monomial& other) const;
  // Multiply by a single variable power.
  Monomial times(int id, int exp) const;
  Monomial derivative_monomial(int id) const;  // exponent of id reduced by one

  bool operator==(const Monomial& other) const { return e_ == other.e_; }
  bool operator!=(const Monomial& other) const { return e_ != other.e_; }
  // Graded lexicographic: lower total degree first; within a degree class the
  // monomial with the larger exponent on the smallest differing variable
  // comes first (so 1, x1, x2, x1^2, x1*x2, x2^2, ...).
  bool operator<(const Monomial& other) const;

  size_t hash() const;

  // Internal: construct from a sorted (id, exp>0) list. No validation.
  static Monomial from_sorted(std::vector<std::pair<int, int>> e);

 private:
  std::vector<std::pair<int, int>> e_;
};

struct MonomialHash {
  size_t operator()(const Monomial& m) const { return m.hash(); }
};

}  // namespace cspop
