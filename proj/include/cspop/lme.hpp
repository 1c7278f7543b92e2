#pragma once

#include <optional>
#include <string>

#include "cspop/csp.hpp"
#include "cspop/poly.hpp"

namespace cspop {

// Gradient-bordered constraint matrix of one block: columns run over the
// enumeration c = (g^(i), h^(i)); the top n_i rows hold the local gradients
// grad_i c_j, the bottom m_i+l_i rows hold diag(c). Entries are polynomials
// in the block's global variable ids; row r of the top block differentiates
// with respect to clique[r].
struct GradientMatrix {
  int block = 0;  // 1-based
  int n_local = 0;
  int m_hat = 0;  // m_i + l_i
  PolyMatrix mat;  // (n_local + m_hat) x m_hat
};

// Certified polynomial left inverse: [L D] * G = I holds exactly. Multiplier
// rows follow the same (g^(i), h^(i)) enumeration as G's columns.
struct LmePair {
  int block = 0;
  PolyMatrix L;  // m_hat x n_local, entries in the block's x-variables
  PolyMatrix D;  // m_hat x m_hat
  std::string provenance;  // template name or "ansatz deg k"
  int m_hat() const { return L.rows; }
};

struct LmeSynthesisError : std::runtime_error {
  int block;
  LmeSynthesisError(int blk, const std::string& msg)
      : std::runtime_error(msg), block(blk) {}
};

GradientMatrix build_gradient_matrix(const CspProblem& p, int block /*1-based*/);

// Closed-form (L, D) for the built-in constraint families: separable
// single-variable faces/quadratics, simplex-type single affine constraint
// plus coordinate rows, ball / sphere, and a single equality with a
// constant-gradient coordinate. Returns nullopt when the block matches none.
std::optional<LmePair> template_lme(const CspProblem& p, int block);

// Template first, then a degree-bounded exact linear ansatz on [L D]G = I,
// solved row by row for k = 0..degree_cap; the returned pair is always
// verified exactly. Throws LmeSynthesisError when no pair exists up to the
// cap. degree_cap < 0 selects the default max(2, constraint degrees).
LmePair synthesize_lme(const CspProblem& p, int block, int degree_cap = -1);

// Residual [L D]*G - I, computed exactly; the pair is certified iff every
// entry is the zero polynomial.
PolyMatrix verify_lme(const GradientMatrix& gm, const LmePair& pair);

}  // namespace cspop
