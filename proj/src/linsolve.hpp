#pragma once

#include <optional>
#include <vector>

#include "cspop/rational.hpp"

namespace cspop::detail {

// Sparse linear system A x = b over the rationals.
struct LinearSystem {
  int ncols = 0;
  std::vector<std::vector<std::pair<int, Rational>>> rows;
  std::vector<Rational> rhs;
};

// Basic solution with free columns pinned to zero under left-to-right pivot
// order, or nullopt when inconsistent. Small systems are eliminated directly
// over Q; larger ones are solved modulo word-sized primes and lifted by
// rational reconstruction. Every returned solution is exact-verified against
// the system.
std::optional<std::vector<Rational>> solve_sparse_linear(const LinearSystem& sys);

}  // namespace cspop::detail
