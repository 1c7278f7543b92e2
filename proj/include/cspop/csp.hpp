#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cspop/poly.hpp"
#include "cspop/poly_text.hpp"

namespace cspop {

// One correlative-sparsity block: clique of variable indices, objective
// summand, and the constraints supported on the clique.
struct CspBlock {
  std::vector<int> clique;  // ascending variable ids; local position of id
                            // defines the block's unit-vector enumeration
  Poly objective;
  std::vector<Poly> ineqs;  // g^(i) >= 0
  std::vector<Poly> eqs;    // h^(i) == 0
};

struct CspProblem {
  int n = 0;  // global x-variable count
  std::vector<CspBlock> blocks;

  int num_blocks() const { return static_cast<int>(blocks.size()); }
  Poly full_objective() const;
  VarTable table() const;  // x-variables only
  // Local position (0-based) of global var id in clique i, or -1.
  int local_index(int block, int id) const;
};

struct CspViolation {
  int block;          // 1-based; 0 for global violations
  std::string where;  // "objective", "ineq 2", "coverage", ...
  int var;            // offending variable id (0 if n/a)
  std::string message;
};

struct ValidationReport {
  std::vector<CspViolation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

ValidationReport validate_csp(const CspProblem& p);

struct RipResult {
  bool holds = false;
  // For each i in [s-1]: witness block index t (1-based) with
  // I_{i+1} ∩ (I_1 ∪ ... ∪ I_i) ⊆ I_t, or nullopt if none exists; paired
  // with the intersection set itself (the violating set when no witness).
  std::vector<std::optional<int>> witness;
  std::vector<std::vector<int>> intersection;
  int first_violation = 0;  // i+1 of the first failing step, 0 if none
};

RipResult check_rip(const std::vector<std::vector<int>>& cliques);

struct CspTree {
  int s = 0;
  std::vector<std::pair<int, int>> arcs;            // (i, t), t < i, 1-based
  std::vector<std::optional<int>> parent;           // A_i per block (size <= 1)
  std::vector<std::vector<int>> children;           // D_i per block
  std::map<std::pair<int, int>, std::vector<int>> overlap;  // C_{i,t}, ascending

  bool has_arc(int i, int t) const { return overlap.count({i, t}) > 0; }
};

// Algorithm: scan i = 1..s-1; when I_{i+1} meets the union of earlier
// cliques, attach i+1 to the largest t <= i whose clique contains the
// intersection. Requires the RIP; blocks with empty intersection become
// additional roots (the result is a forest).
CspTree build_tree(const std::vector<std::vector<int>>& cliques);

// Heuristic csp detection from scratch: variable-interaction graph from the
// term supports, maximal cliques, constraint supports merged in, then an
// ordering that satisfies the RIP if one is found; otherwise the trivial
// single clique [n].
std::vector<std::vector<int>> detect_csp(int n,
                                         const std::vector<Poly>& objective_terms,
                                         const std::vector<Poly>& constraints);

}  // namespace cspop
