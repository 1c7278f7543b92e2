#pragma once

#include <optional>
#include <vector>

#include "cspop/csp.hpp"
#include "cspop/lme.hpp"
#include "cspop/poly_text.hpp"

namespace cspop {

// One linking variable per (arc, shared variable). Flat ids are assigned
// after the x-variables, ordered lexicographically by (i, t, k).
struct NuVar {
  int i = 0, t = 0, k = 0;
  int flat = 0;
};

std::vector<NuVar> enumerate_nu(const CspTree& tree, int n_x);

// F_i = grad_i f_i - sum_{t in parents} nu^(i,t) + sum_{t in children} nu^(t,i),
// expressed over global ids; entry r differentiates with respect to clique[r].
PolyVector build_F(const CspProblem& p, const CspTree& tree,
                   const std::vector<NuVar>& nus, int block /*1-based*/);

// CS-LME multiplier vector p^(i) = L_i(x^(i)) * F_i(x^(i), nu^(i)).
PolyVector build_cs_multipliers(const CspProblem& p, const CspTree& tree,
                                const LmePair& lme, const std::vector<NuVar>& nus,
                                int block);

enum class ReformMode { kCsLme, kPlainLme };

// KKT-based reformulation. In cs-lme mode the result keeps one block per
// original clique, with extended cliques I_i ∪ J_i over the x+nu variable
// space; in plain-lme mode everything is pooled into the single clique [n]
// and a whole-problem multiplier expression is synthesized.
struct Reformulation {
  ReformMode mode = ReformMode::kCsLme;
  int n_x = 0;
  VarTable table;      // x-variables plus nu-variables
  CspTree tree;        // empty in plain mode
  std::vector<NuVar> nus;
  CspProblem problem;  // n = table.total(); per block: clique = extended
                       // clique, objective = f_i, eqs = phi^(i), ineqs = psi^(i)
  std::vector<PolyVector> multipliers;     // p^(i) per block
  std::vector<int> dropped_stationarity;   // identically-zero rows removed
};

Reformulation build_reformulation(const CspProblem& p, ReformMode mode,
                                  int degree_cap = -1);

struct KktReport {
  double stationarity = 0;    // max-norm of the aggregate stationarity residual
  double primal_eq = 0;       // max |h_j|
  double primal_ineq = 0;     // max violation of g_j >= 0
  double sign = 0;            // max violation of lambda_{1:m} >= 0
  double complementarity = 0; // max |lambda_j g_j|
  std::vector<std::pair<std::string, double>> per_constraint;  // primal residuals
  double max_all() const;
};

KktReport kkt_residual(const CspProblem& p, const std::vector<double>& x,
                       const std::vector<std::vector<double>>& lambda);

struct NuRecovery {
  std::vector<double> nu;               // canonical NuVar order
  double residual = 0;                  // max least-squares residual over k
  std::vector<double> block_residual;   // per-block stationarity of the split system
};

// Least-squares recovery of the linking variables from an (approximate) KKT
// pair, one incidence-structured solve per shared variable.
NuRecovery recover_nu(const CspProblem& p, const CspTree& tree,
                      const std::vector<double>& x,
                      const std::vector<std::vector<double>>& lambda);

}  // namespace cspop
