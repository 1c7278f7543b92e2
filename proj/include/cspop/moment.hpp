#pragma once

#include <string>
#include <vector>

#include "cspop/csp.hpp"
#include "cspop/sdp.hpp"

namespace cspop {

// Ordered monomial basis of degree <= d over the given (ascending) variable
// ids, graded-lex, element 0 the constant monomial.
std::vector<Monomial> moment_basis(const std::vector<int>& clique_vars, int d);

struct MomentBlockInfo {
  int clique = 0;  // 1-based block index
  enum Kind { kMoment, kLocalizer } kind = kMoment;
  int constraint = 0;  // 1-based index into the block's inequality list
  int size = 0;
};

// Correlative-sparse moment relaxation as a block SDP over the shared
// truncated moment vector. Index 0 of `index` is the constant monomial whose
// moment is pinned to one (substituted out, so sdp variable k corresponds to
// index[k]).
struct MomentSdp {
  SdpProblem sdp;
  std::vector<Monomial> index;          // Gamma_{2d}, graded-lex
  std::vector<MomentBlockInfo> blocks;  // parallel to sdp.block_sizes
  int order = 0;
  int num_eq_polys = 0;   // equality polynomials turned into zero-localizer rows
  double obj_constant = 0;
  double obj_scale = 1;   // objective was divided by this before assembly

  int num_moments() const { return static_cast<int>(index.size()); }
};

// Smallest order d with 2d covering every objective/constraint degree.
int min_admissible_order(const CspProblem& p);

// One moment block per clique, one psd localizer per inequality, zero
// localizers (equality rows) per equality, y_0 = 1 substituted, objective
// folded onto the shared index. Throws std::invalid_argument when 2d is
// below the degree of some polynomial.
MomentSdp assemble_cs_moment(const CspProblem& p, int d);

// Same machinery on the trivial single-clique pooling of the problem.
MomentSdp assemble_dense_moment(const CspProblem& p, int d);

struct BoundReport {
  double bound = 0;         // certified side, unscaled
  double moment_value = 0;  // moment-side objective, unscaled
  SdpStatus status = SdpStatus::kNumericalFailure;
  double gap = 0;
  double primal_resid = 0;
  double dual_resid = 0;
  bool valid = false;  // residuals and gap within tolerance
  int order = 0;
  std::string message;
};

BoundReport extract_bound(const MomentSdp& msdp, const SdpSolution& sol,
                          double tol = 1e-6);

}  // namespace cspop
