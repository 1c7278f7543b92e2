#pragma once

#include <string>

#include "cspop/sdp.hpp"

namespace cspop {

// SDPA sparse ".dat-s" writer. Layout: line 1 the variable count, line 2 the
// block count, line 3 the block sizes (negative for the diagonal block that
// carries lowered equality rows), line 4 the objective vector, then one
// "k b i j v" line per upper-triangle entry with 1-based indices, ordered by
// (k, b, i, j), doubles printed with 17 significant digits. k = 0 holds the
// constant matrix C.
void export_sdpa(const SdpProblem& sdp, const std::string& path);
std::string sdpa_text(const SdpProblem& sdp);

// Inverse of export_sdpa: a trailing diagonal block whose entries form
// (+row, -row) pairs is lifted back to equality rows, so
// import_sdpa(export_sdpa(p)) == p for problems in either form. Throws
// std::runtime_error with a line number on malformed input.
SdpProblem import_sdpa(const std::string& path);
SdpProblem parse_sdpa(const std::string& text);

// Solution fragment parsed from SDPA-style solver output. Residuals are
// never taken from the file; pair with check_solution to validate.
struct SdpaSolutionFragment {
  double obj_primal = 0;
  double obj_dual = 0;
  bool has_xvec = false;
  std::vector<double> xvec;
  std::string phase;  // e.g. "pdOPT", empty if absent
};

SdpaSolutionFragment import_sdpa_solution(const std::string& path);

// Claimed objective values are cross-checked against values recomputed from
// the fragment's own variable vector; a disagreement beyond tol downgrades
// the claimed status to near-optimal.
SdpStatus reconcile_solution(const SdpProblem& sdp, const SdpaSolutionFragment& frag,
                             double tol = 1e-6);

}  // namespace cspop
