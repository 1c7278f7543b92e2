#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cspop/csp.hpp"
#include "cspop/moment.hpp"
#include "cspop/reform.hpp"

namespace cspop {

struct OracleResult {
  double best_value = std::numeric_limits<double>::infinity();
  std::vector<double> best_point;  // size n, empty when nothing feasible found
  double feasibility = 0;          // max violation at the best point
  double kkt_resid = 0;            // aggregate KKT residual with estimated multipliers
  std::vector<std::vector<double>> multipliers;  // per-block estimates at best point
  std::vector<double> start_values;  // per-start best value (trace)
  std::string method;
  uint64_t seed = 0;

  bool feasible() const { return !best_point.empty(); }
};

struct OracleOptions {
  int starts = 40;
  uint64_t seed = 1;
  double box_lo = -2.0, box_hi = 2.0;  // sampling box for starts
  int penalty_stages = 6;              // weights 10^3 .. 10^8
  int iters_per_stage = 400;
};

// Multi-start penalty descent: Armijo gradient steps on f + rho * violation^2
// with a x10 weight schedule, followed by a Gauss-Newton feasibility repair.
// Deterministic for a fixed seed; the reduction picks the minimum by
// (value, start index).
OracleResult local_search_upper_bound(const CspProblem& p, const OracleOptions& opts = {});

// Exhaustive grid over the supplied box plus one local refinement; n <= 4.
OracleResult grid_minimize(const CspProblem& p, int resolution_per_axis,
                           double box_lo, double box_hi);

struct SandwichReport {
  double lower = 0, upper = 0, gap = 0;
  bool certified = false;  // gap <= certify_tol and both sides trusted
  std::string detail;
};

// Asserts lower <= upper + tol; a violation is a hard error (modeling or
// solver bug upstream).
SandwichReport compare_bounds(const BoundReport& lower, const OracleResult& upper,
                              double tol = 1e-6, double certify_tol = 1e-5);

}  // namespace cspop
