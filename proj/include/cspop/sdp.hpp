#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace cspop {

// Block SDP in the form the moment assembler produces:
//
//   maximize   obj' y
//   subject to sum_k y_k A[k,b]  <=  C[b]        (psd order, per block b)
//              sum_k E[j,k] y_k  =   rhs[j]      (free equality rows)
//
// The minimization side carries one psd matrix X_b per block plus one free
// scalar u_j per equality row:
//
//   minimize   sum_b <C[b], X_b> + rhs' u
//   subject to sum_b <A[k,b], X_b> + sum_j E[j,k] u_j = obj_k,  X_b >= 0.
//
// Coefficient matrices are symmetric, stored as upper-triangle entries.
struct SdpProblem {
  struct Coeff {
    int k;  // 0 -> C, >=1 -> A_k
    int row, col;  // 0-based, row <= col
    double v;
  };
  struct EqRow {
    std::vector<std::pair<int, double>> coeffs;  // (k, value), k 1-based
    double rhs = 0;
  };

  int m = 0;  // number of y variables
  std::vector<int> block_sizes;
  std::vector<std::vector<Coeff>> block_entries;  // per block
  std::vector<double> obj;                        // length m
  std::vector<EqRow> eqrows;

  int num_blocks() const { return static_cast<int>(block_sizes.size()); }
  bool valid(std::string* why = nullptr) const;
};

enum class SdpStatus {
  kOptimal,
  kNearOptimal,
  kInfeasible,
  kUnbounded,
  kMaxIter,
  kNumericalFailure,
};

std::string to_string(SdpStatus s);

struct SdpSolution {
  SdpStatus status = SdpStatus::kNumericalFailure;
  double primal_obj = 0;  // obj' y   (the maximization side)
  double dual_obj = 0;    // <C,X> + rhs' u (the certificate side, >= primal)
  std::vector<double> y;
  std::vector<double> u;
  std::vector<Eigen::MatrixXd> X;  // certificate matrices, one per block
  std::vector<Eigen::MatrixXd> S;  // slack C - sum y A
  double primal_resid = 0;  // relative feasibility of the minimization side
  double dual_resid = 0;    // relative feasibility of the y side (LMI + eqrows)
  double rel_gap = 0;
  int iterations = 0;
  std::string message;
};

struct SolveOptions {
  double tol = 1e-8;
  int max_iter = 200;
  uint64_t seed = 0;  // accepted for interface stability; the method is
                      // deterministic and draws no random numbers
  bool verbose = false;
};

// Infeasible-start Mehrotra predictor-corrector with the HKM direction;
// equality rows are handled through a quasi-definite augmented system.
// Deterministic: fixed summation order, no time- or seed-dependent choices.
SdpSolution solve(const SdpProblem& sdp, const SolveOptions& opts = {});

struct ResidualReport {
  double primal = 0;       // minimization-side equality residual (abs, inf-norm)
  double dual = 0;         // y-side residual: LMI slack + equality rows
  double gap = 0;          // |primal_obj - dual_obj|
  double min_eig_X = 0;    // most negative eigenvalue over X blocks
  double min_eig_S = 0;
  double max_all() const;
};

// Recomputes everything from scratch; never trusts the solution's own fields.
ResidualReport check_solution(const SdpProblem& sdp, const SdpSolution& sol);

}  // namespace cspop
