#include "cspop/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace cspop {

bool SdpProblem::valid(std::string* why) const {
  auto fail = [&](const std::string& msg) {
    if (why) *why = msg;
    return false;
  };
  if (m <= 0) return fail("no variables");
  if (block_entries.size() != block_sizes.size()) return fail("block count mismatch");
  if (static_cast<int>(obj.size()) != m) return fail("objective length mismatch");
  if (block_sizes.empty() && eqrows.empty()) return fail("no constraints");
  for (size_t b = 0; b < block_sizes.size(); ++b) {
    if (block_sizes[b] <= 0) return fail("nonpositive block size");
    for (auto& e : block_entries[b]) {
      if (e.k < 0 || e.k > m) return fail("entry variable index out of range");
      if (e.row < 0 || e.col < e.row || e.col >= block_sizes[b])
        return fail("entry position out of range");
    }
  }
  for (auto& r : eqrows)
    for (auto& [k, v] : r.coeffs)
      if (k < 1 || k > m) return fail("equality row index out of range");
  return true;
}

std::string to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::kOptimal: return "optimal";
    case SdpStatus::kNearOptimal: return "near-optimal";
    case SdpStatus::kInfeasible: return "infeasible";
    case SdpStatus::kUnbounded: return "unbounded";
    case SdpStatus::kMaxIter: return "max-iter";
    case SdpStatus::kNumericalFailure: return "numerical-failure";
  }
  return "?";
}

double ResidualReport::max_all() const {
  return std::max({primal, dual, gap, -min_eig_X, -min_eig_S});
}

namespace {

// Per-block view with entries grouped by variable index.
struct BlockData {
  int size = 0;
  // entries sorted by k; ranges[j] = (k, first, last) into entries
  std::vector<SdpProblem::Coeff> entries;
  std::vector<std::array<int, 3>> ranges;
  Eigen::MatrixXd C;
};

std::vector<BlockData> prepare_blocks(const SdpProblem& sdp) {
  std::vector<BlockData> blocks(sdp.num_blocks());
  for (int b = 0; b < sdp.num_blocks(); ++b) {
    BlockData& bd = blocks[b];
    bd.size = sdp.block_sizes[b];
    bd.entries = sdp.block_entries[b];
    std::stable_sort(bd.entries.begin(), bd.entries.end(),
                     [](auto& a, auto& c) { return a.k < c.k; });
    bd.C = Eigen::MatrixXd::Zero(bd.size, bd.size);
    int i = 0, n = static_cast<int>(bd.entries.size());
    while (i < n && bd.entries[i].k == 0) {
      auto& e = bd.entries[i];
      bd.C(e.row, e.col) = e.v;
      bd.C(e.col, e.row) = e.v;
      ++i;
    }
    while (i < n) {
      int k = bd.entries[i].k, first = i;
      while (i < n && bd.entries[i].k == k) ++i;
      bd.ranges.push_back({k, first, i});
    }
  }
  return blocks;
}

// <A, T> for symmetric sparse A (upper) against a general square T.
double sym_dot(const std::vector<SdpProblem::Coeff>& ent, int first, int last,
               const Eigen::MatrixXd& T) {
  double acc = 0;
  for (int i = first; i < last; ++i) {
    auto& e = ent[i];
    acc += e.row == e.col ? e.v * T(e.row, e.col)
                          : e.v * (T(e.row, e.col) + T(e.col, e.row));
  }
  return acc;
}

// Adds y_k * A_k into M for all k of the block.
void accumulate_lmi(const BlockData& bd, const std::vector<double>& y,
                    Eigen::MatrixXd& M) {
  for (auto& [k, first, last] : bd.ranges) {
    double yk = y[k - 1];
    if (yk == 0) continue;
    for (int i = first; i < last; ++i) {
      auto& e = bd.entries[i];
      M(e.row, e.col) += yk * e.v;
      if (e.row != e.col) M(e.col, e.row) += yk * e.v;
    }
  }
}

// Largest step in [0,1] keeping P + a*dP psd, via min eigenvalue of
// L^-1 dP L^-T where P = L L^T.
double max_step(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& dP,
                double tau) {
  Eigen::MatrixXd W = llt.matrixL().solve(dP);
  W = llt.matrixL().solve(W.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (W + W.transpose()), Eigen::EigenvaluesOnly);
  double lmin = es.eigenvalues().minCoeff();
  if (lmin >= 0) return 1.0;
  return std::min(1.0, -tau / lmin);
}

struct Iterate {
  std::vector<Eigen::MatrixXd> X, S;
  std::vector<double> y, u;
};

}  // namespace

SdpSolution solve(const SdpProblem& sdp, const SolveOptions& opts) {
  SdpSolution sol;
  std::string why;
  if (!sdp.valid(&why)) {
    sol.status = SdpStatus::kNumericalFailure;
    sol.message = "malformed problem: " + why;
    return sol;
  }
  const int m = sdp.m;
  const int nb = sdp.num_blocks();
  auto blocks = prepare_blocks(sdp);

  Eigen::VectorXd obj = Eigen::Map<const Eigen::VectorXd>(sdp.obj.data(), m);

  double normC = 1e-10, normA = 1e-10;
  for (int b = 0; b < nb; ++b) {
    normC = std::max(normC, blocks[b].C.cwiseAbs().maxCoeff());
    for (auto& e : blocks[b].entries)
      if (e.k >= 1) normA = std::max(normA, std::fabs(e.v));
  }
  double normObj = std::max(1e-10, obj.cwiseAbs().maxCoeff());

  // Presolve: eliminate the equality rows by an affine null-space
  // parameterization y = y0 + N z. The minimization side then has no free
  // scalars, which removes the main source of late-iteration blow-ups on
  // equality-heavy moment relaxations.
  const int q0 = static_cast<int>(sdp.eqrows.size());
  Eigen::MatrixXd N;           // m x mt (orthonormal columns), empty if q0 == 0
  Eigen::VectorXd y0 = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd Efull;       // q0 x m, row-equilibrated
  Eigen::VectorXd gfull;
  int mt = m;
  bool reduced = false;
  if (q0 > 0) {
    Efull.setZero(q0, m);
    gfull.setZero(q0);
    for (int j = 0; j < q0; ++j) {
      double scale = std::fabs(sdp.eqrows[j].rhs);
      for (auto& [k, c] : sdp.eqrows[j].coeffs) scale = std::max(scale, std::fabs(c));
      if (scale <= 0) scale = 1;
      for (auto& [k, c] : sdp.eqrows[j].coeffs) Efull(j, k - 1) += c / scale;
      gfull[j] = sdp.eqrows[j].rhs / scale;
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Efull,
                                       Eigen::ComputeThinU | Eigen::ComputeFullV);
    double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) > 1e-10 * std::max(smax, 1.0)) ++rank;
    y0 = svd.solve(gfull);  // minimum-norm particular solution
    double cons = (Efull * y0 - gfull).cwiseAbs().maxCoeff();
    if (cons > 1e-7 * (1 + gfull.cwiseAbs().maxCoeff())) {
      sol.status = SdpStatus::kInfeasible;
      sol.message = "equality rows are inconsistent";
      return sol;
    }
    mt = m - rank;
    N = svd.matrixV().rightCols(mt);
    reduced = true;
  }

  int N_total = 0;
  for (int b = 0; b < nb; ++b) N_total += blocks[b].size;
  if (N_total == 0) N_total = 1;

  // Reduced objective.
  Eigen::VectorXd bt = reduced ? (N.transpose() * obj).eval() : obj;

  auto lift = [&](const Eigen::VectorXd& z) {
    return reduced ? (y0 + N * z).eval() : z;
  };

  // Trivial case: the equality rows pin y completely.
  if (mt == 0) {
    Eigen::VectorXd y = y0;
    sol.y.assign(y.data(), y.data() + m);
    sol.u.assign(q0, 0.0);
    sol.X.resize(nb);
    sol.S.resize(nb);
    double mineig = 0;
    for (int b = 0; b < nb; ++b) {
      Eigen::MatrixXd lmi = Eigen::MatrixXd::Zero(blocks[b].size, blocks[b].size);
      std::vector<double> yv(sol.y);
      accumulate_lmi(blocks[b], yv, lmi);
      sol.S[b] = blocks[b].C - lmi;
      sol.X[b] = Eigen::MatrixXd::Zero(blocks[b].size, blocks[b].size);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.S[b], Eigen::EigenvaluesOnly);
      mineig = std::min(mineig, es.eigenvalues().minCoeff());
    }
    sol.primal_obj = sol.dual_obj = obj.dot(y);
    sol.rel_gap = 0;
    sol.primal_resid = 0;
    sol.dual_resid = std::max(0.0, -mineig) / (1 + normC);
    sol.status = sol.dual_resid <= opts.tol ? SdpStatus::kOptimal
                                            : SdpStatus::kInfeasible;
    if (sol.status == SdpStatus::kInfeasible)
      sol.message = "equality rows pin the variables outside the LMI cone";
    return sol;
  }

  struct It {
    std::vector<Eigen::MatrixXd> X, S;
    Eigen::VectorXd z;
  } it;
  it.X.resize(nb);
  it.S.resize(nb);
  double xi = std::max({10.0, std::sqrt(double(N_total)),
                        double(N_total) * normObj / (1 + normA)});
  double eta = std::max({10.0, std::sqrt(double(N_total)), normA, normC});
  for (int b = 0; b < nb; ++b) {
    it.X[b] = xi * Eigen::MatrixXd::Identity(blocks[b].size, blocks[b].size);
    it.S[b] = eta * Eigen::MatrixXd::Identity(blocks[b].size, blocks[b].size);
  }
  it.z = Eigen::VectorXd::Zero(mt);

  const double tau = 0.98;
  const double near_tol = std::max(1e-5, 10 * opts.tol);
  double best_metric = 1e300;
  It best = it;
  double best_pobj = 0, best_dobj = 0, best_pfeas = 1, best_dfeas = 1, best_gap = 1;
  int stall = 0;

  auto classify_best = [&](SdpStatus fallback, const std::string& msg) {
    sol.primal_obj = best_pobj;
    sol.dual_obj = best_dobj;
    sol.primal_resid = best_pfeas;
    sol.dual_resid = best_dfeas;
    sol.rel_gap = best_gap;
    it = best;
    if (best_pfeas <= opts.tol && best_dfeas <= opts.tol && best_gap <= opts.tol)
      sol.status = SdpStatus::kOptimal;
    else if (best_pfeas <= near_tol && best_dfeas <= near_tol && best_gap <= near_tol)
      sol.status = SdpStatus::kNearOptimal;
    else
      sol.status = fallback;
    sol.message = msg;
  };

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    Eigen::VectorXd y = lift(it.z);
    std::vector<double> yv(y.data(), y.data() + m);

    // A(X) in the original space.
    Eigen::VectorXd ax = Eigen::VectorXd::Zero(m);
    for (int b = 0; b < nb; ++b)
      for (auto& [k, first, last] : blocks[b].ranges)
        ax[k - 1] += sym_dot(blocks[b].entries, first, last, it.X[b]);
    Eigen::VectorXd rp_full = obj - ax;
    Eigen::VectorXd rp = reduced ? (N.transpose() * rp_full).eval() : rp_full;

    std::vector<Eigen::MatrixXd> Rd(nb);
    double rd_norm = 0;
    for (int b = 0; b < nb; ++b) {
      Eigen::MatrixXd lmi = Eigen::MatrixXd::Zero(blocks[b].size, blocks[b].size);
      accumulate_lmi(blocks[b], yv, lmi);
      Rd[b] = blocks[b].C - lmi - it.S[b];
      rd_norm = std::max(rd_norm, Rd[b].cwiseAbs().maxCoeff());
    }

    double mu = 0;
    for (int b = 0; b < nb; ++b) mu += it.X[b].cwiseProduct(it.S[b]).sum();
    mu /= N_total;

    double pobj = obj.dot(y);
    double dobj = y0.dot(rp_full);  // g'u of the reconstructed multipliers
    for (int b = 0; b < nb; ++b) dobj += blocks[b].C.cwiseProduct(it.X[b]).sum();

    double rel_gap = std::fabs(pobj - dobj) / (1 + std::fabs(pobj) + std::fabs(dobj));
    double pfeas = (rp.size() ? rp.cwiseAbs().maxCoeff() : 0.0) / (1 + normObj);
    double dfeas = rd_norm / (1 + normC);

    sol.primal_obj = pobj;
    sol.dual_obj = dobj;
    sol.primal_resid = pfeas;
    sol.dual_resid = dfeas;
    sol.rel_gap = rel_gap;
    sol.iterations = iter;

    double metric = std::max({pfeas, dfeas, rel_gap});
    if (metric < best_metric) {
      best_metric = metric;
      best = it;
      best_pobj = pobj;
      best_dobj = dobj;
      best_pfeas = pfeas;
      best_dfeas = dfeas;
      best_gap = rel_gap;
      stall = 0;
    } else {
      ++stall;
    }

    if (opts.verbose) {
      std::ostringstream os;
      os << "it " << iter << " pobj " << pobj << " dobj " << dobj << " gap "
         << rel_gap << " pfeas " << pfeas << " dfeas " << dfeas << " mu " << mu
         << "\n";
      fputs(os.str().c_str(), stderr);
    }

    if (pfeas <= opts.tol && dfeas <= opts.tol && rel_gap <= opts.tol) {
      sol.status = SdpStatus::kOptimal;
      sol.message = "";
      break;
    }
    double znorm = it.z.size() ? it.z.cwiseAbs().maxCoeff() : 0.0;
    if (znorm > 1e12 || std::fabs(pobj) > 1e13) {
      if (best_metric <= near_tol) {
        classify_best(SdpStatus::kNumericalFailure, "late divergence");
      } else {
        sol.status = SdpStatus::kUnbounded;
        sol.message = "y iterates diverge: the maximization side appears "
                      "unbounded (or the certificate side infeasible)";
      }
      break;
    }
    double xnorm = 0;
    for (int b = 0; b < nb; ++b) xnorm = std::max(xnorm, it.X[b].cwiseAbs().maxCoeff());
    if (xnorm > 1e13) {
      if (best_metric <= near_tol) {
        classify_best(SdpStatus::kNumericalFailure, "late divergence");
      } else {
        sol.status = SdpStatus::kInfeasible;
        sol.message = "X iterates diverge: the y side appears infeasible";
      }
      break;
    }
    if (stall > 30) {
      classify_best(SdpStatus::kNumericalFailure, "progress stalled");
      break;
    }
    if (iter == opts.max_iter - 1) {
      classify_best(SdpStatus::kMaxIter, "iteration limit reached");
      break;
    }

    // Factorizations; an iterate at round-off distance from the cone
    // boundary is nudged back inside before giving up.
    std::vector<Eigen::LLT<Eigen::MatrixXd>> lltX(nb), lltS(nb);
    std::vector<Eigen::MatrixXd> Sinv(nb);
    bool fact_ok = true;
    for (int b = 0; b < nb && fact_ok; ++b) {
      auto factor = [&](Eigen::MatrixXd& P, Eigen::LLT<Eigen::MatrixXd>& llt) {
        llt.compute(P);
        for (int bump = 0; llt.info() != Eigen::Success && bump < 3; ++bump) {
          double delta =
              std::max(1e-300, 1e-13 * (1 + P.diagonal().cwiseAbs().maxCoeff()));
          P.diagonal().array() += delta * std::pow(100.0, bump);
          llt.compute(P);
        }
        return llt.info() == Eigen::Success;
      };
      if (!factor(it.X[b], lltX[b]) || !factor(it.S[b], lltS[b]))
        fact_ok = false;
      else
        Sinv[b] = lltS[b].solve(
            Eigen::MatrixXd::Identity(blocks[b].size, blocks[b].size));
    }
    if (!fact_ok) {
      classify_best(SdpStatus::kNumericalFailure,
                    "iterate lost positive definiteness");
      break;
    }

    // Schur complement, assembled per block as an explicit Gram matrix
    // M_{kl} = <V_k, V_l> with V_k = L_X' A_k L_S^{-T}; floating-point psd
    // by construction, which keeps the late degenerate iterations solvable.
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
    for (int b = 0; b < nb; ++b) {
      auto& bd = blocks[b];
      int r = bd.size;
      int nk = static_cast<int>(bd.ranges.size());
      if (nk == 0) continue;
      Eigen::MatrixXd LX = lltX[b].matrixL();
      Eigen::MatrixXd V(r * r, nk);
      Eigen::MatrixXd Acols(r, r), Q(r, r);
      std::vector<int> support;
      for (int c = 0; c < nk; ++c) {
        auto& [k, first, last] = bd.ranges[c];
        // Q = L_S^{-1} A_k, computed on A_k's nonzero columns only
        support.clear();
        for (int i = first; i < last; ++i) {
          auto& e = bd.entries[i];
          support.push_back(e.col);
          support.push_back(e.row);
        }
        std::sort(support.begin(), support.end());
        support.erase(std::unique(support.begin(), support.end()), support.end());
        for (int sc : support) Acols.col(sc).setZero();
        for (int i = first; i < last; ++i) {
          auto& e = bd.entries[i];
          Acols(e.row, e.col) += e.v;
          if (e.row != e.col) Acols(e.col, e.row) += e.v;
        }
        // V_k = L_X^T (L_S^{-1} A_k)^T: only the support rows of Q^T are nonzero
        Eigen::Map<Eigen::MatrixXd> Vk(V.col(c).data(), r, r);
        Vk.setZero();
        for (int sc : support) {
          Eigen::VectorXd qcol =
              lltS[b].matrixL().solve(Acols.col(sc));
          // contribution: row sc of Q^T is qcol^T; V_k += LX^T e_sc qcol^T
          Vk.noalias() += LX.row(sc).transpose() * qcol.transpose();
        }
      }
      Eigen::MatrixXd Mb = V.transpose() * V;
      for (int c = 0; c < nk; ++c)
        for (int c2 = 0; c2 < nk; ++c2)
          M(bd.ranges[c][0] - 1, bd.ranges[c2][0] - 1) += Mb(c, c2);
    }
    Eigen::MatrixXd Mt;
    if (reduced) {
      Mt = N.transpose() * M * N;
      Mt = 0.5 * (Mt + Mt.transpose()).eval();
    } else {
      Mt = 0.5 * (M + M.transpose()).eval();
    }

    Eigen::LLT<Eigen::MatrixXd> lltM(Mt);
    {
      double jitter = 1e-14 * (1 + Mt.diagonal().cwiseAbs().maxCoeff());
      int tries = 0;
      while (lltM.info() != Eigen::Success && tries < 6) {
        Mt.diagonal().array() += jitter;
        jitter *= 100;
        lltM.compute(Mt);
        ++tries;
      }
    }
    if (lltM.info() != Eigen::Success) {
      if (opts.verbose) {
        std::ostringstream os;
        os << "   schur: finite=" << Mt.allFinite() << " maxdiag="
           << Mt.diagonal().cwiseAbs().maxCoeff() << "\n";
        fputs(os.str().c_str(), stderr);
      }
      classify_best(SdpStatus::kNumericalFailure,
                    "Schur complement not positive definite");
      break;
    }

    // One Newton solve for a given complementarity target Kmat; returns the
    // z-direction plus the block directions. One pass of iterative
    // refinement on the reduced system.
    auto newton = [&](const std::vector<Eigen::MatrixXd>& Kmat,
                      std::vector<Eigen::MatrixXd>& dX,
                      std::vector<Eigen::MatrixXd>& dS, Eigen::VectorXd& dz) {
      Eigen::VectorXd h_full = rp_full;
      for (int b = 0; b < nb; ++b)
        for (auto& [k, first, last] : blocks[b].ranges)
          h_full[k - 1] -= sym_dot(blocks[b].entries, first, last, Kmat[b]);
      Eigen::VectorXd h = reduced ? (N.transpose() * h_full).eval() : h_full;
      dz = lltM.solve(h);
      dz += lltM.solve(h - Mt * dz);  // refinement
      Eigen::VectorXd dy = reduced ? (N * dz).eval() : dz;
      std::vector<double> dyv(dy.data(), dy.data() + m);
      dX.resize(nb);
      dS.resize(nb);
      for (int b = 0; b < nb; ++b) {
        int r = blocks[b].size;
        Eigen::MatrixXd dyA = Eigen::MatrixXd::Zero(r, r);
        accumulate_lmi(blocks[b], dyv, dyA);
        dS[b] = Rd[b] - dyA;
        Eigen::MatrixXd raw = Kmat[b] + it.X[b] * dyA * Sinv[b];
        dX[b] = 0.5 * (raw + raw.transpose());
      }
    };

    // Predictor.
    std::vector<Eigen::MatrixXd> K(nb);
    for (int b = 0; b < nb; ++b) K[b] = -it.X[b] - it.X[b] * Rd[b] * Sinv[b];
    std::vector<Eigen::MatrixXd> dXa, dSa;
    Eigen::VectorXd dza;
    newton(K, dXa, dSa, dza);
    double ap = 1, ad = 1;
    for (int b = 0; b < nb; ++b) {
      ap = std::min(ap, max_step(lltX[b], dXa[b], tau));
      ad = std::min(ad, max_step(lltS[b], dSa[b], tau));
    }
    double mu_aff = 0;
    for (int b = 0; b < nb; ++b)
      mu_aff += (it.X[b] + ap * dXa[b]).cwiseProduct(it.S[b] + ad * dSa[b]).sum();
    mu_aff /= N_total;
    double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3.0);
    sigma = std::clamp(sigma, 1e-10, 1.0);
    // Recentre when feasibility lags the complementarity gap.
    if (std::max(pfeas, dfeas) > rel_gap) sigma = std::max(sigma, 0.5);

    // Corrector.
    for (int b = 0; b < nb; ++b)
      K[b] = sigma * mu * Sinv[b] - it.X[b] - it.X[b] * Rd[b] * Sinv[b] -
             dXa[b] * dSa[b] * Sinv[b];
    std::vector<Eigen::MatrixXd> dX, dS;
    Eigen::VectorXd dz;
    newton(K, dX, dS, dz);
    ap = 1;
    ad = 1;
    for (int b = 0; b < nb; ++b) {
      ap = std::min(ap, max_step(lltX[b], dX[b], tau));
      ad = std::min(ad, max_step(lltS[b], dS[b], tau));
    }
    for (int guard = 0; guard < 25; ++guard) {
      double mu_new = 0;
      for (int b = 0; b < nb; ++b)
        mu_new += (it.X[b] + ap * dX[b]).cwiseProduct(it.S[b] + ad * dS[b]).sum();
      mu_new /= N_total;
      if (mu_new <= 5 * mu + 1e-300) break;
      ap *= 0.5;
      ad *= 0.5;
    }
    for (int b = 0; b < nb; ++b) {
      it.X[b] += ap * dX[b];
      it.S[b] += ad * dS[b];
    }
    it.z += ad * dz;

    if (opts.verbose) {
      std::ostringstream os;
      os << "   step ap " << ap << " ad " << ad << " sigma " << sigma << "\n";
      fputs(os.str().c_str(), stderr);
    }
  }

  Eigen::VectorXd y = lift(it.z);
  sol.y.assign(y.data(), y.data() + m);
  sol.X = it.X;
  sol.S = it.S;
  // Reconstruct the equality multipliers for reporting and residual checks:
  // least-squares solution of E' u = obj - A(X), in the equilibrated row
  // scaling (mapped back below).
  sol.u.assign(q0, 0.0);
  if (q0 > 0) {
    Eigen::VectorXd ax = Eigen::VectorXd::Zero(m);
    for (int b = 0; b < nb; ++b)
      for (auto& [k, first, last] : blocks[b].ranges)
        ax[k - 1] += sym_dot(blocks[b].entries, first, last, sol.X[b]);
    Eigen::VectorXd rhs = obj - ax;
    // solve E E' w = E rhs, u = w (since rows were equilibrated, rescale)
    Eigen::MatrixXd EEt = Efull * Efull.transpose();
    EEt.diagonal().array() += 1e-12;
    Eigen::VectorXd w = EEt.ldlt().solve(Efull * rhs);
    for (int j = 0; j < q0; ++j) {
      double scale = std::fabs(sdp.eqrows[j].rhs);
      for (auto& [k, c] : sdp.eqrows[j].coeffs) scale = std::max(scale, std::fabs(c));
      if (scale <= 0) scale = 1;
      sol.u[j] = w[j] / scale;
    }
  }
  if (sol.status == SdpStatus::kOptimal || sol.status == SdpStatus::kNearOptimal) {
    ResidualReport rr = check_solution(sdp, sol);
    double scale = 1 + normObj + normC;
    if (rr.dual / scale > 50 * std::max(opts.tol, 1e-9)) {
      sol.status = SdpStatus::kNearOptimal;
      sol.message += " (full residual above tolerance)";
    }
  }
  return sol;
}

ResidualReport check_solution(const SdpProblem& sdp, const SdpSolution& sol) {
  ResidualReport rep;
  auto blocks = prepare_blocks(sdp);
  const int m = sdp.m, nb = sdp.num_blocks();
  Eigen::VectorXd rp = Eigen::Map<const Eigen::VectorXd>(sdp.obj.data(), m);
  for (int b = 0; b < nb; ++b)
    for (auto& [k, first, last] : blocks[b].ranges)
      rp[k - 1] -= sym_dot(blocks[b].entries, first, last, sol.X[b]);
  for (size_t j = 0; j < sdp.eqrows.size(); ++j)
    for (auto& [k, c] : sdp.eqrows[j].coeffs)
      rp[k - 1] -= c * (j < sol.u.size() ? sol.u[j] : 0.0);
  rep.primal = rp.size() ? rp.cwiseAbs().maxCoeff() : 0.0;

  for (int b = 0; b < nb; ++b) {
    Eigen::MatrixXd lmi = Eigen::MatrixXd::Zero(blocks[b].size, blocks[b].size);
    accumulate_lmi(blocks[b], sol.y, lmi);
    Eigen::MatrixXd resid = blocks[b].C - lmi - sol.S[b];
    rep.dual = std::max(rep.dual, resid.cwiseAbs().maxCoeff());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esx(sol.X[b], Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ess(sol.S[b], Eigen::EigenvaluesOnly);
    rep.min_eig_X = std::min(rep.min_eig_X, esx.eigenvalues().minCoeff());
    rep.min_eig_S = std::min(rep.min_eig_S, ess.eigenvalues().minCoeff());
  }
  for (auto& row : sdp.eqrows) {
    double acc = -row.rhs;
    for (auto& [k, c] : row.coeffs) acc += c * sol.y[k - 1];
    rep.dual = std::max(rep.dual, std::fabs(acc));
  }
  double pobj = 0, dobj = 0;
  for (int k = 0; k < m; ++k) pobj += sdp.obj[k] * sol.y[k];
  for (int b = 0; b < nb; ++b) dobj += blocks[b].C.cwiseProduct(sol.X[b]).sum();
  for (size_t j = 0; j < sdp.eqrows.size(); ++j)
    dobj += sdp.eqrows[j].rhs * (j < sol.u.size() ? sol.u[j] : 0.0);
  rep.gap = std::fabs(pobj - dobj);
  return rep;
}

}  // namespace cspop
