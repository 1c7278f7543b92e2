#include "cspop/reform.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>

namespace cspop {

std::vector<NuVar> enumerate_nu(const CspTree& tree, int n_x) {
  std::vector<NuVar> out;
  std::vector<std::pair<int, int>> arcs = tree.arcs;
  std::sort(arcs.begin(), arcs.end());
  for (auto& [i, t] : arcs)
    for (int k : tree.overlap.at({i, t})) out.push_back({i, t, k, 0});
  std::sort(out.begin(), out.end(), [](const NuVar& a, const NuVar& b) {
    return std::tie(a.i, a.t, a.k) < std::tie(b.i, b.t, b.k);
  });
  for (size_t j = 0; j < out.size(); ++j) out[j].flat = n_x + static_cast<int>(j) + 1;
  return out;
}

namespace {

int nu_flat(const std::vector<NuVar>& nus, int i, int t, int k) {
  for (auto& nv : nus)
    if (nv.i == i && nv.t == t && nv.k == k) return nv.flat;
  throw std::logic_error("nu variable not enumerated");
}

}  // namespace

PolyVector build_F(const CspProblem& p, const CspTree& tree,
                   const std::vector<NuVar>& nus, int block) {
  auto& b = p.blocks.at(block - 1);
  int n = static_cast<int>(b.clique.size());
  PolyVector F(n);
  for (int r = 0; r < n; ++r) F[r] = b.objective.derivative(b.clique[r]);
  if (tree.parent.size() > static_cast<size_t>(block) && tree.parent[block]) {
    int t = *tree.parent[block];
    for (int k : tree.overlap.at({block, t})) {
      int r = p.local_index(block - 1, k);
      F[r] -= Poly::variable(nu_flat(nus, block, t, k));
    }
  }
  if (tree.children.size() > static_cast<size_t>(block))
    for (int t : tree.children[block])
      for (int k : tree.overlap.at({t, block})) {
        int r = p.local_index(block - 1, k);
        F[r] += Poly::variable(nu_flat(nus, t, block, k));
      }
  return F;
}

PolyVector build_cs_multipliers(const CspProblem& p, const CspTree& tree,
                                const LmePair& lme, const std::vector<NuVar>& nus,
                                int block) {
  PolyVector F = build_F(p, tree, nus, block);
  int mh = lme.m_hat();
  PolyVector out(mh);
  for (int j = 0; j < mh; ++j) {
    Poly acc;
    for (size_t v = 0; v < F.size(); ++v)
      if (!lme.L.at(j, static_cast<int>(v)).is_zero())
        acc += lme.L.at(j, static_cast<int>(v)) * F[v];
    out[j] = std::move(acc);
  }
  return out;
}

namespace {

CspBlock reformulate_block(const CspBlock& blk, const PolyVector& F,
                           const PolyVector& p_i, std::vector<int>& extended,
                           int* dropped) {
  CspBlock out;
  out.clique = extended;
  out.objective = blk.objective;
  int m = static_cast<int>(blk.ineqs.size());
  int l = static_cast<int>(blk.eqs.size());
  // phi: stationarity rows (identically-zero ones dropped), then h, then
  // complementarity products.
  *dropped = 0;
  for (size_t r = 0; r < F.size(); ++r) {
    Poly row = F[r];
    int gvar = blk.clique[r];
    for (int j = 0; j < m; ++j) row -= p_i[j] * blk.ineqs[j].derivative(gvar);
    for (int j = 0; j < l; ++j) row -= p_i[m + j] * blk.eqs[j].derivative(gvar);
    if (row.is_zero())
      ++(*dropped);
    else
      out.eqs.push_back(std::move(row));
  }
  for (auto& h : blk.eqs) out.eqs.push_back(h);
  for (int j = 0; j < m; ++j) out.eqs.push_back(p_i[j] * blk.ineqs[j]);
  // psi: multiplier signs then the original inequalities.
  for (int j = 0; j < m; ++j) out.ineqs.push_back(p_i[j]);
  for (auto& g : blk.ineqs) out.ineqs.push_back(g);
  return out;
}

}  // namespace

Reformulation build_reformulation(const CspProblem& p, ReformMode mode,
                                  int degree_cap) {
  Reformulation R;
  R.mode = mode;
  R.n_x = p.n;

  if (mode == ReformMode::kPlainLme) {
    // Pool everything into the trivial clique [n] and synthesize one
    // whole-problem multiplier expression.
    CspProblem pooled;
    pooled.n = p.n;
    CspBlock all;
    all.clique.resize(p.n);
    for (int v = 1; v <= p.n; ++v) all.clique[v - 1] = v;
    all.objective = p.full_objective();
    for (auto& b : p.blocks) {
      for (auto& g : b.ineqs) all.ineqs.push_back(g);
      for (auto& h : b.eqs) all.eqs.push_back(h);
    }
    pooled.blocks.push_back(std::move(all));
    LmePair lme = synthesize_lme(pooled, 1, degree_cap);
    R.table.n_x = p.n;
    R.tree.s = 1;
    R.tree.parent.assign(2, std::nullopt);
    R.tree.children.assign(2, {});
    PolyVector F = build_F(pooled, R.tree, {}, 1);
    PolyVector pi = build_cs_multipliers(pooled, R.tree, lme, {}, 1);
    R.multipliers.push_back(pi);
    R.dropped_stationarity.push_back(0);
    std::vector<int> ext = pooled.blocks[0].clique;
    CspBlock rb = reformulate_block(pooled.blocks[0], F, pi, ext,
                                    &R.dropped_stationarity[0]);
    R.problem.n = p.n;
    R.problem.blocks.push_back(std::move(rb));
    return R;
  }

  std::vector<std::vector<int>> cliques;
  for (auto& b : p.blocks) cliques.push_back(b.clique);
  R.tree = build_tree(cliques);
  R.nus = enumerate_nu(R.tree, p.n);
  R.table.n_x = p.n;
  for (auto& nv : R.nus) R.table.nus.push_back({nv.i, nv.t, nv.k});

  R.problem.n = R.table.total();
  R.dropped_stationarity.assign(p.num_blocks(), 0);
  for (int i = 1; i <= p.num_blocks(); ++i) {
    LmePair lme = synthesize_lme(p, i, degree_cap);
    PolyVector F = build_F(p, R.tree, R.nus, i);
    PolyVector pi = build_cs_multipliers(p, R.tree, lme, R.nus, i);
    R.multipliers.push_back(pi);
    // Extended clique: I_i followed by the flat ids of J_i.
    std::vector<int> ext = p.blocks[i - 1].clique;
    for (auto& nv : R.nus)
      if (nv.i == i || nv.t == i) ext.push_back(nv.flat);
    std::sort(ext.begin(), ext.end());
    CspBlock rb = reformulate_block(p.blocks[i - 1], F, pi, ext,
                                    &R.dropped_stationarity[i - 1]);
    R.problem.blocks.push_back(std::move(rb));
  }
  return R;
}

double KktReport::max_all() const {
  return std::max({stationarity, primal_eq, primal_ineq, sign, complementarity});
}

KktReport kkt_residual(const CspProblem& p, const std::vector<double>& x,
                       const std::vector<std::vector<double>>& lambda) {
  if (lambda.size() != static_cast<size_t>(p.num_blocks()))
    throw std::invalid_argument("kkt_residual: one multiplier vector per block");
  std::vector<double> pt(p.n + 1, 0.0);
  for (int v = 1; v <= p.n; ++v) pt[v] = x.at(v - 1);
  KktReport rep;
  std::vector<double> stat(p.n + 1, 0.0);
  for (int i = 0; i < p.num_blocks(); ++i) {
    auto& b = p.blocks[i];
    int m = static_cast<int>(b.ineqs.size());
    int l = static_cast<int>(b.eqs.size());
    if (lambda[i].size() != static_cast<size_t>(m + l))
      throw std::invalid_argument("kkt_residual: multiplier length mismatch");
    for (int v : b.clique) {
      double acc = b.objective.derivative(v).eval(pt);
      for (int j = 0; j < m; ++j) acc -= lambda[i][j] * b.ineqs[j].derivative(v).eval(pt);
      for (int j = 0; j < l; ++j) acc -= lambda[i][m + j] * b.eqs[j].derivative(v).eval(pt);
      stat[v] += acc;
    }
    for (int j = 0; j < m; ++j) {
      double g = b.ineqs[j].eval(pt);
      rep.primal_ineq = std::max(rep.primal_ineq, -g);
      rep.sign = std::max(rep.sign, -lambda[i][j]);
      rep.complementarity = std::max(rep.complementarity, std::fabs(lambda[i][j] * g));
      rep.per_constraint.push_back(
          {"block " + std::to_string(i + 1) + " ineq " + std::to_string(j + 1),
           std::max(0.0, -g)});
    }
    for (int j = 0; j < l; ++j) {
      double h = b.eqs[j].eval(pt);
      rep.primal_eq = std::max(rep.primal_eq, std::fabs(h));
      rep.per_constraint.push_back(
          {"block " + std::to_string(i + 1) + " eq " + std::to_string(j + 1),
           std::fabs(h)});
    }
  }
  for (int v = 1; v <= p.n; ++v)
    rep.stationarity = std::max(rep.stationarity, std::fabs(stat[v]));
  return rep;
}

NuRecovery recover_nu(const CspProblem& p, const CspTree& tree,
                      const std::vector<double>& x,
                      const std::vector<std::vector<double>>& lambda) {
  auto nus = enumerate_nu(tree, p.n);
  NuRecovery rec;
  rec.nu.assign(nus.size(), 0.0);
  std::vector<double> pt(p.n + 1, 0.0);
  for (int v = 1; v <= p.n; ++v) pt[v] = x.at(v - 1);

  for (int k = 1; k <= p.n; ++k) {
    std::vector<int> qk;  // blocks containing k (1-based)
    for (int i = 1; i <= p.num_blocks(); ++i)
      if (p.local_index(i - 1, k) >= 0) qk.push_back(i);
    std::vector<size_t> pk;  // nu indices on arcs carrying k
    for (size_t j = 0; j < nus.size(); ++j)
      if (nus[j].k == k) pk.push_back(j);
    if (pk.empty()) continue;
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(qk.size(), pk.size());
    Eigen::VectorXd rhs(qk.size());
    auto row_of = [&](int blk) {
      return static_cast<int>(std::find(qk.begin(), qk.end(), blk) - qk.begin());
    };
    for (size_t c = 0; c < pk.size(); ++c) {
      B(row_of(nus[pk[c]].i), c) = 1.0;
      B(row_of(nus[pk[c]].t), c) = -1.0;
    }
    for (size_t r = 0; r < qk.size(); ++r) {
      auto& b = p.blocks[qk[r] - 1];
      int m = static_cast<int>(b.ineqs.size());
      int l = static_cast<int>(b.eqs.size());
      double acc = b.objective.derivative(k).eval(pt);
      for (int j = 0; j < m; ++j) acc -= lambda[qk[r] - 1][j] * b.ineqs[j].derivative(k).eval(pt);
      for (int j = 0; j < l; ++j) acc -= lambda[qk[r] - 1][m + j] * b.eqs[j].derivative(k).eval(pt);
      rhs(r) = acc;
    }
    Eigen::VectorXd v = B.colPivHouseholderQr().solve(rhs);
    double res = (B * v - rhs).lpNorm<Eigen::Infinity>();
    rec.residual = std::max(rec.residual, res);
    for (size_t c = 0; c < pk.size(); ++c) rec.nu[pk[c]] = v(c);
  }

  // Per-block stationarity of the split system with the recovered nu.
  rec.block_residual.assign(p.num_blocks(), 0.0);
  std::vector<double> ext(p.n + static_cast<int>(nus.size()) + 1, 0.0);
  for (int v = 1; v <= p.n; ++v) ext[v] = pt[v];
  for (size_t j = 0; j < nus.size(); ++j) ext[nus[j].flat] = rec.nu[j];
  for (int i = 1; i <= p.num_blocks(); ++i) {
    PolyVector F = build_F(p, tree, nus, i);
    auto& b = p.blocks[i - 1];
    int m = static_cast<int>(b.ineqs.size());
    int l = static_cast<int>(b.eqs.size());
    double worst = 0;
    for (size_t r = 0; r < F.size(); ++r) {
      double acc = F[r].eval(ext);
      int gv = b.clique[r];
      for (int j = 0; j < m; ++j) acc -= lambda[i - 1][j] * b.ineqs[j].derivative(gv).eval(pt);
      for (int j = 0; j < l; ++j) acc -= lambda[i - 1][m + j] * b.eqs[j].derivative(gv).eval(pt);
      worst = std::max(worst, std::fabs(acc));
    }
    rec.block_residual[i - 1] = worst;
  }
  return rec;
}

}  // namespace cspop
