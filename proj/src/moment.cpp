#include "cspop/moment.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace cspop {

std::vector<Monomial> moment_basis(const std::vector<int>& clique_vars, int d) {
  std::vector<Monomial> out{Monomial{}};
  std::vector<Monomial> frontier{Monomial{}};
  for (int deg = 1; deg <= d; ++deg) {
    std::vector<Monomial> next;
    for (auto& m : frontier) {
      size_t start = 0;
      if (!m.is_constant()) {
        int last = m.exponents().back().first;
        start = std::lower_bound(clique_vars.begin(), clique_vars.end(), last) -
                clique_vars.begin();
      }
      for (size_t vi = start; vi < clique_vars.size(); ++vi)
        next.push_back(m.times(clique_vars[vi], 1));
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int min_admissible_order(const CspProblem& p) {
  int maxdeg = 1;
  for (auto& b : p.blocks) {
    maxdeg = std::max(maxdeg, b.objective.degree());
    for (auto& g : b.ineqs) maxdeg = std::max(maxdeg, g.degree());
    for (auto& h : b.eqs) maxdeg = std::max(maxdeg, h.degree());
  }
  return (maxdeg + 1) / 2;
}

namespace {

CspProblem pooled_problem(const CspProblem& p) {
  CspProblem out;
  out.n = p.n;
  CspBlock all;
  all.clique.resize(p.n);
  for (int v = 1; v <= p.n; ++v) all.clique[v - 1] = v;
  all.objective = p.full_objective();
  for (auto& b : p.blocks) {
    for (auto& g : b.ineqs) all.ineqs.push_back(g);
    for (auto& h : b.eqs) all.eqs.push_back(h);
  }
  out.blocks.push_back(std::move(all));
  return out;
}

struct EntryAcc {
  // (k, row, col) -> value, consolidated at the end
  std::vector<SdpProblem::Coeff> raw;
  void add(int k, int r, int c, double v) {
    if (r > c) std::swap(r, c);
    raw.push_back({k, r, c, v});
  }
  std::vector<SdpProblem::Coeff> consolidate() {
    std::sort(raw.begin(), raw.end(), [](auto& a, auto& b) {
      return std::tie(a.k, a.row, a.col) < std::tie(b.k, b.row, b.col);
    });
    std::vector<SdpProblem::Coeff> out;
    for (auto& e : raw) {
      if (!out.empty() && out.back().k == e.k && out.back().row == e.row &&
          out.back().col == e.col)
        out.back().v += e.v;
      else
        out.push_back(e);
    }
    std::erase_if(out, [](auto& e) { return e.v == 0.0; });
    return out;
  }
};

}  // namespace

MomentSdp assemble_cs_moment(const CspProblem& p, int d) {
  if (d < min_admissible_order(p))
    throw std::invalid_argument(
        "relaxation order " + std::to_string(d) + " below the minimal admissible " +
        std::to_string(min_admissible_order(p)));
  MomentSdp ms;
  ms.order = d;

  // Shared moment index: union over cliques of all monomials of degree <= 2d.
  std::unordered_map<Monomial, int, MonomialHash> idx;
  {
    std::vector<Monomial> all;
    for (auto& b : p.blocks) {
      auto mons = moment_basis(b.clique, 2 * d);
      all.insert(all.end(), mons.begin(), mons.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    ms.index = std::move(all);
    for (size_t i = 0; i < ms.index.size(); ++i) idx.emplace(ms.index[i], static_cast<int>(i));
  }
  if (ms.index.empty() || !ms.index[0].is_constant())
    throw std::logic_error("moment index must start at the constant monomial");

  ms.sdp.m = static_cast<int>(ms.index.size()) - 1;
  ms.sdp.obj.assign(ms.sdp.m, 0.0);

  // Objective: min <f, y>, folded to the shared index; the sdp maximizes
  // obj^T y with obj = -coefficients of f / scale.
  Poly f = p.full_objective();
  Rational sc = f.max_abs_coeff();
  ms.obj_scale = sc == 0 ? 1.0 : to_double(sc);
  for (auto& [mono, c] : f.terms()) {
    double cd = to_double(c) / ms.obj_scale;
    if (mono.is_constant())
      ms.obj_constant = cd;
    else
      ms.sdp.obj[idx.at(mono) - 1] -= cd;
  }

  auto scale_of = [](const Poly& q) {
    Rational s = q.max_abs_coeff();
    return s == 0 ? 1.0 : to_double(s);
  };

  for (int bi = 0; bi < p.num_blocks(); ++bi) {
    auto& blk = p.blocks[bi];
    // Moment block M_d[y^(i)].
    {
      auto basis = moment_basis(blk.clique, d);
      int r = static_cast<int>(basis.size());
      EntryAcc acc;
      for (int i = 0; i < r; ++i)
        for (int j = i; j < r; ++j) {
          Monomial a = basis[i] * basis[j];
          if (a.is_constant())
            acc.add(0, i, j, 1.0);
          else
            acc.add(idx.at(a), i, j, -1.0);
        }
      ms.sdp.block_sizes.push_back(r);
      ms.sdp.block_entries.push_back(acc.consolidate());
      ms.blocks.push_back({bi + 1, MomentBlockInfo::kMoment, 0, r});
    }
    // One psd localizer per inequality.
    for (size_t j = 0; j < blk.ineqs.size(); ++j) {
      const Poly& g = blk.ineqs[j];
      int dj = (g.degree() + 1) / 2;
      auto basis = moment_basis(blk.clique, d - dj);
      int r = static_cast<int>(basis.size());
      double s = scale_of(g);
      EntryAcc acc;
      for (int a = 0; a < r; ++a)
        for (int b2 = a; b2 < r; ++b2) {
          Monomial bg = basis[a] * basis[b2];
          for (auto& [eta, cf] : g.terms()) {
            Monomial al = bg * eta;
            double v = to_double(cf) / s;
            if (al.is_constant())
              acc.add(0, a, b2, v);
            else
              acc.add(idx.at(al), a, b2, -v);
          }
        }
      ms.sdp.block_sizes.push_back(r);
      ms.sdp.block_entries.push_back(acc.consolidate());
      ms.blocks.push_back({bi + 1, MomentBlockInfo::kLocalizer,
                           static_cast<int>(j) + 1, r});
    }
    // Zero localizers for equalities, at the ideal truncation: one row per
    // multiplier monomial sigma with |sigma| <= 2d - deg(h). For even-degree
    // h this enumerates exactly the distinct localizer-matrix entries; for
    // odd degrees it keeps the extra layer the matrix form would lose.
    for (auto& h : blk.eqs) {
      if (h.is_zero()) continue;
      double s = scale_of(h);
      auto sums = moment_basis(blk.clique, 2 * d - h.degree());
      ++ms.num_eq_polys;
      if (h.is_constant())
        throw std::invalid_argument("constant nonzero equality constraint");
      for (auto& sigma : sums) {
        SdpProblem::EqRow row;
        std::unordered_map<int, double> cs;
        double rhs = 0;
        for (auto& [eta, cf] : h.terms()) {
          Monomial al = sigma * eta;
          double v = to_double(cf) / s;
          if (al.is_constant())
            rhs -= v;
          else
            cs[idx.at(al)] += v;
        }
        row.rhs = rhs;
        row.coeffs.assign(cs.begin(), cs.end());
        std::sort(row.coeffs.begin(), row.coeffs.end());
        std::erase_if(row.coeffs, [](auto& kv) { return kv.second == 0.0; });
        if (!row.coeffs.empty() || row.rhs != 0.0) ms.sdp.eqrows.push_back(std::move(row));
      }
    }
  }
  return ms;
}

MomentSdp assemble_dense_moment(const CspProblem& p, int d) {
  return assemble_cs_moment(pooled_problem(p), d);
}

BoundReport extract_bound(const MomentSdp& ms, const SdpSolution& sol, double tol) {
  BoundReport rep;
  rep.order = ms.order;
  rep.status = sol.status;
  rep.gap = sol.rel_gap;
  rep.primal_resid = sol.primal_resid;
  rep.dual_resid = sol.dual_resid;
  rep.message = sol.message;
  if (sol.status == SdpStatus::kOptimal || sol.status == SdpStatus::kNearOptimal ||
      sol.status == SdpStatus::kMaxIter) {
    rep.bound = ms.obj_scale * (ms.obj_constant - sol.dual_obj);
    rep.moment_value = ms.obj_scale * (ms.obj_constant - sol.primal_obj);
    rep.valid = sol.status != SdpStatus::kMaxIter &&
                std::max({sol.primal_resid, sol.dual_resid, sol.rel_gap}) <= tol;
  }
  return rep;
}

}  // namespace cspop
