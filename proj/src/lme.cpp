#include "cspop/lme.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "linsolve.hpp"

namespace cspop {

GradientMatrix build_gradient_matrix(const CspProblem& p, int block) {
  auto& b = p.blocks.at(block - 1);
  int n = static_cast<int>(b.clique.size());
  int mh = static_cast<int>(b.ineqs.size() + b.eqs.size());
  GradientMatrix gm;
  gm.block = block;
  gm.n_local = n;
  gm.m_hat = mh;
  gm.mat = PolyMatrix(n + mh, mh);
  for (int j = 0; j < mh; ++j) {
    const Poly& c = j < static_cast<int>(b.ineqs.size())
                        ? b.ineqs[j]
                        : b.eqs[j - b.ineqs.size()];
    for (int r = 0; r < n; ++r) gm.mat.at(r, j) = c.derivative(b.clique[r]);
    gm.mat.at(n + j, j) = c;
  }
  return gm;
}

PolyMatrix verify_lme(const GradientMatrix& gm, const LmePair& pair) {
  if (pair.L.rows != gm.m_hat || pair.L.cols != gm.n_local ||
      pair.D.rows != gm.m_hat || pair.D.cols != gm.m_hat)
    throw std::invalid_argument("verify_lme: shape mismatch");
  PolyMatrix res = lme_product(pair.L, pair.D, gm.mat);
  for (int i = 0; i < gm.m_hat; ++i)
    res.at(i, i) -= Poly::constant(1);
  return res;
}

namespace {

// Decomposition of a constraint for template matching.
struct ConstraintShape {
  enum Kind { kAffineSingle, kQuadSingle, kCoordinate, kAffineMulti,
              kDiagQuadMulti, kOther } kind = kOther;
  int var = 0;            // single-variable kinds
  Rational a, b;          // a*z + b or a*z^2 + b
  std::map<int, Rational> w;  // linear part (affine multi) or square part
  Rational c0;            // constant term (multi kinds)
};

ConstraintShape classify(const Poly& q) {
  ConstraintShape s;
  auto vars = q.vars();
  s.c0 = q.constant_term();
  if (vars.size() == 1) {
    int v = *vars.begin();
    s.var = v;
    Rational lin = q.coeff(Monomial::variable(v));
    Rational sq = q.coeff(Monomial::variable(v, 2));
    int nterms = q.num_terms();
    int expect = (s.c0 != 0) + (lin != 0) + (sq != 0);
    if (nterms == expect && q.degree() <= 2) {
      if (sq == 0 && lin != 0) {
        s.kind = s.c0 == 0 ? ConstraintShape::kCoordinate : ConstraintShape::kAffineSingle;
        s.a = lin;
        s.b = s.c0;
        return s;
      }
      if (sq != 0 && lin == 0 && s.c0 != 0) {
        s.kind = ConstraintShape::kQuadSingle;
        s.a = sq;
        s.b = s.c0;
        return s;
      }
    }
    // fall through: single-var but not a handled shape
  }
  if (q.degree() == 1) {
    s.kind = ConstraintShape::kAffineMulti;
    for (auto& [m, c] : q.terms())
      if (!m.is_constant()) s.w[m.support()[0]] = c;
    return s;
  }
  // b + sum c_j z_j^2 with b != 0 and no other terms
  bool diag = s.c0 != 0;
  std::map<int, Rational> sq;
  for (auto& [m, c] : q.terms()) {
    if (m.is_constant()) continue;
    auto& e = m.exponents();
    if (e.size() == 1 && e[0].second == 2) sq[e[0].first] = c;
    else diag = false;
  }
  if (diag && !sq.empty()) {
    s.kind = ConstraintShape::kDiagQuadMulti;
    s.w = std::move(sq);
    return s;
  }
  s.kind = ConstraintShape::kOther;
  return s;
}

// Row-building helper: polynomials over local column positions.
struct RowBuilder {
  const CspBlock& blk;
  int n, mh;
  LmePair& pair;

  void set_L(int row, int local, Poly v) { pair.L.at(row, local) = std::move(v); }
  void set_D(int row, int col, Poly v) { pair.D.at(row, col) = std::move(v); }
  int local_of(int var) const {
    auto it = std::lower_bound(blk.clique.begin(), blk.clique.end(), var);
    return static_cast<int>(it - blk.clique.begin());
  }
};

}  // namespace

std::optional<LmePair> template_lme(const CspProblem& p, int block) {
  auto& blk = p.blocks.at(block - 1);
  int n = static_cast<int>(blk.clique.size());
  int mh = static_cast<int>(blk.ineqs.size() + blk.eqs.size());
  LmePair pair;
  pair.block = block;
  pair.L = PolyMatrix(mh, n);
  pair.D = PolyMatrix(mh, mh);
  if (mh == 0) {
    pair.provenance = "unconstrained";
    return pair;
  }

  std::vector<Poly> cs;
  cs.reserve(mh);
  for (auto& g : blk.ineqs) cs.push_back(g);
  for (auto& h : blk.eqs) cs.push_back(h);
  std::vector<ConstraintShape> shapes;
  shapes.reserve(mh);
  for (auto& c : cs) shapes.push_back(classify(c));

  RowBuilder rb{blk, n, mh, pair};

  // Single constraint with a constant partial derivative: lambda = F_v / c.
  if (mh == 1) {
    const Poly& h = cs[0];
    for (int v : blk.clique) {
      Poly d = h.derivative(v);
      if (!d.is_zero() && d.is_constant()) {
        Rational c = d.constant_term();
        rb.set_L(0, rb.local_of(v), Poly::constant(Rational(1) / c));
        pair.provenance = "constant-gradient";
        auto gm = build_gradient_matrix(p, block);
        if (verify_lme(gm, pair).all_zero()) return pair;
        pair.L.at(0, rb.local_of(v)) = Poly();  // reset, try other families
        break;
      }
    }
  }

  std::vector<int> multi;  // indices of multi-variable constraints
  for (int j = 0; j < mh; ++j) {
    auto k = shapes[j].kind;
    if (k == ConstraintShape::kAffineMulti || k == ConstraintShape::kDiagQuadMulti)
      multi.push_back(j);
    else if (k == ConstraintShape::kOther)
      return std::nullopt;
  }

  // Separable single-variable constraints only.
  if (multi.empty()) {
    std::map<int, std::vector<int>> byvar;
    for (int j = 0; j < mh; ++j) byvar[shapes[j].var].push_back(j);
    for (auto& [v, idx] : byvar) {
      int lv = rb.local_of(v);
      if (idx.size() == 1) {
        auto& s = shapes[idx[0]];
        if (s.kind == ConstraintShape::kCoordinate ||
            s.kind == ConstraintShape::kAffineSingle) {
          // c = a z + b: l = 1/a, d = 0
          rb.set_L(idx[0], lv, Poly::constant(Rational(1) / s.a));
        } else {
          // c = a z^2 + b, b != 0: l = -z/(2b), d = 1/b
          if (s.b == 0) return std::nullopt;
          rb.set_L(idx[0], lv, Poly::variable(v).scaled(Rational(-1) / (2 * s.b)));
          rb.set_D(idx[0], idx[0], Poly::constant(Rational(1) / s.b));
        }
      } else if (idx.size() == 2) {
        // two affine faces on one variable, solved as an exact 2x2 system
        auto &sp = shapes[idx[0]], &sm = shapes[idx[1]];
        if (sp.kind == ConstraintShape::kQuadSingle ||
            sm.kind == ConstraintShape::kQuadSingle)
          return std::nullopt;
        Rational W = sm.a * sp.b - sp.a * sm.b;
        if (W == 0) return std::nullopt;  // proportional pair: singular
        const Poly &cp = cs[idx[0]], &cm = cs[idx[1]];
        rb.set_L(idx[0], lv, cm.scaled(Rational(-1) / W));
        rb.set_D(idx[0], idx[0], Poly::constant(sm.a / W));
        rb.set_D(idx[0], idx[1], Poly::constant(sm.a / W));
        rb.set_L(idx[1], lv, cp.scaled(Rational(1) / W));
        rb.set_D(idx[1], idx[0], Poly::constant(-sp.a / W));
        rb.set_D(idx[1], idx[1], Poly::constant(-sp.a / W));
        pair.provenance = "box";
      } else {
        return std::nullopt;
      }
    }
    if (pair.provenance.empty()) pair.provenance = "separable";
    auto gm = build_gradient_matrix(p, block);
    if (!verify_lme(gm, pair).all_zero()) return std::nullopt;
    return pair;
  }

  // One multi-variable constraint c0 plus pure-coordinate rows.
  if (multi.size() != 1) return std::nullopt;
  int j0 = multi[0];
  auto& s0 = shapes[j0];
  if (s0.c0 == 0) return std::nullopt;
  for (int j = 0; j < mh; ++j)
    if (j != j0 && shapes[j].kind != ConstraintShape::kCoordinate) return std::nullopt;
  {
    std::vector<int> seen;  // coordinate variables must be distinct
    for (int j = 0; j < mh; ++j)
      if (j != j0) seen.push_back(shapes[j].var);
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) return std::nullopt;
  }

  const Rational& b0 = s0.c0;
  bool quad = s0.kind == ConstraintShape::kDiagQuadMulti;
  // lambda_0 = -(1/b) sum z_v F_v over supp(c0), or -(1/(2b)) for the
  // diagonal-quadratic family; d_{00} = 1/b, coordinate columns get -kappa.
  Rational kappa = quad ? Rational(-1) / (2 * b0) : Rational(-1) / b0;
  for (auto& [v, wv] : s0.w)
    rb.set_L(j0, rb.local_of(v), Poly::variable(v).scaled(kappa));
  rb.set_D(j0, j0, Poly::constant(Rational(1) / b0));
  for (int j = 0; j < mh; ++j) {
    if (j == j0) continue;
    if (s0.w.count(shapes[j].var)) rb.set_D(j0, j, Poly::constant(-kappa));
  }
  // Coordinate rows: row_j = (1/a_j) e_j + beta_j * row_{j0}, with beta_j =
  // -w_j/a_j (affine c0) or -2 c_j z_j / a_j (diagonal quadratic c0).
  for (int j = 0; j < mh; ++j) {
    if (j == j0) continue;
    auto& sj = shapes[j];
    int lv = rb.local_of(sj.var);
    Rational alpha = Rational(1) / sj.a;
    auto it = s0.w.find(sj.var);
    Poly beta;
    if (it != s0.w.end())
      beta = quad ? Poly::variable(sj.var).scaled(-2 * it->second * alpha)
                  : Poly::constant(-it->second * alpha);
    rb.set_L(j, lv, pair.L.at(j, lv) + Poly::constant(alpha));
    if (!beta.is_zero()) {
      for (int col = 0; col < n; ++col)
        if (!pair.L.at(j0, col).is_zero())
          rb.set_L(j, col, pair.L.at(j, col) + beta * pair.L.at(j0, col));
      for (int col = 0; col < mh; ++col)
        if (!pair.D.at(j0, col).is_zero())
          rb.set_D(j, col, pair.D.at(j, col) + beta * pair.D.at(j0, col));
    }
  }
  pair.provenance = quad ? "ball" : "simplex";
  auto gm = build_gradient_matrix(p, block);
  if (!verify_lme(gm, pair).all_zero()) return std::nullopt;
  return pair;
}

namespace {

// Degree-bounded ansatz for one multiplier row r: find polynomials
// (l_1..l_n, d_1..d_mh) of degree <= k with sum_v l_v dC_j/dx_v + d_j c_j =
// delta_{rj} for all j.
std::optional<std::vector<Poly>> ansatz_row(const GradientMatrix& gm,
                                            const std::vector<int>& clique,
                                            const std::vector<Monomial>& basis,
                                            int r) {
  int n = gm.n_local, mh = gm.m_hat;
  int nb = static_cast<int>(basis.size());
  int ncols = (n + mh) * nb;  // unknown coefficients
  detail::LinearSystem sys;
  sys.ncols = ncols;
  // Equations indexed by (column j, monomial); build sparse rows.
  std::map<std::pair<int, Monomial>, int> eqindex;
  std::vector<std::vector<std::pair<int, Rational>>> rows;
  std::vector<Rational> rhs;
  auto eq_of = [&](int j, const Monomial& m) {
    auto it = eqindex.find({j, m});
    if (it != eqindex.end()) return it->second;
    int id = static_cast<int>(rows.size());
    eqindex.emplace(std::make_pair(j, m), id);
    rows.emplace_back();
    rhs.push_back(Rational(0));
    return id;
  };
  for (int j = 0; j < mh; ++j) {
    for (int e = 0; e < n + mh; ++e) {
      const Poly& gpoly = gm.mat.at(e, j);
      if (gpoly.is_zero()) continue;
      for (int t = 0; t < nb; ++t) {
        int col = e * nb + t;
        for (auto& [m, c] : gpoly.terms())
          rows[eq_of(j, basis[t] * m)].push_back({col, c});
      }
    }
    // right-hand side: delta_{rj} on the constant monomial
    int id = eq_of(j, Monomial{});
    if (j == r) rhs[id] = Rational(1);
  }
  sys.rows = std::move(rows);
  sys.rhs = std::move(rhs);
  auto x = detail::solve_sparse_linear(sys);
  if (!x) return std::nullopt;
  std::vector<Poly> out(n + mh);
  for (int e = 0; e < n + mh; ++e) {
    Poly pe;
    for (int t = 0; t < nb; ++t) pe.add_term(basis[t], (*x)[e * nb + t]);
    out[e] = std::move(pe);
  }
  (void)clique;
  return out;
}

std::vector<Monomial> monomials_up_to(const std::vector<int>& vars, int deg) {
  std::vector<Monomial> out{Monomial{}};
  std::vector<Monomial> frontier{Monomial{}};
  for (int d = 1; d <= deg; ++d) {
    std::vector<Monomial> next;
    for (auto& m : frontier) {
      int start = m.is_constant() ? 0 : static_cast<int>(
          std::lower_bound(vars.begin(), vars.end(), m.exponents().back().first) -
          vars.begin());
      for (size_t vi = start; vi < vars.size(); ++vi)
        next.push_back(m.times(vars[vi], 1));
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

LmePair synthesize_lme(const CspProblem& p, int block, int degree_cap) {
  if (auto t = template_lme(p, block)) return *t;
  auto& blk = p.blocks.at(block - 1);
  int n = static_cast<int>(blk.clique.size());
  int mh = static_cast<int>(blk.ineqs.size() + blk.eqs.size());
  if (degree_cap < 0) {
    degree_cap = 2;
    for (auto& g : blk.ineqs) degree_cap = std::max(degree_cap, g.degree());
    for (auto& h : blk.eqs) degree_cap = std::max(degree_cap, h.degree());
  }
  GradientMatrix gm = build_gradient_matrix(p, block);
  LmePair pair;
  pair.block = block;
  pair.L = PolyMatrix(mh, n);
  pair.D = PolyMatrix(mh, mh);
  int used_k = 0;
  for (int r = 0; r < mh; ++r) {
    bool done = false;
    for (int k = 0; k <= degree_cap && !done; ++k) {
      auto basis = monomials_up_to(blk.clique, k);
      auto row = ansatz_row(gm, blk.clique, basis, r);
      if (row) {
        for (int v = 0; v < n; ++v) pair.L.at(r, v) = (*row)[v];
        for (int j = 0; j < mh; ++j) pair.D.at(r, j) = (*row)[n + j];
        used_k = std::max(used_k, k);
        done = true;
      }
    }
    if (!done)
      throw LmeSynthesisError(
          block, "no CS-LME up to degree " + std::to_string(degree_cap) +
                     " for block " + std::to_string(block) +
                     " (multiplier row " + std::to_string(r + 1) +
                     "); the gradient-bordered matrix admits no polynomial "
                     "left inverse at this cap");
  }
  pair.provenance = "ansatz deg " + std::to_string(used_k);
  if (!verify_lme(gm, pair).all_zero())
    throw std::logic_error("ansatz produced an uncertified pair");
  return pair;
}

}  // namespace cspop
