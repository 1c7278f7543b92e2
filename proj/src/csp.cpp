#include "cspop/csp.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

namespace cspop {

Poly CspProblem::full_objective() const {
  Poly f;
  for (auto& b : blocks) f += b.objective;
  return f;
}

VarTable CspProblem::table() const {
  VarTable t;
  t.n_x = n;
  return t;
}

int CspProblem::local_index(int block, int id) const {
  auto& cl = blocks[block].clique;
  auto it = std::lower_bound(cl.begin(), cl.end(), id);
  if (it == cl.end() || *it != id) return -1;
  return static_cast<int>(it - cl.begin());
}

std::string ValidationReport::summary() const {
  if (ok()) return "valid";
  std::ostringstream os;
  for (auto& v : violations) {
    if (v.block > 0) os << "block " << v.block << ", " << v.where << ": ";
    os << v.message << "\n";
  }
  return os.str();
}

ValidationReport validate_csp(const CspProblem& p) {
  ValidationReport rep;
  std::set<int> covered;
  for (int i = 0; i < p.num_blocks(); ++i) {
    auto& b = p.blocks[i];
    std::set<int> clique(b.clique.begin(), b.clique.end());
    for (int v : b.clique) {
      if (v < 1 || v > p.n)
        rep.violations.push_back({i + 1, "clique", v,
                                  "variable x" + std::to_string(v) +
                                      " outside 1.." + std::to_string(p.n)});
      covered.insert(v);
    }
    auto check = [&](const Poly& q, const std::string& where) {
      for (int v : q.vars())
        if (!clique.count(v))
          rep.violations.push_back({i + 1, where, v,
                                    "variable x" + std::to_string(v) +
                                        " not in clique of block " +
                                        std::to_string(i + 1)});
    };
    check(b.objective, "objective");
    for (size_t j = 0; j < b.ineqs.size(); ++j)
      check(b.ineqs[j], "ineq " + std::to_string(j + 1));
    for (size_t j = 0; j < b.eqs.size(); ++j)
      check(b.eqs[j], "eq " + std::to_string(j + 1));
  }
  if (p.num_blocks() == 0)
    rep.violations.push_back({0, "blocks", 0, "no blocks declared"});
  for (int v = 1; v <= p.n; ++v)
    if (!covered.count(v))
      rep.violations.push_back({0, "coverage", v,
                                "variable x" + std::to_string(v) +
                                    " not covered by any clique"});
  return rep;
}

RipResult check_rip(const std::vector<std::vector<int>>& cliques) {
  RipResult res;
  int s = static_cast<int>(cliques.size());
  res.holds = true;
  std::set<int> seen;
  if (s > 0) seen.insert(cliques[0].begin(), cliques[0].end());
  for (int i = 1; i < s; ++i) {
    std::vector<int> inter;
    for (int v : cliques[i])
      if (seen.count(v)) inter.push_back(v);
    std::sort(inter.begin(), inter.end());
    res.intersection.push_back(inter);
    std::optional<int> wit;
    for (int t = i - 1; t >= 0; --t) {  // any admissible witness; report one
      std::set<int> ct(cliques[t].begin(), cliques[t].end());
      if (std::all_of(inter.begin(), inter.end(),
                      [&](int v) { return ct.count(v) > 0; })) {
        wit = t + 1;
        break;
      }
    }
    res.witness.push_back(wit);
    if (!wit && !inter.empty()) {
      res.holds = false;
      if (res.first_violation == 0) res.first_violation = i + 1;
    }
    if (inter.empty()) res.witness.back() = std::nullopt;  // vacuous step
    seen.insert(cliques[i].begin(), cliques[i].end());
  }
  return res;
}

CspTree build_tree(const std::vector<std::vector<int>>& cliques) {
  auto rip = check_rip(cliques);
  if (!rip.holds)
    throw std::runtime_error(
        "running intersection property fails at clique " +
        std::to_string(rip.first_violation));
  int s = static_cast<int>(cliques.size());
  CspTree tree;
  tree.s = s;
  tree.parent.assign(s + 1, std::nullopt);
  tree.children.assign(s + 1, {});
  std::set<int> seen;
  if (s > 0) seen.insert(cliques[0].begin(), cliques[0].end());
  for (int i = 1; i < s; ++i) {
    std::vector<int> inter;
    for (int v : cliques[i])
      if (seen.count(v)) inter.push_back(v);
    std::sort(inter.begin(), inter.end());
    if (!inter.empty()) {
      int chosen = 0;
      for (int t = i; t >= 1; --t) {  // largest admissible t
        std::set<int> ct(cliques[t - 1].begin(), cliques[t - 1].end());
        if (std::all_of(inter.begin(), inter.end(),
                        [&](int v) { return ct.count(v) > 0; })) {
          chosen = t;
          break;
        }
      }
      int child = i + 1;
      tree.arcs.push_back({child, chosen});
      tree.parent[child] = chosen;
      tree.children[chosen].push_back(child);
      std::vector<int> ov;
      std::set<int> ct(cliques[chosen - 1].begin(), cliques[chosen - 1].end());
      for (int v : cliques[i])
        if (ct.count(v)) ov.push_back(v);
      std::sort(ov.begin(), ov.end());
      tree.overlap[{child, chosen}] = ov;
    }
    seen.insert(cliques[i].begin(), cliques[i].end());
  }
  return tree;
}

namespace {

// Bron-Kerbosch with pivoting, deterministic vertex order.
void bron_kerbosch(std::vector<int> R, std::vector<int> P, std::vector<int> X,
                   const std::vector<std::set<int>>& adj,
                   std::vector<std::vector<int>>& out) {
  if (P.empty() && X.empty()) {
    out.push_back(R);
    return;
  }
  int pivot = -1;
  size_t best = 0;
  for (int u : P)
    if (pivot < 0 || adj[u].size() > best) pivot = u, best = adj[u].size();
  for (int u : X)
    if (pivot < 0 || adj[u].size() > best) pivot = u, best = adj[u].size();
  std::vector<int> cand;
  for (int v : P)
    if (pivot < 0 || !adj[pivot].count(v)) cand.push_back(v);
  for (int v : cand) {
    std::vector<int> R2 = R, P2, X2;
    R2.push_back(v);
    for (int w : P)
      if (adj[v].count(w)) P2.push_back(w);
    for (int w : X)
      if (adj[v].count(w)) X2.push_back(w);
    bron_kerbosch(R2, P2, X2, adj, out);
    P.erase(std::find(P.begin(), P.end(), v));
    X.insert(std::lower_bound(X.begin(), X.end(), v), v);
  }
}

}  // namespace

std::vector<std::vector<int>> detect_csp(int n,
                                         const std::vector<Poly>& objective_terms,
                                         const std::vector<Poly>& constraints) {
  std::vector<std::vector<int>> trivial{std::vector<int>(n)};
  std::iota(trivial[0].begin(), trivial[0].end(), 1);
  if (n == 0) return {};

  // Interaction graph: variables adjacent when they co-occur in a monomial of
  // the objective or in the support of a constraint.
  std::vector<std::set<int>> adj(n + 1);
  auto link = [&](const std::vector<int>& vs) {
    for (size_t a = 0; a < vs.size(); ++a)
      for (size_t b = a + 1; b < vs.size(); ++b) {
        adj[vs[a]].insert(vs[b]);
        adj[vs[b]].insert(vs[a]);
      }
  };
  for (auto& p : objective_terms)
    for (auto& [m, c] : p.terms()) link(m.support());
  for (auto& q : constraints) {
    auto vs = q.vars();
    link(std::vector<int>(vs.begin(), vs.end()));
  }

  std::vector<int> verts(n);
  std::iota(verts.begin(), verts.end(), 1);
  std::vector<std::vector<int>> cliques;
  bron_kerbosch({}, verts, {}, adj, cliques);
  for (auto& c : cliques) std::sort(c.begin(), c.end());

  // Absorb each constraint support into a single clique (merge by union,
  // lowest-index clique wins ties).
  for (auto& q : constraints) {
    auto vs = q.vars();
    std::set<int> sup(vs.begin(), vs.end());
    bool housed = false;
    for (auto& c : cliques) {
      std::set<int> cs(c.begin(), c.end());
      if (std::includes(cs.begin(), cs.end(), sup.begin(), sup.end())) {
        housed = true;
        break;
      }
    }
    if (!housed && !sup.empty()) cliques.push_back({sup.begin(), sup.end()});
  }
  // Drop cliques contained in others (keep first occurrence).
  std::sort(cliques.begin(), cliques.end(),
            [](auto& a, auto& b) {
              return a.size() != b.size() ? a.size() > b.size() : a < b;
            });
  std::vector<std::vector<int>> kept;
  for (auto& c : cliques) {
    bool sub = false;
    for (auto& k : kept)
      if (std::includes(k.begin(), k.end(), c.begin(), c.end())) {
        sub = true;
        break;
      }
    if (!sub) kept.push_back(c);
  }
  // Order by smallest variable index, then lexicographically; accept if the
  // RIP holds, otherwise fall back to the trivial csp.
  std::sort(kept.begin(), kept.end());
  if (kept.empty()) return trivial;
  if (!check_rip(kept).holds) return trivial;
  // Every variable must be covered (isolated variables become singletons,
  // already present as maximal cliques of the empty graph).
  std::set<int> covered;
  for (auto& c : kept) covered.insert(c.begin(), c.end());
  for (int v = 1; v <= n; ++v)
    if (!covered.count(v)) kept.push_back({v});
  if (!check_rip(kept).holds) return trivial;
  return kept;
}

}  // namespace cspop
