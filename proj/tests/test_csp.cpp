#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "cspop/csp.hpp"
#include "cspop/problem_io.hpp"

using namespace cspop;

namespace {

const std::string kData = CSPOP_DATA_DIR;

struct Rng {
  uint64_t s;
  uint64_t next() {
    s += 0x9e3779b97f4a7c15ull;
    uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  int range(int lo, int hi) { return lo + static_cast<int>(next() % (hi - lo + 1)); }
};

// Random clique family satisfying the RIP by construction: each new clique
// takes a subset of one earlier clique plus fresh variables.
std::vector<std::vector<int>> random_rip_cliques(Rng& rng, int s, int* n_out) {
  std::vector<std::vector<int>> cliques;
  int next_var = 1;
  for (int i = 0; i < s; ++i) {
    std::vector<int> c;
    if (i > 0 && rng.range(0, 9) > 0) {  // occasionally a fresh root
      auto& base = cliques[rng.range(0, i - 1)];
      int take = rng.range(1, static_cast<int>(base.size()));
      std::vector<int> pool = base;
      for (int t = 0; t < take; ++t) {
        int at = rng.range(0, static_cast<int>(pool.size()) - 1);
        c.push_back(pool[at]);
        pool.erase(pool.begin() + at);
      }
    }
    int fresh = rng.range(1, 3);
    for (int t = 0; t < fresh; ++t) c.push_back(next_var++);
    std::sort(c.begin(), c.end());
    cliques.push_back(c);
  }
  *n_out = next_var - 1;
  return cliques;
}

struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

TEST_CASE("validate: bundled example 5.1 is a valid two-block csp") {
  auto pf = parse_problem_file(kData + "/ex5_1.popb");
  auto rep = validate_csp(pf.problem);
  CHECK(rep.ok());
  CHECK(pf.problem.num_blocks() == 2);
  CHECK(pf.problem.blocks[0].ineqs.size() == 3);
  CHECK(pf.problem.blocks[1].ineqs.size() == 5);
}

TEST_CASE("validate: containment breach and coverage gap") {
  VarTable t;
  t.n_x = 4;
  CspProblem p;
  p.n = 4;
  CspBlock b1;
  b1.clique = {1, 2, 3};
  b1.objective = parse_poly("x4", t);  // x4 not in the clique
  p.blocks.push_back(b1);
  auto rep = validate_csp(p);
  CHECK(!rep.ok());
  bool saw_containment = false, saw_coverage = false;
  for (auto& v : rep.violations) {
    if (v.block == 1 && v.where == "objective" && v.var == 4) saw_containment = true;
    if (v.where == "coverage" && v.var == 4) saw_coverage = true;
  }
  CHECK(saw_containment);
  CHECK(saw_coverage);
}

TEST_CASE("check_rip basics") {
  CHECK(check_rip({{1, 2, 3}, {3, 4, 5, 6}}).holds);
  CHECK(*check_rip({{1, 2, 3}, {3, 4, 5, 6}}).witness[0] == 1);

  auto cyc = check_rip({{1, 2}, {2, 3}, {1, 3}});
  CHECK(!cyc.holds);
  CHECK(cyc.first_violation == 3);
  CHECK(cyc.intersection[1] == std::vector<int>{1, 3});

  CHECK(check_rip({{1, 2, 3, 4, 17, 18, 19},
                   {5, 6, 7, 8, 18, 19, 20},
                   {9, 10, 18, 19, 20},
                   {11, 12, 17, 18},
                   {13, 14, 15, 16, 17}})
            .holds);
}

TEST_CASE("check_rip is order sensitive") {
  CHECK(!check_rip({{1, 2}, {2, 3}, {1, 3}}).holds);
  CHECK(check_rip({{1, 2}, {2, 3}}).holds);
  CHECK(check_rip({{1, 2, 3}, {2, 3, 4}, {3, 4, 5}}).holds);
  // same multiset of cliques, different verdicts under permutation
  CHECK(check_rip({{1, 2, 3}, {3, 4}, {1, 2}}).holds);
  CHECK(!check_rip({{3, 4}, {1, 2}, {1, 2, 3}}).holds);
}

TEST_CASE("build_tree: example 5.3") {
  auto tree = build_tree({{1, 2, 3, 4}, {4, 5, 6}, {4, 7, 8}});
  CHECK(tree.arcs == std::vector<std::pair<int, int>>{{2, 1}, {3, 2}});
  CHECK(tree.overlap.at({2, 1}) == std::vector<int>{4});
  CHECK(tree.overlap.at({3, 2}) == std::vector<int>{4});
  CHECK(*tree.parent[2] == 1);
  CHECK(*tree.parent[3] == 2);
  CHECK(tree.children[1] == std::vector<int>{2});
  CHECK(tree.children[2] == std::vector<int>{3});
}

TEST_CASE("build_tree: example 5.4 arc set") {
  auto tree = build_tree({{1, 2, 3, 4, 17, 18, 19},
                          {5, 6, 7, 8, 18, 19, 20},
                          {9, 10, 18, 19, 20},
                          {11, 12, 17, 18},
                          {13, 14, 15, 16, 17}});
  CHECK(tree.arcs ==
        std::vector<std::pair<int, int>>{{2, 1}, {3, 2}, {4, 1}, {5, 4}});
  CHECK(tree.overlap.at({2, 1}) == std::vector<int>{18, 19});
  CHECK(tree.overlap.at({3, 2}) == std::vector<int>{18, 19, 20});
  CHECK(tree.overlap.at({4, 1}) == std::vector<int>{17, 18});
  CHECK(tree.overlap.at({5, 4}) == std::vector<int>{17});
}

TEST_CASE("build_tree: disjoint cliques form a two-root forest") {
  auto tree = build_tree({{1, 2}, {3, 4}});
  CHECK(tree.arcs.empty());
  CHECK(!tree.parent[1]);
  CHECK(!tree.parent[2]);
}

TEST_CASE("build_tree rejects RIP violations") {
  CHECK_THROWS(build_tree({{1, 2}, {2, 3}, {1, 3}}));
}

TEST_CASE("tree structure properties on random RIP instances") {
  Rng rng{314159};
  for (int trial = 0; trial < 100; ++trial) {
    int n = 0;
    auto cliques = random_rip_cliques(rng, rng.range(2, 8), &n);
    auto rip = check_rip(cliques);
    REQUIRE(rip.holds);
    auto tree = build_tree(cliques);
    int s = static_cast<int>(cliques.size());
    CHECK(static_cast<int>(tree.arcs.size()) <= s - 1);
    for (auto& [i, t] : tree.arcs) {
      CHECK(t < i);
      // algorithm line-4 condition re-checked post hoc
      std::set<int> seen;
      for (int j = 0; j < i - 1; ++j)
        seen.insert(cliques[j].begin(), cliques[j].end());
      std::set<int> ct(cliques[t - 1].begin(), cliques[t - 1].end());
      for (int v : cliques[i - 1])
        if (seen.count(v)) CHECK(ct.count(v));
    }
    for (int i = 1; i <= s; ++i) {
      int cnt = 0;
      for (auto& [a, b] : tree.arcs)
        if (a == i) ++cnt;
      CHECK(cnt <= 1);  // at most one parent
    }
    // per-variable subgraph (Q_k, P_k) connectivity via union-find
    for (int k = 1; k <= n; ++k) {
      std::vector<int> qk;
      for (int i = 0; i < s; ++i)
        if (std::binary_search(cliques[i].begin(), cliques[i].end(), k))
          qk.push_back(i + 1);
      if (qk.size() <= 1) continue;
      DisjointSet ds(s + 1);
      for (auto& [i, t] : tree.arcs) {
        auto& ov = tree.overlap.at({i, t});
        if (std::binary_search(ov.begin(), ov.end(), k)) ds.unite(i, t);
      }
      for (size_t j = 1; j < qk.size(); ++j) CHECK(ds.find(qk[0]) == ds.find(qk[j]));
    }
  }
}

TEST_CASE("detect_csp: separable, dense, chain") {
  VarTable t;
  t.n_x = 3;
  std::vector<Poly> sep{parse_poly("x1^2", t), parse_poly("x2^2", t),
                        parse_poly("x3^4", t)};
  CHECK(detect_csp(3, sep, {}) == std::vector<std::vector<int>>{{1}, {2}, {3}});

  std::vector<Poly> dense{parse_poly("x1*x2*x3", t)};
  CHECK(detect_csp(3, dense, {}) == std::vector<std::vector<int>>{{1, 2, 3}});

  VarTable t5;
  t5.n_x = 5;
  std::vector<Poly> chain{parse_poly("x1*x2*x3", t5), parse_poly("x2*x3*x4", t5),
                          parse_poly("x3*x4*x5", t5)};
  CHECK(detect_csp(5, chain, {}) ==
        std::vector<std::vector<int>>{{1, 2, 3}, {2, 3, 4}, {3, 4, 5}});
}

TEST_CASE("clique local enumeration is ascending") {
  auto pf = parse_problem_file(kData + "/ex5_3.popb");
  CHECK(pf.problem.local_index(1, 4) == 0);  // x4 is first in clique {4,5,6}
  CHECK(pf.problem.local_index(2, 7) == 1);
  CHECK(pf.problem.local_index(0, 9) == -1);
}
