#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "cspop/sdp.hpp"
#include "cspop/sdpa_io.hpp"

using namespace cspop;

namespace {

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
  double uniform(double lo, double hi) {
    return lo + (next() >> 11) * 0x1.0p-53 * (hi - lo);
  }
};

// max y s.t. y*I <= diag(1,2): optimum 1, certificate X = e1 e1'.
SdpProblem trace_problem() {
  SdpProblem sdp;
  sdp.m = 1;
  sdp.obj = {1.0};
  sdp.block_sizes = {2};
  sdp.block_entries = {{{0, 0, 0, 1.0}, {0, 1, 1, 2.0}, {1, 0, 0, 1.0}, {1, 1, 1, 1.0}}};
  return sdp;
}

// Strictly feasible random instance: both sides have interior points by
// construction.
SdpProblem random_feasible(Rng& rng, int m, std::vector<int> sizes, int n_eq) {
  SdpProblem sdp;
  sdp.m = m;
  sdp.block_sizes = sizes;
  sdp.block_entries.resize(sizes.size());
  std::vector<double> y0(m), u0(n_eq);
  for (int k = 0; k < m; ++k) y0[k] = rng.uniform(-1, 1);
  for (int j = 0; j < n_eq; ++j) u0[j] = rng.uniform(-1, 1);
  std::vector<Eigen::MatrixXd> X0;
  sdp.obj.assign(m, 0.0);
  for (size_t b = 0; b < sizes.size(); ++b) {
    int r = sizes[b];
    std::vector<Eigen::MatrixXd> A(m);
    for (int k = 0; k < m; ++k) {
      // dense symmetric draws: linearly independent with probability one
      A[k] = Eigen::MatrixXd::Zero(r, r);
      for (int i = 0; i < r; ++i)
        for (int j = i; j < r; ++j) {
          double v = rng.uniform(-1, 1);
          A[k](i, j) = A[k](j, i) = v;
        }
    }
    // dual slack S0 = I: C = sum y0 A + I
    Eigen::MatrixXd C = Eigen::MatrixXd::Identity(r, r);
    for (int k = 0; k < m; ++k) C += y0[k] * A[k];
    // primal interior X0
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(r, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) G(i, j) = rng.uniform(-1, 1);
    Eigen::MatrixXd X = G * G.transpose() + Eigen::MatrixXd::Identity(r, r) * 0.5;
    X0.push_back(X);
    for (int k = 0; k < m; ++k) sdp.obj[k] += (A[k].cwiseProduct(X)).sum();
    // store entries
    for (int k = 0; k <= m; ++k) {
      const Eigen::MatrixXd& M = k == 0 ? C : A[k - 1];
      for (int i = 0; i < r; ++i)
        for (int j = i; j < r; ++j)
          if (M(i, j) != 0.0) sdp.block_entries[b].push_back({k, i, j, M(i, j)});
    }
  }
  for (int j = 0; j < n_eq; ++j) {
    SdpProblem::EqRow row;
    double rhs = 0;
    for (int k = 0; k < m; ++k)
      if (rng.range(0, 1)) {
        double c = rng.uniform(-1, 1);
        row.coeffs.push_back({k + 1, c});
        rhs += c * y0[k];
        sdp.obj[k] += c * u0[j];
      }
    row.rhs = rhs;
    if (!row.coeffs.empty()) sdp.eqrows.push_back(row);
  }
  return sdp;
}

std::string tmpfile_path(const std::string& stem) {
  return std::string("/tmp/cspop_test_") + stem;
}

}  // namespace

TEST_CASE("trace problem solves to 1 with X = e1 e1'") {
  SdpProblem sdp = trace_problem();
  SdpSolution sol = solve(sdp);
  CHECK(sol.status == SdpStatus::kOptimal);
  CHECK(sol.primal_obj == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.dual_obj == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.X[0](0, 0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(sol.X[0](1, 1) == doctest::Approx(0.0).epsilon(1e-5));
  auto rep = check_solution(sdp, sol);
  CHECK(rep.max_all() <= 1e-6);
}

TEST_CASE("univariate moment relaxation of min x^2 gives 0") {
  // variables y1, y2; maximize -y2 s.t. [[1,y1],[y1,y2]] psd
  SdpProblem sdp;
  sdp.m = 2;
  sdp.obj = {0.0, -1.0};
  sdp.block_sizes = {2};
  sdp.block_entries = {{{0, 0, 0, 1.0}, {1, 0, 1, -1.0}, {2, 1, 1, -1.0}}};
  SdpSolution sol = solve(sdp);
  CHECK(sol.status == SdpStatus::kOptimal);
  CHECK(sol.primal_obj == doctest::Approx(0.0).epsilon(1e-7));
}

TEST_CASE("equality rows are honored") {
  // max y1 + y2 s.t. diag(y1, y2) <= I, y1 = 2*y2
  SdpProblem sdp;
  sdp.m = 2;
  sdp.obj = {1.0, 1.0};
  sdp.block_sizes = {2};
  sdp.block_entries = {{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}, {1, 0, 0, 1.0}, {2, 1, 1, 1.0}}};
  sdp.eqrows.push_back({{{1, 1.0}, {2, -2.0}}, 0.0});
  SdpSolution sol = solve(sdp);
  CHECK(sol.status == SdpStatus::kOptimal);
  CHECK(sol.y[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.y[1] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("weak duality at the returned iterate") {
  Rng rng{100};
  for (int t = 0; t < 10; ++t) {
    SdpProblem sdp = random_feasible(rng, rng.range(3, 8), {rng.range(2, 6)}, 0);
    SdpSolution sol = solve(sdp);
    REQUIRE(sol.status == SdpStatus::kOptimal);
    CHECK(sol.primal_obj <= sol.dual_obj + 1e-6 * (1 + std::fabs(sol.dual_obj)));
  }
}

TEST_CASE("determinism: identical runs produce identical iterates") {
  Rng rng{4242};
  SdpProblem sdp = random_feasible(rng, 12, {5, 4}, 2);
  SdpSolution a = solve(sdp);
  SdpSolution b = solve(sdp);
  REQUIRE(a.y.size() == b.y.size());
  for (size_t i = 0; i < a.y.size(); ++i) CHECK(a.y[i] == b.y[i]);  // bitwise
  CHECK(a.iterations == b.iterations);
  CHECK(a.primal_obj == b.primal_obj);
}

TEST_CASE("random strictly-feasible instances reach tolerance") {
  Rng rng{2718};
  int within = 0, total = 0;
  for (int t = 0; t < 100; ++t) {
    std::vector<int> sizes;
    int nb = rng.range(1, 3);
    int cap = 0;
    for (int b = 0; b < nb; ++b) {
      sizes.push_back(rng.range(2, 10));
      cap += sizes.back() * (sizes.back() + 1) / 2;
    }
    int m = rng.range(3, std::min(25, cap));  // independent constraints only
    SdpProblem sdp = random_feasible(rng, m, sizes, rng.range(0, 2));
    SolveOptions so;
    so.tol = 1e-8;
    so.max_iter = 60;
    SdpSolution sol = solve(sdp, so);
    ++total;
    if (sol.status == SdpStatus::kOptimal && sol.iterations < 60) ++within;
    CHECK(sol.status == SdpStatus::kOptimal);
  }
  CHECK(within == total);
  // one larger block
  SdpProblem big = random_feasible(rng, 20, {80}, 0);
  SolveOptions so;
  so.max_iter = 60;
  SdpSolution sol = solve(big, so);
  CHECK(sol.status == SdpStatus::kOptimal);
}

TEST_CASE("unbounded problem is flagged, no silent bound") {
  // max y with no constraint limiting y from above: y*(-I) <= I
  SdpProblem sdp;
  sdp.m = 1;
  sdp.obj = {1.0};
  sdp.block_sizes = {2};
  sdp.block_entries = {{{0, 0, 0, 1.0}, {0, 1, 1, 1.0}, {1, 0, 0, -1.0}, {1, 1, 1, -1.0}}};
  SdpSolution sol = solve(sdp);
  CHECK(sol.status == SdpStatus::kUnbounded);
}

TEST_CASE("export matches the documented byte layout") {
  SdpProblem sdp = trace_problem();
  std::string text = sdpa_text(sdp);
  CHECK(text ==
        "1\n1\n2\n1\n"
        "0 1 1 1 1\n0 1 2 2 2\n1 1 1 1 1\n1 1 2 2 1\n");
}

TEST_CASE("export/import round trip is exact") {
  SdpProblem sdp = trace_problem();
  std::string path = tmpfile_path("roundtrip.dat-s");
  export_sdpa(sdp, path);
  SdpProblem back = import_sdpa(path);
  CHECK(back.m == sdp.m);
  CHECK(back.obj == sdp.obj);
  CHECK(back.block_sizes == sdp.block_sizes);
  REQUIRE(back.block_entries.size() == sdp.block_entries.size());
  for (size_t b = 0; b < sdp.block_entries.size(); ++b) {
    REQUIRE(back.block_entries[b].size() == sdp.block_entries[b].size());
    for (size_t i = 0; i < sdp.block_entries[b].size(); ++i) {
      CHECK(back.block_entries[b][i].k == sdp.block_entries[b][i].k);
      CHECK(back.block_entries[b][i].v == sdp.block_entries[b][i].v);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("equality rows round trip through the diagonal block") {
  Rng rng{17};
  SdpProblem sdp = random_feasible(rng, 6, {3}, 2);
  REQUIRE(!sdp.eqrows.empty());
  std::string t1 = sdpa_text(sdp);
  SdpProblem back = parse_sdpa(t1);
  CHECK(back.eqrows.size() == sdp.eqrows.size());
  std::string t2 = sdpa_text(back);
  CHECK(t1 == t2);  // byte-exact idempotence
  // and the lifted problem solves to the same value
  SdpSolution a = solve(sdp);
  SdpSolution b = solve(back);
  CHECK(a.primal_obj == doctest::Approx(b.primal_obj).epsilon(1e-7));
}

TEST_CASE("solution import: minimal, truncated, inconsistent") {
  std::string path = tmpfile_path("sol.out");
  {
    std::ofstream f(path);
    f << "phase.value  = pdOPT\n"
      << "objValPrimal = 1.0000000e+00\n"
      << "objValDual   = 9.9999990e-01\n"
      << "xVec = {1.0}\n";
  }
  auto frag = import_sdpa_solution(path);
  CHECK(frag.obj_primal == doctest::Approx(1.0));
  CHECK(frag.obj_dual == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(frag.phase == "pdOPT");
  REQUIRE(frag.has_xvec);
  CHECK(frag.xvec == std::vector<double>{1.0});
  CHECK(reconcile_solution(trace_problem(), frag) == SdpStatus::kOptimal);

  {
    std::ofstream f(path);
    f << "phase.value = pdOPT\n";  // truncated: no objective values
  }
  CHECK_THROWS_WITH_AS(import_sdpa_solution(path),
                       doctest::Contains("line 1"), std::runtime_error);

  {
    std::ofstream f(path);
    f << "objValPrimal = 5.0\nobjValDual = 5.0\nxVec = {1.0}\n";
  }
  // claimed 5.0 but obj' x recomputes to 1.0: downgraded
  auto bad = import_sdpa_solution(path);
  CHECK(reconcile_solution(trace_problem(), bad) == SdpStatus::kNearOptimal);
  std::remove(path.c_str());
}

TEST_CASE("check_solution flags a perturbed certificate") {
  SdpProblem sdp = trace_problem();
  SdpSolution sol = solve(sdp);
  auto clean = check_solution(sdp, sol);
  CHECK(clean.max_all() <= 1e-6);
  sol.X[0](0, 0) += 0.25;
  auto bad = check_solution(sdp, sol);
  CHECK(bad.primal > 0.2);
}

TEST_CASE("malformed problems are rejected up front") {
  SdpProblem sdp;
  sdp.m = 0;
  SdpSolution sol = solve(sdp);
  CHECK(sol.status == SdpStatus::kNumericalFailure);
  CHECK(sol.message.find("malformed") != std::string::npos);
}
