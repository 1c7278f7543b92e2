#include "cspop/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace cspop {

namespace {

// Deterministic cross-platform uniform doubles from splitmix64.
struct Rng {
  uint64_t state;
  explicit Rng(uint64_t seed) : state(seed) {}
  uint64_t next_u64() {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform(double lo, double hi) {
    double u = (next_u64() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }
};

struct CompiledProblem {
  const CspProblem& p;
  Poly f;
  std::vector<Poly> grad_f;              // per variable
  std::vector<const Poly*> gs, hs;       // flattened constraints
  std::vector<std::vector<Poly>> grad_g, grad_h;

  explicit CompiledProblem(const CspProblem& prob) : p(prob) {
    f = prob.full_objective();
    grad_f.resize(prob.n + 1);
    for (int v = 1; v <= prob.n; ++v) grad_f[v] = f.derivative(v);
    for (auto& b : prob.blocks) {
      for (auto& g : b.ineqs) gs.push_back(&g);
      for (auto& h : b.eqs) hs.push_back(&h);
    }
    grad_g.resize(gs.size());
    grad_h.resize(hs.size());
    for (size_t j = 0; j < gs.size(); ++j) {
      grad_g[j].resize(prob.n + 1);
      for (int v : gs[j]->vars()) grad_g[j][v] = gs[j]->derivative(v);
    }
    for (size_t j = 0; j < hs.size(); ++j) {
      grad_h[j].resize(prob.n + 1);
      for (int v : hs[j]->vars()) grad_h[j][v] = hs[j]->derivative(v);
    }
  }

  double violation(const std::vector<double>& pt) const {
    double worst = 0;
    for (auto* g : gs) worst = std::max(worst, -g->eval(pt));
    for (auto* h : hs) worst = std::max(worst, std::fabs(h->eval(pt)));
    return worst;
  }

  double penalty(const std::vector<double>& pt, double rho) const {
    double acc = f.eval(pt);
    for (auto* g : gs) {
      double v = g->eval(pt);
      if (v < 0) acc += rho * v * v;
    }
    for (auto* h : hs) {
      double v = h->eval(pt);
      acc += rho * v * v;
    }
    return acc;
  }

  void penalty_grad(const std::vector<double>& pt, double rho,
                    std::vector<double>& out) const {
    for (int v = 1; v <= p.n; ++v) out[v] = grad_f[v].eval(pt);
    for (size_t j = 0; j < gs.size(); ++j) {
      double val = gs[j]->eval(pt);
      if (val < 0)
        for (int v : gs[j]->vars()) out[v] += 2 * rho * val * grad_g[j][v].eval(pt);
    }
    for (size_t j = 0; j < hs.size(); ++j) {
      double val = hs[j]->eval(pt);
      for (int v : hs[j]->vars()) out[v] += 2 * rho * val * grad_h[j][v].eval(pt);
    }
  }
};

// Armijo backtracking gradient descent on the penalty function.
void descend(const CompiledProblem& cp, std::vector<double>& pt, double rho,
             int iters) {
  int n = cp.p.n;
  std::vector<double> grad(n + 1, 0.0);
  double step = 1.0;
  double fx = cp.penalty(pt, rho);
  for (int it = 0; it < iters; ++it) {
    cp.penalty_grad(pt, rho, grad);
    double gnorm2 = 0;
    for (int v = 1; v <= n; ++v) gnorm2 += grad[v] * grad[v];
    if (gnorm2 <= 1e-22 * (1 + fx * fx)) break;
    step = std::min(step * 2.0, 1.0);
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      std::vector<double> cand = pt;
      for (int v = 1; v <= n; ++v) cand[v] -= step * grad[v];
      double fc = cp.penalty(cand, rho);
      if (fc <= fx - 1e-4 * step * gnorm2) {
        pt = std::move(cand);
        fx = fc;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
}

// Gauss-Newton projection onto the active/violated constraint set.
void repair(const CompiledProblem& cp, std::vector<double>& pt) {
  int n = cp.p.n;
  for (int it = 0; it < 60; ++it) {
    std::vector<double> vals;
    std::vector<const std::vector<Poly>*> grads;
    for (size_t j = 0; j < cp.gs.size(); ++j) {
      double v = cp.gs[j]->eval(pt);
      if (v < 0) {
        vals.push_back(v);
        grads.push_back(&cp.grad_g[j]);
      }
    }
    for (size_t j = 0; j < cp.hs.size(); ++j) {
      double v = cp.hs[j]->eval(pt);
      if (std::fabs(v) > 1e-14) {
        vals.push_back(v);
        grads.push_back(&cp.grad_h[j]);
      }
    }
    if (vals.empty()) return;
    double worst = 0;
    for (double v : vals) worst = std::max(worst, std::fabs(v));
    if (worst <= 1e-13) return;
    Eigen::MatrixXd J(vals.size(), n);
    Eigen::VectorXd r(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) {
      r(i) = -vals[i];
      for (int v = 1; v <= n; ++v)
        J(i, v - 1) = (*grads[i])[v].is_zero() ? 0.0 : (*grads[i])[v].eval(pt);
    }
    Eigen::VectorXd d = J.colPivHouseholderQr().solve(r);
    double t = 1.0;
    double before = cp.violation(pt);
    for (int bt = 0; bt < 30; ++bt) {
      std::vector<double> cand = pt;
      for (int v = 1; v <= n; ++v) cand[v] += t * d(v - 1);
      if (cp.violation(cand) < before) {
        pt = std::move(cand);
        break;
      }
      t *= 0.5;
      if (bt == 29) return;  // no improvement possible
    }
  }
}

// Nonnegative-clamped least squares estimate of the multipliers at a point.
std::vector<std::vector<double>> estimate_multipliers(const CspProblem& p,
                                                      const std::vector<double>& x) {
  std::vector<double> pt(p.n + 1, 0.0);
  for (int v = 1; v <= p.n; ++v) pt[v] = x[v - 1];
  struct Col {
    int block, j;  // j indexes block constraint list (g then h)
    bool ineq;
  };
  std::vector<Col> cols;
  for (int i = 0; i < p.num_blocks(); ++i) {
    auto& b = p.blocks[i];
    for (size_t j = 0; j < b.ineqs.size(); ++j)
      if (std::fabs(b.ineqs[j].eval(pt)) < 1e-5)  // active
        cols.push_back({i, static_cast<int>(j), true});
    for (size_t j = 0; j < b.eqs.size(); ++j)
      cols.push_back({i, static_cast<int>(b.ineqs.size() + j), false});
  }
  std::vector<std::vector<double>> lambda(p.num_blocks());
  for (int i = 0; i < p.num_blocks(); ++i)
    lambda[i].assign(p.blocks[i].ineqs.size() + p.blocks[i].eqs.size(), 0.0);
  if (cols.empty()) return lambda;
  Eigen::MatrixXd A(p.n, cols.size());
  Eigen::VectorXd rhs(p.n);
  for (int v = 1; v <= p.n; ++v) {
    Poly df;
    for (auto& b : p.blocks) df += b.objective.derivative(v);
    rhs(v - 1) = df.eval(pt);
  }
  for (size_t c = 0; c < cols.size(); ++c) {
    auto& b = p.blocks[cols[c].block];
    int m = static_cast<int>(b.ineqs.size());
    const Poly& q = cols[c].j < m ? b.ineqs[cols[c].j] : b.eqs[cols[c].j - m];
    for (int v = 1; v <= p.n; ++v) A(v - 1, c) = q.derivative(v).eval(pt);
  }
  // few rounds of solve + clamp on inequality multipliers
  Eigen::VectorXd lam = A.colPivHouseholderQr().solve(rhs);
  for (int round = 0; round < 4; ++round) {
    bool clamped = false;
    for (size_t c = 0; c < cols.size(); ++c)
      if (cols[c].ineq && lam(c) < 0) {
        lam(c) = 0;
        clamped = true;
      }
    if (!clamped) break;
    // re-solve on the unclamped columns
    std::vector<int> freec;
    for (size_t c = 0; c < cols.size(); ++c)
      if (!(cols[c].ineq && lam(c) == 0)) freec.push_back(static_cast<int>(c));
    if (freec.empty()) break;
    Eigen::MatrixXd Af(p.n, freec.size());
    for (size_t c = 0; c < freec.size(); ++c) Af.col(c) = A.col(freec[c]);
    Eigen::VectorXd lf = Af.colPivHouseholderQr().solve(rhs);
    lam.setZero();
    for (size_t c = 0; c < freec.size(); ++c) lam(freec[c]) = lf(c);
  }
  for (size_t c = 0; c < cols.size(); ++c)
    lambda[cols[c].block][cols[c].j] =
        cols[c].ineq ? std::max(0.0, lam(c)) : lam(c);
  return lambda;
}

}  // namespace

OracleResult local_search_upper_bound(const CspProblem& p, const OracleOptions& opts) {
  CompiledProblem cp(p);
  OracleResult res;
  res.method = "multi-start penalty descent";
  res.seed = opts.seed;
  Rng rng(opts.seed);
  int best_start = -1;
  for (int s = 0; s < opts.starts; ++s) {
    std::vector<double> pt(p.n + 1, 0.0);
    for (int v = 1; v <= p.n; ++v) pt[v] = rng.uniform(opts.box_lo, opts.box_hi);
    double rho = 1e3;
    for (int stage = 0; stage < opts.penalty_stages; ++stage, rho *= 10)
      descend(cp, pt, rho, opts.iters_per_stage);
    repair(cp, pt);
    double viol = cp.violation(pt);
    double val = cp.f.eval(pt);
    res.start_values.push_back(viol <= 1e-8 ? val
                                            : std::numeric_limits<double>::infinity());
    if (viol <= 1e-8 && val < res.best_value) {
      res.best_value = val;
      res.best_point.assign(pt.begin() + 1, pt.end());
      res.feasibility = viol;
      best_start = s;
    }
  }
  (void)best_start;
  if (res.feasible()) {
    res.multipliers = estimate_multipliers(p, res.best_point);
    res.kkt_resid = kkt_residual(p, res.best_point, res.multipliers).max_all();
    // re-evaluate: the reported value is the objective at the point, exactly
    std::vector<double> pt(p.n + 1, 0.0);
    for (int v = 1; v <= p.n; ++v) pt[v] = res.best_point[v - 1];
    res.best_value = cp.f.eval(pt);
  }
  return res;
}

OracleResult grid_minimize(const CspProblem& p, int resolution_per_axis,
                           double box_lo, double box_hi) {
  if (p.n > 4)
    throw std::invalid_argument("grid_minimize supports at most 4 variables");
  if (resolution_per_axis < 2) throw std::invalid_argument("resolution too small");
  CompiledProblem cp(p);
  OracleResult res;
  res.method = "grid";
  std::vector<int> idx(p.n, 0);
  std::vector<double> pt(p.n + 1, 0.0);
  std::vector<double> best;
  for (;;) {
    for (int v = 0; v < p.n; ++v)
      pt[v + 1] = box_lo + (box_hi - box_lo) * idx[v] / (resolution_per_axis - 1);
    if (cp.violation(pt) <= 1e-6) {
      double val = cp.f.eval(pt);
      if (val < res.best_value) {
        res.best_value = val;
        best = pt;
      }
    }
    int carry = 0;
    while (carry < p.n && ++idx[carry] == resolution_per_axis) idx[carry++] = 0;
    if (carry == p.n) break;
  }
  if (!best.empty()) {
    // one local refinement from the grid argmin
    double rho = 1e4;
    for (int stage = 0; stage < 5; ++stage, rho *= 10) descend(cp, best, rho, 300);
    repair(cp, best);
    if (cp.violation(best) <= 1e-8) {
      double val = cp.f.eval(best);
      if (val < res.best_value) res.best_value = val;
      res.best_point.assign(best.begin() + 1, best.end());
      res.feasibility = cp.violation(best);
    } else {
      res.best_point.assign(best.begin() + 1, best.end());
      res.feasibility = cp.violation(best);
    }
  }
  return res;
}

SandwichReport compare_bounds(const BoundReport& lower, const OracleResult& upper,
                              double tol, double certify_tol) {
  SandwichReport rep;
  rep.lower = lower.bound;
  rep.upper = upper.feasible() ? upper.best_value
                               : std::numeric_limits<double>::infinity();
  rep.gap = rep.upper - rep.lower;
  if (lower.valid && rep.lower > rep.upper + tol)
    throw std::runtime_error(
        "bound sandwich violated: lower " + std::to_string(rep.lower) +
        " exceeds upper " + std::to_string(rep.upper) +
        "; this indicates a solver or modeling bug");
  rep.certified = lower.valid && upper.feasible() && rep.gap <= certify_tol;
  rep.detail = rep.certified ? "CERTIFIED-OPTIMAL" : "gap open";
  return rep;
}

}  // namespace cspop
