#include "cspop/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "cspop/moment.hpp"
#include "cspop/oracle.hpp"
#include "cspop/problem_io.hpp"
#include "cspop/sdpa_io.hpp"

namespace cspop::cli {

namespace {

struct ArgError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Args {
  std::vector<std::string> pos;
  std::map<std::string, std::string> opts;
  std::map<std::string, bool> flags;
};

Args parse_args(const std::vector<std::string>& argv,
                const std::vector<std::string>& value_opts,
                const std::vector<std::string>& flag_opts) {
  Args a;
  for (size_t i = 0; i < argv.size(); ++i) {
    const std::string& s = argv[i];
    if (s.rfind("--", 0) == 0) {
      std::string key = s.substr(2);
      std::string val;
      bool has_val = false;
      if (auto eq = key.find('='); eq != std::string::npos) {
        val = key.substr(eq + 1);
        key = key.substr(0, eq);
        has_val = true;
      }
      if (std::find(flag_opts.begin(), flag_opts.end(), key) != flag_opts.end()) {
        a.flags[key] = true;
        continue;
      }
      if (std::find(value_opts.begin(), value_opts.end(), key) == value_opts.end())
        throw ArgError("unknown option --" + key);
      if (!has_val) {
        if (i + 1 >= argv.size()) throw ArgError("missing value for --" + key);
        val = argv[++i];
      }
      a.opts[key] = val;
    } else if (s == "-o") {
      if (i + 1 >= argv.size()) throw ArgError("missing value for -o");
      a.opts["o"] = argv[++i];
    } else {
      a.pos.push_back(s);
    }
  }
  return a;
}

double opt_double(const Args& a, const std::string& key, double dflt) {
  auto it = a.opts.find(key);
  return it == a.opts.end() ? dflt : std::stod(it->second);
}

long opt_long(const Args& a, const std::string& key, long dflt) {
  auto it = a.opts.find(key);
  return it == a.opts.end() ? dflt : std::stol(it->second);
}

std::string opt_str(const Args& a, const std::string& key, const std::string& dflt) {
  auto it = a.opts.find(key);
  return it == a.opts.end() ? dflt : it->second;
}

ProblemFile load_checked(const std::string& path, std::ostream& err) {
  ProblemFile pf = parse_problem_file(path);
  auto rep = validate_csp(pf.problem);
  if (!rep.ok()) {
    err << "csp validation failed for " << path << ":\n" << rep.summary();
    throw ArgError("invalid problem");
  }
  return pf;
}

struct Target {
  CspProblem problem;  // what gets relaxed
  VarTable table;
  std::optional<Reformulation> reform;
};

// mode: none | cslme | lme
Target make_target(const ProblemFile& pf, const std::string& mode, int deg_cap) {
  Target t;
  if (mode == "none") {
    t.problem = pf.problem;
    t.table = pf.table;
    return t;
  }
  ReformMode rm = mode == "lme" ? ReformMode::kPlainLme : ReformMode::kCsLme;
  t.reform = build_reformulation(pf.problem, rm, deg_cap);
  t.problem = t.reform->problem;
  t.table = t.reform->table;
  return t;
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

int cmd_analyze(const Args& a, std::ostream& out, std::ostream& err) {
  if (a.pos.size() != 1) throw ArgError("usage: analyze FILE");
  ProblemFile pf = parse_problem_file(a.pos[0]);
  auto rep = validate_csp(pf.problem);
  out << "file\t" << pf.name << "\n";
  out << "nvars\t" << pf.problem.n << "\n";
  out << "blocks\t" << pf.problem.num_blocks() << "\n";
  out << "csp\t" << (rep.ok() ? "valid" : "invalid") << "\n";
  if (!rep.ok()) {
    err << rep.summary();
    return kParseError;
  }
  std::vector<std::vector<int>> cliques;
  for (auto& b : pf.problem.blocks) cliques.push_back(b.clique);
  auto rip = check_rip(cliques);
  out << "rip\t" << (rip.holds ? "holds" : "fails") << "\n";
  if (!rip.holds) {
    out << "rip_violation_at\t" << rip.first_violation << "\n";
    // diagnostic only: look for a permutation that would satisfy the RIP
    std::vector<int> perm(cliques.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    bool found = false;
    if (cliques.size() <= 7) {
      std::sort(perm.begin(), perm.end());
      do {
        std::vector<std::vector<int>> c2;
        for (int i : perm) c2.push_back(cliques[i]);
        if (check_rip(c2).holds) {
          found = true;
          break;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
    }
    if (found) {
      out << "rip_permutation_hint\t";
      for (size_t i = 0; i < perm.size(); ++i) out << (i ? " " : "") << perm[i] + 1;
      out << "\n";
    } else {
      out << "rip_permutation_hint\tnone-found\n";
    }
    return kOk;
  }
  auto tree = build_tree(cliques);
  out << "arcs\t";
  for (size_t i = 0; i < tree.arcs.size(); ++i)
    out << (i ? " " : "") << "(" << tree.arcs[i].first << "," << tree.arcs[i].second
        << ")";
  out << "\n";
  for (auto& [arc, ov] : tree.overlap) {
    out << "overlap_" << arc.first << "_" << arc.second << "\t";
    for (size_t i = 0; i < ov.size(); ++i) out << (i ? " " : "") << ov[i];
    out << "\n";
  }
  auto nus = enumerate_nu(tree, pf.problem.n);
  out << "nu_count\t" << nus.size() << "\n";
  if (!nus.empty()) {
    out << "nu\t";
    for (size_t i = 0; i < nus.size(); ++i)
      out << (i ? " " : "") << "nu_" << nus[i].i << "_" << nus[i].t << "_" << nus[i].k;
    out << "\n";
  }
  return kOk;
}

int cmd_lme(const Args& a, std::ostream& out, std::ostream& err) {
  if (a.pos.size() != 1) throw ArgError("usage: lme FILE [--deg-cap K]");
  ProblemFile pf = load_checked(a.pos[0], err);
  int cap = static_cast<int>(opt_long(a, "deg-cap", -1));
  bool any_fail = false;
  for (int i = 1; i <= pf.problem.num_blocks(); ++i) {
    out << "block " << i << "\n";
    try {
      LmePair pair = synthesize_lme(pf.problem, i, cap);
      out << "  provenance\t" << pair.provenance << "\n";
      for (int r = 0; r < pair.L.rows; ++r) {
        out << "  L[" << r + 1 << "]\t";
        for (int c = 0; c < pair.L.cols; ++c)
          out << (c ? " | " : "") << poly_to_string(pair.L.at(r, c), pf.table);
        out << "\n";
      }
      for (int r = 0; r < pair.D.rows; ++r) {
        out << "  D[" << r + 1 << "]\t";
        for (int c = 0; c < pair.D.cols; ++c)
          out << (c ? " | " : "") << poly_to_string(pair.D.at(r, c), pf.table);
        out << "\n";
      }
    } catch (const LmeSynthesisError& e) {
      out << "  failure\t" << e.what() << "\n";
      any_fail = true;
    }
  }
  return any_fail ? kLmeFailure : kOk;
}

int cmd_reformulate(const Args& a, std::ostream& out, std::ostream& err) {
  if (a.pos.size() != 1) throw ArgError("usage: reformulate FILE --mode cslme|lme -o OUT");
  std::string mode = opt_str(a, "mode", "cslme");
  if (mode != "cslme" && mode != "lme") throw ArgError("mode must be cslme or lme");
  std::string outpath = opt_str(a, "o", "");
  if (outpath.empty()) throw ArgError("-o OUT required");
  ProblemFile pf = load_checked(a.pos[0], err);
  Reformulation r = build_reformulation(
      pf.problem, mode == "lme" ? ReformMode::kPlainLme : ReformMode::kCsLme);
  write_text_file(outpath, reformulation_to_text(r));
  out << "wrote\t" << outpath << "\n";
  out << "nu_count\t" << r.nus.size() << "\n";
  int dropped = 0;
  for (int d : r.dropped_stationarity) dropped += d;
  out << "dropped_stationarity_rows\t" << dropped << "\n";
  return kOk;
}

MomentSdp assemble_for(const Target& t, int order, bool dense, std::ostream& err,
                       int* used_order) {
  int dmin = min_admissible_order(t.problem);
  if (order < dmin) {
    err << "order raised to the minimal admissible " << dmin << "\n";
    order = dmin;
  }
  *used_order = order;
  return dense ? assemble_dense_moment(t.problem, order)
               : assemble_cs_moment(t.problem, order);
}

int cmd_relax(const Args& a, std::ostream& out, std::ostream& err) {
  if (a.pos.size() != 1)
    throw ArgError("usage: relax FILE --order D --mode none|cslme|lme [--dense]");
  std::string mode = opt_str(a, "mode", "none");
  int order = static_cast<int>(opt_long(a, "order", 1));
  bool dense = a.flags.count("dense") > 0;
  ProblemFile pf = load_checked(a.pos[0], err);
  Target t = make_target(pf, mode, -1);
  int used = 0;
  MomentSdp ms = assemble_for(t, order, dense, err, &used);
  out << "order\t" << used << "\n";
  out << "mode\t" << mode << (dense ? "+dense" : "") << "\n";
  out << "moments\t" << ms.num_moments() << "\n";
  out << "psd_blocks\t" << ms.sdp.num_blocks() << "\n";
  out << "block_sizes\t";
  for (int b = 0; b < ms.sdp.num_blocks(); ++b)
    out << (b ? " " : "") << ms.sdp.block_sizes[b];
  out << "\n";
  out << "eq_rows\t" << ms.sdp.eqrows.size() << "\n";
  out << "eq_polys\t" << ms.num_eq_polys << "\n";
  int ineqs = 0, eqs = 0;
  for (auto& b : t.problem.blocks) {
    ineqs += static_cast<int>(b.ineqs.size());
    eqs += static_cast<int>(b.eqs.size());
  }
  out << "constraints\t" << ineqs << " ineq, " << eqs << " eq\n";
  return kOk;
}

struct CellResult {
  BoundReport rep;
  double seconds = 0;
  bool solved = false;  // status optimal/near-optimal
};

CellResult solve_cell(const Target& t, int order, bool dense, double tol,
                      int max_iter, const std::string& export_path,
                      std::ostream& err) {
  CellResult cell;
  int used = 0;
  MomentSdp ms = assemble_for(t, order, dense, err, &used);
  if (!export_path.empty()) export_sdpa(ms.sdp, export_path);
  auto t0 = std::chrono::steady_clock::now();
  SolveOptions so;
  so.tol = tol;
  so.max_iter = max_iter;
  SdpSolution sol = solve(ms.sdp, so);
  auto t1 = std::chrono::steady_clock::now();
  cell.seconds = std::chrono::duration<double>(t1 - t0).count();
  cell.rep = extract_bound(ms, sol, std::max(tol * 100, 1e-6));
  cell.rep.order = used;
  cell.solved = sol.status == SdpStatus::kOptimal ||
                sol.status == SdpStatus::kNearOptimal;
  return cell;
}

int cmd_solve(const Args& a, std::ostream& out, std::ostream& err) {
  if (a.pos.size() != 1)
    throw ArgError(
        "usage: solve FILE --order D --mode none|cslme|lme [--dense] [--tol T] "
        "[--export-sdpa PATH]");
  std::string mode = opt_str(a, "mode", "none");
  int order = static_cast<int>(opt_long(a, "order", 1));
  bool dense = a.flags.count("dense") > 0;
  double tol = opt_double(a, "tol", 1e-8);
  int max_iter = static_cast<int>(opt_long(a, "max-iter", 200));
  ProblemFile pf = load_checked(a.pos[0], err);
  Target t = make_target(pf, mode, -1);
  CellResult cell = solve_cell(t, order, dense, tol, max_iter,
                               opt_str(a, "export-sdpa", ""), err);
  out << "order\t" << cell.rep.order << "\n";
  out << "mode\t" << mode << (dense ? "+dense" : "") << "\n";
  out << "status\t" << to_string(cell.rep.status) << "\n";
  if (cell.solved) {
    out << "LB\t" << fmt(cell.rep.bound) << "\n";
    out << "gap\t" << std::setprecision(3) << std::scientific << cell.rep.gap
        << std::defaultfloat << "\n";
    out << "resid\t" << std::setprecision(3) << std::scientific
        << cell.rep.primal_resid << " " << cell.rep.dual_resid << std::defaultfloat
        << "\n";
    out << "valid\t" << (cell.rep.valid ? "yes" : "no") << "\n";
  } else {
    out << "LB\tfail to solve\n";
    if (!cell.rep.message.empty()) err << cell.rep.message << "\n";
  }
  out << "time\t" << fmt(cell.seconds, 2) << "s\n";
  if (pf.known_min)
    out << "known_min\t" << *pf.known_min << "\n";
  return cell.solved ? kOk : kSolverFailure;
}

int cmd_compare(const Args& a, std::ostream& out, std::ostream& err) {
  if (a.pos.size() != 1)
    throw ArgError(
        "usage: compare FILE --orders D1:D2 [--modes none,cslme,lme,dense] "
        "[--oracle-starts N --seed S] [--tol T] [--redact-time]");
  ProblemFile pf = load_checked(a.pos[0], err);
  std::string orders = opt_str(a, "orders", "");
  if (orders.empty()) throw ArgError("--orders D1:D2 required");
  int d1, d2;
  {
    auto colon = orders.find(':');
    d1 = std::stoi(orders.substr(0, colon));
    d2 = colon == std::string::npos ? d1 : std::stoi(orders.substr(colon + 1));
  }
  std::vector<std::string> modes;
  {
    std::istringstream is(opt_str(a, "modes", "none,cslme"));
    std::string tok;
    while (std::getline(is, tok, ',')) modes.push_back(tok);
  }
  double tol = opt_double(a, "tol", 1e-8);
  int max_iter = static_cast<int>(opt_long(a, "max-iter", 200));
  bool redact = a.flags.count("redact-time") > 0;

  OracleOptions oo;
  oo.starts = static_cast<int>(opt_long(a, "oracle-starts", 40));
  oo.seed = static_cast<uint64_t>(opt_long(a, "seed", 1));
  if (pf.box) {
    oo.box_lo = pf.box->first;
    oo.box_hi = pf.box->second;
  }
  OracleResult ub = local_search_upper_bound(pf.problem, oo);

  out << "d\tmode\tLB\tstatus\ttime\tUB\tgap\n";
  // Targets are built once per mode (reformulations are order-independent).
  std::map<std::string, std::optional<Target>> targets;
  for (auto& mode : modes) {
    std::string base = mode == "dense" ? "none" : mode;
    if (targets.count(base)) continue;
    try {
      targets[base] = make_target(pf, base, -1);
    } catch (const LmeSynthesisError&) {
      targets[base] = std::nullopt;  // mode unavailable: "not defined"
    }
  }
  std::string ub_str = ub.feasible() ? fmt(ub.best_value) : "inf";
  for (int d = d1; d <= d2; ++d) {
    for (auto& mode : modes) {
      bool dense = mode == "dense";
      std::string base = dense ? "none" : mode;
      out << d << "\t" << mode << "\t";
      auto& maybe_target = targets[base];
      if (!maybe_target) {
        out << "not defined\t-\t-\t" << ub_str << "\t-\n";
        continue;
      }
      if (d < min_admissible_order(maybe_target->problem)) {
        out << "not defined\t-\t-\t" << ub_str << "\t-\n";
        continue;
      }
      CellResult cell =
          solve_cell(*maybe_target, d, dense, tol, max_iter, "", err);
      std::string tstr = redact ? "-" : fmt(cell.seconds, 2) + "s";
      if (!cell.solved) {
        out << "fail to solve\t" << to_string(cell.rep.status) << "\t" << tstr
            << "\t" << ub_str << "\t-\n";
        continue;
      }
      double gap = ub.feasible() ? ub.best_value - cell.rep.bound
                                 : std::numeric_limits<double>::infinity();
      if (cell.rep.valid && ub.feasible() && cell.rep.bound > ub.best_value + 1e-6) {
        err << "sandwich violation: LB " << cell.rep.bound << " > UB "
            << ub.best_value << " at d=" << d << " mode=" << mode << "\n";
        return kSandwichViolation;
      }
      out << fmt(cell.rep.bound) << "\t" << to_string(cell.rep.status) << "\t"
          << tstr << "\t" << ub_str << "\t" << fmt(gap) << "\n";
    }
  }
  return kOk;
}

int cmd_oracle(const Args& a, std::ostream& out, std::ostream& err) {
  if (a.pos.size() != 1)
    throw ArgError("usage: oracle FILE [--oracle-starts N --seed S]");
  ProblemFile pf = load_checked(a.pos[0], err);
  OracleOptions oo;
  oo.starts = static_cast<int>(opt_long(a, "oracle-starts", 40));
  oo.seed = static_cast<uint64_t>(opt_long(a, "seed", 1));
  if (pf.box) {
    oo.box_lo = pf.box->first;
    oo.box_hi = pf.box->second;
  }
  OracleResult r = local_search_upper_bound(pf.problem, oo);
  out << "UB\t" << (r.feasible() ? fmt(r.best_value) : "inf") << "\n";
  if (r.feasible()) {
    out << "point\t";
    for (size_t i = 0; i < r.best_point.size(); ++i)
      out << (i ? " " : "") << fmt(r.best_point[i]);
    out << "\n";
    out << "feasibility\t" << std::setprecision(3) << std::scientific
        << r.feasibility << std::defaultfloat << "\n";
    out << "kkt_resid\t" << std::setprecision(3) << std::scientific << r.kkt_resid
        << std::defaultfloat << "\n";
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << "usage: cspop {analyze|lme|reformulate|relax|solve|compare|oracle} ...\n";
    return kParseError;
  }
  std::string cmd = args[0];
  std::vector<std::string> rest(args.begin() + 1, args.end());
  try {
    Args a = parse_args(
        rest,
        {"deg-cap", "mode", "order", "orders", "modes", "tol", "max-iter",
         "export-sdpa", "oracle-starts", "seed", "o"},
        {"dense", "redact-time"});
    if (cmd == "analyze") return cmd_analyze(a, out, err);
    if (cmd == "lme") return cmd_lme(a, out, err);
    if (cmd == "reformulate") return cmd_reformulate(a, out, err);
    if (cmd == "relax") return cmd_relax(a, out, err);
    if (cmd == "solve") return cmd_solve(a, out, err);
    if (cmd == "compare") return cmd_compare(a, out, err);
    if (cmd == "oracle") return cmd_oracle(a, out, err);
    err << "unknown command '" << cmd << "'\n";
    return kParseError;
  } catch (const LmeSynthesisError& e) {
    err << "LME synthesis failed: " << e.what() << "\n";
    return kLmeFailure;
  } catch (const ProblemParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const ArgError& e) {
    err << e.what() << "\n";
    return kParseError;
  } catch (const std::exception& e) {
    std::string what = e.what();
    if (what.find("sandwich") != std::string::npos) {
      err << what << "\n";
      return kSandwichViolation;
    }
    err << "error: " << what << "\n";
    return kParseError;
  }
}

}  // namespace cspop::cli
