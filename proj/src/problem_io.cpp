#include "cspop/problem_io.hpp"

#include <fstream>
#include <sstream>

namespace cspop {

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

}  // namespace

ProblemFile parse_problem_text(const std::string& text, const std::string& name) {
  ProblemFile pf;
  pf.name = name;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  bool have_nvars = false;
  struct PendingPoly {
    int line;
    int block;
    enum Kind { kObj, kIneq, kEq } kind;
    std::string expr;
  };
  std::vector<PendingPoly> pending;
  std::vector<std::pair<int, std::string>> clique_lines;  // (line, rest)

  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    std::istringstream is(line);
    std::string kw;
    is >> kw;
    if (kw == "nvars") {
      if (!(is >> pf.table.n_x) || pf.table.n_x < 0)
        throw ProblemParseError("bad nvars", lineno, 1);
      have_nvars = true;
    } else if (kw == "nuvar") {
      int i, t, k;
      if (!(is >> i >> t >> k)) throw ProblemParseError("bad nuvar line", lineno, 1);
      pf.table.nus.push_back({i, t, k});
    } else if (kw == "clique" || kw == "obj" || kw == "ineq" || kw == "eq") {
      int bi = 0;
      if (!(is >> bi) || bi < 1)
        throw ProblemParseError("bad block index after '" + kw + "'", lineno, 1);
      std::string rest;
      std::getline(is, rest);
      auto colon = rest.find(':');
      if (colon == std::string::npos)
        throw ProblemParseError("expected ':' in '" + kw + "' line", lineno,
                                static_cast<int>(raw.find(kw) + kw.size() + 1));
      rest = rest.substr(colon + 1);
      if (static_cast<int>(pf.problem.blocks.size()) < bi)
        pf.problem.blocks.resize(bi);
      if (kw == "clique") {
        clique_lines.push_back({lineno, rest});
        auto toks = split_ws(rest);
        if (toks.empty()) throw ProblemParseError("empty clique", lineno, 1);
        std::vector<int> vars;
        for (auto& t : toks) {
          try {
            size_t pos;
            int v = std::stoi(t, &pos);
            if (pos != t.size() || v < 1) throw std::invalid_argument("");
            vars.push_back(v);
          } catch (...) {
            throw ProblemParseError("bad clique entry '" + t + "'", lineno, 1);
          }
        }
        std::sort(vars.begin(), vars.end());
        vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
        pf.problem.blocks[bi - 1].clique = vars;
      } else {
        pending.push_back({lineno, bi,
                           kw == "obj"    ? PendingPoly::kObj
                           : kw == "ineq" ? PendingPoly::kIneq
                                          : PendingPoly::kEq,
                           rest});
      }
    } else if (kw == "known_min") {
      double v;
      if (!(is >> v)) throw ProblemParseError("bad known_min", lineno, 1);
      pf.known_min = v;
    } else if (kw == "box") {
      double lo, hi;
      if (!(is >> lo >> hi) || lo >= hi) throw ProblemParseError("bad box", lineno, 1);
      pf.box = {lo, hi};
    } else {
      throw ProblemParseError("unknown directive '" + kw + "'", lineno, 1);
    }
  }
  if (!have_nvars) throw ProblemParseError("nvars missing", lineno ? lineno : 1, 1);
  pf.problem.n = pf.table.total();

  // nu variables appended after x: extend cliques referencing them is allowed
  // because clique entries are flat ids already.
  for (auto& pp : pending) {
    Poly poly;
    try {
      poly = parse_poly(pp.expr, pf.table);
    } catch (const ParseError& e) {
      throw ProblemParseError(e.what(), pp.line, static_cast<int>(e.offset) + 1);
    }
    auto& b = pf.problem.blocks[pp.block - 1];
    switch (pp.kind) {
      case PendingPoly::kObj: b.objective += poly; break;
      case PendingPoly::kIneq: b.ineqs.push_back(std::move(poly)); break;
      case PendingPoly::kEq: b.eqs.push_back(std::move(poly)); break;
    }
  }
  return pf;
}

ProblemFile parse_problem_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  std::string name = path;
  if (auto s = name.find_last_of('/'); s != std::string::npos) name = name.substr(s + 1);
  if (auto d = name.find_last_of('.'); d != std::string::npos) name = name.substr(0, d);
  return parse_problem_text(buf.str(), name);
}

std::string problem_to_text(const CspProblem& p, const VarTable& table,
                            std::optional<double> known_min,
                            std::optional<std::pair<double, double>> box) {
  std::ostringstream os;
  os << "nvars " << table.n_x << "\n";
  for (auto& [i, t, k] : table.nus)
    os << "nuvar " << i << " " << t << " " << k << "\n";
  for (size_t b = 0; b < p.blocks.size(); ++b) {
    os << "clique " << b + 1 << " :";
    for (int v : p.blocks[b].clique) os << " " << v;
    os << "\n";
  }
  for (size_t b = 0; b < p.blocks.size(); ++b) {
    auto& blk = p.blocks[b];
    if (!blk.objective.is_zero())
      os << "obj " << b + 1 << " : " << poly_to_string(blk.objective, table) << "\n";
    for (auto& g : blk.ineqs)
      os << "ineq " << b + 1 << " : " << poly_to_string(g, table) << "\n";
    for (auto& h : blk.eqs)
      os << "eq " << b + 1 << " : " << poly_to_string(h, table) << "\n";
  }
  if (known_min) os << "known_min " << *known_min << "\n";
  if (box) os << "box " << box->first << " " << box->second << "\n";
  return os.str();
}

std::string reformulation_to_text(const Reformulation& r) {
  return problem_to_text(r.problem, r.table);
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace cspop
