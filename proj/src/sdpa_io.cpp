#include "cspop/sdpa_io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cspop {

namespace {

void fmt_double(std::string& out, double v) {
  char buf[40];
  snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

struct FlatEntry {
  int k, b, i, j;  // 1-based block/row/col
  double v;
  bool operator<(const FlatEntry& o) const {
    return std::tie(k, b, i, j) < std::tie(o.k, o.b, o.i, o.j);
  }
};

}  // namespace

std::string sdpa_text(const SdpProblem& sdp) {
  std::string out;
  int nb = sdp.num_blocks();
  bool has_eq = !sdp.eqrows.empty();
  out += std::to_string(sdp.m);
  out += "\n";
  out += std::to_string(nb + (has_eq ? 1 : 0));
  out += "\n";
  for (int b = 0; b < nb; ++b) {
    if (b) out += " ";
    out += std::to_string(sdp.block_sizes[b]);
  }
  if (has_eq) {
    if (nb) out += " ";
    out += std::to_string(-2 * static_cast<int>(sdp.eqrows.size()));
  }
  out += "\n";
  for (int k = 0; k < sdp.m; ++k) {
    if (k) out += " ";
    fmt_double(out, sdp.obj[k]);
  }
  out += "\n";

  std::vector<FlatEntry> entries;
  for (int b = 0; b < nb; ++b)
    for (auto& e : sdp.block_entries[b])
      entries.push_back({e.k, b + 1, e.row + 1, e.col + 1, e.v});
  // Equality rows lowered into one diagonal block: row 2j-1 carries
  // (coeffs, rhs), row 2j carries the negated copy.
  for (size_t j = 0; j < sdp.eqrows.size(); ++j) {
    auto& r = sdp.eqrows[j];
    int dpos = 2 * static_cast<int>(j) + 1;
    if (r.rhs != 0) {
      entries.push_back({0, nb + 1, dpos, dpos, r.rhs});
      entries.push_back({0, nb + 1, dpos + 1, dpos + 1, -r.rhs});
    }
    for (auto& [k, c] : r.coeffs) {
      entries.push_back({k, nb + 1, dpos, dpos, c});
      entries.push_back({k, nb + 1, dpos + 1, dpos + 1, -c});
    }
  }
  std::sort(entries.begin(), entries.end());
  for (auto& e : entries) {
    out += std::to_string(e.k);
    out += " ";
    out += std::to_string(e.b);
    out += " ";
    out += std::to_string(e.i);
    out += " ";
    out += std::to_string(e.j);
    out += " ";
    fmt_double(out, e.v);
    out += "\n";
  }
  return out;
}

void export_sdpa(const SdpProblem& sdp, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << sdpa_text(sdp);
  if (!f) throw std::runtime_error("write failed: " + path);
}

namespace {

struct LineReader {
  std::istringstream in;
  int lineno = 0;
  explicit LineReader(const std::string& text) : in(text) {}
  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++lineno;
      size_t c = line.find_first_not_of(" \t\r");
      if (c == std::string::npos) continue;
      if (line[c] == '"' || line[c] == '*') continue;  // comment lines
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw std::runtime_error("sdpa parse error at line " + std::to_string(lineno) +
                             ": " + msg);
  }
};

}  // namespace

SdpProblem parse_sdpa(const std::string& text) {
  LineReader lr(text);
  std::string line;
  SdpProblem sdp;
  if (!lr.next(line)) lr.fail("missing variable count");
  {
    std::istringstream is(line);
    if (!(is >> sdp.m) || sdp.m < 0) lr.fail("bad variable count");
  }
  int nblocks = 0;
  if (!lr.next(line)) lr.fail("missing block count");
  {
    std::istringstream is(line);
    if (!(is >> nblocks) || nblocks <= 0) lr.fail("bad block count");
  }
  std::vector<int> raw_sizes;
  if (!lr.next(line)) lr.fail("missing block sizes");
  {
    std::istringstream is(line);
    for (int b = 0; b < nblocks; ++b) {
      int s;
      char c;
      // tolerate separators like ',' '(' ')' '{' '}'
      while (is >> std::ws && !std::isdigit(is.peek()) && is.peek() != '-' &&
             is.get(c)) {
      }
      if (!(is >> s) || s == 0) lr.fail("bad block size");
      raw_sizes.push_back(s);
    }
  }
  sdp.obj.assign(sdp.m, 0.0);
  if (!lr.next(line)) lr.fail("missing objective line");
  {
    std::istringstream is(line);
    for (int k = 0; k < sdp.m; ++k) {
      char c;
      while (is >> std::ws && is.peek() != '-' && is.peek() != '+' &&
             !std::isdigit(is.peek()) && is.peek() != '.' && is.get(c)) {
      }
      if (!(is >> sdp.obj[k])) lr.fail("bad objective entry " + std::to_string(k + 1));
    }
  }

  int diag_block = -1;  // at most one trailing diagonal block is lifted
  for (int b = 0; b < nblocks; ++b) {
    if (raw_sizes[b] > 0) {
      sdp.block_sizes.push_back(raw_sizes[b]);
      sdp.block_entries.emplace_back();
    } else if (b == nblocks - 1 && raw_sizes[b] % 2 == 0) {
      diag_block = b;
    } else {
      // foreign diagonal block: model as size-1 psd blocks
      for (int i = 0; i < -raw_sizes[b]; ++i) {
        sdp.block_sizes.push_back(1);
        sdp.block_entries.emplace_back();
      }
    }
  }
  int ndiag = diag_block >= 0 ? -raw_sizes[diag_block] : 0;
  // (k, pos) -> value for the candidate equality block
  std::vector<std::vector<std::pair<int, double>>> diag_rows(ndiag);

  // Map raw block index to first internal block index.
  std::vector<int> base(nblocks, -1);
  {
    int at = 0;
    for (int b = 0; b < nblocks; ++b) {
      if (b == diag_block) continue;
      base[b] = at;
      at += raw_sizes[b] > 0 ? 1 : -raw_sizes[b];
    }
  }

  while (lr.next(line)) {
    std::istringstream is(line);
    int k, b, i, j;
    double v;
    if (!(is >> k >> b >> i >> j >> v)) lr.fail("bad entry line");
    if (k < 0 || k > sdp.m) lr.fail("entry variable index out of range");
    if (b < 1 || b > nblocks) lr.fail("entry block index out of range");
    if (b - 1 == diag_block) {
      if (i != j || i < 1 || i > ndiag) lr.fail("bad diagonal entry");
      diag_rows[i - 1].push_back({k, v});
      continue;
    }
    int sz = raw_sizes[b - 1];
    if (sz > 0) {
      if (i < 1 || j < 1 || i > sz || j > sz) lr.fail("entry position out of range");
      int r = std::min(i, j) - 1, c = std::max(i, j) - 1;
      sdp.block_entries[base[b - 1]].push_back({k, r, c, v});
    } else {
      if (i != j || i < 1 || i > -sz) lr.fail("bad diagonal entry");
      sdp.block_entries[base[b - 1] + i - 1].push_back({k, 0, 0, v});
    }
  }

  if (ndiag > 0) {
    // Lift (+row, -row) pairs back to equality rows; anything else keeps the
    // block as 1x1 psd blocks.
    bool pairs_ok = true;
    for (int r = 0; pairs_ok && r + 1 < ndiag; r += 2) {
      auto plus = diag_rows[r], minus = diag_rows[r + 1];
      std::sort(plus.begin(), plus.end());
      std::sort(minus.begin(), minus.end());
      if (plus.size() != minus.size()) pairs_ok = false;
      for (size_t t = 0; pairs_ok && t < plus.size(); ++t)
        if (plus[t].first != minus[t].first || plus[t].second != -minus[t].second)
          pairs_ok = false;
    }
    if (pairs_ok) {
      for (int r = 0; r + 1 < ndiag; r += 2) {
        SdpProblem::EqRow row;
        for (auto& [k, v] : diag_rows[r]) {
          if (k == 0)
            row.rhs = v;
          else
            row.coeffs.push_back({k, v});
        }
        std::sort(row.coeffs.begin(), row.coeffs.end());
        sdp.eqrows.push_back(std::move(row));
      }
    } else {
      for (int r = 0; r < ndiag; ++r) {
        sdp.block_sizes.push_back(1);
        sdp.block_entries.emplace_back();
        for (auto& [k, v] : diag_rows[r])
          sdp.block_entries.back().push_back({k, 0, 0, v});
      }
    }
  }
  for (auto& be : sdp.block_entries)
    std::sort(be.begin(), be.end(), [](auto& a, auto& b) {
      return std::tie(a.k, a.row, a.col) < std::tie(b.k, b.row, b.col);
    });
  return sdp;
}

SdpProblem import_sdpa(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_sdpa(buf.str());
}

SdpaSolutionFragment import_sdpa_solution(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  SdpaSolutionFragment frag;
  std::string line;
  int lineno = 0;
  bool have_p = false, have_d = false;
  while (std::getline(f, line)) {
    ++lineno;
    auto grab = [&](const char* key, double* out) {
      auto pos = line.find(key);
      if (pos == std::string::npos) return false;
      auto eq = line.find('=', pos);
      if (eq == std::string::npos)
        throw std::runtime_error("malformed '" + std::string(key) +
                                 "' at line " + std::to_string(lineno));
      try {
        *out = std::stod(line.substr(eq + 1));
      } catch (...) {
        throw std::runtime_error("bad number after '" + std::string(key) +
                                 "' at line " + std::to_string(lineno));
      }
      return true;
    };
    if (grab("objValPrimal", &frag.obj_primal)) have_p = true;
    if (grab("objValDual", &frag.obj_dual)) have_d = true;
    if (auto pos = line.find("phase.value"); pos != std::string::npos) {
      auto eq = line.find('=', pos);
      if (eq != std::string::npos) {
        frag.phase = line.substr(eq + 1);
        frag.phase.erase(0, frag.phase.find_first_not_of(" \t"));
        frag.phase.erase(frag.phase.find_last_not_of(" \t\r") + 1);
      }
    }
    if (auto pos = line.find("xVec"); pos != std::string::npos) {
      auto lb = line.find('{', pos);
      auto rb = line.find('}', pos);
      if (lb != std::string::npos) {
        std::string body = rb == std::string::npos ? line.substr(lb + 1)
                                                   : line.substr(lb + 1, rb - lb - 1);
        std::istringstream is(body);
        std::string tok;
        while (std::getline(is, tok, ','))
          if (tok.find_first_not_of(" \t\r") != std::string::npos)
            frag.xvec.push_back(std::stod(tok));
        frag.has_xvec = true;
        if (rb == std::string::npos)
          throw std::runtime_error("unterminated xVec at line " +
                                   std::to_string(lineno));
      }
    }
  }
  if (!have_p || !have_d)
    throw std::runtime_error(
        "truncated solution file: objective values missing (after line " +
        std::to_string(lineno) + ")");
  return frag;
}

SdpStatus reconcile_solution(const SdpProblem& sdp, const SdpaSolutionFragment& frag,
                             double tol) {
  SdpStatus status =
      frag.phase.empty() || frag.phase == "pdOPT" ? SdpStatus::kOptimal
                                                  : SdpStatus::kNearOptimal;
  if (frag.has_xvec && static_cast<int>(frag.xvec.size()) == sdp.m) {
    double recomputed = 0;
    for (int k = 0; k < sdp.m; ++k) recomputed += sdp.obj[k] * frag.xvec[k];
    double scale = 1 + std::fabs(recomputed) + std::fabs(frag.obj_primal);
    if (std::fabs(recomputed - frag.obj_primal) / scale > tol)
      status = SdpStatus::kNearOptimal;
  }
  if (std::fabs(frag.obj_primal - frag.obj_dual) /
          (1 + std::fabs(frag.obj_primal) + std::fabs(frag.obj_dual)) >
      tol)
    status = SdpStatus::kNearOptimal;
  return status;
}

}  // namespace cspop
