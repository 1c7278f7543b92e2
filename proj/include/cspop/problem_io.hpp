#pragma once

#include <optional>
#include <string>

#include "cspop/csp.hpp"
#include "cspop/poly_text.hpp"
#include "cspop/reform.hpp"

namespace cspop {

// Parsed problem file. Line-oriented UTF-8, '#' comments:
//   nvars <n>
//   nuvar <i> <t> <k>            (optional; reformulation round-trips)
//   clique <i> : <k1> <k2> ...
//   obj <i> : <polyexpr>
//   ineq <i> : <polyexpr>
//   eq <i> : <polyexpr>
//   known_min <value>            (optional, display-only)
//   box <lo> <hi>                (optional, oracle sampling box)
struct ProblemFile {
  CspProblem problem;  // n counts x and declared nu variables
  VarTable table;
  std::optional<double> known_min;
  std::optional<std::pair<double, double>> box;
  std::string name;
};

struct ProblemParseError : std::runtime_error {
  int line, column;
  ProblemParseError(const std::string& msg, int l, int c)
      : std::runtime_error(msg + " (line " + std::to_string(l) + ", column " +
                           std::to_string(c) + ")"),
        line(l),
        column(c) {}
};

ProblemFile parse_problem_text(const std::string& text, const std::string& name);
ProblemFile parse_problem_file(const std::string& path);

std::string problem_to_text(const CspProblem& p, const VarTable& table,
                            std::optional<double> known_min = std::nullopt,
                            std::optional<std::pair<double, double>> box = std::nullopt);

// Serializes a reformulation back to the problem-file format (nu variables
// declared with nuvar lines and named nu_i_t_k in the expressions).
std::string reformulation_to_text(const Reformulation& r);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace cspop
