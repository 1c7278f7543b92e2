#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cspop/poly.hpp"

namespace cspop {

// Global variable table: x-variables 1..n_x, then one flat index per nu
// variable in enumeration order. Every polynomial of a problem references
// only ids registered here.
struct VarTable {
  int n_x = 0;
  std::vector<std::array<int, 3>> nus;  // (i, t, k) per nu variable

  int total() const { return n_x + static_cast<int>(nus.size()); }
  bool contains(int id) const { return id >= 1 && id <= total(); }
  std::string name(int id) const;
  std::optional<int> find(const std::string& name) const;
};

struct ParseError : std::runtime_error {
  size_t offset;  // byte offset into the parsed text
  ParseError(const std::string& msg, size_t off)
      : std::runtime_error(msg + " (at byte " + std::to_string(off) + ")"),
        offset(off) {}
};

// Grammar: signed sum of terms; term = [coefficient '*'] factor ('*' factor)*;
// factor = ('x'INT | 'nu_INT_INT_INT') ['^' INT]; coefficient = decimal or p/q.
Poly parse_poly(const std::string& text, const VarTable& table);

// Serialization uses the same grammar, graded-lex term order, exact "p/q"
// coefficients. parse(to_string(p)) == p.
std::string poly_to_string(const Poly& p, const VarTable& table);

}  // namespace cspop
