#include "cspop/poly_text.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace cspop {

namespace {

// cpp_int's string constructor treats a leading 0 as octal; strip it.
Integer parse_integer(std::string s) {
  bool neg = false;
  if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
    neg = s[0] == '-';
    s.erase(0, 1);
  }
  size_t nz = s.find_first_not_of('0');
  s = nz == std::string::npos ? "0" : s.substr(nz);
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw std::invalid_argument("not an integer");
  Integer v(s);
  return neg ? Integer(-v) : v;
}

}  // namespace

std::optional<Rational> parse_rational(const std::string& text) {
  if (text.empty()) return std::nullopt;
  size_t slash = text.find('/');
  try {
    if (slash != std::string::npos) {
      Integer num = parse_integer(text.substr(0, slash));
      Integer den = parse_integer(text.substr(slash + 1));
      if (den == 0) return std::nullopt;
      return Rational(num, den);
    }
    size_t dot = text.find('.');
    size_t epos = text.find_first_of("eE");
    if (dot == std::string::npos && epos == std::string::npos)
      return Rational(parse_integer(text));
    // decimal (optionally with exponent): digits.digits[e±k]
    std::string mant = epos == std::string::npos ? text : text.substr(0, epos);
    long expo = epos == std::string::npos ? 0 : std::stol(text.substr(epos + 1));
    dot = mant.find('.');
    std::string digits = mant;
    long frac = 0;
    if (dot != std::string::npos) {
      frac = static_cast<long>(mant.size() - dot - 1);
      digits = mant.substr(0, dot) + mant.substr(dot + 1);
    }
    if (digits.empty() || digits == "-" || digits == "+") return std::nullopt;
    Integer num = parse_integer(digits);
    Rational r(num);
    long shift = expo - frac;
    Integer ten(10);
    if (shift > 0)
      for (long i = 0; i < shift; ++i) r *= ten;
    else
      for (long i = 0; i < -shift; ++i) r /= ten;
    return r;
  } catch (...) {
    return std::nullopt;
  }
}

std::string rational_to_string(const Rational& r) {
  std::ostringstream os;
  os << numerator(r);
  if (denominator(r) != 1) os << "/" << denominator(r);
  return os.str();
}

Rational reconstruct_rational(double x, long long max_den) {
  // Continued-fraction expansion, stopping at max_den.
  if (!std::isfinite(x)) throw std::invalid_argument("non-finite value");
  bool neg = x < 0;
  double v = std::fabs(x);
  long long p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  for (int it = 0; it < 64; ++it) {
    double fl = std::floor(v);
    if (fl > 9e17) break;
    long long a = static_cast<long long>(fl);
    long long p2 = a * p1 + p0, q2 = a * q1 + q0;
    if (q2 > max_den || q2 < 0) break;
    p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    double rem = v - fl;
    if (rem < 1e-14 * std::max(1.0, std::fabs(x))) break;
    v = 1.0 / rem;
  }
  if (q1 == 0) return Rational(0);
  Rational r{Integer(p1), Integer(q1)};
  if (neg) r = -r;
  return r;
}

std::string VarTable::name(int id) const {
  if (id >= 1 && id <= n_x) return "x" + std::to_string(id);
  int j = id - n_x - 1;
  if (j >= 0 && j < static_cast<int>(nus.size())) {
    auto& [i, t, k] = nus[j];
    return "nu_" + std::to_string(i) + "_" + std::to_string(t) + "_" +
           std::to_string(k);
  }
  return "?" + std::to_string(id);
}

std::optional<int> VarTable::find(const std::string& nm) const {
  if (nm.size() >= 2 && nm[0] == 'x') {
    try {
      size_t pos = 0;
      int id = std::stoi(nm.substr(1), &pos);
      if (pos == nm.size() - 1 && id >= 1 && id <= n_x) return id;
    } catch (...) {
    }
    return std::nullopt;
  }
  if (nm.rfind("nu_", 0) == 0) {
    for (size_t j = 0; j < nus.size(); ++j) {
      auto& [i, t, k] = nus[j];
      if (nm == "nu_" + std::to_string(i) + "_" + std::to_string(t) + "_" +
                    std::to_string(k))
        return n_x + static_cast<int>(j) + 1;
    }
  }
  return std::nullopt;
}

namespace {

struct Cursor {
  const std::string& s;
  size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool done() {
    skip_ws();
    return pos >= s.size();
  }
  char peek() { return pos < s.size() ? s[pos] : '\0'; }
};

// number := digits [ '.' digits ] [ ('e'|'E') ['+'|'-'] digits ] [ '/' digits ]
std::string lex_number(Cursor& c) {
  size_t start = c.pos;
  auto digits = [&] {
    while (c.pos < c.s.size() && std::isdigit(static_cast<unsigned char>(c.s[c.pos]))) ++c.pos;
  };
  digits();
  if (c.peek() == '.') {
    ++c.pos;
    digits();
  }
  if (c.peek() == 'e' || c.peek() == 'E') {
    size_t save = c.pos;
    ++c.pos;
    if (c.peek() == '+' || c.peek() == '-') ++c.pos;
    size_t ds = c.pos;
    digits();
    if (c.pos == ds) c.pos = save;  // not an exponent after all
  }
  if (c.peek() == '/') {
    ++c.pos;
    digits();
  }
  return c.s.substr(start, c.pos - start);
}

std::string lex_ident(Cursor& c) {
  size_t start = c.pos;
  while (c.pos < c.s.size() &&
         (std::isalnum(static_cast<unsigned char>(c.s[c.pos])) || c.s[c.pos] == '_'))
    ++c.pos;
  return c.s.substr(start, c.pos - start);
}

// factor := var ['^' INT]
Poly parse_factor(Cursor& c, const VarTable& table) {
  c.skip_ws();
  size_t at = c.pos;
  std::string id = lex_ident(c);
  if (id.empty()) throw ParseError("expected variable", at);
  auto v = table.find(id);
  if (!v) throw ParseError("unknown variable '" + id + "'", at);
  int exp = 1;
  c.skip_ws();
  if (c.peek() == '^') {
    ++c.pos;
    c.skip_ws();
    size_t eat = c.pos;
    std::string num = lex_number(c);
    try {
      exp = std::stoi(num);
    } catch (...) {
      throw ParseError("expected integer exponent", eat);
    }
    if (exp < 0) throw ParseError("negative exponent", eat);
  }
  return Poly::variable(*v, exp);
}

// term := [coefficient ['*']] factor ('*' factor)*   | coefficient
Poly parse_term(Cursor& c, const VarTable& table) {
  c.skip_ws();
  Rational coeff(1);
  bool have_coeff = false;
  if (std::isdigit(static_cast<unsigned char>(c.peek())) || c.peek() == '.') {
    size_t at = c.pos;
    std::string num = lex_number(c);
    auto r = parse_rational(num);
    if (!r) throw ParseError("bad coefficient '" + num + "'", at);
    coeff = *r;
    have_coeff = true;
  }
  Poly p = Poly::constant(coeff);
  bool have_factor = false;
  for (;;) {
    c.skip_ws();
    if (c.peek() == '*') {
      ++c.pos;
      p = p * parse_factor(c, table);
      have_factor = true;
      continue;
    }
    // implicit product like "2x1" or a bare leading factor
    if (std::isalpha(static_cast<unsigned char>(c.peek()))) {
      if (have_coeff && !have_factor) {
        p = p * parse_factor(c, table);
        have_factor = true;
        continue;
      }
      if (!have_coeff && !have_factor) {
        p = parse_factor(c, table);
        have_factor = true;
        continue;
      }
    }
    break;
  }
  if (!have_coeff && !have_factor)
    throw ParseError("expected term", c.pos);
  return p;
}

}  // namespace

Poly parse_poly(const std::string& text, const VarTable& table) {
  Cursor c{text};
  Poly result;
  bool first = true;
  while (!c.done()) {
    int sign = 1;
    c.skip_ws();
    if (c.peek() == '+' || c.peek() == '-') {
      sign = c.peek() == '-' ? -1 : 1;
      ++c.pos;
    } else if (!first) {
      throw ParseError("expected '+' or '-'", c.pos);
    }
    Poly t = parse_term(c, table);
    result += sign < 0 ? -t : t;
    first = false;
  }
  if (first) throw ParseError("empty polynomial", 0);
  return result;
}

std::string poly_to_string(const Poly& p, const VarTable& table) {
  if (p.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (auto& [m, c] : p.terms()) {
    Rational a = c < 0 ? Rational(-c) : c;
    if (first) {
      if (c < 0) os << "-";
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    bool unit = (a == 1);
    if (!unit || m.is_constant()) os << rational_to_string(a);
    bool need_star = !unit && !m.is_constant();
    for (auto& [v, e] : m.exponents()) {
      if (need_star) os << "*";
      os << table.name(v);
      if (e > 1) os << "^" << e;
      need_star = true;
    }
    first = false;
  }
  return os.str();
}

}  // namespace cspop
