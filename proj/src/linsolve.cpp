#include "linsolve.hpp"

#include <algorithm>
#include <cstdint>

namespace cspop::detail {

namespace {

bool verify_solution(const LinearSystem& sys, const std::vector<Rational>& x) {
  for (size_t r = 0; r < sys.rows.size(); ++r) {
    Rational acc(0);
    for (auto& [c, v] : sys.rows[r]) acc += v * x[c];
    if (acc != sys.rhs[r]) return false;
  }
  return true;
}

std::optional<std::vector<Rational>> solve_rational_dense(const LinearSystem& sys) {
  int m = static_cast<int>(sys.rows.size()), n = sys.ncols;
  std::vector<std::vector<Rational>> a(m, std::vector<Rational>(n + 1, Rational(0)));
  for (int r = 0; r < m; ++r) {
    for (auto& [c, v] : sys.rows[r]) a[r][c] += v;
    a[r][n] = sys.rhs[r];
  }
  std::vector<int> pivot_col;
  int row = 0;
  for (int col = 0; col < n && row < m; ++col) {
    int pr = -1;
    for (int r = row; r < m; ++r)
      if (a[r][col] != 0) {
        pr = r;
        break;
      }
    if (pr < 0) continue;
    std::swap(a[row], a[pr]);
    Rational inv = a[row][col];
    for (int c = col; c <= n; ++c) a[row][c] /= inv;
    for (int r = 0; r < m; ++r) {
      if (r == row || a[r][col] == 0) continue;
      Rational f = a[r][col];
      for (int c = col; c <= n; ++c) a[r][c] -= f * a[row][c];
    }
    pivot_col.push_back(col);
    ++row;
  }
  for (int r = row; r < m; ++r)
    if (a[r][n] != 0) return std::nullopt;  // 0 = nonzero
  std::vector<Rational> x(n, Rational(0));
  for (int r = 0; r < row; ++r) x[pivot_col[r]] = a[r][n];
  return x;
}

constexpr uint64_t kPrimes[] = {2147483629ull, 2147483587ull, 2147483563ull,
                                2147483549ull};

uint64_t mod_pow(uint64_t b, uint64_t e, uint64_t p) {
  uint64_t r = 1;
  b %= p;
  while (e) {
    if (e & 1) r = r * b % p;
    b = b * b % p;
    e >>= 1;
  }
  return r;
}

std::optional<uint64_t> to_mod(const Rational& q, uint64_t p) {
  Integer num = numerator(q), den = denominator(q);
  uint64_t d = static_cast<uint64_t>(den % p);
  if (d == 0) return std::nullopt;
  Integer nm = num % Integer(p);
  if (nm < 0) nm += Integer(p);
  uint64_t nn = nm.convert_to<uint64_t>();
  return nn * mod_pow(d, p - 2, p) % p;
}

struct ModResult {
  bool inconsistent = false;
  bool bad_prime = false;  // some denominator vanished mod p
  std::vector<uint64_t> x;
  std::vector<int> pivots;
};

ModResult solve_mod(const LinearSystem& sys, uint64_t p) {
  ModResult out;
  int m = static_cast<int>(sys.rows.size()), n = sys.ncols;
  std::vector<std::vector<uint64_t>> a(m, std::vector<uint64_t>(n + 1, 0));
  for (int r = 0; r < m; ++r) {
    for (auto& [c, v] : sys.rows[r]) {
      auto mv = to_mod(v, p);
      if (!mv) {
        out.bad_prime = true;
        return out;
      }
      a[r][c] = (a[r][c] + *mv) % p;
    }
    auto mv = to_mod(sys.rhs[r], p);
    if (!mv) {
      out.bad_prime = true;
      return out;
    }
    a[r][n] = *mv;
  }
  int row = 0;
  for (int col = 0; col < n && row < m; ++col) {
    int pr = -1;
    for (int r = row; r < m; ++r)
      if (a[r][col] != 0) {
        pr = r;
        break;
      }
    if (pr < 0) continue;
    std::swap(a[row], a[pr]);
    uint64_t inv = mod_pow(a[row][col], p - 2, p);
    for (int c = col; c <= n; ++c) a[row][c] = a[row][c] * inv % p;
    for (int r = 0; r < m; ++r) {
      if (r == row || a[r][col] == 0) continue;
      uint64_t f = p - a[r][col];
      for (int c = col; c <= n; ++c) a[r][c] = (a[r][c] + f * a[row][c]) % p;
    }
    out.pivots.push_back(col);
    ++row;
  }
  for (int r = row; r < m; ++r)
    if (a[r][n] != 0) {
      out.inconsistent = true;
      return out;
    }
  out.x.assign(n, 0);
  for (int r = 0; r < row; ++r) out.x[out.pivots[r]] = a[r][n];
  return out;
}

// Wang rational reconstruction from residue u mod M.
std::optional<Rational> rational_reconstruct(const Integer& u, const Integer& M) {
  Integer a = M, b = u, x0 = 0, x1 = 1;
  Integer bound;
  {
    // floor(sqrt(M/2))
    Integer half = M / 2, lo = 0, hi = half;
    while (lo < hi) {
      Integer mid = (lo + hi + 1) / 2;
      if (mid * mid <= half) lo = mid;
      else hi = mid - 1;
    }
    bound = lo;
  }
  while (b > bound) {
    Integer q = a / b;
    Integer t = a - q * b;
    a = b;
    b = t;
    t = x0 - q * x1;
    x0 = x1;
    x1 = t;
  }
  if (x1 == 0) return std::nullopt;
  Integer num = b, den = x1;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  if (den > bound) return std::nullopt;
  if (gcd(num, den) != 1) return std::nullopt;
  return Rational(num, den);
}

std::optional<std::vector<Rational>> solve_modular(const LinearSystem& sys) {
  int n = sys.ncols;
  std::vector<Integer> crt_x;
  Integer M(1);
  bool have = false;
  for (uint64_t p : kPrimes) {
    ModResult r = solve_mod(sys, p);
    if (r.bad_prime) continue;
    if (r.inconsistent) return std::nullopt;  // sound: consistent over Q => consistent mod p
    if (!have) {
      crt_x.assign(n, Integer(0));
      for (int i = 0; i < n; ++i) crt_x[i] = Integer(r.x[i]);
      M = Integer(p);
      have = true;
    } else {
      // CRT combine
      Integer P(p);
      Integer Minv = 0;
      {
        // modular inverse of M mod p via Fermat
        uint64_t mrem = static_cast<uint64_t>(M % P);
        Minv = Integer(mod_pow(mrem, p - 2, p));
      }
      for (int i = 0; i < n; ++i) {
        Integer diff = (Integer(r.x[i]) - crt_x[i] % P) % P;
        if (diff < 0) diff += P;
        Integer t = diff * Minv % P;
        crt_x[i] += M * t;
      }
      M *= P;
    }
    // try reconstruction at current modulus
    std::vector<Rational> x(n);
    bool ok = true;
    for (int i = 0; i < n && ok; ++i) {
      auto q = rational_reconstruct(crt_x[i], M);
      if (!q) ok = false;
      else x[i] = *q;
    }
    if (ok && verify_solution(sys, x)) return x;
  }
  // Reconstruction failed under every prime; decide exactly.
  auto x = solve_rational_dense(sys);
  if (x && !verify_solution(sys, *x))
    throw std::logic_error("rational elimination produced a bad solution");
  return x;
}

}  // namespace

std::optional<std::vector<Rational>> solve_sparse_linear(const LinearSystem& sys) {
  size_t cells = sys.rows.size() * static_cast<size_t>(sys.ncols);
  if (sys.ncols <= 256 && cells <= 200000) {
    auto x = solve_rational_dense(sys);
    if (x && !verify_solution(sys, *x))
      throw std::logic_error("rational elimination produced a bad solution");
    return x;
  }
  return solve_modular(sys);
}

}  // namespace cspop::detail
