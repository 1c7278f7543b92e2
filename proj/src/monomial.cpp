#include "cspop/monomial.hpp"

#include <algorithm>
#include <stdexcept>

namespace cspop {

Monomial Monomial::variable(int id, int exp) {
  if (id < 1) throw std::invalid_argument("variable id must be >= 1");
  Monomial m;
  if (exp != 0) m.e_.push_back({id, exp});
  return m;
}

Monomial Monomial::from_sorted(std::vector<std::pair<int, int>> e) {
  Monomial m;
  m.e_ = std::move(e);
  return m;
}

int Monomial::degree() const {
  int d = 0;
  for (auto& [id, ex] : e_) d += ex;
  return d;
}

int Monomial::exponent_of(int id) const {
  for (auto& [v, ex] : e_)
    if (v == id) return ex;
  return 0;
}

std::vector<int> Monomial::support() const {
  std::vector<int> s;
  s.reserve(e_.size());
  for (auto& [v, ex] : e_) s.push_back(v);
  return s;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial r;
  r.e_.reserve(e_.size() + other.e_.size());
  size_t i = 0, j = 0;
  while (i < e_.size() && j < other.e_.size()) {
    if (e_[i].first < other.e_[j].first) {
      r.e_.push_back(e_[i++]);
    } else if (e_[i].first > other.e_[j].first) {
      r.e_.push_back(other.e_[j++]);
    } else {
      r.e_.push_back({e_[i].first, e_[i].second + other.e_[j].second});
      ++i;
      ++j;
    }
  }
  for (; i < e_.size(); ++i) r.e_.push_back(e_[i]);
  for (; j < other.e_.size(); ++j) r.e_.push_back(other.e_[j]);
  return r;
}

Monomial Monomial::times(int id, int exp) const {
  return *this * Monomial::variable(id, exp);
}

Monomial Monomial::derivative_monomial(int id) const {
  Monomial r;
  r.e_.reserve(e_.size());
  for (auto& [v, ex] : e_) {
    if (v == id) {
      if (ex > 1) r.e_.push_back({v, ex - 1});
    } else {
      r.e_.push_back({v, ex});
    }
  }
  return r;
}

bool Monomial::operator<(const Monomial& other) const {
  int da = degree(), db = other.degree();
  if (da != db) return da < db;
  // Same degree: walk the merged variable list in ascending id; the first
  // position where exponents differ decides, larger exponent first.
  size_t i = 0, j = 0;
  while (i < e_.size() && j < other.e_.size()) {
    if (e_[i].first < other.e_[j].first) return true;   // we have power on a smaller id
    if (e_[i].first > other.e_[j].first) return false;
    if (e_[i].second != other.e_[j].second) return e_[i].second > other.e_[j].second;
    ++i;
    ++j;
  }
  return false;  // identical
}

size_t Monomial::hash() const {
  size_t h = 1469598103934665603ull;
  for (auto& [v, ex] : e_) {
    h ^= static_cast<size_t>(v) * 1099511628211ull;
    h *= 1099511628211ull;
    h ^= static_cast<size_t>(ex);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace cspop
