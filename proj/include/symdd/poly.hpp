#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "symdd/core.hpp"

namespace symdd {

/// A single monomial x_1^{e_1} ... x_n^{e_n}, stored as its exponent vector.
/// Degree 0 (the constant 1) is permitted here; dictionaries reject it.
struct Monomial {
  std::vector<int> exponents;

  int degree() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }

  double eval(const Vec& x) const {
    if (static_cast<size_t>(x.size()) != exponents.size())
      throw dimension_error("Monomial::eval: dimension mismatch");
    double v = 1.0;
    for (size_t i = 0; i < exponents.size(); ++i)
      for (int k = 0; k < exponents[i]; ++k) v *= x[static_cast<Eigen::Index>(i)];
    return v;
  }

  std::string to_string() const {
    std::string s;
    for (size_t i = 0; i < exponents.size(); ++i) {
      if (exponents[i] == 0) continue;
      if (!s.empty()) s += "*";
      s += "x" + std::to_string(i + 1);
      if (exponents[i] > 1) s += "^" + std::to_string(exponents[i]);
    }
    return s.empty() ? "1" : s;
  }

  bool operator==(const Monomial& o) const { return exponents == o.exponents; }
};

/// Graded-lexicographic order: lower total degree first; within a degree,
/// lexicographic on exponent vectors with the earlier variable dominating
/// (x1^2 before x1*x2 before x2^2).
inline bool grlex_less(const Monomial& a, const Monomial& b) {
  const int da = a.degree(), db = b.degree();
  if (da != db) return da < db;
  return a.exponents > b.exponents;  // larger exponent on earlier variable first
}

/// Ordered list of distinct monomials of degree >= 1 in n variables.
/// Defines the lifting map M(x) with M(0) = 0.
struct MonomialDictionary {
  int n = 0;
  std::vector<Monomial> monos;

  int size() const { return static_cast<int>(monos.size()); }
  int max_degree() const {
    int d = 0;
    for (const auto& m : monos) d = std::max(d, m.degree());
    return d;
  }

  void validate() const {
    if (n < 1) throw error("MonomialDictionary: n must be >= 1");
    if (monos.empty()) throw error("MonomialDictionary: empty dictionary");
    for (const auto& m : monos) {
      if (static_cast<int>(m.exponents.size()) != n)
        throw dimension_error("MonomialDictionary: exponent vector of wrong length");
      if (m.degree() < 1)
        throw error("MonomialDictionary: constant monomial not allowed");
      for (int e : m.exponents)
        if (e < 0) throw error("MonomialDictionary: negative exponent");
    }
    for (size_t i = 0; i + 1 < monos.size(); ++i)
      for (size_t j = i + 1; j < monos.size(); ++j)
        if (monos[i] == monos[j])
          throw error("MonomialDictionary: duplicate monomial " + monos[i].to_string());
  }
};

namespace detail {
inline void enumerate_exponents(int n, int degree, std::vector<int>& cur,
                                std::vector<Monomial>& out) {
  if (static_cast<int>(cur.size()) == n - 1) {
    cur.push_back(degree - std::accumulate(cur.begin(), cur.end(), 0));
    out.push_back(Monomial{cur});
    cur.pop_back();
    return;
  }
  const int used = std::accumulate(cur.begin(), cur.end(), 0);
  for (int e = 0; e <= degree - used; ++e) {
    cur.push_back(e);
    enumerate_exponents(n, degree, cur, out);
    cur.pop_back();
  }
}
}  // namespace detail

/// All monomials in n variables with total degree in [1, dmax], graded-lex order.
inline MonomialDictionary build_dictionary(int n, int dmax) {
  if (n < 1) throw error("build_dictionary: n must be >= 1");
  if (dmax < 1) throw error("build_dictionary: dmax must be >= 1 (dictionary would be empty)");
  MonomialDictionary dict;
  dict.n = n;
  for (int d = 1; d <= dmax; ++d) {
    std::vector<Monomial> level;
    std::vector<int> cur;
    detail::enumerate_exponents(n, d, cur, level);
    std::sort(level.begin(), level.end(), grlex_less);
    dict.monos.insert(dict.monos.end(), level.begin(), level.end());
  }
  dict.validate();
  return dict;
}

inline Vec eval_dictionary(const MonomialDictionary& dict, const Vec& x) {
  if (static_cast<int>(x.size()) != dict.n)
    throw dimension_error("eval_dictionary: dimension mismatch");
  Vec v(dict.size());
  for (int i = 0; i < dict.size(); ++i) v[i] = dict.monos[static_cast<size_t>(i)].eval(x);
  return v;
}

/// Matrix whose entries are polynomials, stored as one constant coefficient
/// matrix per basis monomial:  PM(x) = sum_k coeffs[k] * basis[k](x).
struct PolynomialMatrix {
  int rows = 0;
  int cols = 0;
  int nvars = 0;
  std::vector<Monomial> basis;  // distinct, degree 0 allowed
  std::vector<Mat> coeffs;      // one rows x cols matrix per basis element

  Mat eval(const Vec& x) const {
    if (static_cast<int>(x.size()) != nvars)
      throw dimension_error("PolynomialMatrix::eval: dimension mismatch");
    Mat out = Mat::Zero(rows, cols);
    for (size_t k = 0; k < basis.size(); ++k) out += coeffs[k] * basis[k].eval(x);
    return out;
  }
};

inline Mat eval_poly_matrix(const PolynomialMatrix& pm, const Vec& x) { return pm.eval(x); }

/// Constant term plus all monomials of degree 1..deg, graded-lex order.
/// This is the coefficient basis used for Upsilon and the Y blocks.
inline std::vector<Monomial> poly_basis(int n, int deg) {
  std::vector<Monomial> basis;
  basis.push_back(Monomial{std::vector<int>(static_cast<size_t>(n), 0)});
  if (deg >= 1) {
    const auto d = build_dictionary(n, deg);
    basis.insert(basis.end(), d.monos.begin(), d.monos.end());
  }
  return basis;
}

/// Factorization M(x) = Upsilon(x) * x.  Each monomial is divided by its
/// lowest-index variable with positive exponent, so every row of Upsilon has
/// a single nonzero polynomial entry of degree (deg of the monomial) - 1.
inline PolynomialMatrix build_upsilon(const MonomialDictionary& dict) {
  dict.validate();
  PolynomialMatrix up;
  up.rows = dict.size();
  up.cols = dict.n;
  up.nvars = dict.n;
  up.basis = poly_basis(dict.n, dict.max_degree() - 1);
  up.coeffs.assign(up.basis.size(), Mat::Zero(up.rows, up.cols));
  for (int i = 0; i < dict.size(); ++i) {
    const auto& mono = dict.monos[static_cast<size_t>(i)];
    size_t jstar = 0;
    while (mono.exponents[jstar] == 0) ++jstar;
    Monomial reduced = mono;
    reduced.exponents[jstar] -= 1;
    const auto it = std::find(up.basis.begin(), up.basis.end(), reduced);
    if (it == up.basis.end())
      throw error("build_upsilon: basis missing monomial " + reduced.to_string());
    const size_t k = static_cast<size_t>(it - up.basis.begin());
    up.coeffs[k](i, static_cast<Eigen::Index>(jstar)) = 1.0;
  }
  return up;
}

}  // namespace symdd
