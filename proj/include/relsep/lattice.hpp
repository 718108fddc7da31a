#pragma once

// Integer lattices in Z^n: Hermite and Smith normal forms, membership,
// index, intersection, sum, and the finite-index separation used for
// free-abelian peripheral subgroups.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "relsep/error.hpp"

namespace relsep {

using Vec = std::vector<std::int64_t>;
using Matrix = std::vector<Vec>;  // row-major, one row per vector

namespace detail {

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) fail(ErrorKind::budget_exceeded, "integer overflow in lattice arithmetic");
  return r;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_mul_overflow(a, b, &r)) fail(ErrorKind::budget_exceeded, "integer overflow in lattice arithmetic");
  return r;
}

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// row -= q * other
inline void axpy(Vec& row, std::int64_t q, const Vec& other) {
  if (q == 0) return;
  for (std::size_t j = 0; j < row.size(); ++j)
    row[j] = checked_add(row[j], -checked_mul(q, other[j]));
}

inline bool is_zero(const Vec& v) {
  return std::all_of(v.begin(), v.end(), [](std::int64_t x) { return x == 0; });
}

}  // namespace detail

inline std::int64_t l1(const Vec& v) {
  std::int64_t s = 0;
  for (auto x : v) s = detail::checked_add(s, std::llabs(x));
  return s;
}

inline Vec add(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = detail::checked_add(a[i], b[i]);
  return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = detail::checked_add(a[i], -b[i]);
  return r;
}

inline Vec neg(const Vec& a) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = -a[i];
  return r;
}

inline Vec scale(const Vec& a, std::int64_t k) {
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = detail::checked_mul(a[i], k);
  return r;
}

/// Row-style Hermite normal form: echelon rows with positive pivots and
/// entries above each pivot reduced into [0, pivot). Zero rows are dropped.
inline Matrix hermite_rows(Matrix a, std::size_t n) {
  for (auto& row : a)
    require(row.size() == n, ErrorKind::malformed_input, "lattice generator has wrong dimension");
  std::size_t r = 0;
  std::vector<std::size_t> pivot_cols;
  for (std::size_t c = 0; c < n && r < a.size(); ++c) {
    while (true) {
      std::size_t best = a.size();
      for (std::size_t i = r; i < a.size(); ++i)
        if (a[i][c] != 0 && (best == a.size() || std::llabs(a[i][c]) < std::llabs(a[best][c]))) best = i;
      if (best == a.size()) break;
      std::swap(a[r], a[best]);
      bool done = true;
      for (std::size_t i = r + 1; i < a.size(); ++i) {
        if (a[i][c] == 0) continue;
        detail::axpy(a[i], a[i][c] / a[r][c], a[r]);
        if (a[i][c] != 0) done = false;
      }
      if (done) break;
    }
    if (r >= a.size() || a[r][c] == 0) continue;
    if (a[r][c] < 0) a[r] = neg(a[r]);
    for (std::size_t i = 0; i < r; ++i) detail::axpy(a[i], detail::floor_div(a[i][c], a[r][c]), a[r]);
    pivot_cols.push_back(c);
    ++r;
  }
  a.resize(r);
  return a;
}

class Lattice {
 public:
  Lattice() = default;

  Lattice(std::size_t n, Matrix generators) : n_(n), gens_(std::move(generators)) {
    basis_ = hermite_rows(gens_, n_);
    for (const auto& row : basis_) {
      std::size_t c = 0;
      while (row[c] == 0) ++c;
      pivots_.push_back(c);
    }
  }

  static Lattice zero(std::size_t n) { return Lattice(n, {}); }

  static Lattice scaled(std::size_t n, std::int64_t m) {
    Matrix g;
    for (std::size_t i = 0; i < n; ++i) {
      Vec e(n, 0);
      e[i] = m;
      g.push_back(e);
    }
    return Lattice(n, g);
  }

  static Lattice full(std::size_t n) { return scaled(n, 1); }

  std::size_t ambient_rank() const { return n_; }
  std::size_t rank() const { return basis_.size(); }
  const Matrix& basis() const { return basis_; }
  const Matrix& generators() const { return gens_; }
  bool is_zero() const { return basis_.empty(); }
  bool is_full_rank() const { return rank() == n_; }

  /// Canonical coset representative of v modulo the lattice.
  Vec reduce(Vec v) const {
    require(v.size() == n_, ErrorKind::malformed_input, "vector has wrong dimension");
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      auto c = pivots_[k];
      detail::axpy(v, detail::floor_div(v[c], basis_[k][c]), basis_[k]);
    }
    return v;
  }

  bool contains(const Vec& v) const { return detail::is_zero(reduce(v)); }

  bool contains(const Lattice& other) const {
    return std::all_of(other.basis_.begin(), other.basis_.end(), [&](const Vec& b) { return contains(b); });
  }

  /// Index in Z^n, or nullopt when infinite.
  std::optional<std::int64_t> index() const {
    if (!is_full_rank()) return std::nullopt;
    std::int64_t p = 1;
    for (std::size_t k = 0; k < basis_.size(); ++k) p = detail::checked_mul(p, basis_[k][pivots_[k]]);
    return p;
  }

  /// All canonical representatives of Z^n / L (full rank only), in
  /// lexicographic order of the box prod [0, pivot).
  std::vector<Vec> coset_representatives() const {
    require(is_full_rank(), ErrorKind::precondition, "coset representatives need a full-rank lattice");
    std::vector<Vec> out;
    Vec v(n_, 0);
    while (true) {
      out.push_back(v);
      std::size_t c = n_;
      while (c > 0) {
        --c;
        if (++v[c] < basis_[c][c]) break;
        v[c] = 0;
        if (c == 0) return out;
      }
      if (n_ == 0) return out;
    }
  }

  friend bool operator==(const Lattice& a, const Lattice& b) { return a.n_ == b.n_ && a.basis_ == b.basis_; }

 private:
  std::size_t n_ = 0;
  Matrix gens_;
  Matrix basis_;
  std::vector<std::size_t> pivots_;
};

inline Lattice sum(const Lattice& a, const Lattice& b) {
  require(a.ambient_rank() == b.ambient_rank(), ErrorKind::malformed_input, "lattice dimension mismatch");
  Matrix g = a.basis();
  g.insert(g.end(), b.basis().begin(), b.basis().end());
  return Lattice(a.ambient_rank(), g);
}

inline Lattice add_generator(const Lattice& a, const Vec& v) {
  Matrix g = a.basis();
  g.push_back(v);
  return Lattice(a.ambient_rank(), g);
}

/// Intersection via the echelon form of the doubled lattice {(x + y, x) : x in A, y in B}.
inline Lattice intersect(const Lattice& a, const Lattice& b) {
  require(a.ambient_rank() == b.ambient_rank(), ErrorKind::malformed_input, "lattice dimension mismatch");
  const auto n = a.ambient_rank();
  Matrix stacked;
  for (const auto& x : a.basis()) {
    Vec row(x);
    row.insert(row.end(), x.begin(), x.end());
    stacked.push_back(row);
  }
  for (const auto& y : b.basis()) {
    Vec row(y);
    row.insert(row.end(), n, 0);
    stacked.push_back(row);
  }
  Matrix h = hermite_rows(stacked, 2 * n);
  Matrix out;
  for (const auto& row : h) {
    if (std::all_of(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(n), [](std::int64_t x) { return x == 0; }))
      out.emplace_back(row.begin() + static_cast<std::ptrdiff_t>(n), row.end());
  }
  return Lattice(n, out);
}

/// Smith normal form data of Z^n / L: U * B * V = diag(invariants) where B
/// is the Hermite basis of L.
struct AbelianQuotient {
  std::vector<std::int64_t> invariants;  // d1 | d2 | ... (one per basis row)
  std::size_t free_rank = 0;
  Matrix U, V;

  std::optional<std::int64_t> order() const {
    if (free_rank > 0) return std::nullopt;
    std::int64_t p = 1;
    for (auto d : invariants) p = detail::checked_mul(p, d);
    return p;
  }

  std::vector<std::int64_t> torsion() const {
    std::vector<std::int64_t> t;
    for (auto d : invariants)
      if (d > 1) t.push_back(d);
    return t;
  }
};

inline AbelianQuotient smith(const Lattice& lat) {
  const std::size_t m = lat.rank(), n = lat.ambient_rank();
  Matrix a = lat.basis();
  auto identity = [](std::size_t k) {
    Matrix id(k, Vec(k, 0));
    for (std::size_t i = 0; i < k; ++i) id[i][i] = 1;
    return id;
  };
  Matrix u = identity(m), v = identity(n);
  auto col_axpy = [](Matrix& mat, std::size_t dst, std::int64_t q, std::size_t src) {
    for (auto& row : mat) row[dst] = detail::checked_add(row[dst], -detail::checked_mul(q, row[src]));
  };
  auto col_swap = [](Matrix& mat, std::size_t i, std::size_t j) {
    for (auto& row : mat) std::swap(row[i], row[j]);
  };
  for (std::size_t t = 0; t < m; ++t) {
    while (true) {
      // smallest nonzero entry of the trailing block goes to (t, t)
      std::size_t bi = m, bj = n;
      for (std::size_t i = t; i < m; ++i)
        for (std::size_t j = t; j < n; ++j)
          if (a[i][j] != 0 && (bi == m || std::llabs(a[i][j]) < std::llabs(a[bi][bj]))) bi = i, bj = j;
      if (bi == m) break;
      std::swap(a[t], a[bi]);
      std::swap(u[t], u[bi]);
      col_swap(a, t, bj);
      col_swap(v, t, bj);
      bool clean = true;
      for (std::size_t i = t + 1; i < m; ++i) {
        auto q = a[i][t] / a[t][t];
        detail::axpy(a[i], q, a[t]);
        detail::axpy(u[i], q, u[t]);
        if (a[i][t] != 0) clean = false;
      }
      for (std::size_t j = t + 1; j < n; ++j) {
        auto q = a[t][j] / a[t][t];
        col_axpy(a, j, q, t);
        col_axpy(v, j, q, t);
        if (a[t][j] != 0) clean = false;
      }
      if (!clean) continue;
      // divisibility: fold an offending row into row t and retry
      bool divides = true;
      for (std::size_t i = t + 1; i < m && divides; ++i)
        for (std::size_t j = t + 1; j < n; ++j)
          if (a[i][j] % a[t][t] != 0) {
            detail::axpy(a[t], -1, a[i]);
            detail::axpy(u[t], -1, u[i]);
            divides = false;
            break;
          }
      if (divides) break;
    }
    if (a[t][t] < 0) {
      a[t] = neg(a[t]);
      u[t] = neg(u[t]);
    }
  }
  AbelianQuotient q;
  for (std::size_t t = 0; t < m; ++t) q.invariants.push_back(a[t][t]);
  q.free_rank = n - m;
  q.U = std::move(u);
  q.V = std::move(v);
  return q;
}

/// All vectors of Z^n with l1 norm <= radius, ordered by (norm, lexicographic).
inline std::vector<Vec> l1_ball(std::size_t n, std::int64_t radius) {
  std::vector<Vec> out;
  if (radius < 0) return out;
  Vec cur(n, 0);
  auto rec = [&](auto&& self, std::size_t i, std::int64_t left) -> void {
    if (i == n) {
      out.push_back(cur);
      return;
    }
    for (std::int64_t x = -left; x <= left; ++x) {
      cur[i] = x;
      self(self, i + 1, left - std::llabs(x));
    }
    cur[i] = 0;
  };
  rec(rec, 0, radius);
  std::stable_sort(out.begin(), out.end(), [](const Vec& a, const Vec& b) {
    auto la = l1(a), lb = l1(b);
    return la != lb ? la < lb : a < b;
  });
  return out;
}

/// Finite-index R >= K avoiding every vector of F, searched among K + mZ^n.
inline Lattice separate(const Lattice& k, const std::vector<Vec>& avoid, std::int64_t max_m = 100000) {
  const auto n = k.ambient_rank();
  for (const auto& v : avoid) {
    require(v.size() == n, ErrorKind::malformed_input, "avoid vector has wrong dimension");
    require(!k.contains(v), ErrorKind::precondition, "separate: an avoided vector lies in K");
  }
  for (std::int64_t m = 1; m <= max_m; ++m) {
    Lattice r = sum(k, Lattice::scaled(n, m));
    bool ok = std::none_of(avoid.begin(), avoid.end(), [&](const Vec& v) { return r.contains(v); });
    if (ok) return r;
  }
  fail(ErrorKind::budget_exceeded, "separate: no valid modulus up to " + std::to_string(max_m));
}

inline Lattice separate_with_minlength(const Lattice& k, const std::vector<Vec>& avoid, std::int64_t min_length) {
  std::vector<Vec> f = avoid;
  for (auto& v : l1_ball(k.ambient_rank(), min_length))
    if (!k.contains(v)) f.push_back(std::move(v));
  return separate(k, f);
}

/// l1-shortest element of R \ K within the bound, by exhaustive enumeration.
inline std::optional<Vec> shortest_nonmember(const Lattice& r, const Lattice& k, std::int64_t bound) {
  require(r.contains(k), ErrorKind::precondition, "shortest_nonmember: K is not contained in R");
  for (auto& v : l1_ball(r.ambient_rank(), bound))
    if (r.contains(v) && !k.contains(v)) return v;
  return std::nullopt;
}

}  // namespace relsep
