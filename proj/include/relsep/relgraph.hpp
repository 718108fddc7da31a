#pragma once

// Paths in the relative Cayley graph: S-edges plus one edge for every
// nontrivial element of a peripheral subgroup.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "relsep/enumerate.hpp"
#include "relsep/group.hpp"

namespace relsep {

struct RelEdgeLabel {
  bool peripheral = false;  // element of P_factor, else a letter of S
  int factor = 0;
  FactorElem elem;

  friend bool operator==(const RelEdgeLabel&, const RelEdgeLabel&) = default;
};

struct RelPath {
  NormalForm start;
  std::vector<RelEdgeLabel> labels;

  std::size_t length() const { return labels.size(); }

  std::vector<NormalForm> vertices(const MarkedGroup& g) const {
    std::vector<NormalForm> out{start};
    for (const auto& l : labels) {
      NormalForm v = out.back();
      g.append(v, l.factor, l.elem);
      out.push_back(std::move(v));
    }
    return out;
  }

  NormalForm end(const MarkedGroup& g) const { return vertices(g).back(); }
};

/// Relative length |g| in the relative Cayley graph: one edge per
/// peripheral syllable, word length for the rest.
inline std::int64_t rel_length(const MarkedGroup& g, const NormalForm& x) {
  std::int64_t n = 0;
  for (const auto& s : x.syllables) n += g.is_peripheral(s.factor) ? 1 : g.factor(s.factor).length(s.elem);
  return n;
}

inline std::int64_t rel_distance(const MarkedGroup& g, const NormalForm& a, const NormalForm& b) {
  return rel_length(g, g.multiply(g.invert(a), b));
}

/// Letters of a non-peripheral syllable, as S-edges.
inline std::vector<RelEdgeLabel> syllable_letters(const MarkedGroup& g, const Syllable& s) {
  const Factor& f = g.factor(s.factor);
  std::vector<RelEdgeLabel> out;
  switch (f.kind) {
    case Factor::Kind::finite: out.push_back({false, s.factor, s.elem}); break;
    case Factor::Kind::free:
      for (auto x : s.elem) out.push_back({false, s.factor, {x}});
      break;
    case Factor::Kind::free_abelian:
      for (int j = 0; j < f.rank; ++j)
        for (std::int64_t k = 0; k < std::llabs(s.elem[j]); ++k) {
          FactorElem e(static_cast<std::size_t>(f.rank), 0);
          e[j] = s.elem[j] > 0 ? 1 : -1;
          out.push_back({false, s.factor, e});
        }
      break;
  }
  return out;
}

/// Geodesic from `from` to from * x read off the normal form of x.
inline RelPath rel_geodesic(const MarkedGroup& g, const NormalForm& x, const NormalForm& from = {}) {
  RelPath p;
  p.start = from;
  for (const auto& s : x.syllables) {
    if (g.is_peripheral(s.factor)) {
      p.labels.push_back({true, s.factor, s.elem});
      continue;
    }
    auto ls = syllable_letters(g, s);
    p.labels.insert(p.labels.end(), ls.begin(), ls.end());
  }
  return p;
}

/// Distance from the identity in the relative Cayley graph restricted to the
/// S-ball of radius R: S-edges plus jumps inside each peripheral coset.
inline std::vector<std::int64_t> bounded_rel_distances(const MarkedGroup& g, const std::vector<NormalForm>& elems) {
  ElementMap<int> index;
  for (std::size_t k = 0; k < elems.size(); ++k) index[elems[k]] = static_cast<int>(k);
  std::map<std::pair<int, NormalForm>, std::vector<int>> cosets;
  for (int i : g.peripheral_indices())
    for (std::size_t k = 0; k < elems.size(); ++k) cosets[{i, g.coset_prefix(elems[k], i)}].push_back(static_cast<int>(k));
  std::map<std::pair<int, NormalForm>, bool> used;
  std::vector<std::int64_t> d(elems.size(), -1);
  int origin = index.at(g.identity());
  std::deque<int> queue{origin};
  d[origin] = 0;
  while (!queue.empty()) {
    int v = queue.front();
    queue.pop_front();
    auto visit = [&](int w) {
      if (d[w] < 0) {
        d[w] = d[v] + 1;
        queue.push_back(w);
      }
    };
    for (const auto& s : g.generators()) {
      NormalForm y = elems[v];
      g.append(y, s.factor, s.elem);
      auto it = index.find(y);
      if (it != index.end()) visit(it->second);
    }
    for (int i : g.peripheral_indices()) {
      auto key = std::make_pair(i, g.coset_prefix(elems[v], i));
      if (used[key]) continue;
      used[key] = true;
      for (int w : cosets[key]) visit(w);
    }
  }
  return d;
}

struct Component {
  int factor = 0;
  std::size_t begin = 0, end = 0;  // label span [begin, end)
  NormalForm s_minus, s_plus;
  std::int64_t s_length = 0;
  NormalForm coset;
  bool isolated = true;
};

/// Alphabet of a label: the peripheral index it belongs to, if any.
inline std::optional<int> label_alphabet(const MarkedGroup& g, const RelEdgeLabel& l) {
  if (l.peripheral || g.is_peripheral(l.factor)) return l.factor;
  return std::nullopt;
}

inline bool connected(const Component& a, const Component& b) { return a.factor == b.factor && a.coset == b.coset; }

/// Maximal runs of labels from one peripheral alphabet; isolated flags set
/// against the other components of the same path.
inline std::vector<Component> p_components(const MarkedGroup& g, const RelPath& p) {
  auto verts = p.vertices(g);
  std::vector<Component> out;
  std::size_t k = 0;
  while (k < p.labels.size()) {
    auto a = label_alphabet(g, p.labels[k]);
    if (!a) {
      ++k;
      continue;
    }
    std::size_t e = k + 1;
    while (e < p.labels.size() && label_alphabet(g, p.labels[e]) == a) ++e;
    Component c;
    c.factor = *a;
    c.begin = k;
    c.end = e;
    c.s_minus = verts[k];
    c.s_plus = verts[e];
    c.s_length = g.s_distance(c.s_minus, c.s_plus);
    c.coset = g.coset_prefix(c.s_minus, *a);
    out.push_back(std::move(c));
    k = e;
  }
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j)
      if (i != j && connected(out[i], out[j])) out[i].isolated = false;
  return out;
}

struct BacktrackingReport {
  bool backtracking_free = true;
  std::vector<std::pair<std::size_t, std::size_t>> connected_pairs;  // component indices
};

inline BacktrackingReport connected_components_check(const MarkedGroup& g, const RelPath& p) {
  auto cs = p_components(g, p);
  BacktrackingReport r;
  for (std::size_t i = 0; i < cs.size(); ++i)
    for (std::size_t j = i + 1; j < cs.size(); ++j)
      if (connected(cs[i], cs[j])) r.connected_pairs.push_back({i, j});
  r.backtracking_free = r.connected_pairs.empty();
  return r;
}

/// Indices (positions along the path) of vertices not interior to a component.
inline std::vector<std::size_t> phase_vertices(const MarkedGroup& g, const RelPath& p) {
  std::vector<bool> interior(p.labels.size() + 1, false);
  for (const auto& c : p_components(g, p))
    for (std::size_t v = c.begin + 1; v < c.end; ++v) interior[v] = true;
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < interior.size(); ++v)
    if (!interior[v]) out.push_back(v);
  return out;
}

inline std::int64_t k_similar(const MarkedGroup& g, const RelPath& p, const RelPath& q) {
  return std::max(g.s_distance(p.start, q.start), g.s_distance(p.end(g), q.end(g)));
}

/// Smallest lambda with len(sub) <= lambda * dist(ends) + c for every
/// sub-path; nullopt when no lambda works (a sub-path longer than c closes up).
inline std::optional<double> quasigeodesic_lambda(const MarkedGroup& g, const RelPath& p, std::int64_t c) {
  require(connected_components_check(g, p).backtracking_free, ErrorKind::precondition,
          "quasigeodesic estimate needs a path without backtracking");
  auto v = p.vertices(g);
  double lambda = 1.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      auto len = static_cast<std::int64_t>(j - i);
      auto d = rel_distance(g, v[i], v[j]);
      if (d == 0) {
        if (len > c) return std::nullopt;
        continue;
      }
      lambda = std::max(lambda, static_cast<double>(len - c) / static_cast<double>(d));
    }
  return lambda;
}

struct BcpReport {
  std::int64_t epsilon = 0;
  std::int64_t clause_i = 0, clause_ii = 0, clause_iii = 0;
  std::size_t samples = 0, rejected = 0;
  NormalForm witness;
};

struct BcpValues {
  std::int64_t i = 0, ii = 0, iii = 0;
};

/// The three clause requirements for one pair of paths.
inline BcpValues bcp_values(const MarkedGroup& g, const RelPath& p, const RelPath& q) {
  BcpValues out;
  auto vp = p.vertices(g), vq = q.vertices(g);
  auto php = phase_vertices(g, p), phq = phase_vertices(g, q);
  auto directed = [&](const std::vector<NormalForm>& va, const std::vector<std::size_t>& pa,
                      const std::vector<NormalForm>& vb, const std::vector<std::size_t>& pb) {
    std::int64_t worst = 0;
    for (auto a : pa) {
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      for (auto b : pb) best = std::min(best, g.s_distance(va[a], vb[b]));
      worst = std::max(worst, best);
    }
    return worst;
  };
  out.i = std::max(directed(vp, php, vq, phq), directed(vq, phq, vp, php));
  auto cp = p_components(g, p), cq = p_components(g, q);
  auto unmatched = [&](const std::vector<Component>& xs, const std::vector<Component>& ys) {
    std::int64_t worst = 0;
    for (const auto& s : xs)
      if (std::none_of(ys.begin(), ys.end(), [&](const Component& t) { return connected(s, t); }))
        worst = std::max(worst, s.s_length);
    return worst;
  };
  out.ii = std::max(unmatched(cp, cq), unmatched(cq, cp));
  for (const auto& s : cp)
    for (const auto& t : cq)
      if (connected(s, t))
        out.iii = std::max({out.iii, g.s_distance(s.s_minus, t.s_minus), g.s_distance(s.s_plus, t.s_plus)});
  return out;
}

struct BcpSampler {
  std::vector<NormalForm> targets;   // endpoints g of the base geodesic 1 -> g
  std::vector<NormalForm> shifts;    // candidate endpoint moves, S-length <= k
  int max_detours = 2;
};

/// Splits peripheral edges and pads S-edges with out-and-back pairs. The
/// result is accepted only if it is a (lambda, c)-quasigeodesic without
/// backtracking.
inline RelPath perturb(const MarkedGroup& g, RelPath p, int detours, std::mt19937_64& rng) {
  for (int t = 0; t < detours && !p.labels.empty(); ++t) {
    std::uniform_int_distribution<std::size_t> where(0, p.labels.size() - 1);
    std::size_t k = where(rng);
    RelEdgeLabel l = p.labels[k];
    const Factor& f = g.factor(l.factor);
    if (l.peripheral && f.kind == Factor::Kind::free_abelian) {
      FactorElem a(l.elem.size(), 0);
      std::size_t j = static_cast<std::size_t>(rng() % l.elem.size());
      a[j] = l.elem[j] >= 0 ? 1 : -1;
      FactorElem b = f.mul(l.elem, f.inv(a));
      if (f.is_identity(b)) continue;
      p.labels[k].elem = a;
      p.labels.insert(p.labels.begin() + static_cast<std::ptrdiff_t>(k) + 1, {true, l.factor, b});
    } else if (!l.peripheral) {
      RelEdgeLabel back{false, l.factor, f.inv(l.elem)};
      p.labels.insert(p.labels.begin() + static_cast<std::ptrdiff_t>(k) + 1, {back, l});
    }
  }
  return p;
}

/// Measured BCP constant. For each k' <= k a separate seeded sample stream
/// is drawn and the maximum taken, so the estimate is monotone in k.
inline BcpReport bcp_probe(const MarkedGroup& g, double lambda, std::int64_t c, std::int64_t k,
                           const std::vector<NormalForm>& targets, std::size_t samples, std::uint64_t seed) {
  require(!targets.empty(), ErrorKind::precondition, "no sample targets");
  BcpReport rep;
  for (std::int64_t kk = 0; kk <= k; ++kk) {
    std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(kk));
    auto shifts = ball(g, kk);
    std::uniform_int_distribution<std::size_t> pick_target(0, targets.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_shift(0, shifts.size() - 1);
    std::uniform_int_distribution<int> pick_detours(0, 2);
    for (std::size_t n = 0; n < samples; ++n) {
      const NormalForm& x = targets[pick_target(rng)];
      RelPath p = rel_geodesic(g, x);
      NormalForm q0 = shifts[pick_shift(rng)];
      NormalForm q1 = g.multiply(x, shifts[pick_shift(rng)]);
      RelPath q = perturb(g, rel_geodesic(g, g.multiply(g.invert(q0), q1), q0), pick_detours(rng), rng);
      ++rep.samples;
      if (!connected_components_check(g, q).backtracking_free) {
        ++rep.rejected;
        continue;
      }
      auto lam = quasigeodesic_lambda(g, q, c);
      if (!lam || *lam > lambda + 1e-9) {
        ++rep.rejected;
        continue;
      }
      auto v = bcp_values(g, p, q);
      std::int64_t e = std::max({v.i, v.ii, v.iii});
      if (e > rep.epsilon) rep.witness = x;
      rep.epsilon = std::max(rep.epsilon, e);
      rep.clause_i = std::max(rep.clause_i, v.i);
      rep.clause_ii = std::max(rep.clause_ii, v.ii);
      rep.clause_iii = std::max(rep.clause_iii, v.iii);
    }
  }
  return rep;
}

}  // namespace relsep
