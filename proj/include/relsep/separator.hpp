#pragma once

// Finite quotients separating an element from a subgroup: Stallings graphs
// for free groups, permutation completions of folded graphs over free
// products, certificates, and the full pipeline through a Dehn filling.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <unordered_set>
#include <vector>

#include "relsep/combination.hpp"
#include "relsep/filling.hpp"
#include "relsep/subgroup_graph.hpp"

namespace relsep {

using Perm = std::vector<int>;

inline Perm perm_identity(int n) {
  Perm p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  return p;
}

inline Perm perm_inverse(const Perm& p) {
  Perm q(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) q[static_cast<std::size_t>(p[i])] = static_cast<int>(i);
  return q;
}

/// Right action: apply a, then b.
inline Perm perm_then(const Perm& a, const Perm& b) {
  Perm c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = b[static_cast<std::size_t>(a[i])];
  return c;
}

inline bool is_permutation(const Perm& p) {
  std::vector<char> hit(p.size(), 0);
  for (int x : p) {
    if (x < 0 || x >= static_cast<int>(p.size()) || hit[static_cast<std::size_t>(x)]) return false;
    hit[static_cast<std::size_t>(x)] = 1;
  }
  return true;
}

/// Action of a free product on {0, ..., degree-1}. Per factor: one permutation
/// per basis vector (free abelian), per letter (free), or per element (finite).
struct PermRep {
  int degree = 0;
  std::vector<std::vector<Perm>> images;

  Perm syllable(const MarkedGroup& g, const Syllable& s) const {
    const auto& f = g.factor(s.factor);
    const auto& im = images.at(static_cast<std::size_t>(s.factor));
    Perm p = perm_identity(degree);
    switch (f.kind) {
      case Factor::Kind::free_abelian:
        for (std::size_t j = 0; j < s.elem.size(); ++j) {
          Perm step = s.elem[j] >= 0 ? im[j] : perm_inverse(im[j]);
          for (std::int64_t k = 0; k < std::llabs(s.elem[j]); ++k) p = perm_then(p, step);
        }
        break;
      case Factor::Kind::free:
        for (auto l : s.elem) {
          const auto& base = im[static_cast<std::size_t>(std::llabs(l) - 1)];
          p = perm_then(p, l > 0 ? base : perm_inverse(base));
        }
        break;
      case Factor::Kind::finite: p = im[static_cast<std::size_t>(s.elem[0])]; break;
    }
    return p;
  }

  Perm operator()(const MarkedGroup& g, const NormalForm& x) const {
    Perm p = perm_identity(degree);
    for (const auto& s : x.syllables) p = perm_then(p, syllable(g, s));
    return p;
  }

  /// Every image is a permutation and each factor's relations hold.
  bool satisfies_relations(const MarkedGroup& g) const {
    if (static_cast<int>(images.size()) != g.factor_count()) return false;
    for (int i = 0; i < g.factor_count(); ++i) {
      const auto& f = g.factor(i);
      const auto& im = images[static_cast<std::size_t>(i)];
      std::size_t expected = f.kind == Factor::Kind::finite ? static_cast<std::size_t>(f.order())
                                                            : static_cast<std::size_t>(f.rank);
      if (im.size() != expected) return false;
      for (const auto& p : im)
        if (static_cast<int>(p.size()) != degree || !is_permutation(p)) return false;
      if (f.kind == Factor::Kind::free_abelian) {
        for (std::size_t a = 0; a < im.size(); ++a)
          for (std::size_t b = a + 1; b < im.size(); ++b)
            if (perm_then(im[a], im[b]) != perm_then(im[b], im[a])) return false;
      } else if (f.kind == Factor::Kind::finite) {
        if (im[static_cast<std::size_t>(f.identity)] != perm_identity(degree)) return false;
        for (int a = 0; a < f.order(); ++a)
          for (int b = 0; b < f.order(); ++b)
            if (perm_then(im[a], im[b]) != im[static_cast<std::size_t>(f.table[a][b])]) return false;
      }
    }
    return true;
  }
};

// ---------------------------------------------------------------------------
// Stallings graphs for F_k. Letters are +-(j+1).

class SubgroupGraph {
 public:
  SubgroupGraph(int rank, const std::vector<FactorElem>& generators) : rank_(rank) {
    vertices_ = 1;
    for (const auto& w : generators) {
      require(Factor::free("F", rank).valid(w), ErrorKind::malformed_input, "generator is not a reduced word");
      if (!w.empty()) add_word(0, w, true);
    }
    fold();
    trim();
  }

  int rank() const { return rank_; }
  int vertex_count() const { return vertices_; }
  int basepoint() const { return 0; }

  std::optional<int> step(int v, std::int64_t letter) const {
    const auto& t = letter > 0 ? out_ : in_;
    int x = t[static_cast<std::size_t>(v)][static_cast<std::size_t>(std::llabs(letter) - 1)];
    if (x < 0) return std::nullopt;
    return x;
  }

  std::optional<int> read(int v, const FactorElem& w) const {
    for (auto l : w) {
      auto n = step(v, l);
      if (!n) return std::nullopt;
      v = *n;
    }
    return v;
  }

  bool contains(const FactorElem& w) const {
    auto e = read(0, w);
    return e && *e == 0;
  }

  std::size_t edge_count() const { return edges_.size(); }

  /// Adds the path of w from the basepoint and refolds without trimming; returns its end.
  int add_path(const FactorElem& w) {
    int v = 0;
    std::size_t k = 0;
    for (; k < w.size(); ++k) {
      auto n = step(v, w[k]);
      if (!n) break;
      v = *n;
    }
    add_word(v, FactorElem(w.begin() + static_cast<std::ptrdiff_t>(k), w.end()), false);
    fold();
    return *read(0, w);
  }

  /// Completes every partial letter map to a permutation of the vertices.
  PermRep complete() const {
    PermRep rep;
    rep.degree = vertices_;
    rep.images.resize(1);
    for (int j = 0; j < rank_; ++j) {
      Perm p(static_cast<std::size_t>(vertices_), -1);
      std::vector<int> free_targets;
      for (int v = 0; v < vertices_; ++v) {
        p[static_cast<std::size_t>(v)] = out_[static_cast<std::size_t>(v)][static_cast<std::size_t>(j)];
        if (in_[static_cast<std::size_t>(v)][static_cast<std::size_t>(j)] < 0) free_targets.push_back(v);
      }
      std::size_t next = 0;
      for (auto& x : p)
        if (x < 0) x = free_targets[next++];
      rep.images[0].push_back(std::move(p));
    }
    return rep;
  }

 private:
  struct Edge {
    int from, label, to;  // label in 0..rank-1
  };

  void add_word(int start, const FactorElem& w, bool loop) {
    int v = start;
    for (std::size_t k = 0; k < w.size(); ++k) {
      int to = (loop && k + 1 == w.size()) ? start : vertices_++;
      auto l = w[k];
      int j = static_cast<int>(std::llabs(l) - 1);
      if (l > 0)
        edges_.push_back({v, j, to});
      else
        edges_.push_back({to, j, v});
      v = to;
    }
  }

  // Identifies vertices until every label is injective in both directions.
  void fold() {
    std::vector<int> parent(static_cast<std::size_t>(vertices_));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      return x;
    };
    bool changed = true;
    while (changed) {
      changed = false;
      std::map<std::pair<int, int>, int> out, in;
      for (const auto& e : edges_) {
        int a = find(e.from), b = find(e.to);
        auto [io, fo] = out.emplace(std::make_pair(a, e.label), b);
        if (!fo && find(io->second) != b) {
          int x = find(io->second);
          parent[static_cast<std::size_t>(std::max(x, b))] = std::min(x, b);
          changed = true;
          break;
        }
        auto [ii, fi] = in.emplace(std::make_pair(b, e.label), a);
        if (!fi && find(ii->second) != a) {
          int x = find(ii->second);
          parent[static_cast<std::size_t>(std::max(x, a))] = std::min(x, a);
          changed = true;
          break;
        }
      }
    }
    relabel([&](int v) { return find(v); });
  }

  // Removes non-basepoint vertices of degree at most one.
  void trim() {
    while (true) {
      std::vector<int> degree(static_cast<std::size_t>(vertices_), 0);
      for (const auto& e : edges_) {
        ++degree[static_cast<std::size_t>(e.from)];
        ++degree[static_cast<std::size_t>(e.to)];
      }
      std::vector<Edge> kept;
      for (const auto& e : edges_) {
        bool dead = (e.from != 0 && degree[static_cast<std::size_t>(e.from)] <= 1) ||
                    (e.to != 0 && degree[static_cast<std::size_t>(e.to)] <= 1);
        if (!dead) kept.push_back(e);
      }
      if (kept.size() == edges_.size()) break;
      edges_ = std::move(kept);
    }
    relabel([](int v) { return v; });
  }

  // Applies a vertex map, drops duplicate edges and isolated vertices, renumbers.
  template <class F>
  void relabel(F map) {
    std::set<std::tuple<int, int, int>> uniq;
    for (const auto& e : edges_) uniq.insert({map(e.from), e.label, map(e.to)});
    std::vector<int> ids(static_cast<std::size_t>(vertices_), -1);
    int next = 0;
    ids[static_cast<std::size_t>(map(0))] = next++;
    for (const auto& [a, l, b] : uniq)
      for (int v : {a, b})
        if (ids[static_cast<std::size_t>(v)] < 0) ids[static_cast<std::size_t>(v)] = next++;
    edges_.clear();
    for (const auto& [a, l, b] : uniq) edges_.push_back({ids[static_cast<std::size_t>(a)], l, ids[static_cast<std::size_t>(b)]});
    vertices_ = next;
    out_.assign(static_cast<std::size_t>(vertices_), std::vector<int>(static_cast<std::size_t>(rank_), -1));
    in_ = out_;
    for (const auto& e : edges_) {
      out_[static_cast<std::size_t>(e.from)][static_cast<std::size_t>(e.label)] = e.to;
      in_[static_cast<std::size_t>(e.to)][static_cast<std::size_t>(e.label)] = e.from;
    }
  }

  int rank_;
  int vertices_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_, in_;
};

inline SubgroupGraph stallings_fold(int rank, const std::vector<FactorElem>& generators) {
  return SubgroupGraph(rank, generators);
}

/// The free group of the given rank as a one-factor marked group.
inline MarkedGroup free_group(int rank) { return MarkedGroup({Factor::free("F", rank)}, {}); }

/// A finite action in which H fixes the basepoint and g does not.
inline PermRep hall_separate(const SubgroupGraph& h, const FactorElem& g) {
  require(!h.contains(g), ErrorKind::precondition, "the element lies in the subgroup");
  SubgroupGraph cover = h;
  cover.add_path(g);
  auto rep = cover.complete();
  auto f = free_group(h.rank());
  require(rep.satisfies_relations(f), ErrorKind::verification_failed, "completion is not a permutation action");
  NormalForm x;
  if (!g.empty()) x.syllables.push_back({0, g});
  require(rep(f, x)[0] != 0, ErrorKind::verification_failed, "completed action does not move the basepoint");
  return rep;
}

// ---------------------------------------------------------------------------
// Permutation completion over free products with finite, free and abelian factors.

/// Completes the folded graph of H with the path of x into a finite action:
/// partial orbits are closed up, and vertices missing a factor become fixed points.
inline PermRep fp_separate(const MarkedGroup& g, const SubgroupSpec& h, const NormalForm& x,
                           std::size_t degree_bound = 200000) {
  FoldedSubgroup graph(g, h);
  require(!graph.contains(x), ErrorKind::precondition, "the element lies in the subgroup");
  graph.add_path(x);
  const auto& atoms = graph.atoms();
  auto& clusters = graph.mutable_clusters();
  const std::size_t original = clusters.size();
  for (std::size_t ci = 0; ci < original; ++ci) {
    if (!clusters[ci].alive) continue;
    auto c = clusters[ci];
    const Atom& atom = atoms[static_cast<std::size_t>(c.atom)];
    std::set<Vec> present;
    std::vector<Vec> positions;
    for (const auto& [v, p] : c.members) {
      present.insert(graph.key(c, p));
      positions.push_back(p);
    }
    std::vector<Vec> missing;
    if (atom.finite) {
      const auto& f = g.factor(atom.factor);
      for (int e = 0; e < f.order(); ++e) {
        auto k = graph.key(c, {e});
        if (present.insert(k).second) missing.push_back(k);
      }
    } else {
      if (!c.lattice.is_full_rank()) {
        std::vector<Vec> diffs;
        for (std::size_t a = 0; a < positions.size(); ++a)
          for (std::size_t b = a + 1; b < positions.size(); ++b) diffs.push_back(sub(positions[a], positions[b]));
        c.lattice = separate(c.lattice, diffs);
        present.clear();
        for (const auto& p : positions) present.insert(graph.key(c, p));
      }
      require(c.lattice.index().value_or(0) <= static_cast<std::int64_t>(degree_bound), ErrorKind::budget_exceeded,
              "orbit size exceeds the degree bound");
      for (const auto& r : c.lattice.coset_representatives()) {
        auto k = graph.key(c, r);
        if (present.insert(k).second) missing.push_back(k);
      }
    }
    require(static_cast<std::size_t>(graph.vertex_count()) + missing.size() <= degree_bound,
            ErrorKind::budget_exceeded, "permutation degree exceeds the bound");
    for (const auto& k : missing) c.members.push_back({graph.new_vertex(), k});
    clusters[ci] = std::move(c);
  }
  graph.reindex();
  for (int v = 0; v < graph.vertex_count(); ++v)
    for (std::size_t a = 0; a < atoms.size(); ++a)
      if (!graph.membership(v, static_cast<int>(a))) {
        auto c = graph.empty_cluster(static_cast<int>(a));
        if (atoms[a].finite) {
          std::vector<int> all(static_cast<std::size_t>(g.factor(atoms[a].factor).order()));
          std::iota(all.begin(), all.end(), 0);
          c.finite_sub = all;
        } else {
          c.lattice = Lattice::full(static_cast<std::size_t>(atoms[a].rank));
        }
        c.members = {{v, graph.zero_pos(static_cast<int>(a))}};
        clusters.push_back(std::move(c));
      }
  graph.reindex();

  PermRep rep;
  rep.degree = graph.vertex_count();
  rep.images.resize(static_cast<std::size_t>(g.factor_count()));
  auto perm_of = [&](int atom, const Vec& move) {
    Perm p(static_cast<std::size_t>(rep.degree));
    for (int v = 0; v < rep.degree; ++v) {
      auto w = graph.step(v, atom, move);
      require(w.has_value(), ErrorKind::verification_failed, "completion left a partial orbit");
      p[static_cast<std::size_t>(v)] = *w;
    }
    return p;
  };
  for (int i = 0; i < g.factor_count(); ++i) {
    const auto& f = g.factor(i);
    auto& im = rep.images[static_cast<std::size_t>(i)];
    switch (f.kind) {
      case Factor::Kind::free_abelian:
        for (int j = 0; j < f.rank; ++j) {
          Vec e(static_cast<std::size_t>(f.rank), 0);
          e[static_cast<std::size_t>(j)] = 1;
          im.push_back(perm_of(graph.atom_of(i, -1), e));
        }
        break;
      case Factor::Kind::free:
        for (int j = 0; j < f.rank; ++j) im.push_back(perm_of(graph.atom_of(i, j), {1}));
        break;
      case Factor::Kind::finite:
        for (int e = 0; e < f.order(); ++e) im.push_back(perm_of(graph.atom_of(i, -1), {e}));
        break;
    }
  }
  require(rep.satisfies_relations(g), ErrorKind::verification_failed, "completed action violates a factor relation");
  for (const auto& s : h.all_generators(g))
    require(rep(g, s)[0] == 0, ErrorKind::verification_failed, "a subgroup generator moves the basepoint");
  require(rep(g, x)[0] != 0, ErrorKind::verification_failed, "the element fixes the basepoint");
  return rep;
}

// ---------------------------------------------------------------------------
// Certificates.

struct FiniteQuotientCertificate {
  MarkedGroup group;
  FillingKernels kernels;
  PermRep rep;                   // action of the filled group
  NormalForm element;
  std::vector<NormalForm> subgroup_generators;
  Perm element_image;
  std::vector<Perm> generator_images;
  std::vector<std::string> transcript;
};

struct VerifyReport {
  bool valid = false;
  std::string reason;
  std::optional<std::size_t> closure_order;  // order of the image of Q, when enumerated
};

/// Order of the permutation group generated by gens, if at most `limit`, and
/// whether `target` lies in it.
inline std::optional<std::pair<std::size_t, bool>> perm_closure(const std::vector<Perm>& gens, const Perm& target,
                                                                int degree, std::size_t limit) {
  struct PermHash {
    std::size_t operator()(const Perm& p) const noexcept {
      std::size_t h = 1469598103934665603ULL;
      for (int x : p) h = (h ^ static_cast<std::size_t>(x)) * 1099511628211ULL;
      return h;
    }
  };
  std::unordered_set<Perm, PermHash> seen{perm_identity(degree)};
  std::vector<Perm> queue{perm_identity(degree)};
  for (std::size_t k = 0; k < queue.size(); ++k)
    for (const auto& s : gens) {
      auto p = perm_then(queue[k], s);
      if (seen.insert(p).second) {
        if (seen.size() > limit) return std::nullopt;
        queue.push_back(std::move(p));
      }
    }
  return std::make_pair(seen.size(), seen.count(target) > 0);
}

/// Pure re-evaluation of phi o pi on the element and the subgroup generators.
inline VerifyReport verify_certificate(const FiniteQuotientCertificate& c, std::size_t closure_limit = 200000) {
  VerifyReport rep;
  try {
    auto pi = fill(c.group, c.kernels);
    const auto& t = pi.target();
    if (!c.rep.satisfies_relations(t)) return {false, "action violates a factor relation", {}};
    if (c.rep.degree < 1) return {false, "empty action", {}};
    auto gi = c.rep(t, pi(c.element));
    if (gi != c.element_image) return {false, "recorded image of the element does not match", {}};
    if (c.generator_images.size() != c.subgroup_generators.size())
      return {false, "generator image count mismatch", {}};
    std::vector<Perm> gens;
    for (std::size_t k = 0; k < c.subgroup_generators.size(); ++k) {
      auto p = c.rep(t, pi(c.subgroup_generators[k]));
      if (p != c.generator_images[k]) return {false, "recorded image of a generator does not match", {}};
      gens.push_back(std::move(p));
    }
    // stabilizer argument: the subgroup fixes 0 and the element does not
    bool stab = std::all_of(gens.begin(), gens.end(), [](const Perm& p) { return p[0] == 0; }) && gi[0] != 0;
    auto closure = perm_closure(gens, gi, c.rep.degree, closure_limit);
    if (closure) {
      rep.closure_order = closure->first;
      if (closure->second) return {false, "the element lies in the image of the subgroup", rep.closure_order};
      rep.valid = true;
      rep.reason = stab ? "basepoint stabilizer and exhaustive closure" : "exhaustive closure";
      return rep;
    }
    if (!stab) return {false, "no stabilizer argument and the closure is too large", {}};
    rep.valid = true;
    rep.reason = "basepoint stabilizer";
  } catch (const Error& e) {
    return {false, std::string("malformed certificate: ") + e.what(), {}};
  }
  return rep;
}

struct SeparateOptions {
  FqcOptions fqc;
  std::int64_t coset_budget = 3;
  int max_b_doublings = 4;
  std::size_t degree_bound = 200000;
};

/// Q -> fully quasiconvex H -> filling by H-filling kernels -> finite action of the quotient.
inline FiniteQuotientCertificate end_to_end_separate(const MarkedGroup& g, const SubgroupSpec& q, const NormalForm& x,
                                                     const SeparateOptions& opt = {}) {
  require(is_member_bounded(g, q, x, opt.fqc.membership_budget).verdict == Verdict::no, ErrorKind::precondition,
          "the element lies in the subgroup");
  FiniteQuotientCertificate cert;
  cert.group = g;
  cert.element = x;
  cert.subgroup_generators = q.all_generators(g);
  auto fq = fully_quasiconvexify(g, q, x, opt.fqc);
  cert.transcript.push_back("fully quasiconvex H after " + std::to_string(fq.steps.size()) + " step(s), " +
                            std::to_string(fq.h.blocks.size()) + " block(s)");
  FoldedSubgroup h(g, fq.h);
  std::int64_t r = g.s_length(x);
  for (const auto& s : cert.subgroup_generators) r = std::max(r, g.s_length(s));
  std::int64_t b = 2 * r + 1;
  for (int attempt = 0;; ++attempt, b *= 2) {
    require(attempt <= opt.max_b_doublings, ErrorKind::budget_exceeded, "no filling separated the element");
    auto kernels = choose_kernels(h, b, std::max(opt.coset_budget, r));
    auto pi = fill(g, kernels);
    auto image = pi.image(fq.h);
    auto gx = pi(x);
    cert.transcript.push_back("B = " + std::to_string(b));
    if (FoldedSubgroup(pi.target(), image).contains(gx)) continue;
    cert.kernels = kernels;
    cert.rep = fp_separate(pi.target(), image, gx, opt.degree_bound);
    cert.transcript.push_back("permutation degree " + std::to_string(cert.rep.degree));
    cert.element_image = cert.rep(pi.target(), gx);
    for (const auto& s : cert.subgroup_generators) cert.generator_images.push_back(cert.rep(pi.target(), pi(s)));
    break;
  }
  require(verify_certificate(cert).valid, ErrorKind::verification_failed, "emitted certificate does not verify");
  return cert;
}

}  // namespace relsep
