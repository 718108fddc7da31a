#pragma once

// Folded subgroup graphs for subgroups of sandbox free products.
//
// Every factor is split into "atoms": a free-abelian or finite factor is one
// atom, a free factor of rank k is k infinite-cyclic atoms. A vertex is a
// right coset Hx. For each atom a vertex belongs to at most one cluster; a
// cluster is a partial picture of the atom acting on cosets: each member
// vertex carries a position in the atom, and the cluster carries a subgroup
// L of the atom such that the atom element a moves the member at position p
// to the member at position p*a, positions being read modulo L (right
// cosets L*p). Folding makes this deterministic, after which a normal form
// is an element of H iff it reads a closed path at the basepoint.

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include "relsep/error.hpp"
#include "relsep/group.hpp"
#include "relsep/lattice.hpp"

namespace relsep {

struct Atom {
  int factor = 0;
  int letter = -1;  // free-factor letter, -1 otherwise
  bool finite = false;
  int rank = 1;     // lattice atoms
};

struct AtomSyllable {
  int atom = 0;
  Vec pos;  // lattice vector, or {index} for finite atoms
};

inline std::vector<Atom> atoms_of(const MarkedGroup& g) {
  std::vector<Atom> out;
  for (int i = 0; i < g.factor_count(); ++i) {
    const auto& f = g.factor(i);
    switch (f.kind) {
      case Factor::Kind::free_abelian: out.push_back({i, -1, false, f.rank}); break;
      case Factor::Kind::free:
        for (int j = 0; j < f.rank; ++j) out.push_back({i, j, false, 1});
        break;
      case Factor::Kind::finite: out.push_back({i, -1, true, 0}); break;
    }
  }
  return out;
}

namespace detail {

/// Subgroup of a finite factor generated by `gens`, as a sorted element list.
inline std::vector<int> finite_closure(const Factor& f, const std::vector<int>& gens) {
  std::vector<char> in(f.order(), 0);
  std::vector<int> elems{f.identity};
  in[f.identity] = 1;
  for (std::size_t k = 0; k < elems.size(); ++k)
    for (int s : gens) {
      int x = f.table[elems[k]][s];
      if (!in[x]) {
        in[x] = 1;
        elems.push_back(x);
      }
    }
  std::sort(elems.begin(), elems.end());
  return elems;
}

}  // namespace detail

class FoldedSubgroup {
 public:
  struct Cluster {
    int atom = 0;
    Lattice lattice;             // lattice atoms
    std::vector<int> finite_sub;  // finite atoms, sorted
    std::vector<std::pair<int, Vec>> members;
    bool alive = true;
  };

  FoldedSubgroup() = default;

  FoldedSubgroup(const MarkedGroup& g, const SubgroupSpec& h) : group_(&g), atoms_(atoms_of(g)) {
    atom_lookup_.assign(g.factor_count(), {});
    for (std::size_t a = 0; a < atoms_.size(); ++a) {
      auto& slot = atom_lookup_[atoms_[a].factor];
      slot.push_back(static_cast<int>(a));
    }
    parent_.push_back(0);  // basepoint
    for (const auto& gen : h.generators) add_loop(gen);
    for (const auto& b : h.blocks) add_block(b);
    fold();
    core();
  }

  const MarkedGroup& group() const { return *group_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  int basepoint() const { return 0; }
  int vertex_count() const { return static_cast<int>(parent_.size()); }
  const std::vector<Cluster>& clusters() const { return clusters_; }

  int atom_of(int factor, int letter) const {
    const auto& slot = atom_lookup_.at(factor);
    return slot.at(letter < 0 ? 0 : letter);
  }

  std::vector<AtomSyllable> atom_syllables(const NormalForm& g) const {
    std::vector<AtomSyllable> out;
    for (const auto& s : g.syllables) {
      const auto& f = group_->factor(s.factor);
      if (f.kind != Factor::Kind::free) {
        out.push_back({atom_of(s.factor, -1), s.elem});
        continue;
      }
      std::size_t i = 0;
      while (i < s.elem.size()) {
        std::size_t j = i;
        while (j < s.elem.size() && s.elem[j] == s.elem[i]) ++j;
        auto x = s.elem[i];
        out.push_back({atom_of(s.factor, static_cast<int>(std::llabs(x) - 1)),
                       Vec{(x > 0 ? 1 : -1) * static_cast<std::int64_t>(j - i)}});
        i = j;
      }
    }
    return out;
  }

  NormalForm atom_element(int atom, const Vec& pos) const {
    const Atom& a = atoms_[atom];
    if (a.letter < 0) return group_->syllable(a.factor, pos);
    FactorElem w(static_cast<std::size_t>(std::llabs(pos[0])), pos[0] > 0 ? a.letter + 1 : -(a.letter + 1));
    return group_->syllable(a.factor, w);
  }

  /// End vertex of reading g from `start`, or nullopt when it leaves the graph.
  std::optional<int> read(int start, const NormalForm& g) const {
    int v = start;
    for (const auto& s : atom_syllables(g)) {
      auto next = step(v, s.atom, s.pos);
      if (!next) return std::nullopt;
      v = *next;
    }
    return v;
  }

  bool contains(const NormalForm& g) const {
    auto end = read(basepoint(), g);
    return end && *end == basepoint();
  }

  /// Index of the first atom syllable at which reading from the basepoint fails.
  std::optional<std::size_t> failure_position(const NormalForm& g) const {
    int v = basepoint();
    auto syl = atom_syllables(g);
    for (std::size_t k = 0; k < syl.size(); ++k) {
      auto next = step(v, syl[k].atom, syl[k].pos);
      if (!next) return k;
      v = *next;
    }
    return std::nullopt;
  }

  std::optional<int> step(int v, int atom, const Vec& move) const {
    auto it = vertex_clusters_.at(v).find(atom);
    if (it == vertex_clusters_.at(v).end()) return std::nullopt;
    const auto& [cid, pos] = it->second;
    const Cluster& c = clusters_[cid];
    auto target = key(c, act(c, pos, move));
    auto hit = cluster_index_[cid].find(target);
    if (hit == cluster_index_[cid].end()) return std::nullopt;
    return hit->second;
  }

  /// Atom -> (cluster id, position) for every cluster through v.
  const std::map<int, std::pair<int, Vec>>& memberships(int v) const { return vertex_clusters_.at(v); }

  /// Cluster id and position of v for an atom.
  std::optional<std::pair<int, Vec>> membership(int v, int atom) const {
    auto it = vertex_clusters_.at(v).find(atom);
    if (it == vertex_clusters_.at(v).end()) return std::nullopt;
    return it->second;
  }

  bool group_trivial(const Cluster& c) const {
    return atoms_[c.atom].finite ? c.finite_sub.size() == 1 : c.lattice.is_zero();
  }

  /// One path label from the basepoint to each vertex, and the BFS order.
  std::vector<NormalForm> addresses(std::vector<int>* order = nullptr) const {
    std::vector<std::optional<NormalForm>> addr(vertex_count());
    std::vector<int> rank(vertex_count(), -1);
    addr[0] = NormalForm{};
    rank[0] = 0;
    int next = 1;
    std::deque<int> queue{0};
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      for (const auto& [atom, cp] : vertex_clusters_[v]) {
        const Cluster& c = clusters_[cp.first];
        for (const auto& [w, q] : c.members) {
          if (addr[w]) continue;
          addr[w] = group_->multiply(*addr[v], atom_element(atom, move_between(c, cp.second, q)));
          rank[w] = next++;
          queue.push_back(w);
        }
      }
    }
    if (order) *order = rank;
    std::vector<NormalForm> out;
    for (auto& a : addr) out.push_back(a.value_or(NormalForm{}));
    return out;
  }

  /// Intersection H with t * P_factor * t^-1, expressed inside P_factor in the
  /// frame of t: returns the set t^-1 (H cap t P t^-1) t. Lattice for
  /// free-abelian factors; element list for finite factors.
  struct PeripheralIntersection {
    int factor = 0;
    Lattice lattice;
    std::vector<int> finite_elems;
  };

  PeripheralIntersection peripheral_intersection(const NormalForm& t, int factor) const {
    const auto& f = group_->factor(factor);
    require(f.kind != Factor::Kind::free, ErrorKind::precondition, "peripheral intersection needs an abelian or finite factor");
    PeripheralIntersection out;
    out.factor = factor;
    const bool fin = f.kind == Factor::Kind::finite;
    if (fin)
      out.finite_elems = {f.identity};
    else
      out.lattice = Lattice::zero(static_cast<std::size_t>(f.rank));
    NormalForm prefix = group_->coset_prefix(t, factor);
    FactorElem offset = group_->coset_offset(t, factor);
    auto v = read(basepoint(), prefix);
    if (!v) return out;
    auto m = membership(*v, atom_of(factor, -1));
    if (!m) return out;
    const Cluster& c = clusters_[m->first];
    if (!fin) {
      out.lattice = c.lattice;
      return out;
    }
    // loops at v: pos^-1 L pos; conjugated into t's frame by the offset
    int p = static_cast<int>(m->second[0]);
    int x = f.table[p][static_cast<int>(offset[0])];
    std::vector<int> k;
    for (int l : c.finite_sub) k.push_back(f.table[f.table[f.inverse[x]][l]][x]);
    std::sort(k.begin(), k.end());
    out.finite_elems = k;
    return out;
  }

  struct ClusterDatum {
    int factor = 0;
    NormalForm conjugator;
    Lattice lattice;
    std::vector<int> finite_elems;
    int cluster = 0;
  };

  /// One entry per cluster with nontrivial group in a non-free factor: the
  /// representatives of nontrivial intersections with factor conjugates.
  std::vector<ClusterDatum> cluster_groups() const {
    std::vector<int> order;
    auto addr = addresses(&order);
    std::vector<ClusterDatum> out;
    for (std::size_t ci = 0; ci < clusters_.size(); ++ci) {
      const Cluster& c = clusters_[ci];
      const Atom& a = atoms_[c.atom];
      if (!c.alive || a.letter >= 0 || group_trivial(c)) continue;
      // the member reached first is entered through another atom, so its
      // address does not end in this factor
      auto [v, pos] = *std::min_element(c.members.begin(), c.members.end(),
                                        [&](const auto& x, const auto& y) { return order[x.first] < order[y.first]; });
      ClusterDatum d;
      d.factor = a.factor;
      d.cluster = static_cast<int>(ci);
      if (a.finite) {
        const auto& f = group_->factor(a.factor);
        int p = static_cast<int>(pos[0]);
        for (int l : c.finite_sub) d.finite_elems.push_back(f.table[f.table[f.inverse[p]][l]][p]);
        std::sort(d.finite_elems.begin(), d.finite_elems.end());
        d.conjugator = addr[v];
      } else {
        d.lattice = c.lattice;
        d.conjugator = addr[v];
      }
      out.push_back(std::move(d));
    }
    return out;
  }

  /// Appends the path reading g from the basepoint, creating vertices where
  /// the reading leaves the graph; returns the end vertex. Refolds but does
  /// not trim, so the new branch survives.
  int add_path(const NormalForm& g) {
    int v = 0;
    auto syl = atom_syllables(g);
    std::size_t k = 0;
    for (; k < syl.size(); ++k) {
      auto next = step(v, syl[k].atom, syl[k].pos);
      if (!next) break;
      v = *next;
    }
    for (; k < syl.size(); ++k) {
      int w = new_vertex();
      auto m = membership(v, syl[k].atom);
      if (m) {
        Cluster& c = clusters_[m->first];
        c.members.push_back({w, act(c, m->second, syl[k].pos)});
      } else {
        Cluster c = empty_cluster(syl[k].atom);
        c.members = {{v, zero_pos(syl[k].atom)}, {w, syl[k].pos}};
        clusters_.push_back(std::move(c));
      }
      reindex();
      v = w;
    }
    fold();
    return *read(basepoint(), g);
  }

  // Low-level access for covering-space completion.
  std::vector<Cluster>& mutable_clusters() { return clusters_; }
  int new_vertex() {
    parent_.push_back(static_cast<int>(parent_.size()));
    vertex_clusters_.emplace_back();
    return static_cast<int>(parent_.size()) - 1;
  }
  void reindex() { rebuild_index(); }

  Cluster empty_cluster(int atom) const {
    Cluster c;
    c.atom = atom;
    if (atoms_[atom].finite)
      c.finite_sub = {group_->factor(atoms_[atom].factor).identity};
    else
      c.lattice = Lattice::zero(static_cast<std::size_t>(atoms_[atom].rank));
    return c;
  }

  Vec zero_pos(int atom) const {
    if (atoms_[atom].finite) return {group_->factor(atoms_[atom].factor).identity};
    return Vec(static_cast<std::size_t>(atoms_[atom].rank), 0);
  }

  Vec key(const Cluster& c, const Vec& pos) const {
    if (!atoms_[c.atom].finite) return c.lattice.reduce(pos);
    const auto& f = group_->factor(atoms_[c.atom].factor);
    int best = f.order();
    for (int l : c.finite_sub) best = std::min(best, f.table[l][static_cast<int>(pos[0])]);
    return {best};
  }

  Vec act(const Cluster& c, const Vec& pos, const Vec& move) const {
    if (!atoms_[c.atom].finite) return add(pos, move);
    const auto& f = group_->factor(atoms_[c.atom].factor);
    return {f.table[static_cast<int>(pos[0])][static_cast<int>(move[0])]};
  }

  /// Atom element a with p * a = q.
  Vec move_between(const Cluster& c, const Vec& p, const Vec& q) const {
    if (!atoms_[c.atom].finite) return sub(q, p);
    const auto& f = group_->factor(atoms_[c.atom].factor);
    return {f.table[f.inverse[static_cast<int>(p[0])]][static_cast<int>(q[0])]};
  }

  /// Hop distance from each vertex back to the basepoint.
  std::vector<int> hops_to_base() const {
    std::vector<int> d(vertex_count(), -1);
    d[0] = 0;
    std::deque<int> queue{0};
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      for (const auto& [atom, cp] : vertex_clusters_[v])
        for (const auto& [w, q] : clusters_[cp.first].members)
          if (d[w] < 0) {
            d[w] = d[v] + 1;
            queue.push_back(w);
          }
    }
    return d;
  }

 private:
  int find(int v) {
    while (parent_[v] != v) v = parent_[v] = parent_[parent_[v]];
    return v;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

  void add_syllable_edge(int from, int to, const AtomSyllable& s) {
    Cluster c = empty_cluster(s.atom);
    c.members = {{from, zero_pos(s.atom)}, {to, s.pos}};
    clusters_.push_back(std::move(c));
  }

  void add_loop(const NormalForm& g) {
    auto syl = atom_syllables(g);
    if (syl.empty()) return;
    int v = 0;
    for (std::size_t k = 0; k < syl.size(); ++k) {
      int w = (k + 1 == syl.size()) ? 0 : static_cast<int>(parent_.size());
      if (w != 0) parent_.push_back(w);
      add_syllable_edge(v, w, syl[k]);
      v = w;
    }
  }

  void add_block(const SubgroupSpec::Block& b) {
    const auto& f = group_->factor(b.factor);
    require(f.kind == Factor::Kind::free_abelian && static_cast<int>(b.lattice.ambient_rank()) == f.rank,
            ErrorKind::malformed_input, "lattice block must live in a free-abelian factor of matching rank");
    int v = 0;
    for (const auto& s : atom_syllables(b.conjugator)) {
      int w = static_cast<int>(parent_.size());
      parent_.push_back(w);
      add_syllable_edge(v, w, s);
      v = w;
    }
    Cluster c = empty_cluster(atom_of(b.factor, -1));
    c.lattice = b.lattice;
    c.members = {{v, zero_pos(c.atom)}};
    clusters_.push_back(std::move(c));
  }

  void merge_clusters(int keep, int drop, int v) {
    Cluster& a = clusters_[keep];
    Cluster& b = clusters_[drop];
    Vec pa, pb;
    for (auto& [w, p] : a.members)
      if (w == v) pa = p;
    for (auto& [w, p] : b.members)
      if (w == v) pb = p;
    if (!atoms_[a.atom].finite) {
      Vec shift = sub(pa, pb);
      for (auto& [w, p] : b.members) a.members.push_back({w, add(p, shift)});
      a.lattice = sum(a.lattice, b.lattice);
    } else {
      const auto& f = group_->factor(atoms_[a.atom].factor);
      int x = f.table[static_cast<int>(pa[0])][f.inverse[static_cast<int>(pb[0])]];
      for (auto& [w, p] : b.members) a.members.push_back({w, {f.table[x][static_cast<int>(p[0])]}});
      std::vector<int> gens = a.finite_sub;
      for (int h : b.finite_sub) gens.push_back(f.table[f.table[x][h]][f.inverse[x]]);
      a.finite_sub = detail::finite_closure(f, gens);
    }
    b.alive = false;
    b.members.clear();
  }

  void enlarge(Cluster& c, const Vec& p, const Vec& q) {
    if (!atoms_[c.atom].finite) {
      c.lattice = add_generator(c.lattice, sub(q, p));
    } else {
      const auto& f = group_->factor(atoms_[c.atom].factor);
      std::vector<int> gens = c.finite_sub;
      gens.push_back(f.table[static_cast<int>(q[0])][f.inverse[static_cast<int>(p[0])]]);
      c.finite_sub = detail::finite_closure(f, gens);
    }
  }

  // One folding move; false when already folded.
  bool fold_once() {
    for (auto& c : clusters_)
      for (auto& m : c.members) m.first = find(m.first);
    std::map<std::pair<int, int>, int> seen;
    for (std::size_t ci = 0; ci < clusters_.size(); ++ci) {
      if (!clusters_[ci].alive) continue;
      for (const auto& [v, p] : clusters_[ci].members) {
        auto [it, fresh] = seen.insert({{v, clusters_[ci].atom}, static_cast<int>(ci)});
        if (!fresh && it->second != static_cast<int>(ci)) {
          merge_clusters(it->second, static_cast<int>(ci), v);
          return true;
        }
      }
    }
    for (auto& c : clusters_) {
      if (!c.alive) continue;
      std::map<int, Vec> pos_of;
      for (std::size_t k = 0; k < c.members.size(); ++k) {
        auto [v, p] = c.members[k];
        auto it = pos_of.find(v);
        if (it == pos_of.end()) {
          pos_of[v] = p;
          continue;
        }
        if (key(c, it->second) != key(c, p)) enlarge(c, it->second, p);
        c.members.erase(c.members.begin() + static_cast<std::ptrdiff_t>(k));
        return true;
      }
      std::map<Vec, int> by_key;
      for (const auto& [v, p] : c.members) {
        auto [it, fresh] = by_key.insert({key(c, p), v});
        if (!fresh && it->second != v) {
          unite(it->second, v);
          return true;
        }
      }
    }
    return false;
  }

  void fold() {
    while (fold_once()) {
    }
    compact();
  }

  // Drops vertices other than the basepoint that lie in at most one cluster,
  // and clusters that carry no information.
  void core() {
    while (true) {
      std::vector<int> count(parent_.size(), 0);
      for (const auto& c : clusters_)
        if (c.alive)
          for (const auto& m : c.members) ++count[m.first];
      bool changed = false;
      for (auto& c : clusters_) {
        if (!c.alive) continue;
        auto before = c.members.size();
        std::erase_if(c.members, [&](const auto& m) { return m.first != 0 && count[m.first] <= 1; });
        changed = changed || c.members.size() != before;
        if (c.members.empty() || (c.members.size() == 1 && group_trivial(c))) {
          c.alive = false;
          c.members.clear();
          changed = true;
        }
      }
      if (!changed) break;
    }
    compact();
  }

  void compact() {
    std::vector<int> used(parent_.size(), 0);
    used[find(0)] = 1;
    for (auto& c : clusters_)
      if (c.alive)
        for (auto& m : c.members) used[m.first = find(m.first)] = 1;
    std::vector<int> remap(parent_.size(), -1);
    int next = 0;
    remap[find(0)] = next++;
    for (std::size_t v = 0; v < parent_.size(); ++v)
      if (used[v] && remap[v] < 0) remap[v] = next++;
    std::vector<Cluster> kept;
    for (auto& c : clusters_)
      if (c.alive) {
        for (auto& m : c.members) m.first = remap[m.first];
        kept.push_back(std::move(c));
      }
    clusters_ = std::move(kept);
    parent_.resize(static_cast<std::size_t>(next));
    std::iota(parent_.begin(), parent_.end(), 0);
    rebuild_index();
  }

  void rebuild_index() {
    vertex_clusters_.assign(parent_.size(), {});
    cluster_index_.assign(clusters_.size(), {});
    for (std::size_t ci = 0; ci < clusters_.size(); ++ci) {
      const auto& c = clusters_[ci];
      if (!c.alive) continue;
      for (const auto& [v, p] : c.members) {
        vertex_clusters_[v][c.atom] = {static_cast<int>(ci), p};
        cluster_index_[ci][key(c, p)] = v;
      }
    }
  }

  const MarkedGroup* group_ = nullptr;
  std::vector<Atom> atoms_;
  std::vector<std::vector<int>> atom_lookup_;
  std::vector<int> parent_;
  std::vector<Cluster> clusters_;
  std::vector<std::map<int, std::pair<int, Vec>>> vertex_clusters_;
  std::vector<std::map<Vec, int>> cluster_index_;
};

}  // namespace relsep
