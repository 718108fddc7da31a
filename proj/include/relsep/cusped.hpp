#pragma once

// Finite balls in the cusped space: the Cayley ball of radius r with a
// truncated combinatorial horoball glued along every peripheral coset.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "relsep/enumerate.hpp"
#include "relsep/graph.hpp"
#include "relsep/group.hpp"
#include "relsep/horoball.hpp"

namespace relsep {

struct CuspedVertex {
  int element = 0;   // index into CuspedBall::elements
  int coset = -1;    // index into CuspedBall::cosets; -1 at depth 0
  int depth = 0;
};

struct PeripheralCoset {
  int factor = 0;
  NormalForm prefix;  // canonical coset id
  std::vector<int> members;  // element indices
};

struct CuspedBall {
  const MarkedGroup* group = nullptr;
  std::int64_t radius = 0;
  int max_depth = 0;
  std::vector<NormalForm> elements;
  ElementMap<int> element_index;
  std::vector<PeripheralCoset> cosets;
  std::vector<CuspedVertex> vertices;
  Graph graph;

  int depth0(int element) const { return element; }  // depth-0 vertices come first

  std::vector<int> depth0_vertices() const {
    std::vector<int> out(elements.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<int>(k);
    return out;
  }

  /// Vertex of element e at the given depth inside the horoball of coset c.
  int vertex_at(int coset, int element, int depth) const {
    if (depth == 0) return element;
    auto it = horo_index.find({coset, element, depth});
    return it == horo_index.end() ? -1 : it->second;
  }

  std::map<std::tuple<int, int, int>, int> horo_index;
};

/// Distance in the factor between two elements of the same coset.
inline std::int64_t coset_distance(const MarkedGroup& g, int factor, const FactorElem& a, const FactorElem& b) {
  const Factor& f = g.factor(factor);
  return f.length(f.mul(f.inv(a), b));
}

/// Depth that preserves distances between depth-0 points of a radius-r ball.
inline int default_max_depth(std::int64_t r) {
  return static_cast<int>(std::ceil(std::log2(2.0 * static_cast<double>(std::max<std::int64_t>(r, 1))))) + 2;
}

inline CuspedBall build_cusped_ball(const MarkedGroup& g, std::int64_t r, int max_depth,
                                    std::size_t budget = default_budget) {
  require(r >= 1, ErrorKind::precondition, "cusped ball radius must be at least 1");
  require(max_depth >= 0 && max_depth < 62, ErrorKind::precondition, "depth out of range");
  CuspedBall x;
  x.group = &g;
  x.radius = r;
  x.max_depth = max_depth;
  x.elements = ball(g, r, budget);
  for (std::size_t k = 0; k < x.elements.size(); ++k) x.element_index[x.elements[k]] = static_cast<int>(k);
  for (std::size_t k = 0; k < x.elements.size(); ++k) x.vertices.push_back({static_cast<int>(k), -1, 0});

  std::map<std::pair<int, NormalForm>, int> coset_of;
  for (int i : g.peripheral_indices())
    for (std::size_t k = 0; k < x.elements.size(); ++k) {
      auto key = std::make_pair(i, g.coset_prefix(x.elements[k], i));
      auto [it, fresh] = coset_of.insert({key, static_cast<int>(x.cosets.size())});
      if (fresh) x.cosets.push_back({i, key.second, {}});
      x.cosets[it->second].members.push_back(static_cast<int>(k));
    }

  for (std::size_t c = 0; c < x.cosets.size(); ++c)
    for (int e : x.cosets[c].members)
      for (int n = 1; n <= max_depth; ++n) {
        x.horo_index[{static_cast<int>(c), e, n}] = static_cast<int>(x.vertices.size());
        x.vertices.push_back({e, static_cast<int>(c), n});
      }
  require(x.vertices.size() < budget, ErrorKind::budget_exceeded, "cusped ball exceeded its budget");

  x.graph = Graph(static_cast<int>(x.vertices.size()));
  for (std::size_t k = 0; k < x.elements.size(); ++k)
    for (const auto& s : g.generators()) {
      NormalForm y = x.elements[k];
      g.append(y, s.factor, s.elem);
      auto it = x.element_index.find(y);
      if (it != x.element_index.end()) x.graph.add_edge(static_cast<int>(k), it->second);
    }
  for (std::size_t c = 0; c < x.cosets.size(); ++c) {
    const auto& cs = x.cosets[c];
    const int ci = static_cast<int>(c);
    for (int e : cs.members)
      for (int n = 0; n < max_depth; ++n) x.graph.add_edge(x.vertex_at(ci, e, n), x.vertex_at(ci, e, n + 1));
    for (std::size_t a = 0; a < cs.members.size(); ++a)
      for (std::size_t b = a + 1; b < cs.members.size(); ++b) {
        int ea = cs.members[a], eb = cs.members[b];
        auto d = coset_distance(g, cs.factor, g.coset_offset(x.elements[ea], cs.factor),
                                g.coset_offset(x.elements[eb], cs.factor));
        for (int n = 1; n <= max_depth; ++n)
          if (d <= pow2(n)) x.graph.add_edge(x.vertex_at(ci, ea, n), x.vertex_at(ci, eb, n));
      }
  }
  x.graph.finalize();
  return x;
}

/// Deletes every vertex of depth greater than n.
inline CuspedBall truncate(const CuspedBall& x, int n) {
  require(n >= 0 && n <= x.max_depth, ErrorKind::precondition, "truncation depth out of range");
  CuspedBall y;
  y.group = x.group;
  y.radius = x.radius;
  y.max_depth = n;
  y.elements = x.elements;
  y.element_index = x.element_index;
  y.cosets = x.cosets;
  std::vector<int> remap(x.vertices.size(), -1);
  for (std::size_t v = 0; v < x.vertices.size(); ++v)
    if (x.vertices[v].depth <= n) {
      remap[v] = static_cast<int>(y.vertices.size());
      y.vertices.push_back(x.vertices[v]);
      if (x.vertices[v].depth > 0)
        y.horo_index[{x.vertices[v].coset, x.vertices[v].element, x.vertices[v].depth}] = remap[v];
    }
  y.graph = Graph(static_cast<int>(y.vertices.size()));
  for (std::size_t v = 0; v < x.vertices.size(); ++v)
    if (remap[v] >= 0)
      for (int w : x.graph.neighbors(static_cast<int>(v)))
        if (remap[w] >= 0 && static_cast<std::size_t>(w) > v) y.graph.add_edge(remap[v], remap[w]);
  y.graph.finalize();
  return y;
}

/// Maximum distance to the complement of the given horoball over the path:
/// a vertex at depth n inside it is exactly n away from depth 0.
inline int penetration_depth(const CuspedBall& x, const std::vector<int>& path, int coset) {
  require(coset >= 0 && coset < static_cast<int>(x.cosets.size()), ErrorKind::precondition, "unknown horoball id");
  int d = 0;
  for (int v : path)
    if (x.vertices[v].coset == coset) d = std::max(d, x.vertices[v].depth);
  return d;
}

inline DeltaReport estimate_delta(const CuspedBall& x, std::size_t samples, std::uint64_t seed) {
  std::vector<int> pool(x.vertices.size());
  for (std::size_t k = 0; k < pool.size(); ++k) pool[k] = static_cast<int>(k);
  return estimate_delta(x.graph, pool, samples, seed);
}

}  // namespace relsep
