#pragma once

// Finite undirected graphs, BFS, and hyperbolicity estimates.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "relsep/error.hpp"

namespace relsep {

class Graph {
 public:
  explicit Graph(int n = 0) : adj_(static_cast<std::size_t>(n)) {}

  int size() const { return static_cast<int>(adj_.size()); }
  int add_vertex() {
    adj_.emplace_back();
    return size() - 1;
  }
  void add_edge(int u, int v) {
    if (u == v) return;
    adj_[u].push_back(v);
    adj_[v].push_back(u);
  }
  /// Sorts and deduplicates adjacency lists; BFS trees are then deterministic.
  void finalize() {
    for (auto& a : adj_) {
      std::sort(a.begin(), a.end());
      a.erase(std::unique(a.begin(), a.end()), a.end());
    }
  }
  const std::vector<int>& neighbors(int v) const { return adj_[v]; }
  bool adjacent(int u, int v) const { return std::binary_search(adj_[u].begin(), adj_[u].end(), v); }
  std::size_t edge_count() const {
    std::size_t e = 0;
    for (const auto& a : adj_) e += a.size();
    return e / 2;
  }

  /// Distances from a set of sources (-1 = unreachable).
  std::vector<int> bfs(const std::vector<int>& sources, std::vector<int>* parent = nullptr) const {
    std::vector<int> d(adj_.size(), -1);
    if (parent) parent->assign(adj_.size(), -1);
    std::deque<int> queue;
    for (int s : sources)
      if (d[s] < 0) {
        d[s] = 0;
        queue.push_back(s);
      }
    while (!queue.empty()) {
      int v = queue.front();
      queue.pop_front();
      for (int w : adj_[v])
        if (d[w] < 0) {
          d[w] = d[v] + 1;
          if (parent) (*parent)[w] = v;
          queue.push_back(w);
        }
    }
    return d;
  }

  std::vector<int> bfs(int source, std::vector<int>* parent = nullptr) const {
    return bfs(std::vector<int>{source}, parent);
  }

  int distance(int u, int v) const {
    int d = bfs(u)[v];
    require(d >= 0, ErrorKind::precondition, "vertices are disconnected");
    return d;
  }

  /// A geodesic from u to v read off the BFS tree rooted at v.
  std::vector<int> geodesic(int u, int v) const {
    std::vector<int> parent;
    auto d = bfs(v, &parent);
    require(d[u] >= 0, ErrorKind::precondition, "vertices are disconnected");
    std::vector<int> path{u};
    while (path.back() != v) path.push_back(parent[path.back()]);
    return path;
  }

 private:
  std::vector<std::vector<int>> adj_;
};

/// Thin-triangle defect of the triangle with the given sides: the least
/// delta such that every side lies in the delta-neighbourhood of the others.
inline int triangle_defect(const Graph& g, const std::vector<int>& ab, const std::vector<int>& bc,
                           const std::vector<int>& ca) {
  const std::vector<int>* sides[3] = {&ab, &bc, &ca};
  int worst = 0;
  for (int s = 0; s < 3; ++s) {
    std::vector<int> others(sides[(s + 1) % 3]->begin(), sides[(s + 1) % 3]->end());
    others.insert(others.end(), sides[(s + 2) % 3]->begin(), sides[(s + 2) % 3]->end());
    auto d = g.bfs(others);
    for (int v : *sides[s]) worst = std::max(worst, d[v]);
  }
  return worst;
}

inline int triangle_defect(const Graph& g, int a, int b, int c) {
  return triangle_defect(g, g.geodesic(a, b), g.geodesic(b, c), g.geodesic(c, a));
}

struct DeltaReport {
  int delta = 0;
  std::size_t samples = 0;
  std::vector<int> witness;  // triangle attaining the maximum
  std::vector<int> running;  // running maximum after each sample
};

/// Max thin-triangle defect over triples drawn uniformly from `pool` with a
/// seeded generator; the first N samples do not depend on the total count.
inline DeltaReport estimate_delta(const Graph& g, const std::vector<int>& pool, std::size_t samples,
                                  std::uint64_t seed) {
  require(samples >= 1, ErrorKind::precondition, "sample count must be positive");
  require(!pool.empty(), ErrorKind::precondition, "empty sample pool");
  DeltaReport rep;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  for (std::size_t k = 0; k < samples; ++k) {
    int a = pool[pick(rng)], b = pool[pick(rng)], c = pool[pick(rng)];
    int d = triangle_defect(g, a, b, c);
    if (d > rep.delta || rep.witness.empty()) {
      rep.delta = std::max(rep.delta, d);
      if (d == rep.delta) rep.witness = {a, b, c};
    }
    rep.running.push_back(rep.delta);
  }
  rep.samples = samples;
  return rep;
}

/// Exhaustive variant over all unordered triples of `pool`.
inline DeltaReport exhaustive_delta(const Graph& g, const std::vector<int>& pool) {
  DeltaReport rep;
  std::vector<std::vector<int>> parent(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) g.bfs(pool[i], &parent[i]);
  auto path = [&](std::size_t from, std::size_t to) {
    std::vector<int> p{pool[from]};
    while (p.back() != pool[to]) p.push_back(parent[to][p.back()]);
    return p;
  };
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j)
      for (std::size_t k = j + 1; k < pool.size(); ++k) {
        int d = triangle_defect(g, path(i, j), path(j, k), path(k, i));
        if (d > rep.delta) {
          rep.delta = d;
          rep.witness = {pool[i], pool[j], pool[k]};
        }
        ++rep.samples;
      }
  return rep;
}

/// Four-point condition constant (doubled, to stay integral) over sampled quadruples.
inline int four_point_delta2(const Graph& g, const std::vector<int>& pool, std::size_t samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  int worst = 0;
  for (std::size_t k = 0; k < samples; ++k) {
    int p[4];
    for (auto& x : p) x = pool[pick(rng)];
    std::vector<std::vector<int>> d;
    for (int x : p) d.push_back(g.bfs(x));
    int s[3] = {d[0][p[1]] + d[2][p[3]], d[0][p[2]] + d[1][p[3]], d[0][p[3]] + d[1][p[2]]};
    std::sort(s, s + 3);
    worst = std::max(worst, s[2] - s[1]);
  }
  return worst;
}

}  // namespace relsep
