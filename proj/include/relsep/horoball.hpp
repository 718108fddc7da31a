#pragma once

// Combinatorial horoballs over a finite discrete metric space.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <vector>

#include "relsep/error.hpp"
#include "relsep/graph.hpp"

namespace relsep {

struct DiscreteMetricSpace {
  std::vector<std::vector<std::int64_t>> dist;

  int size() const { return static_cast<int>(dist.size()); }

  /// Throws unless dist is a metric.
  void validate() const {
    const int n = size();
    for (int a = 0; a < n; ++a) {
      require(static_cast<int>(dist[a].size()) == n, ErrorKind::malformed_input, "distance matrix is not square");
      require(dist[a][a] == 0, ErrorKind::malformed_input, "nonzero self-distance");
    }
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        require(dist[a][b] == dist[b][a], ErrorKind::malformed_input, "asymmetric distance");
        require(a == b || dist[a][b] > 0, ErrorKind::malformed_input, "distinct points at distance 0");
        for (int c = 0; c < n; ++c)
          require(dist[a][c] <= dist[a][b] + dist[b][c], ErrorKind::malformed_input, "triangle inequality fails");
      }
  }

  /// {0, ..., n} with the path metric of Z.
  static DiscreteMetricSpace zline(int n) {
    DiscreteMetricSpace a;
    a.dist.assign(n + 1, std::vector<std::int64_t>(n + 1));
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) a.dist[i][j] = std::abs(i - j);
    return a;
  }
};

inline std::int64_t pow2(int n) { return std::int64_t{1} << n; }

struct HoroVertex {
  int point = 0;
  int depth = 0;
};

class HoroballGraph {
 public:
  HoroballGraph(DiscreteMetricSpace base, int max_depth) : base_(std::move(base)), max_depth_(max_depth) {
    require(max_depth_ >= 1, ErrorKind::precondition, "horoball depth must be at least 1");
    require(max_depth_ < 62, ErrorKind::precondition, "horoball depth too large");
    base_.validate();
    const int m = base_.size();
    graph_ = Graph(m * (max_depth_ + 1));
    for (int n = 0; n <= max_depth_; ++n)
      for (int a = 0; a < m; ++a) {
        if (n < max_depth_) graph_.add_edge(id(a, n), id(a, n + 1));
        if (n >= 1)
          for (int b = a + 1; b < m; ++b)
            if (base_.dist[a][b] <= pow2(n)) graph_.add_edge(id(a, n), id(b, n));
      }
    graph_.finalize();
    hops_.assign(max_depth_ + 1, std::vector<std::vector<int>>(m, std::vector<int>(m, -1)));
    for (int n = 1; n <= max_depth_; ++n)
      for (int a = 0; a < m; ++a) {
        auto& d = hops_[n][a];
        std::vector<int> queue{a};
        d[a] = 0;
        for (std::size_t q = 0; q < queue.size(); ++q)
          for (int b = 0; b < m; ++b)
            if (d[b] < 0 && base_.dist[queue[q]][b] <= pow2(n)) {
              d[b] = d[queue[q]] + 1;
              queue.push_back(b);
            }
      }
  }

  /// Horizontal hop distance between two points at level n >= 1 (-1 if none).
  int hops(int n, int a, int b) const { return hops_[n][a][b]; }

  const DiscreteMetricSpace& base() const { return base_; }
  int max_depth() const { return max_depth_; }
  const Graph& graph() const { return graph_; }
  int id(int point, int depth) const { return depth * base_.size() + point; }
  HoroVertex vertex(int v) const { return {v % base_.size(), v / base_.size()}; }
  int vertex_count() const { return graph_.size(); }

  bool horizontal_edge(HoroVertex u, HoroVertex v) const {
    return u.depth == v.depth && u.depth >= 1 && u.point != v.point && base_.dist[u.point][v.point] <= pow2(u.depth);
  }

  int distance(HoroVertex u, HoroVertex v) const { return graph_.distance(id(u.point, u.depth), id(v.point, v.depth)); }

 private:
  DiscreteMetricSpace base_;
  int max_depth_;
  Graph graph_;
  std::vector<std::vector<std::vector<int>>> hops_;
};

struct GeodesicPath {
  std::vector<int> vertices;
  int length() const { return vertices.empty() ? 0 : static_cast<int>(vertices.size()) - 1; }
};

/// Vertical up, at most three horizontal edges at the deepest level (any
/// number when that level is the truncation depth), vertical down.
inline GeodesicPath regular_geodesic(const HoroballGraph& h, HoroVertex u, HoroVertex v) {
  const int m = h.base().size();
  int best = std::numeric_limits<int>::max(), level = -1;
  for (int k = std::max(u.depth, v.depth); k <= h.max_depth(); ++k) {
    int hops = u.point == v.point ? 0 : (k == 0 ? -1 : h.hops(k, u.point, v.point));
    if (hops < 0 || (hops > 3 && k < h.max_depth())) continue;
    int len = (k - u.depth) + (k - v.depth) + hops;
    if (len < best) {
      best = len;
      level = k;
    }
  }
  require(level >= 0, ErrorKind::precondition, "no regular geodesic inside the truncated horoball");
  GeodesicPath p;
  for (int n = u.depth; n <= level; ++n) p.vertices.push_back(h.id(u.point, n));
  for (int a = u.point; a != v.point;) {
    int next = 0;
    while (next < m && !(h.hops(level, next, v.point) == h.hops(level, a, v.point) - 1 && h.base().dist[a][next] <= pow2(level)))
      ++next;
    require(next < m, ErrorKind::precondition, "broken level graph");
    a = next;
    p.vertices.push_back(h.id(a, level));
  }
  for (int n = level - 1; n >= v.depth; --n) p.vertices.push_back(h.id(v.point, n));
  return p;
}

inline int max_depth_on(const HoroballGraph& h, const GeodesicPath& p) {
  int d = 0;
  for (int v : p.vertices) d = std::max(d, h.vertex(v).depth);
  return d;
}

struct DepthBoundReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  int max_slack = std::numeric_limits<int>::min();  // max of length - (2 * depth + 4)
  std::vector<int> first_violation;
};

/// Checks length <= 2 * (max depth) + 4 for the regular geodesics between
/// the given pairs.
inline DepthBoundReport geodesic_depth_bound_check(const HoroballGraph& h,
                                                   const std::vector<std::pair<int, int>>& pairs) {
  DepthBoundReport rep;
  for (auto [a, b] : pairs) {
    auto p = regular_geodesic(h, h.vertex(a), h.vertex(b));
    int slack = p.length() - (2 * max_depth_on(h, p) + 4);
    rep.max_slack = std::max(rep.max_slack, slack);
    ++rep.checked;
    if (slack > 0) {
      if (rep.violations++ == 0) rep.first_violation = {a, b};
    }
  }
  return rep;
}

}  // namespace relsep
