#include <catch2/catch_amalgamated.hpp>

#include <numeric>
#include <set>

#include "relsep/cusped.hpp"
#include "relsep/horoball.hpp"

using namespace relsep;

TEST_CASE("horoball edges follow the depth rule", "[horoball]") {
  HoroballGraph h(DiscreteMetricSpace::zline(8), 3);
  const auto& g = h.graph();
  CHECK(g.adjacent(h.id(0, 1), h.id(2, 1)));
  CHECK_FALSE(g.adjacent(h.id(0, 0), h.id(1, 0)));
  CHECK(g.adjacent(h.id(3, 2), h.id(7, 2)));
  CHECK_FALSE(g.adjacent(h.id(3, 2), h.id(8, 2)));
  CHECK(g.adjacent(h.id(4, 1), h.id(4, 2)));
  CHECK(h.vertex_count() == 9 * 4);
  CHECK(h.distance({0, 0}, {0, 3}) == 3);
  CHECK(h.distance({0, 0}, {1, 0}) == 3);
  REQUIRE_THROWS_AS(HoroballGraph(DiscreteMetricSpace{{{0, 1}, {2, 0}}}, 2), Error);
}

TEST_CASE("horoball distances", "[horoball]") {
  HoroballGraph h(DiscreteMetricSpace::zline(64), 6);
  CHECK(h.distance({0, 0}, {16, 0}) == 8);
  auto p = regular_geodesic(h, {0, 0}, {16, 0});
  CHECK(p.length() == 8);
  CHECK(regular_geodesic(h, {5, 2}, {5, 2}).length() == 0);
  CHECK(regular_geodesic(h, {0, 2}, {0, 5}).length() == 3);
}

TEST_CASE("regular geodesics are geodesics", "[horoball][property]") {
  HoroballGraph h(DiscreteMetricSpace::zline(32), 5);
  const auto& g = h.graph();
  for (int a = 0; a < h.vertex_count(); ++a) {
    auto d = g.bfs(a);
    for (int b = 0; b < h.vertex_count(); ++b) {
      auto p = regular_geodesic(h, h.vertex(a), h.vertex(b));
      REQUIRE(p.length() == d[b]);
      REQUIRE(p.vertices.front() == a);
      REQUIRE(p.vertices.back() == b);
      int horizontal = 0;
      for (std::size_t k = 0; k + 1 < p.vertices.size(); ++k) {
        REQUIRE(g.adjacent(p.vertices[k], p.vertices[k + 1]));
        if (h.vertex(p.vertices[k]).depth == h.vertex(p.vertices[k + 1]).depth) ++horizontal;
      }
      if (max_depth_on(h, p) < h.max_depth()) REQUIRE(horizontal <= 3);
    }
  }
}

TEST_CASE("geodesic length is at most twice the depth plus four", "[horoball]") {
  HoroballGraph h(DiscreteMetricSpace::zline(16), 5);
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < h.vertex_count(); ++a)
    for (int b = 0; b < h.vertex_count(); ++b) pairs.push_back({a, b});
  auto rep = geodesic_depth_bound_check(h, pairs);
  CHECK(rep.violations == 0);
  CHECK(rep.checked == pairs.size());
  CHECK(rep.max_slack <= 0);
}

TEST_CASE("cusped ball structure", "[cusped]") {
  auto g = z2_free_product();
  auto x = build_cusped_ball(g, 3, 3);
  auto b = ball(g, 3);
  REQUIRE(x.elements == b);
  // coset count against a union-find over pairs with g^-1 h in P1
  std::vector<int> parent(b.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int v) { return parent[v] == v ? v : parent[v] = find(parent[v]); };
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = i + 1; j < b.size(); ++j) {
      auto q = g.multiply(g.invert(b[i]), b[j]);
      if (q.size() == 1 && q.syllables[0].factor == 0) parent[find(static_cast<int>(j))] = find(static_cast<int>(i));
    }
  std::set<int> roots;
  for (std::size_t i = 0; i < b.size(); ++i) roots.insert(find(static_cast<int>(i)));
  int p1 = 0;
  for (const auto& c : x.cosets) p1 += c.factor == 0;
  CHECK(p1 == static_cast<int>(roots.size()));

  auto full = truncate(x, 3);
  CHECK(full.vertices.size() == x.vertices.size());
  CHECK(full.graph.edge_count() == x.graph.edge_count());
  auto flat = truncate(x, 0);
  CHECK(flat.vertices.size() == b.size());
  std::size_t cayley_edges = 0;
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = i + 1; j < b.size(); ++j) cayley_edges += g.s_distance(b[i], b[j]) == 1;
  CHECK(flat.graph.edge_count() == cayley_edges);
}

TEST_CASE("default depth preserves depth-0 distances", "[cusped]") {
  auto g = z2_free_product();
  const int r = 3;
  auto x = build_cusped_ball(g, r, default_max_depth(r));
  auto y = build_cusped_ball(g, r, default_max_depth(r) + 3);
  for (int a = 0; a < static_cast<int>(x.elements.size()); a += 7) {
    auto dx = x.graph.bfs(a), dy = y.graph.bfs(a);
    for (std::size_t b = 0; b < x.elements.size(); ++b) REQUIRE(dx[b] == dy[b]);
  }
}

TEST_CASE("penetration depth", "[cusped]") {
  MarkedGroup z2({Factor::free_abelian("P1", 2)}, {0});
  auto x = build_cusped_ball(z2, 8, 6);
  int origin = x.element_index.at(z2.identity());
  CHECK(penetration_depth(x, {origin}, 0) == 0);
  std::vector<int> spike;
  for (int n = 0; n <= 4; ++n) spike.push_back(x.vertex_at(0, origin, n));
  for (int n = 3; n >= 0; --n) spike.push_back(x.vertex_at(0, origin, n));
  CHECK(penetration_depth(x, spike, 0) == 4);
  for (int k = 1; k <= 3; ++k) {
    int far = x.element_index.at(z2.vec(0, {pow2(k), 0}));
    auto path = x.graph.geodesic(origin, far);
    // deepest vertex lying on any geodesic between the two points
    auto d0 = x.graph.bfs(origin), d1 = x.graph.bfs(far);
    std::vector<int> on_geodesics;
    for (int v = 0; v < x.graph.size(); ++v)
      if (d0[v] + d1[v] == d0[far]) on_geodesics.push_back(v);
    int deepest = penetration_depth(x, on_geodesics, 0);
    CHECK(penetration_depth(x, path, 0) <= deepest);
    CHECK((deepest == k || deepest == k - 1));
    CHECK(static_cast<int>(path.size()) - 1 == x.graph.distance(origin, far));
  }
  REQUIRE_THROWS_AS(penetration_depth(x, spike, 5), Error);
}

TEST_CASE("trees are 0-hyperbolic", "[delta]") {
  MarkedGroup f2({Factor::free("F", 2)}, {});
  auto x = build_cusped_ball(f2, 4, 2);
  CHECK(x.vertices.size() == x.elements.size());
  CHECK(estimate_delta(x, 300, 1).delta == 0);
  CHECK(four_point_delta2(x.graph, x.depth0_vertices(), 300, 1) == 0);
}

TEST_CASE("single horoball delta over all base triples", "[delta]") {
  HoroballGraph h(DiscreteMetricSpace::zline(32), 6);
  std::vector<int> pool;
  for (int a = 0; a <= 32; ++a) pool.push_back(h.id(a, 0));
  auto rep = exhaustive_delta(h.graph(), pool);
  CHECK(rep.delta <= 3);
  CHECK(rep.samples == 33u * 32u * 31u / 6u);
}

TEST_CASE("delta estimate is monotone and reproducible", "[delta][property]") {
  auto g = z2_free_product();
  auto x = build_cusped_ball(g, 2, 3);
  auto small = estimate_delta(x, 100, 42);
  auto large = estimate_delta(x, 200, 42);
  CHECK(small.delta == large.running[99]);
  for (std::size_t k = 1; k < large.running.size(); ++k) CHECK(large.running[k] >= large.running[k - 1]);
  CHECK(estimate_delta(x, 100, 42).delta == small.delta);
}

TEST_CASE("triangle defect is invariant under translation", "[delta][property]") {
  MarkedGroup f2({Factor::free("F", 2)}, {});
  auto x = build_cusped_ball(f2, 6, 1);
  auto inner = ball(f2, 2);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> pick(0, inner.size() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    NormalForm a = inner[pick(rng)], b = inner[pick(rng)], c = inner[pick(rng)];
    NormalForm t = ball(f2, 1)[1 + trial % 4];
    auto id = [&](const NormalForm& e) { return x.element_index.at(e); };
    int d0 = triangle_defect(x.graph, id(a), id(b), id(c));
    int d1 = triangle_defect(x.graph, id(f2.multiply(t, a)), id(f2.multiply(t, b)), id(f2.multiply(t, c)));
    CHECK(d0 == d1);
  }
  // the horoball over a line is translation invariant away from its ends
  HoroballGraph h(DiscreteMetricSpace::zline(64), 6);
  for (int a = 24; a <= 32; ++a)
    for (int shift : {1, 3}) {
      int d0 = triangle_defect(h.graph(), h.id(a, 0), h.id(a + 4, 1), h.id(a + 9, 0));
      int d1 = triangle_defect(h.graph(), h.id(a + shift, 0), h.id(a + 4 + shift, 1), h.id(a + 9 + shift, 0));
      CHECK(d0 == d1);
    }
}
