#include <catch2/catch_amalgamated.hpp>

#include "relsep/quasiconvexity.hpp"
#include "relsep/relgraph.hpp"

using namespace relsep;

namespace {

RelEdgeLabel pe(int factor, Vec v) { return {true, factor, v}; }

}  // namespace

TEST_CASE("relative geodesics from normal forms", "[relgraph]") {
  auto g = z2_free_product();
  CHECK(rel_geodesic(g, g.identity()).length() == 0);
  CHECK(rel_geodesic(g, g.vec(0, {5, 1})).length() == 1);
  auto p = rel_geodesic(g, g.parse("x1 x2 x1"));
  CHECK(p.length() == 3);
  CHECK(p.end(g) == g.parse("x1 x2 x1"));
  MarkedGroup mixed({Factor::free_abelian("P1", 2), Factor::free("F", 2)}, {0});
  auto q = rel_geodesic(mixed, mixed.parse("x1^4 a2 b2^-1 y1"));
  CHECK(q.length() == 4);
  CHECK(rel_length(mixed, mixed.parse("x1^4 a2 b2^-1 y1")) == 4);
}

TEST_CASE("syllable formula equals bounded BFS distance", "[relgraph][property]") {
  auto g = z2_free_product();
  auto elems = ball(g, 4);
  auto d = bounded_rel_distances(g, elems);
  for (std::size_t k = 0; k < elems.size(); ++k) REQUIRE(d[k] == rel_length(g, elems[k]));
}

TEST_CASE("geodesics have single-edge isolated components", "[relgraph][property]") {
  MarkedGroup mixed({Factor::free_abelian("P1", 2), Factor::free("F", 1), Factor::cyclic("C", 3)}, {0, 2});
  for (const auto& x : ball(mixed, 4)) {
    auto p = rel_geodesic(mixed, x);
    for (const auto& c : p_components(mixed, p)) {
      CHECK(c.end - c.begin == 1);
      CHECK(c.isolated);
    }
    CHECK(connected_components_check(mixed, p).backtracking_free);
    CHECK(phase_vertices(mixed, p).size() == p.length() + 1);
  }
}

TEST_CASE("component decomposition", "[relgraph]") {
  auto g = z2_free_product();
  MarkedGroup f({Factor::free("F", 2), Factor::free_abelian("P", 1)}, {1});
  RelPath plain{{}, {{false, 0, {1}}, {false, 0, {2}}}};
  CHECK(p_components(f, plain).empty());
  RelPath merged{{}, {pe(0, {1, 0}), pe(0, {0, 1})}};
  auto cs = p_components(g, merged);
  REQUIRE(cs.size() == 1);
  CHECK(cs[0].s_length == 2);
  CHECK(phase_vertices(g, merged) == std::vector<std::size_t>{0, 2});
  RelPath three{{}, {pe(0, {1, 0}), pe(1, {0, 1}), pe(0, {2, 0})}};
  CHECK(p_components(g, three).size() == 3);
  CHECK(connected_components_check(g, three).backtracking_free);

  // leave the P1 coset through P2 and come back into it
  RelPath loop{{}, {pe(0, {1, 0}), {false, 1, {1, 0}}, {false, 1, {-1, 0}}, pe(0, {0, 1})}};
  auto rep = connected_components_check(g, loop);
  CHECK_FALSE(rep.backtracking_free);
  REQUIRE(rep.connected_pairs.size() == 1);
  CHECK(rep.connected_pairs[0] == std::pair<std::size_t, std::size_t>{0, 2});
  REQUIRE_THROWS_AS(quasigeodesic_lambda(g, loop, 0), Error);
}

TEST_CASE("k-similarity", "[relgraph]") {
  auto g = z2_free_product();
  auto p = rel_geodesic(g, g.parse("x1 x2^2"));
  CHECK(k_similar(g, p, p) == 0);
  auto s = g.parse("y2");
  RelPath q = rel_geodesic(g, g.multiply({g.invert(s), g.parse("x1 x2^2"), s}), s);
  CHECK(k_similar(g, p, q) == 1);
  std::mt19937_64 rng(4);
  auto b = ball(g, 3);
  std::uniform_int_distribution<std::size_t> pick(0, b.size() - 1);
  for (int t = 0; t < 200; ++t) {
    auto a0 = b[pick(rng)], a1 = b[pick(rng)], c0 = b[pick(rng)], c1 = b[pick(rng)];
    auto pp = rel_geodesic(g, g.multiply(g.invert(a0), a1), a0);
    auto qq = rel_geodesic(g, g.multiply(g.invert(c0), c1), c0);
    CHECK(k_similar(g, pp, qq) == std::max(g.s_length(g.multiply(g.invert(a0), c0)), g.s_length(g.multiply(g.invert(a1), c1))));
  }
}

TEST_CASE("quasigeodesic constants", "[relgraph]") {
  auto g = z2_free_product();
  CHECK(quasigeodesic_lambda(g, rel_geodesic(g, g.parse("x1 y2 x1^3")), 0) == 1.0);
  RelPath doubled{{}, {pe(0, {1, 0}), pe(0, {1, 0}), pe(1, {1, 0}), pe(1, {1, 0})}};
  CHECK(quasigeodesic_lambda(g, doubled, 0) == 2.0);
}

TEST_CASE("bcp clause values", "[relgraph]") {
  auto g = z2_free_product();
  auto p = rel_geodesic(g, g.parse("x1 x2 y1"));
  auto same = bcp_values(g, p, p);
  CHECK((same.i == 0 && same.ii == 0 && same.iii == 0));
  RelPath a{{}, {pe(0, {3, 0})}};
  RelPath b{g.parse("y1"), {pe(0, {3, 0})}};
  auto v = bcp_values(g, a, b);
  CHECK(v.iii == std::max(g.s_distance(g.identity(), g.parse("y1")), g.s_distance(g.vec(0, {3, 0}), g.vec(0, {3, 1}))));
  CHECK(v.iii == 1);
  RelPath c{g.parse("x2"), {pe(0, {3, 0})}};
  auto w = bcp_values(g, a, c);
  CHECK(w.iii == 0);
  CHECK(w.ii == 3);
}

TEST_CASE("bcp probe is reproducible and monotone", "[relgraph][property]") {
  auto g = z2_free_product();
  auto targets = ball(g, 4);
  auto r0 = bcp_probe(g, 1.0, 0, 0, targets, 100, 5);
  auto r0b = bcp_probe(g, 1.0, 0, 0, targets, 200, 5);
  CHECK(r0.clause_iii == r0b.clause_iii);
  CHECK(r0.epsilon <= r0b.epsilon);
  auto r1 = bcp_probe(g, 3.0, 2, 1, targets, 100, 5);
  CHECK(r1.epsilon >= r0.epsilon);
  CHECK(r1.samples > r1.rejected);
  auto r2 = bcp_probe(g, 3.0, 2, 2, targets, 100, 5);
  CHECK(r2.epsilon >= r1.epsilon);
}

TEST_CASE("QC-O constant", "[qc]") {
  auto g = z2_free_product();
  CHECK(qc_sigma_estimate(g, subgroup_from_words(g, {"x1", "y1"}), 3).constant == 0);
  CHECK(qc_sigma_estimate(g, SubgroupSpec{}, 3).constant == 0);
  auto q = subgroup_from_words(g, {"x1 x2"});
  auto s6 = qc_sigma_estimate(g, q, 6);
  auto s8 = qc_sigma_estimate(g, q, 8);
  CHECK(s6.constant <= 2);
  CHECK(s6.constant == s8.constant);
  CHECK(s6.constant == 1);
}

TEST_CASE("QC-H constant", "[qc]") {
  auto g = z2_free_product();
  auto x = build_cusped_ball(g, 4, 4);
  CHECK(qch_mu_estimate(g, subgroup_from_words(g, {"x1", "y1", "x2", "y2"}), x, 0, 3).constant == 0);
  auto mu = qch_mu_estimate(g, subgroup_from_words(g, {"x1 x2"}), x, 0, 4);
  CHECK(mu.constant >= 0);
  CHECK(mu.constant <= 4);
  CHECK(qch_mu_estimate(g, subgroup_from_words(g, {"x1", "y1"}), x, 0, 4).constant == 0);
  REQUIRE_THROWS_AS(qch_mu_estimate(g, subgroup_from_words(g, {"x1"}), x, 0, 9), Error);
}

TEST_CASE("maximal parabolics", "[qc]") {
  auto g = z2_free_product();
  auto p1 = maximal_parabolics(g, subgroup_from_words(g, {"x1", "y1"}));
  REQUIRE(p1.size() == 1);
  CHECK(p1[0].factor == 0);
  CHECK(p1[0].conjugator.empty());
  CHECK(p1[0].kind == ParabolicClass::finite_index);
  CHECK(maximal_parabolics(g, subgroup_from_words(g, {"x1 x2"})).empty());
  auto q = subgroup_from_words(g, {"x1^2", "y1", "x2"});
  auto d = maximal_parabolics(g, q);
  REQUIRE(d.size() == 2);
  CHECK(d[0].lattice == Lattice(2, {{2, 0}, {0, 1}}));
  CHECK(d[0].lattice.index() == 2);
  CHECK(d[1].lattice == Lattice(2, {{1, 0}}));
  CHECK(d[1].kind == ParabolicClass::infinite_index);
}

TEST_CASE("parabolics agree with bounded enumeration", "[qc][property]") {
  auto g = z2_free_product();
  const std::vector<std::vector<std::string>> cases = {
      {"x1^2", "y1", "x2"}, {"x2 x1^3 x2^-1", "y2 y1 y2^-1", "x1 x2"}, {"x1 y2 x1^-1", "x1 x2^2 x1^-1", "y1^2"}};
  for (const auto& words : cases) {
    auto q = subgroup_from_words(g, words);
    FoldedSubgroup h(g, q);
    auto members = enumerate_subgroup(h, 8);
    for (const auto& d : maximal_parabolics(h)) {
      auto closed = bounded_parabolic(g, members, d.conjugator, d.factor);
      CHECK(d.lattice.contains(closed));
      CHECK(closed == d.lattice);
      for (const auto& gen : datum_generators(g, d)) CHECK(h.contains(gen));
    }
    // across distinct peripheral indices intersections are trivial
    auto ds = maximal_parabolics(h);
    for (const auto& a : ds)
      for (const auto& b : ds)
        if (a.factor != b.factor)
          for (const auto& x : datum_generators(g, a)) {
            auto y = g.multiply({g.invert(b.conjugator), x, b.conjugator});
            CHECK_FALSE((y.size() == 1 && y.syllables[0].factor == b.factor));
          }
  }
}

TEST_CASE("full quasiconvexity", "[qc]") {
  auto g = z2_free_product();
  CHECK(is_fully_quasiconvex(g, subgroup_from_words(g, {"x1", "y1", "x2", "y2"})).fully_quasiconvex);
  auto r = is_fully_quasiconvex(g, subgroup_from_words(g, {"x1^2", "y1^2"}));
  CHECK(r.fully_quasiconvex);
  REQUIRE(r.table.size() == 1);
  CHECK(r.table[0].lattice.index() == 4);
  CHECK_FALSE(is_fully_quasiconvex(g, subgroup_from_words(g, {"x1"})).fully_quasiconvex);
}

TEST_CASE("check map and QC-AGM", "[qc]") {
  auto g = z2_free_product();
  auto x = build_cusped_ball(g, 4, 3);
  {
    auto q = subgroup_from_words(g, {"x1 x2"});
    auto y = build_subgroup_cusped_ball(g, q, {}, 2, 3);
    auto m = check_map(g, q, {}, y, x, 100, 1);
    for (std::size_t k = 0; k < y.elements.size(); ++k) CHECK(x.elements[m.image[k]] == y.elements[k]);
    CHECK(m.equivariance_failures == 0);
    auto c = qc_agm_estimate(m.image, x, 200, 1);
    CHECK(c.constant <= 3);
  }
  {
    auto q = subgroup_from_words(g, {"x1 x2", "x1^2"});
    auto data = maximal_parabolics(g, q);
    REQUIRE(data.size() == 1);
    auto y = build_subgroup_cusped_ball(g, q, data, 2, 2);
    auto m = check_map(g, q, data, y, x, 200, 2);
    CHECK(m.equivariance_failures == 0);
    CHECK(m.lipschitz >= 1);
    CHECK(m.lipschitz <= 4);
  }
  {
    auto q = subgroup_from_words(g, {"x1", "y1"});
    auto data = maximal_parabolics(g, q);
    auto y = build_subgroup_cusped_ball(g, q, data, 4, 3);
    auto m = check_map(g, q, data, y, x, 50, 3);
    CHECK(qc_agm_estimate(m.image, x, 300, 3).constant == 0);
  }
  std::vector<int> all(x.vertices.size());
  std::iota(all.begin(), all.end(), 0);
  CHECK(qc_agm_estimate(all, x, 50, 1).constant == 0);
  auto bad = subgroup_from_words(g, {"x1 x2"});
  ParabolicDatum fake{0, {}, Lattice(2, {{1, 0}}), {}, ParabolicClass::infinite_index};
  auto y = build_subgroup_cusped_ball(g, bad, {}, 1, 1);
  REQUIRE_THROWS_AS(check_map(g, bad, {fake}, y, x, 1, 1), Error);
}

TEST_CASE("penetration and stabilizers", "[qc]") {
  auto g = z2_free_product();
  auto x = build_cusped_ball(g, 4, 4);
  auto p1 = penetration_stabilizer_probe(g, subgroup_from_words(g, {"x1", "y1"}), x, 4, 200, 1);
  CHECK(p1.consistent);
  bool deep = false;
  for (const auto& p : p1.points) deep = deep || (p.depth >= 1 && p.infinite);
  CHECK(deep);
  auto h = penetration_stabilizer_probe(g, subgroup_from_words(g, {"x1 x2"}), x, 4, 200, 1);
  for (const auto& p : h.points) CHECK_FALSE(p.infinite);
  CHECK(h.r_hat <= 2);
  auto m = penetration_stabilizer_probe(g, subgroup_from_words(g, {"x1^2", "y1^2", "x2 y2"}), x, 4, 300, 1);
  CHECK(m.consistent);
  bool rank2 = false;
  for (const auto& p : m.points) rank2 = rank2 || (p.depth >= 1 && p.intersection_rank == 2);
  CHECK(rank2);
}

TEST_CASE("coset neighbourhood constant", "[qc]") {
  auto g = z2_free_product();
  auto h = subgroup_from_words(g, {"x1 x2"});
  CHECK(coset_neighborhood_constant(g, {}, h, {}, h, 2, 4, 4) == 2);
  auto a = subgroup_from_words(g, {"x1^2"});
  auto b = subgroup_from_words(g, {"x1^3"});
  auto got = coset_neighborhood_constant(g, {}, a, {}, b, 2, 5, 8);
  // direct oracle: distances to multiples of 2, 3 and 6 in the x1 direction
  std::int64_t want = 0;
  for (const auto& e : ball(g, 5)) {
    auto dist_to = [&](int m) {
      std::int64_t best = 1 << 20;
      for (int k = -6; k <= 6; ++k) best = std::min(best, g.s_distance(e, g.vec(0, {m * k, 0})));
      return best;
    };
    if (dist_to(2) <= 2 && dist_to(3) <= 2) want = std::max(want, dist_to(6));
  }
  CHECK(got == want);
  CHECK(coset_neighborhood_constant(g, {}, a, g.parse("x2^9"), b, 1, 3, 4) == 0);
}

TEST_CASE("quasiconvexity notions agree on stability", "[qc][property]") {
  auto g = z2_free_product();
  auto x4 = build_cusped_ball(g, 4, 3);
  auto x5 = build_cusped_ball(g, 5, 3);
  for (const auto& words : std::vector<std::vector<std::string>>{{"x1 x2"}, {"x1", "y1"}, {"x1^2", "y1^2"}}) {
    auto q = subgroup_from_words(g, words);
    bool sigma_stable = qc_sigma_estimate(g, q, 4).constant == qc_sigma_estimate(g, q, 5).constant;
    bool mu_stable = qch_mu_estimate(g, q, x4, 0, 4).constant == qch_mu_estimate(g, q, x5, 0, 5).constant;
    auto data = maximal_parabolics(g, q);
    auto y = build_subgroup_cusped_ball(g, q, data, 3, 3);
    auto c4 = qc_agm_estimate(check_map(g, q, data, y, x4, 1, 1).image, x4, 300, 1).constant;
    auto c5 = qc_agm_estimate(check_map(g, q, data, y, x5, 1, 1).image, x5, 300, 1).constant;
    INFO(words[0]);
    CHECK(sigma_stable == mu_stable);
    CHECK(mu_stable == (c4 == c5));
  }
}
