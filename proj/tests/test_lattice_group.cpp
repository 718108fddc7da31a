#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "relsep/enumerate.hpp"
#include "relsep/group.hpp"
#include "relsep/lattice.hpp"
#include "relsep/subgroup_graph.hpp"

using namespace relsep;

namespace {

// Box scan used as a membership oracle: v in L iff some small integer
// combination of the generators hits v.
bool naive_member(const Matrix& gens, const Vec& v, int coeff) {
  std::size_t k = gens.size();
  if (k == 0) return detail::is_zero(v);
  std::vector<int> c(k, -coeff);
  while (true) {
    Vec s(v.size(), 0);
    for (std::size_t i = 0; i < k; ++i) s = add(s, scale(gens[i], c[i]));
    if (s == v) return true;
    std::size_t i = 0;
    while (i < k && ++c[i] > coeff) c[i++] = -coeff;
    if (i == k) return false;
  }
}

std::vector<Vec> box(std::size_t n, int r) {
  std::vector<Vec> out;
  Vec v(n, -r);
  while (true) {
    out.push_back(v);
    std::size_t i = 0;
    while (i < n && ++v[i] > r) v[i++] = -r;
    if (i == n) return out;
  }
}

// Word-level oracle: normalize every word of length <= r over S.
std::size_t naive_ball_size(const MarkedGroup& g, int r) {
  std::set<NormalForm> seen{g.identity()};
  std::vector<NormalForm> layer{g.identity()};
  for (int d = 0; d < r; ++d) {
    std::vector<NormalForm> next;
    for (const auto& x : layer)
      for (const auto& s : g.generators()) next.push_back(g.multiply(x, g.syllable(s.factor, s.elem)));
    for (const auto& x : next) seen.insert(x);
    layer = std::move(next);
  }
  return seen.size();
}

}  // namespace

TEST_CASE("hermite form and membership", "[lattice]") {
  Lattice a(2, {{2, 0}, {0, 1}});
  Lattice b(2, {{3, 0}, {0, 1}});
  REQUIRE(intersect(a, b) == Lattice(2, {{6, 0}, {0, 1}}));
  REQUIRE(a.index() == 2);
  REQUIRE(Lattice(2, {{4, 2}, {2, 4}}).index() == 12);
  REQUIRE_FALSE(Lattice(2, {{1, 1}}).index().has_value());
  REQUIRE(Lattice(2, {{4, 6}, {2, 3}}) == Lattice(2, {{2, 3}}));
  REQUIRE(Lattice(2, {{4, 2}, {2, 4}}).coset_representatives().size() == 12);
}

TEST_CASE("lattice membership agrees with a box scan", "[lattice][property]") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> coef(-4, 4);
  for (int trial = 0; trial < 40; ++trial) {
    Matrix gens(1 + trial % 2, Vec(2));
    for (auto& row : gens)
      for (auto& x : row) x = coef(rng);
    Lattice lat(2, gens);
    for (const auto& v : box(2, 4)) {
      INFO(trial);
      CHECK(lat.contains(v) == naive_member(gens, v, 12));
    }
  }
}

TEST_CASE("intersection and sum match brute force", "[lattice][property]") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> coef(-3, 3);
  for (int trial = 0; trial < 25; ++trial) {
    Matrix ga(2, Vec(2)), gb(2, Vec(2));
    for (auto* m : {&ga, &gb})
      for (auto& row : *m)
        for (auto& x : row) x = coef(rng);
    Lattice a(2, ga), b(2, gb);
    Lattice i = intersect(a, b), s = sum(a, b);
    for (const auto& v : box(2, 6)) {
      CHECK(i.contains(v) == (a.contains(v) && b.contains(v)));
      if (a.contains(v) || b.contains(v)) CHECK(s.contains(v));
    }
    CHECK(s.contains(a));
    CHECK(s.contains(b));
    CHECK(a.contains(i));
  }
}

TEST_CASE("smith form invariants", "[lattice]") {
  auto q = smith(Lattice(2, {{2, 0}, {0, 3}}));
  REQUIRE(q.order() == 6);
  REQUIRE(q.torsion() == std::vector<std::int64_t>{6});
  auto r = smith(Lattice(3, {{2, 0, 0}, {0, 4, 0}}));
  REQUIRE(r.free_rank == 1);
  REQUIRE(r.torsion() == std::vector<std::int64_t>{2, 4});
  REQUIRE_FALSE(r.order().has_value());
}

TEST_CASE("separation subroutine", "[lattice]") {
  Lattice k(2, {{2, 0}});
  Lattice r = separate(k, {{0, 1}});
  // K + 2Z^2 is the first K + mZ^2 avoiding (0,1)
  REQUIRE(r == Lattice::scaled(2, 2));
  REQUIRE(r.index() == 4);
  REQUIRE_FALSE(r.contains(Vec{0, 1}));
  REQUIRE_THROWS_AS(separate(k, {{4, 0}}), Error);

  Lattice m = separate_with_minlength(Lattice(2, {{1, 0}}), {{0, 1}}, 3);
  REQUIRE(m.contains(Lattice(2, {{1, 0}})));
  REQUIRE(m.is_full_rank());
  for (const auto& v : l1_ball(2, 3))
    if (!detail::is_zero(v) && m.contains(v)) CHECK(Lattice(2, {{1, 0}}).contains(v));
  auto s = shortest_nonmember(m, Lattice(2, {{1, 0}}), 10);
  REQUIRE(s.has_value());
  CHECK(l1(*s) == 4);
}

TEST_CASE("separate post-conditions over random inputs", "[lattice][property]") {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> coef(-3, 3);
  for (int trial = 0; trial < 30; ++trial) {
    Lattice k(2, {{coef(rng), coef(rng)}});
    std::vector<Vec> avoid;
    for (const auto& v : l1_ball(2, 3))
      if (!k.contains(v)) avoid.push_back(v);
    Lattice r = separate(k, avoid);
    CHECK(r.is_full_rank());
    CHECK(r.contains(k));
    for (const auto& v : avoid) CHECK_FALSE(r.contains(v));
  }
}

TEST_CASE("normal form arithmetic", "[group]") {
  auto g = z2_free_product();
  auto x1 = g.parse("x1"), y1 = g.parse("y1"), x2 = g.parse("x2");
  REQUIRE(g.multiply(x1, y1) == g.vec(0, {1, 1}));
  REQUIRE(g.multiply(g.multiply(x1, x2), g.multiply(g.invert(x2), x1)) == g.vec(0, {2, 0}));
  REQUIRE(g.is_identity(g.multiply(g.parse("x1 x2 y1^-1"), g.invert(g.parse("x1 x2 y1^-1")))));
  REQUIRE(g.s_length(g.vec(0, {2, -3})) == 5);
  REQUIRE(g.s_length(g.parse("x1 x2 x1")) == 3);
  REQUIRE(g.parse(g.format(g.parse("x1^3 y2 x1^-1"))) == g.parse("x1^3 y2 x1^-1"));
  REQUIRE_THROWS_AS(g.parse("q7"), Error);
}

TEST_CASE("ball sizes", "[group]") {
  auto g = z2_free_product();
  REQUIRE(ball(g, 0).size() == 1);
  MarkedGroup z2({Factor::free_abelian("P1", 2)}, {0});
  REQUIRE(ball(z2, 1).size() == 5);
  // frozen from the word-level oracle below
  REQUIRE(ball(g, 2).size() == 57);
  for (int r = 0; r <= 4; ++r) CHECK(ball(g, r).size() == naive_ball_size(g, r));
  for (const auto& x : ball(g, 3)) CHECK(g.s_length(x) <= 3);
  REQUIRE_THROWS_AS(ball(g, 6, 1000), Error);
}

TEST_CASE("normal forms are unique under relator insertion", "[group][property]") {
  auto g = z2_free_product();
  std::mt19937_64 rng(2024);
  const auto& s = g.generators();
  std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
  std::uniform_int_distribution<int> coin(0, 2);
  auto letter_nf = [&](const Letter& l) { return g.syllable(l.factor, l.elem); };
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<NormalForm> word;
    for (int k = 0; k < 6; ++k) word.push_back(letter_nf(s[pick(rng)]));
    std::vector<NormalForm> other = word;
    std::uniform_int_distribution<std::size_t> where(0, other.size());
    auto a = letter_nf(s[pick(rng)]);
    auto pos = other.begin() + static_cast<std::ptrdiff_t>(where(rng));
    switch (coin(rng)) {
      case 0: other.insert(pos, {a, g.invert(a)}); break;
      case 1: {
        auto b = letter_nf(s[pick(rng)]);
        if (b.syllables[0].factor == a.syllables[0].factor)
          other.insert(pos, {a, b, g.invert(a), g.invert(b)});
        break;
      }
      default: other.insert(pos, {g.invert(a), a}); break;
    }
    NormalForm u = g.identity(), v = g.identity();
    for (const auto& x : word) u = g.multiply(u, x);
    for (const auto& x : other) v = g.multiply(v, x);
    REQUIRE(u == v);
  }
}

TEST_CASE("s_length is a length function", "[group][property]") {
  auto g = z2_free_product();
  auto b = ball(g, 3);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, b.size() - 1);
  for (int trial = 0; trial < 3000; ++trial) {
    const auto& x = b[pick(rng)];
    const auto& y = b[pick(rng)];
    CHECK(g.s_length(g.multiply(x, y)) <= g.s_length(x) + g.s_length(y));
    CHECK(g.s_length(g.invert(x)) == g.s_length(x));
    CHECK((g.s_length(x) == 0) == g.is_identity(x));
  }
}

TEST_CASE("finite and free factors", "[group]") {
  MarkedGroup g({Factor::cyclic("C", 3), Factor::free("F", 2), Factor::free_abelian("Z", 1)}, {0});
  auto t = g.parse("t1_1");
  REQUIRE(g.is_identity(g.power(t, 3)));
  REQUIRE(g.s_length(g.parse("a2 b2 a2^-1")) == 3);
  REQUIRE(g.s_length(g.parse("t1_1 x3^4 t1_2")) == 6);
  REQUIRE_THROWS_AS(MarkedGroup({Factor::free("F", 2)}, {0}), Error);
  REQUIRE_THROWS_AS(MarkedGroup({Factor::free_abelian("A", 2)}, {}), Error);
}

TEST_CASE("subgroup enumeration examples", "[subgroup]") {
  auto g = z2_free_product();
  auto q = subgroup_from_words(g, {"x1"});
  auto e = enumerate_subgroup(g, q, 3);
  REQUIRE(e.size() == 7);
  auto p = subgroup_from_words(g, {"x1 x2"});
  auto e2 = enumerate_subgroup(g, p, 4);
  std::set<NormalForm> want;
  for (int k = -2; k <= 2; ++k) want.insert(g.power(g.parse("x1 x2"), k));
  REQUIRE(std::set<NormalForm>(e2.begin(), e2.end()) == want);
  SubgroupSpec whole = subgroup_from_words(g, {"x1", "y1", "x2", "y2"});
  REQUIRE(enumerate_subgroup(g, whole, 3) == ball(g, 3));
}

TEST_CASE("bounded membership", "[subgroup]") {
  auto g = z2_free_product();
  auto q = subgroup_from_words(g, {"x1 x2", "y1^2"});
  REQUIRE(is_member_bounded(g, q, g.parse("x1 x2"), 8).verdict == Verdict::yes);
  auto two = subgroup_from_words(g, {"x1^2"});
  REQUIRE(is_member_bounded(g, two, g.parse("x1"), 8).verdict == Verdict::no);
  auto p = subgroup_from_words(g, {"x1 x2"});
  REQUIRE(is_member_bounded(g, p, g.parse("x2 x1"), 8).verdict == Verdict::no);
  auto m = is_member_bounded(g, q, g.parse("x1 x2 y1^-2 x1 x2"), 8);
  REQUIRE(m.verdict == Verdict::yes);
  REQUIRE(evaluate_witness(g, q, m.witness) == g.parse("x1 x2 y1^-2 x1 x2"));
}

TEST_CASE("folded graph agrees with generator enumeration", "[subgroup][property]") {
  auto g = z2_free_product();
  const std::vector<std::vector<std::string>> subgroups = {
      {"x1"}, {"x1 x2"}, {"x1^2", "y1 x2"}, {"x1 y2 x1^-1", "y1"}, {"x1 x2 y1", "x2^2"}, {"x1 x2^-1 x1", "y2 y1"},
      {"x1^2 y1", "x1 y2 x1^-1"}};
  for (const auto& words : subgroups) {
    auto q = subgroup_from_words(g, words);
    FoldedSubgroup h(g, q);
    auto fast = enumerate_subgroup(h, 4);
    auto slow = enumerate_subgroup_bfs(g, q, 4);
    INFO(words[0]);
    CHECK(std::set<NormalForm>(fast.begin(), fast.end()) == std::set<NormalForm>(slow.begin(), slow.end()));
    std::set<NormalForm> members(fast.begin(), fast.end());
    for (const auto& x : ball(g, 3)) CHECK(h.contains(x) == (members.count(x) > 0));
  }
}

TEST_CASE("finite factor clusters", "[subgroup]") {
  MarkedGroup g({Factor::cyclic("C", 4), Factor::cyclic("D", 2)}, {0, 1});
  auto q = subgroup_from_words(g, {"t1_2", "t2_1 t1_1 t2_1"});
  FoldedSubgroup h(g, q);
  auto fast = enumerate_subgroup(h, 5);
  auto slow = enumerate_subgroup_bfs(g, q, 5);
  REQUIRE(std::set<NormalForm>(fast.begin(), fast.end()) == std::set<NormalForm>(slow.begin(), slow.end()));
  for (const auto& x : ball(g, 5)) {
    bool in = std::find(fast.begin(), fast.end(), x) != fast.end();
    CHECK(h.contains(x) == in);
  }
}

TEST_CASE("peripheral intersections", "[subgroup]") {
  auto g = z2_free_product();
  auto q = subgroup_from_words(g, {"x1^2", "x2 y1^3 x2^-1", "x2 x1 x2^-1"});
  FoldedSubgroup h(g, q);
  REQUIRE(h.peripheral_intersection(g.identity(), 0).lattice == Lattice(2, {{2, 0}}));
  auto at = h.peripheral_intersection(g.parse("x2 y1"), 0);
  REQUIRE(at.lattice == Lattice(2, {{1, 0}, {0, 3}}));
  REQUIRE(h.peripheral_intersection(g.parse("y2"), 0).lattice.is_zero());
  REQUIRE(h.peripheral_intersection(g.identity(), 1).lattice.is_zero());
  auto data = h.cluster_groups();
  REQUIRE(data.size() == 2);
}
