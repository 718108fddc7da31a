#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "relsep/combination.hpp"
#include "relsep/filling.hpp"

using namespace relsep;

namespace {

AmalgamToken qtok(int gen, int sign = 1) { return {false, gen, sign, {}}; }
AmalgamToken rtok(Vec v) { return {true, 0, 1, std::move(v)}; }

NormalForm product(const AmalgamStructure& a, const std::vector<AmalgamToken>& w) {
  const auto& g = *a.group;
  auto gens = a.q.all_generators(g);
  NormalForm x;
  for (const auto& t : w)
    x = g.multiply(x, t.from_r ? a.r_element(t.vec) : (t.sign > 0 ? gens[t.gen] : g.invert(gens[t.gen])));
  return x;
}

// Finite index of H cap P^f: a multiple of every axis vector has a checked witness word.
bool axes_reached(const MarkedGroup& g, const SubgroupSpec& h, int factor, std::int64_t m) {
  const auto n = static_cast<std::size_t>(g.factor(factor).rank);
  for (std::size_t j = 0; j < n; ++j) {
    Vec e(n, 0);
    e[j] = m;
    auto x = g.vec(factor, e);
    auto res = is_member_bounded(g, h, x, 2);
    if (res.verdict != Verdict::yes || evaluate_witness(g, h, res.witness) != x) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("amalgam normal form of a three-piece word", "[combination]") {
  auto g = z2_free_product();
  AmalgamStructure a(g, subgroup_from_words(g, {"x1 x2"}), 0, {}, Lattice(2, {{3, 0}, {0, 1}}));
  CHECK(a.k.is_zero());
  std::vector<AmalgamToken> w{qtok(0), rtok({3, 0}), qtok(0)};
  auto nf = amalgam_normal_form(a, w);
  REQUIRE(nf.syllables.size() == 3);
  CHECK_FALSE(nf.syllables[0].from_r);
  CHECK(nf.syllables[1].from_r);
  CHECK(evaluate(a, nf) == product(a, w));
  CHECK(g.format(evaluate(a, nf)) == "x1 x2 x1^4 x2");
  // a piece in K disappears
  auto one = amalgam_normal_form(a, {qtok(0), qtok(0, -1), rtok({0, 1})});
  CHECK(one.syllables.size() == 1);
}

TEST_CASE("amalgam normal forms are canonical", "[combination][property]") {
  auto g = z2_free_product();
  // K = <x1> is nontrivial here
  AmalgamStructure a(g, subgroup_from_words(g, {"x1", "x2 y1"}), 0, {}, Lattice(2, {{1, 0}, {0, 2}}));
  REQUIRE(a.k == Lattice(2, {{1, 0}}));
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> coin(0, 1), len(0, 7), small(-2, 2);
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<AmalgamToken> w;
    for (int j = len(rng); j > 0; --j) {
      if (coin(rng))
        w.push_back(rtok({small(rng), 2 * small(rng)}));
      else
        w.push_back(qtok(coin(rng), coin(rng) ? 1 : -1));
    }
    auto nf = amalgam_normal_form(a, w);
    REQUIRE(evaluate(a, nf) == product(a, w));
    for (std::size_t j = 0; j < nf.syllables.size(); ++j) {
      CHECK_FALSE(a.in_k(nf.syllables[j].elem));
      CHECK(a.transversal(nf.syllables[j].elem).first == nf.syllables[j].elem);
      if (j > 0) CHECK(nf.syllables[j].from_r != nf.syllables[j - 1].from_r);
    }
    CHECK(a.k.contains(nf.tail));
    // inserting a cancelling pair changes nothing
    auto w2 = w;
    w2.insert(w2.begin() + static_cast<std::ptrdiff_t>(w.size() / 2), {qtok(1), rtok({0, 0}), qtok(1, -1)});
    auto nf2 = amalgam_normal_form(a, w2);
    REQUIRE(nf2.syllables.size() == nf.syllables.size());
    for (std::size_t j = 0; j < nf.syllables.size(); ++j) CHECK(nf2.syllables[j].elem == nf.syllables[j].elem);
    CHECK(nf2.tail == nf.tail);
  }
}

TEST_CASE("combination with a cyclic subgroup", "[combination]") {
  auto g = z2_free_product();
  auto q = subgroup_from_words(g, {"x1 x2"});
  const std::int64_t theta = 6;
  // boundary P1 syllables of <x1 x2> have length 1 on each side
  auto r = separate_with_minlength(Lattice::zero(2), {g.vec(0, {0, 1}).syllables[0].elem}, theta + 2);
  CHECK(r == Lattice::scaled(2, 9));
  CombineOptions opt;
  opt.theta = theta;
  auto res = combine(g, q, 0, {}, r, opt);
  const auto& c = res.certificate;
  CHECK(c.injective);
  CHECK(c.collisions == 0);
  CHECK(c.q_pool == 4);
  CHECK(c.r_pool == 4);
  CHECK(c.boundary_margin == 2);
  CHECK(c.forms_checked > 8000);
  CHECK(c.conclusion3);
  CHECK(c.min_long_component > theta);
  CHECK(res.h.blocks.size() == 1);
  // an independent check of the long component for one element
  auto x = g.parse("x2^-1 x1^-1 x1^9 x1 x2");
  CHECK(longest_component(g, x, 0) == 9);
}

TEST_CASE("combine rejects bad input", "[combination]") {
  auto g = z2_free_product();
  auto q = subgroup_from_words(g, {"x1 x2"});
  CombineOptions opt;
  opt.theta = 6;
  REQUIRE_THROWS_AS(combine(g, q, 0, {}, Lattice::scaled(2, 3), opt), Error);
  REQUIRE_THROWS_AS(AmalgamStructure(g, subgroup_from_words(g, {"x1^2"}), 0, {}, Lattice::scaled(2, 3)), Error);
  REQUIRE_THROWS_AS(AmalgamStructure(g, q, 0, g.parse("x1"), Lattice::scaled(2, 3)), Error);
}

TEST_CASE("a non-injective amalgam is detected", "[combination]") {
  auto g = z2_free_product();
  // x1^-1 (x1 x2) y1 (x2 y1)^-1 = 1 is a nontrivial normal form
  auto q = subgroup_from_words(g, {"x1 x2", "x2 y1"});
  CombineOptions opt;
  opt.theta = 0;
  opt.l_inj = 4;
  AmalgamStructure a(g, q, 0, {}, Lattice::full(2));
  CHECK(a.k.is_zero());
  auto cert = certify_combination(a, opt);
  CHECK_FALSE(cert.injective);
  CHECK(cert.collisions > 0);
  try {
    combine(g, q, 0, {}, Lattice::full(2), opt);
    FAIL("expected a verification failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::verification_failed);
  }
}

TEST_CASE("parabolic representatives are updated", "[combination]") {
  auto g = z2_free_product();
  auto data = maximal_parabolics(g, subgroup_from_words(g, {"x1", "x2"}));
  REQUIRE(data.size() == 2);
  auto up = update_parabolic_representatives(g, data, 0, Lattice::full(2));
  CHECK(up[0].kind == ParabolicClass::finite_index);
  CHECK(up[1].lattice == data[1].lattice);
  REQUIRE_THROWS_AS(update_parabolic_representatives(g, data, 0, data[0].lattice), Error);
}

TEST_CASE("fully quasiconvexify examples", "[combination]") {
  auto g = z2_free_product();
  SECTION("no infinite parabolics") {
    auto q = subgroup_from_words(g, {"x1 x2"});
    auto res = fully_quasiconvexify(g, q, g.parse("x1"));
    CHECK(res.steps.empty());
    CHECK(res.h.generators == q.generators);
    CHECK(res.h.blocks.empty());
    CHECK(res.fully_quasiconvex);
  }
  SECTION("one peripheral") {
    auto q = subgroup_from_words(g, {"x1"});
    auto y = g.parse("y1");
    auto res = fully_quasiconvexify(g, q, y);
    REQUIRE(res.steps.size() == 1);
    CHECK(res.steps[0].grew);
    CHECK(res.steps[0].finite_index_ok);
    CHECK(res.steps[0].representatives_ok);
    CHECK_FALSE(res.steps[0].r.contains(Vec{0, 1}));
    CHECK(res.fully_quasiconvex);
    CHECK(res.final_membership == Verdict::no);
    CHECK(axes_reached(g, res.h, 0, *res.steps[0].r.index()));
    auto elems = enumerate_subgroup_bfs(g, res.h, 8);
    CHECK(std::find(elems.begin(), elems.end(), y) == elems.end());
  }
  SECTION("two peripherals") {
    auto q = subgroup_from_words(g, {"x1^2", "y1", "x2"});
    auto x = g.parse("x1");
    auto res = fully_quasiconvexify(g, q, x);
    REQUIRE(res.steps.size() == 2);
    CHECK_FALSE(res.steps[0].grew);
    CHECK(res.steps[1].grew);
    for (const auto& s : res.steps) {
      CHECK(s.finite_index_ok);
      CHECK(s.representatives_ok);
      CHECK(s.membership == Verdict::no);
    }
    CHECK(res.fully_quasiconvex);
    CHECK(res.final_membership == Verdict::no);
    CHECK(axes_reached(g, res.h, 1, *res.steps[1].r.index()));
  }
  REQUIRE_THROWS_AS(fully_quasiconvexify(g, subgroup_from_words(g, {"x1"}), g.parse("x1^3")), Error);
}

namespace {

FillingKernels uniform_kernels(const MarkedGroup& g, std::int64_t m) {
  FillingKernels k(static_cast<std::size_t>(g.factor_count()));
  for (int i : g.peripheral_indices()) k.kernels[i] = Lattice::scaled(2, m);
  return k;
}

// Image of x under Z^2 * Z^2 -> (Z/m)^2 * (Z/m)^2 written as a syllable list of residues.
std::vector<std::pair<int, Vec>> residues(const NormalForm& x, std::int64_t m) {
  std::vector<std::pair<int, Vec>> out;
  for (const auto& s : x.syllables) {
    Vec v = s.elem;
    if (!out.empty() && out.back().first == s.factor) {
      v = add(out.back().second, v);
      out.pop_back();
    }
    for (auto& c : v) c = ((c % m) + m) % m;
    if (!detail::is_zero(v)) out.push_back({s.factor, v});
  }
  return out;
}

}  // namespace

TEST_CASE("filling Z2 * Z2 by 5Z2", "[filling]") {
  auto g = z2_free_product();
  auto pi = fill(g, uniform_kernels(g, 5));
  const auto& t = pi.target();
  CHECK(t.factor(0).order() == 25);
  CHECK(t.factor(1).order() == 25);
  CHECK(pi.filled().invariants[0].torsion() == std::vector<std::int64_t>{5, 5});
  CHECK(pi(g.parse("x1^5")).empty());
  CHECK(pi(g.parse("x1^3 x2")).size() == 2);
  CHECK(pi(g.parse("x1^5 y2^-10 x1")) == pi(g.parse("x1")));
  CHECK(peripheral_images_injective(pi));
  std::mt19937_64 rng(5);
  auto b = ball(g, 3);
  std::uniform_int_distribution<std::size_t> pick(0, b.size() - 1);
  for (int trial = 0; trial < 300; ++trial) {
    auto x = b[pick(rng)], y = b[pick(rng)];
    CHECK(pi(g.multiply(x, y)) == t.multiply(pi(x), pi(y)));
  }
  for (const auto& s : g.generators()) CHECK_FALSE(pi(g.syllable(s.factor, s.elem)).empty());
}

TEST_CASE("filling edge cases", "[filling]") {
  auto g = z2_free_product();
  FillingKernels all(2);
  all.kernels[0] = Lattice::full(2);
  all.kernels[1] = Lattice::full(2);
  auto pi = fill(g, all);
  CHECK(pi.target().factor(0).order() == 1);
  CHECK(pi(g.parse("x1 y2^3 x1^-7")).empty());
  FillingKernels bad(2);
  bad.kernels[0] = Lattice(2, {{3, 0}});
  REQUIRE_THROWS_AS(fill(g, bad), Error);
  FillingKernels huge(2);
  huge.kernels[0] = Lattice::scaled(2, 100);
  REQUIRE_THROWS_AS(fill(g, huge), Error);
  CHECK(uniform_kernels(g, 5).min_length(0) == 5);
  CHECK(FillingKernels{2}.kernels[0] == std::nullopt);
}

TEST_CASE("injectivity of the filling on finite sets", "[filling]") {
  auto g = z2_free_product();
  auto pi = fill(g, uniform_kernels(g, 5));
  CHECK(injective_on(pi, {g.identity()}).injective);
  CHECK(injective_on(pi, ball(g, 2)).injective);
  auto rep = injective_on(pi, {g.identity(), g.parse("x1^5")});
  CHECK_FALSE(rep.injective);
  REQUIRE(rep.collision.has_value());
  CHECK(rep.collision->second == g.parse("x1^5"));
}

TEST_CASE("kernels longer than 2r+1 are injective on ball(r)", "[filling][property]") {
  auto g = z2_free_product();
  for (std::int64_t r = 1; r <= 3; ++r) {
    auto b = ball(g, r);
    for (std::int64_t m : {2 * r, 2 * r + 2}) {
      auto pi = fill(g, uniform_kernels(g, m));
      std::set<std::vector<std::pair<int, Vec>>> oracle;
      for (const auto& x : b) oracle.insert(residues(x, m));
      bool expected = oracle.size() == b.size();
      CHECK(injective_on(pi, b).injective == expected);
      if (m > 2 * r + 1) CHECK(expected);
    }
  }
  // frozen: x1^-2 and x1^2 agree modulo 4
  CHECK_FALSE(injective_on(fill(g, uniform_kernels(g, 4)), ball(g, 2)).injective);
}

TEST_CASE("H-filling checks", "[filling]") {
  auto g = z2_free_product();
  auto whole = subgroup_from_words(g, {"x1", "y1", "x2", "y2"});
  CHECK(is_h_filling(g, whole, uniform_kernels(g, 3), 3).h_filling);
  auto cyc = subgroup_from_words(g, {"x1 x2"});
  auto rep = is_h_filling(g, cyc, uniform_kernels(g, 3), 3);
  CHECK(rep.h_filling);
  for (const auto& row : rep.table) CHECK_FALSE(row.nontrivial);
  auto even = subgroup_from_words(g, {"x1^2", "y1^2"});
  FillingKernels k4(2), k3(2);
  k4.kernels[0] = Lattice::scaled(2, 4);
  k3.kernels[0] = Lattice::scaled(2, 3);
  CHECK(is_h_filling(g, even, k4, 3).h_filling);
  auto bad = is_h_filling(g, even, k3, 3);
  CHECK_FALSE(bad.h_filling);
  bool witnessed = false;
  for (const auto& row : bad.table)
    if (!row.contained) {
      witnessed = true;
      CHECK(row.coset.empty());
      CHECK(row.witness == Vec{3, 0});
    }
  CHECK(witnessed);
  CHECK(is_h_filling(g, even, k3, 3, true).h_filling == false);
}

TEST_CASE("M_i and the kernel choice", "[filling]") {
  auto g = z2_free_product();
  FoldedSubgroup cyc(g, subgroup_from_words(g, {"x1 x2"}));
  CHECK(compute_mi(cyc, 0, 3) == Lattice::full(2));
  auto kc = choose_kernels(cyc, 4, 3);
  CHECK(*kc.kernels[0] == Lattice::scaled(2, 5));
  CHECK(*kc.kernels[1] == Lattice::scaled(2, 5));
  CHECK(kc.min_length(0) == 5);

  FoldedSubgroup even(g, subgroup_from_words(g, {"x1^2", "y1^2"}));
  CHECK(compute_mi(even, 0, 3) == Lattice::scaled(2, 2));
  auto ke = choose_kernels(even, 4, 3);
  CHECK(*ke.kernels[0] == Lattice::scaled(2, 10));
  CHECK(ke.min_length(0) == 10);

  FoldedSubgroup two(g, subgroup_from_words(g, {"x1^2", "y1^2", "x2 x1^3 x2^-1", "x2 y1^3 x2^-1"}));
  CHECK(compute_mi(two, 0, 3) == Lattice::scaled(2, 6));
  CHECK(*choose_kernels(two, 4, 3).kernels[0] == Lattice::scaled(2, 30));

  REQUIRE_THROWS_AS(choose_kernels(FoldedSubgroup(g, subgroup_from_words(g, {"x1"})), 4, 3), Error);
}

TEST_CASE("delta of filled quotients", "[filling]") {
  auto g = z2_free_product();
  auto pi = fill(g, uniform_kernels(g, 3));
  auto d = quotient_delta_probe(pi, 3, 150, 2);
  CHECK(d.delta <= 2);
  CHECK(quotient_delta_probe(pi, 3, 150, 2).delta == d.delta);

  MarkedGroup one({Factor::free_abelian("P", 2)}, {0});
  FillingKernels k(1);
  k.kernels[0] = Lattice::scaled(2, 3);
  CHECK(quotient_delta_probe(fill(one, k), 2, 100, 1).delta <= 1);

  MarkedGroup f2({Factor::free("F", 2)}, {});
  CHECK(quotient_delta_probe(fill(f2, FillingKernels(1)), 4, 200, 1).delta == 0);
  REQUIRE_THROWS_AS(quotient_delta_probe(fill(g, FillingKernels(2)), 2, 10, 1), Error);
}

TEST_CASE("images of subgroups in the filling", "[filling]") {
  auto g = z2_free_product();
  auto even = subgroup_from_words(g, {"x1^2", "y1^2"});
  auto pi = fill(g, choose_kernels(g, even, 4, 3));
  auto rep = image_qc_probe(pi, even, g.parse("x1"), 4);
  CHECK(rep.separated);
  CHECK(rep.qc.constant <= 1);
  CHECK(rep.image.generators.size() == 2);

  auto fq = fully_quasiconvexify(g, subgroup_from_words(g, {"x1"}), g.parse("y1"));
  FoldedSubgroup h(g, fq.h);
  auto k = choose_kernels(h, 5, 3);
  CHECK(is_h_filling(h, k, 3).h_filling);
  auto pi2 = fill(g, k);
  CHECK(image_qc_probe(pi2, fq.h, g.parse("y1"), 3).separated);

  auto all = subgroup_from_words(g, {"x1", "y1", "x2", "y2"});
  auto pi3 = fill(g, uniform_kernels(g, 2));
  CHECK_FALSE(image_qc_probe(pi3, all, g.parse("x1 y2"), 3).separated);
}
