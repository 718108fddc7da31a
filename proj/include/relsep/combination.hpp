#pragma once

// Combination of a relatively quasiconvex Q with a finite-index R of a
// peripheral conjugate, amalgam normal forms, and the loop that makes a
// subgroup fully quasiconvex while keeping an element outside.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "relsep/enumerate.hpp"
#include "relsep/lattice.hpp"
#include "relsep/quasiconvexity.hpp"
#include "relsep/relgraph.hpp"
#include "relsep/subgroup_graph.hpp"

namespace relsep {

/// Q *_K R with R a lattice inside f P_i f^-1 and K = Q cap f P_i f^-1.
struct AmalgamStructure {
  const MarkedGroup* group = nullptr;
  SubgroupSpec q;
  FoldedSubgroup q_graph;
  int factor = 0;
  NormalForm conjugator;
  Lattice r;
  Lattice k;

  AmalgamStructure(const MarkedGroup& g, SubgroupSpec qs, int i, NormalForm f, Lattice rl)
      : group(&g), q(std::move(qs)), q_graph(g, q), factor(i), conjugator(std::move(f)), r(std::move(rl)) {
    require(g.factor(i).kind == Factor::Kind::free_abelian && g.is_peripheral(i), ErrorKind::precondition,
            "R must live in a free-abelian peripheral subgroup");
    require(g.coset_prefix(conjugator, i) == conjugator, ErrorKind::precondition,
            "conjugator must not end in the peripheral factor");
    k = q_graph.peripheral_intersection(conjugator, i).lattice;
    require(r.contains(k), ErrorKind::precondition, "R must contain Q cap P^f");
  }

  NormalForm r_element(const Vec& v) const { return group->conjugate(conjugator, group->vec(factor, v)); }

  /// Vector of x when x lies in f P f^-1.
  std::optional<Vec> peripheral_vector(const NormalForm& x) const {
    const auto& g = *group;
    auto y = g.multiply({g.invert(conjugator), x, conjugator});
    if (y.empty()) return Vec(static_cast<std::size_t>(g.factor(factor).rank), 0);
    if (y.size() == 1 && y.syllables[0].factor == factor) return y.syllables[0].elem;
    return std::nullopt;
  }

  bool in_k(const NormalForm& x) const {
    auto v = peripheral_vector(x);
    return v && k.contains(*v);
  }

  /// Canonical representative of the left coset xK, and the K-vector c with x = rep * c.
  std::pair<NormalForm, Vec> transversal(const NormalForm& x) const {
    const auto& g = *group;
    auto xf = g.multiply(x, conjugator);
    auto prefix = g.coset_prefix(xf, factor);
    Vec a = g.coset_offset(xf, factor);
    Vec red = k.reduce(a);
    NormalForm rep = g.multiply({prefix, g.vec(factor, red), g.invert(conjugator)});
    return {rep, sub(a, red)};
  }
};

struct AmalgamSyllable {
  bool from_r = false;
  NormalForm elem;
};

struct AmalgamNormalForm {
  std::vector<AmalgamSyllable> syllables;  // transversal representatives, alternating
  Vec tail;                                // element of K on the right
};

inline NormalForm evaluate(const AmalgamStructure& a, const AmalgamNormalForm& nf) {
  NormalForm x;
  for (const auto& s : nf.syllables) x = a.group->multiply(x, s.elem);
  return a.group->multiply(x, a.r_element(nf.tail));
}

/// A token of an input word: a Q generator (index, sign) or an R vector.
struct AmalgamToken {
  bool from_r = false;
  int gen = 0;
  int sign = 1;
  Vec vec;
};

inline AmalgamNormalForm amalgam_normal_form(const AmalgamStructure& a, const std::vector<AmalgamToken>& word) {
  const auto& g = *a.group;
  auto gens = a.q.all_generators(g);
  const std::size_t n = static_cast<std::size_t>(g.factor(a.factor).rank);
  // group the word into alternating factor pieces
  std::vector<AmalgamSyllable> pieces;
  for (const auto& t : word) {
    NormalForm x;
    if (t.from_r) {
      require(a.r.contains(t.vec), ErrorKind::precondition, "R token outside R");
      x = a.r_element(t.vec);
    } else {
      require(t.gen >= 0 && t.gen < static_cast<int>(gens.size()), ErrorKind::precondition, "bad Q generator index");
      x = t.sign > 0 ? gens[t.gen] : g.invert(gens[t.gen]);
    }
    if (!pieces.empty() && pieces.back().from_r == t.from_r)
      pieces.back().elem = g.multiply(pieces.back().elem, x);
    else
      pieces.push_back({t.from_r, x});
  }
  // absorb pieces lying in K into a neighbour until none is left
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t j = 0; j < pieces.size(); ++j) {
      if (!a.in_k(pieces[j].elem)) continue;
      if (j + 1 < pieces.size()) {
        pieces[j + 1].elem = g.multiply(pieces[j].elem, pieces[j + 1].elem);
        pieces.erase(pieces.begin() + static_cast<std::ptrdiff_t>(j));
      } else if (j > 0) {
        pieces[j - 1].elem = g.multiply(pieces[j - 1].elem, pieces[j].elem);
        pieces.erase(pieces.begin() + static_cast<std::ptrdiff_t>(j));
      } else {
        break;
      }
      // merge neighbours of equal type
      for (std::size_t m = 0; m + 1 < pieces.size(); ++m)
        if (pieces[m].from_r == pieces[m + 1].from_r) {
          pieces[m].elem = g.multiply(pieces[m].elem, pieces[m + 1].elem);
          pieces.erase(pieces.begin() + static_cast<std::ptrdiff_t>(m) + 1);
        }
      changed = true;
      break;
    }
  }
  AmalgamNormalForm out;
  out.tail = Vec(n, 0);
  if (pieces.size() == 1 && a.in_k(pieces[0].elem)) {
    out.tail = *a.peripheral_vector(pieces[0].elem);
    return out;
  }
  Vec carry(n, 0);
  for (auto& p : pieces) {
    auto x = g.multiply(a.r_element(carry), p.elem);
    auto [rep, c] = a.transversal(x);
    out.syllables.push_back({p.from_r, rep});
    carry = c;
  }
  out.tail = carry;
  return out;
}

struct CombinationCertificate {
  std::int64_t theta = 0;
  int l_inj = 0;
  std::size_t forms_checked = 0;
  std::size_t collisions = 0;
  bool injective = true;
  std::vector<NormalForm> collision;  // colliding pair, if any
  std::size_t samples = 0;
  std::int64_t min_long_component = 0;  // over sampled H \ Q
  bool conclusion3 = true;
  std::int64_t boundary_margin = 0;     // 2 * longest boundary P_i-syllable of the Q pool
  std::size_t q_pool = 0, r_pool = 0;
};

struct CombineOptions {
  std::int64_t theta = 6;
  int l_inj = 6;
  std::size_t samples = 500;
  std::uint64_t seed = 1;
  std::size_t pool = 4;            // representatives per factor
  std::size_t max_forms = 3'000'000;
};

/// Short left-transversal representatives of K in Q and in R (identity coset excluded).
inline std::pair<std::vector<NormalForm>, std::vector<NormalForm>> amalgam_pools(const AmalgamStructure& a,
                                                                                 std::size_t pool) {
  const auto& g = *a.group;
  std::vector<NormalForm> qp, rp;
  std::set<NormalForm> seen;
  for (std::int64_t radius = 1; qp.size() < pool && radius <= 12; ++radius) {
    for (const auto& x : enumerate_subgroup(a.q_graph, radius)) {
      auto rep = a.transversal(x).first;
      if (rep.empty() || !seen.insert(rep).second) continue;
      qp.push_back(rep);
      if (qp.size() >= pool) break;
    }
  }
  seen.clear();
  const auto n = static_cast<std::size_t>(g.factor(a.factor).rank);
  for (std::int64_t radius = 1; !(a.r == a.k) && rp.size() < pool && radius <= 4096; radius = radius * 2) {
    for (const auto& v : l1_ball(n, radius)) {
      if (!a.r.contains(v) || a.k.contains(v)) continue;
      auto rep = a.transversal(a.r_element(v)).first;
      if (!seen.insert(rep).second) continue;
      rp.push_back(rep);
      if (rp.size() >= pool) break;
    }
  }
  return {qp, rp};
}

/// Largest S-length among the P_i-components of a relative geodesic.
inline std::int64_t longest_component(const MarkedGroup& g, const NormalForm& x, int factor) {
  std::int64_t best = 0;
  for (const auto& c : p_components(g, rel_geodesic(g, x)))
    if (c.factor == factor) best = std::max(best, c.s_length);
  return best;
}

/// Injectivity of Q *_K R -> G on all normal forms with at most l_inj
/// syllables drawn from the pools, and the long-component probe on samples.
inline CombinationCertificate certify_combination(const AmalgamStructure& a, const CombineOptions& opt) {
  const auto& g = *a.group;
  CombinationCertificate cert;
  cert.theta = opt.theta;
  cert.l_inj = opt.l_inj;
  if (a.r == a.k) return cert;
  auto [qp, rp] = amalgam_pools(a, opt.pool);
  cert.q_pool = qp.size();
  cert.r_pool = rp.size();
  for (const auto& q : qp)
    for (const auto* s : {&q.syllables.front(), &q.syllables.back()})
      if (s->factor == a.factor && a.conjugator.empty())
        cert.boundary_margin = std::max(cert.boundary_margin, 2 * g.factor(a.factor).length(s->elem));
  std::vector<NormalForm> tails{g.identity()};
  for (const auto& row : a.k.basis()) {
    tails.push_back(a.r_element(row));
    tails.push_back(g.invert(a.r_element(row)));
  }
  std::unordered_map<NormalForm, std::vector<int>, NormalFormHash> seen;
  std::vector<int> trail;
  // depth-first over alternating sequences
  std::function<void(const NormalForm&, int, bool)> walk = [&](const NormalForm& prefix, int len, bool last_r) {
    for (std::size_t t = 0; t < tails.size(); ++t) {
      auto x = g.multiply(prefix, tails[t]);
      require(++cert.forms_checked <= opt.max_forms, ErrorKind::budget_exceeded, "injectivity check exceeded its budget");
      std::vector<int> key = trail;
      key.push_back(-1 - static_cast<int>(t));
      auto [it, fresh] = seen.emplace(x, key);
      if (!fresh && it->second != key) {
        ++cert.collisions;
        if (cert.collision.empty()) cert.collision = {x, x};
      }
    }
    if (len == opt.l_inj) return;
    for (int side : {0, 1}) {
      if (len > 0 && (side == 1) == last_r) continue;
      const auto& pool = side ? rp : qp;
      for (std::size_t k = 0; k < pool.size(); ++k) {
        trail.push_back(side * 1000 + static_cast<int>(k));
        walk(g.multiply(prefix, pool[k]), len + 1, side == 1);
        trail.pop_back();
      }
    }
  };
  walk(g.identity(), 0, false);
  cert.injective = cert.collisions == 0;

  // random alternating normal forms with at least one R syllable lie in H \ Q
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<int> pick_len(1, std::max(1, opt.l_inj));
  cert.min_long_component = std::numeric_limits<std::int64_t>::max();
  for (std::size_t s = 0; s < opt.samples && !rp.empty(); ++s) {
    int len = qp.empty() ? 1 : pick_len(rng);
    bool r_side = qp.empty() || len == 1 || rng() % 2 == 0;
    NormalForm x;
    for (int j = 0; j < len; ++j) {
      const auto& pool = r_side ? rp : qp;
      x = g.multiply(x, pool[rng() % pool.size()]);
      r_side = !r_side;
    }
    ++cert.samples;
    cert.min_long_component = std::min(cert.min_long_component, longest_component(g, x, a.factor));
  }
  if (cert.samples == 0) cert.min_long_component = 0;
  cert.conclusion3 = cert.samples == 0 || cert.min_long_component > opt.theta;
  return cert;
}

inline SubgroupSpec with_block(const SubgroupSpec& q, int factor, const NormalForm& f, const Lattice& r) {
  SubgroupSpec h = q;
  h.blocks.push_back({factor, f, r});
  return h;
}

struct CombineResult {
  SubgroupSpec h;
  CombinationCertificate certificate;
};

/// H = <Q, f R f^-1> together with its certificate; an injectivity failure is an error.
inline CombineResult combine(const MarkedGroup& g, const SubgroupSpec& q, int factor, const NormalForm& f,
                             const Lattice& r, const CombineOptions& opt) {
  AmalgamStructure a(g, q, factor, f, r);
  require(!shortest_nonmember(a.r, a.k, opt.theta).has_value(), ErrorKind::precondition,
          "R has an element outside K of length at most theta");
  CombineResult res{a.r == a.k ? q : with_block(q, factor, f, r), certify_combination(a, opt)};
  if (!res.certificate.injective)
    fail(ErrorKind::verification_failed, "amalgam normal forms collide: " + g.format(res.certificate.collision[0]));
  return res;
}

/// Replaces the datum equal to (factor, K) by R.
inline std::vector<ParabolicDatum> update_parabolic_representatives(const MarkedGroup& g,
                                                                    std::vector<ParabolicDatum> before,
                                                                    std::size_t which, const Lattice& r) {
  require(which < before.size(), ErrorKind::precondition, "datum index out of range");
  auto& d = before[which];
  require(r.contains(d.lattice) && !(r == d.lattice), ErrorKind::precondition, "K must be a proper subgroup of R");
  d.lattice = r;
  d.kind = classify(g, d.factor, r, {});
  return before;
}

inline std::vector<std::pair<int, Matrix>> parabolic_signature(const std::vector<ParabolicDatum>& ds) {
  std::vector<std::pair<int, Matrix>> out;
  for (const auto& d : ds)
    if (d.kind != ParabolicClass::trivial) out.push_back({d.factor, d.lattice.basis()});
  std::sort(out.begin(), out.end());
  return out;
}

struct FqcOptions {
  std::int64_t theta0 = 4;
  int l_inj = 6;
  std::size_t samples = 300;
  int max_retries = 6;
  std::int64_t membership_budget = 12;
  std::uint64_t seed = 1;
  std::size_t pool = 4;
};

struct FqcStep {
  int factor = 0;
  NormalForm conjugator;
  Lattice k, r;
  std::int64_t l = 0, theta = 0, d = 0;
  int retries = 0;
  bool grew = false;
  CombinationCertificate certificate;
  bool finite_index_ok = false;
  bool representatives_ok = false;
  bool long_component_ok = false;
  Verdict membership = Verdict::unknown;
};

struct FqcResult {
  SubgroupSpec h;
  std::vector<FqcStep> steps;
  bool fully_quasiconvex = false;
  Verdict final_membership = Verdict::unknown;
};

/// Builds Q = Q_0 < Q_1 < ... < Q_n = H with every infinite parabolic of H of
/// finite index in its peripheral conjugate and g outside H.
inline FqcResult fully_quasiconvexify(const MarkedGroup& g, const SubgroupSpec& q, const NormalForm& x,
                                      const FqcOptions& opt = {}) {
  require(!FoldedSubgroup(g, q).contains(x), ErrorKind::precondition, "the element already lies in Q");
  FqcResult res;
  res.h = q;
  const auto initial = maximal_parabolics(g, q);
  for (const auto& d0 : initial) {
    if (!d0.infinite() || g.factor(d0.factor).kind != Factor::Kind::free_abelian) continue;
    FoldedSubgroup cur(g, res.h);
    FqcStep step;
    step.factor = d0.factor;
    step.conjugator = d0.conjugator;
    step.k = cur.peripheral_intersection(d0.conjugator, d0.factor).lattice;
    step.l = 0;
    {
      // components of the fixed geodesic for x lying in the coset f P
      auto path = rel_geodesic(g, x);
      for (const auto& c : p_components(g, path))
        if (c.factor == d0.factor) step.l = std::max(step.l, c.s_length);
    }
    const auto before = maximal_parabolics(cur);
    std::int64_t theta = opt.theta0;
    for (;; theta *= 2, ++step.retries) {
      require(step.retries <= opt.max_retries, ErrorKind::budget_exceeded, "retry budget exhausted");
      step.theta = theta;
      step.d = step.l + theta;
      if (step.k.is_full_rank()) {
        step.r = step.k;
      } else {
        AmalgamStructure probe(g, res.h, d0.factor, d0.conjugator, step.k);
        std::vector<Vec> avoid;
        if (auto v = probe.peripheral_vector(x); v && !step.k.contains(*v)) avoid.push_back(*v);
        // boundary syllables of Q merge with R: keep a margin for them
        auto [qp, rp] = amalgam_pools(probe, opt.pool);
        std::int64_t margin = 0;
        for (const auto& qq : qp)
          for (const auto* s : {&qq.syllables.front(), &qq.syllables.back()})
            if (s->factor == d0.factor) margin = std::max(margin, 2 * g.factor(d0.factor).length(s->elem));
        step.r = separate_with_minlength(step.k, avoid, step.d + margin);
      }
      CombineOptions copt{theta, opt.l_inj, opt.samples, opt.seed, opt.pool, 3'000'000};
      AmalgamStructure a(g, res.h, d0.factor, d0.conjugator, step.r);
      step.certificate = certify_combination(a, copt);
      if (step.certificate.injective && step.certificate.conclusion3) break;
    }
    step.grew = !(step.r == step.k);
    SubgroupSpec next = step.grew ? with_block(res.h, d0.factor, d0.conjugator, step.r) : res.h;
    FoldedSubgroup nh(g, next);
    // (1) the handled peripheral now meets H in a finite-index subgroup
    step.finite_index_ok = nh.peripheral_intersection(d0.conjugator, d0.factor).lattice.is_full_rank();
    // (2) representatives: K replaced by R, the rest unchanged
    auto after = maximal_parabolics(nh);
    if (step.grew) {
      std::size_t which = before.size();
      for (std::size_t j = 0; j < before.size(); ++j)
        if (before[j].factor == d0.factor && before[j].lattice == step.k &&
            g.coset_prefix(before[j].conjugator, d0.factor) == g.coset_prefix(d0.conjugator, d0.factor))
          which = j;
      if (which == before.size())
        for (std::size_t j = 0; j < before.size(); ++j)
          if (before[j].factor == d0.factor && before[j].lattice == step.k) which = j;
      step.representatives_ok = which < before.size() &&
                                parabolic_signature(update_parabolic_representatives(g, before, which, step.r)) ==
                                    parabolic_signature(after);
    } else {
      step.representatives_ok = parabolic_signature(before) == parabolic_signature(after);
    }
    // (3) x stays outside
    step.long_component_ok = step.l < step.d;
    step.membership = is_member_bounded(g, next, x, opt.membership_budget).verdict;
    require(step.membership == Verdict::no, ErrorKind::verification_failed, "element fell into the subgroup");
    require(step.finite_index_ok && step.representatives_ok, ErrorKind::verification_failed,
            "post-step check failed for the combination");
    res.h = next;
    res.steps.push_back(std::move(step));
  }
  res.fully_quasiconvex = is_fully_quasiconvex(g, res.h).fully_quasiconvex;
  res.final_membership = is_member_bounded(g, res.h, x, opt.membership_budget).verdict;
  return res;
}

}  // namespace relsep
