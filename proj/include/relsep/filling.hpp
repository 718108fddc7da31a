#pragma once

// Dehn fillings G(N_1, ..., N_m) of free products: kernels, quotient map,
// H-filling checks and the kernel choice N_i = N^_i cap M_i.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "relsep/cusped.hpp"
#include "relsep/enumerate.hpp"
#include "relsep/lattice.hpp"
#include "relsep/quasiconvexity.hpp"
#include "relsep/subgroup_graph.hpp"

namespace relsep {

inline constexpr std::int64_t max_filled_order = 4096;

/// One optional full-rank kernel per factor; only free-abelian peripherals may be filled.
struct FillingKernels {
  std::vector<std::optional<Lattice>> kernels;

  explicit FillingKernels(std::size_t factors = 0) : kernels(factors) {}

  std::int64_t min_length(int i) const {
    const auto& k = kernels.at(static_cast<std::size_t>(i));
    require(k.has_value(), ErrorKind::precondition, "factor is not filled");
    for (std::int64_t r = 1;; ++r)
      for (const auto& v : l1_ball(k->ambient_rank(), r))
        if (l1(v) == r && k->contains(v)) return r;
  }
};

struct FilledGroup {
  MarkedGroup target;
  FillingKernels kernels;
  std::vector<std::map<Vec, int>> index;  // reduced representative -> element, per filled factor
  std::vector<AbelianQuotient> invariants;
};

/// pi: G -> G(N_1, ..., N_m), syllable by syllable.
class QuotientMap {
 public:
  QuotientMap(const MarkedGroup& source, FilledGroup target) : source_(&source), filled_(std::move(target)) {}

  const MarkedGroup& source() const { return *source_; }
  const FilledGroup& filled() const { return filled_; }
  const MarkedGroup& target() const { return filled_.target; }

  NormalForm operator()(const NormalForm& x) const {
    const auto& t = filled_.target;
    NormalForm out;
    for (const auto& s : x.syllables) {
      const auto& k = filled_.kernels.kernels[static_cast<std::size_t>(s.factor)];
      if (k)
        t.append(out, s.factor, {filled_.index[static_cast<std::size_t>(s.factor)].at(k->reduce(s.elem))});
      else
        t.append(out, s.factor, s.elem);
    }
    return out;
  }

  SubgroupSpec image(const SubgroupSpec& h) const {
    SubgroupSpec out;
    for (const auto& x : h.all_generators(*source_)) {
      auto y = (*this)(x);
      if (!y.empty()) out.generators.push_back(y);
    }
    return out;
  }

 private:
  const MarkedGroup* source_;
  FilledGroup filled_;
};

/// Replaces every filled factor P_i by the finite group P_i / N_i.
inline QuotientMap fill(const MarkedGroup& g, const FillingKernels& kernels) {
  require(kernels.kernels.size() == static_cast<std::size_t>(g.factor_count()), ErrorKind::precondition,
          "one kernel slot per factor");
  FilledGroup out;
  out.kernels = kernels;
  out.index.resize(kernels.kernels.size());
  out.invariants.resize(kernels.kernels.size());
  std::vector<Factor> factors;
  for (int i = 0; i < g.factor_count(); ++i) {
    const auto& k = kernels.kernels[static_cast<std::size_t>(i)];
    const auto& f = g.factor(i);
    if (!k) {
      factors.push_back(f);
      continue;
    }
    require(g.is_peripheral(i) && f.kind == Factor::Kind::free_abelian, ErrorKind::precondition,
            "only free-abelian peripheral factors can be filled");
    require(k->ambient_rank() == static_cast<std::size_t>(f.rank), ErrorKind::precondition, "kernel rank mismatch");
    require(k->is_full_rank(), ErrorKind::precondition, "kernel of " + f.name + " is not of full rank");
    auto order = *k->index();
    require(order <= max_filled_order, ErrorKind::budget_exceeded, "filled factor order exceeds the cap");
    std::vector<Vec> reps;
    auto& idx = out.index[static_cast<std::size_t>(i)];
    for (const auto& v : k->coset_representatives()) {
      auto r = k->reduce(v);
      if (idx.emplace(r, static_cast<int>(reps.size())).second) reps.push_back(r);
    }
    require(static_cast<std::int64_t>(reps.size()) == order, ErrorKind::verification_failed, "coset count mismatch");
    const int n = static_cast<int>(reps.size());
    std::vector<std::vector<int>> table(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(n)));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) table[a][b] = idx.at(k->reduce(add(reps[a], reps[b])));
    auto q = Factor::finite(f.name, std::move(table), idx.at(k->reduce(Vec(reps[0].size(), 0))));
    q.finite_labels = reps;
    factors.push_back(std::move(q));
    out.invariants[static_cast<std::size_t>(i)] = smith(*k);
  }
  out.target = MarkedGroup(std::move(factors), g.peripheral_indices());
  return QuotientMap(g, std::move(out));
}

struct InjectivityReport {
  bool injective = true;
  std::optional<std::pair<NormalForm, NormalForm>> collision;
};

inline InjectivityReport injective_on(const QuotientMap& pi, const std::vector<NormalForm>& f) {
  InjectivityReport rep;
  std::unordered_map<NormalForm, NormalForm, NormalFormHash> seen;
  for (const auto& x : f) {
    auto [it, fresh] = seen.emplace(pi(x), x);
    if (!fresh && it->second != x) {
      rep.injective = false;
      rep.collision = {it->second, x};
      return rep;
    }
  }
  return rep;
}

/// P_i / N_i embeds in the filled group: distinct cosets have distinct images.
inline bool peripheral_images_injective(const QuotientMap& pi) {
  const auto& fg = pi.filled();
  for (std::size_t i = 0; i < fg.kernels.kernels.size(); ++i) {
    if (!fg.kernels.kernels[i]) continue;
    std::vector<NormalForm> reps;
    for (const auto& [v, e] : fg.index[i]) reps.push_back(pi.source().vec(static_cast<int>(i), v));
    std::set<NormalForm> images;
    for (const auto& r : reps) images.insert(pi(r));
    if (images.size() != reps.size()) return false;
  }
  return true;
}

struct HFillingRow {
  int factor = 0;
  NormalForm coset;     // t with the coset t P_i
  Lattice lattice;      // t^-1 H t cap P_i
  bool nontrivial = false;
  bool contained = true;
  std::optional<Vec> witness;  // kernel vector outside the intersection
};

struct HFillingReport {
  bool h_filling = true;
  std::vector<HFillingRow> table;
};

/// Cosets t P_i of filled factors meeting ball(budget).
inline std::vector<std::pair<int, NormalForm>> peripheral_cosets(const MarkedGroup& g, const FillingKernels& k,
                                                                 std::int64_t budget) {
  std::set<std::pair<int, NormalForm>> seen;
  std::vector<std::pair<int, NormalForm>> out;
  for (const auto& x : ball(g, budget))
    for (int i = 0; i < g.factor_count(); ++i)
      if (k.kernels[static_cast<std::size_t>(i)] && seen.insert({i, g.coset_prefix(x, i)}).second)
        out.push_back({i, g.coset_prefix(x, i)});
  return out;
}

/// N_i^t is contained in H cap P_i^t whenever the intersection is nontrivial
/// (or infinite, with the torsion variant; the two agree on free-abelian factors).
inline HFillingReport is_h_filling(const FoldedSubgroup& h, const FillingKernels& k, std::int64_t budget,
                                   bool torsion_variant = false) {
  const auto& g = h.group();
  HFillingReport rep;
  for (const auto& [i, t] : peripheral_cosets(g, k, budget)) {
    HFillingRow row;
    row.factor = i;
    row.coset = t;
    auto inter = h.peripheral_intersection(t, i);
    row.lattice = inter.lattice;
    row.nontrivial = torsion_variant ? !inter.lattice.is_zero() : !inter.lattice.is_zero() || inter.finite_elems.size() > 1;
    if (row.nontrivial) {
      const auto& n = *k.kernels[static_cast<std::size_t>(i)];
      for (const auto& b : n.basis())
        if (!row.lattice.contains(b)) {
          row.contained = false;
          row.witness = b;
          break;
        }
    }
    rep.h_filling = rep.h_filling && row.contained;
    rep.table.push_back(std::move(row));
  }
  return rep;
}

inline HFillingReport is_h_filling(const MarkedGroup& g, const SubgroupSpec& h, const FillingKernels& k,
                                   std::int64_t budget, bool torsion_variant = false) {
  return is_h_filling(FoldedSubgroup(g, h), k, budget, torsion_variant);
}

/// Intersection of the nontrivial H-conjugate intersections with P_i over cosets in the ball.
inline Lattice compute_mi(const FoldedSubgroup& h, int i, std::int64_t budget) {
  const auto& g = h.group();
  require(g.is_peripheral(i) && g.factor(i).kind == Factor::Kind::free_abelian, ErrorKind::precondition,
          "M_i needs a free-abelian peripheral factor");
  Lattice m = Lattice::full(static_cast<std::size_t>(g.factor(i).rank));
  std::set<NormalForm> seen;
  for (const auto& x : ball(g, budget)) {
    auto t = g.coset_prefix(x, i);
    if (!seen.insert(t).second) continue;
    auto lat = h.peripheral_intersection(t, i).lattice;
    if (!lat.is_zero()) m = intersect(m, lat);
  }
  return m;
}

/// N_i = (B+1) Z^n cap M_i for every free-abelian peripheral, then checked to be an H-filling.
inline FillingKernels choose_kernels(const FoldedSubgroup& h, std::int64_t b, std::int64_t budget) {
  require(b >= 1, ErrorKind::precondition, "B must be at least 1");
  const auto& g = h.group();
  FillingKernels k(static_cast<std::size_t>(g.factor_count()));
  for (int i : g.peripheral_indices()) {
    if (g.factor(i).kind != Factor::Kind::free_abelian) continue;
    auto n = static_cast<std::size_t>(g.factor(i).rank);
    auto mi = compute_mi(h, i, budget);
    require(mi.is_full_rank(), ErrorKind::precondition,
            "an infinite-index parabolic in " + g.factor(i).name + " leaves M_i rank deficient");
    k.kernels[static_cast<std::size_t>(i)] = intersect(Lattice::scaled(n, b + 1), mi);
  }
  require(is_h_filling(h, k, budget).h_filling, ErrorKind::verification_failed, "chosen kernels are not an H-filling");
  return k;
}

inline FillingKernels choose_kernels(const MarkedGroup& g, const SubgroupSpec& h, std::int64_t b, std::int64_t budget) {
  return choose_kernels(FoldedSubgroup(g, h), b, budget);
}

/// Thin-triangle estimate on a Cayley ball of the filled group.
inline DeltaReport quotient_delta_probe(const QuotientMap& pi, std::int64_t r, std::size_t samples,
                                        std::uint64_t seed = 1) {
  const auto& t = pi.target();
  for (int i = 0; i < t.factor_count(); ++i)
    require(t.factor(i).kind != Factor::Kind::free_abelian, ErrorKind::precondition,
            "quotient still has a free-abelian factor of rank " + std::to_string(t.factor(i).rank));
  return estimate_delta(build_cusped_ball(t, r, 0), samples, seed);
}

struct ImageReport {
  SubgroupSpec image;
  QcReport qc;
  bool separated = false;  // pi(g) outside pi(H)
};

/// pi(H), its quasiconvexity in the quotient and whether pi(g) stays outside.
inline ImageReport image_qc_probe(const QuotientMap& pi, const SubgroupSpec& h, const NormalForm& x, std::int64_t L,
                                  std::int64_t cap = 2) {
  ImageReport rep;
  rep.image = pi.image(h);
  rep.qc = qc_sigma_estimate(pi.target(), rep.image, L, cap);
  rep.separated = !FoldedSubgroup(pi.target(), rep.image).contains(pi(x));
  return rep;
}

}  // namespace relsep
