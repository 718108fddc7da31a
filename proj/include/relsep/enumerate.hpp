#pragma once

// Balls, bounded subgroup enumeration and membership.

#include <algorithm>
#include <cstddef>
#include <deque>
#include <functional>
#include <optional>
#include <unordered_set>
#include <vector>

#include "relsep/error.hpp"
#include "relsep/group.hpp"
#include "relsep/subgroup_graph.hpp"

namespace relsep {

inline constexpr std::size_t default_budget = 4'000'000;

inline void sort_by_length(const MarkedGroup& g, std::vector<NormalForm>& xs) {
  std::vector<std::pair<std::int64_t, NormalForm>> keyed;
  keyed.reserve(xs.size());
  for (auto& x : xs) keyed.emplace_back(g.s_length(x), std::move(x));
  std::sort(keyed.begin(), keyed.end());
  xs.clear();
  for (auto& [l, x] : keyed) xs.push_back(std::move(x));
}

/// Elements with s_length <= r, by BFS in the Cayley graph (sorted by length, then normal form).
inline std::vector<NormalForm> ball(const MarkedGroup& g, std::int64_t r, std::size_t budget = default_budget) {
  require(r >= 0, ErrorKind::precondition, "ball radius must be nonnegative");
  std::vector<NormalForm> out{g.identity()};
  std::unordered_set<NormalForm, NormalFormHash> seen{g.identity()};
  std::size_t frontier_begin = 0;
  for (std::int64_t d = 0; d < r; ++d) {
    std::size_t frontier_end = out.size();
    for (std::size_t k = frontier_begin; k < frontier_end; ++k)
      for (const auto& s : g.generators()) {
        NormalForm x = out[k];
        g.append(x, s.factor, s.elem);
        if (seen.insert(x).second) {
          require(out.size() < budget, ErrorKind::budget_exceeded, "ball enumeration exceeded its budget");
          out.push_back(std::move(x));
        }
      }
    frontier_begin = frontier_end;
  }
  sort_by_length(g, out);
  return out;
}

/// Elements of the subgroup with s_length <= L, read off the folded graph.
inline std::vector<NormalForm> enumerate_subgroup(const FoldedSubgroup& h, std::int64_t L,
                                                  std::size_t budget = default_budget) {
  require(L >= 0, ErrorKind::precondition, "enumeration bound must be nonnegative");
  const MarkedGroup& g = h.group();
  const auto hops = h.hops_to_base();
  std::vector<NormalForm> out;
  std::size_t steps = 0;
  std::vector<std::vector<std::vector<Vec>>> moves(h.atoms().size());  // per atom, by radius

  auto moves_for = [&](int atom, std::int64_t rem) -> std::vector<Vec> {
    const Atom& a = h.atoms()[atom];
    std::vector<Vec> ms;
    if (a.finite) {
      const auto& f = g.factor(a.factor);
      if (rem >= 1)
        for (int e = 0; e < f.order(); ++e)
          if (e != f.identity) ms.push_back({e});
      return ms;
    }
    for (auto& v : l1_ball(static_cast<std::size_t>(a.rank), rem))
      if (!detail::is_zero(v)) ms.push_back(std::move(v));
    return ms;
  };
  auto cost = [&](int atom, const Vec& m) -> std::int64_t { return h.atoms()[atom].finite ? 1 : l1(m); };

  std::function<void(int, int, const NormalForm&, std::int64_t)> dfs = [&](int v, int last, const NormalForm& word,
                                                                           std::int64_t rem) {
    require(++steps < budget, ErrorKind::budget_exceeded, "subgroup enumeration exceeded its budget");
    if (v == h.basepoint()) out.push_back(word);
    for (const auto& [atom, cp] : h.memberships(v)) {
      if (atom == last) continue;
      for (const auto& m : moves_for(atom, rem)) {
        auto w = h.step(v, atom, m);
        if (!w || hops[*w] < 0) continue;
        std::int64_t left = rem - cost(atom, m);
        if (hops[*w] > left) continue;
        dfs(*w, atom, g.multiply(word, h.atom_element(atom, m)), left);
      }
    }
  };
  dfs(h.basepoint(), -1, g.identity(), L);
  sort_by_length(g, out);
  return out;
}

inline std::vector<NormalForm> enumerate_subgroup(const MarkedGroup& g, const SubgroupSpec& q, std::int64_t L,
                                                  std::size_t budget = default_budget) {
  return enumerate_subgroup(FoldedSubgroup(g, q), L, budget);
}

/// Products of generators, cut when an intermediate product is longer than
/// L + 2 * (longest generator). Used as an independent oracle.
inline std::vector<NormalForm> enumerate_subgroup_bfs(const MarkedGroup& g, const SubgroupSpec& q, std::int64_t L,
                                                      std::size_t budget = default_budget) {
  std::vector<NormalForm> gens;
  std::int64_t longest = 0;
  for (const auto& x : q.all_generators(g)) {
    gens.push_back(x);
    gens.push_back(g.invert(x));
    longest = std::max(longest, g.s_length(x));
  }
  const std::int64_t cut = L + 2 * longest;
  std::vector<NormalForm> seen_list{g.identity()};
  std::unordered_set<NormalForm, NormalFormHash> seen{g.identity()};
  for (std::size_t k = 0; k < seen_list.size(); ++k)
    for (const auto& s : gens) {
      NormalForm x = g.multiply(seen_list[k], s);
      if (g.s_length(x) > cut || !seen.insert(x).second) continue;
      require(seen_list.size() < budget, ErrorKind::budget_exceeded, "generator BFS exceeded its budget");
      seen_list.push_back(std::move(x));
    }
  std::vector<NormalForm> out;
  for (auto& x : seen_list)
    if (g.s_length(x) <= L) out.push_back(std::move(x));
  sort_by_length(g, out);
  return out;
}

enum class Verdict { yes, no, unknown };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::yes: return "yes";
    case Verdict::no: return "no";
    case Verdict::unknown: return "unknown";
  }
  return "unknown";
}

struct Membership {
  Verdict verdict = Verdict::unknown;
  /// Witness product: (generator index, +1 | -1) read left to right.
  std::vector<std::pair<int, int>> witness;
};

/// "no" is exact (the element does not read a loop in the folded graph).
/// "yes" is reported only with an explicit product of generators found by
/// a generator BFS whose intermediate products stay within s_length
/// |g| + 2 * budget_len; otherwise "unknown".
inline Membership is_member_bounded(const MarkedGroup& g, const SubgroupSpec& q, const NormalForm& x,
                                    std::int64_t budget_len, std::size_t budget = default_budget) {
  Membership res;
  FoldedSubgroup h(g, q);
  if (!h.contains(x)) {
    res.verdict = Verdict::no;
    return res;
  }
  auto gens = q.all_generators(g);
  std::int64_t longest = 0;
  for (const auto& s : gens) longest = std::max(longest, g.s_length(s));
  const std::int64_t cut = std::max(g.s_length(x), budget_len) + 2 * longest;
  struct Node {
    NormalForm elem;
    int parent;
    std::pair<int, int> via;
  };
  std::vector<Node> nodes{{g.identity(), -1, {0, 0}}};
  std::unordered_set<NormalForm, NormalFormHash> seen{g.identity()};
  auto done = [&](int k) {
    for (int at = k; nodes[at].parent >= 0; at = nodes[at].parent) res.witness.push_back(nodes[at].via);
    std::reverse(res.witness.begin(), res.witness.end());
    res.verdict = Verdict::yes;
    return res;
  };
  if (g.is_identity(x)) return done(0);
  for (std::size_t k = 0; k < nodes.size(); ++k)
    for (int i = 0; i < static_cast<int>(gens.size()); ++i)
      for (int sign : {1, -1}) {
        NormalForm y = g.multiply(nodes[k].elem, sign > 0 ? gens[i] : g.invert(gens[i]));
        if (g.s_length(y) > cut || !seen.insert(y).second) continue;
        if (nodes.size() >= budget) return res;
        nodes.push_back({y, static_cast<int>(k), {i, sign}});
        if (y == x) return done(static_cast<int>(nodes.size()) - 1);
      }
  return res;
}

/// Evaluates a witness product.
inline NormalForm evaluate_witness(const MarkedGroup& g, const SubgroupSpec& q,
                                   const std::vector<std::pair<int, int>>& witness) {
  auto gens = q.all_generators(g);
  NormalForm x = g.identity();
  for (auto [i, s] : witness) x = g.multiply(x, s > 0 ? gens.at(i) : g.invert(gens.at(i)));
  return x;
}

}  // namespace relsep
