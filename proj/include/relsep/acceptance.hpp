#pragma once

// The ten acceptance criteria as self-contained checks. Sizes and tolerances
// are fixed here; quick mode shrinks the instances but keeps every check.

#include <chrono>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "relsep/combination.hpp"
#include "relsep/cusped.hpp"
#include "relsep/filling.hpp"
#include "relsep/horoball.hpp"
#include "relsep/lattice.hpp"
#include "relsep/quasiconvexity.hpp"
#include "relsep/relgraph.hpp"
#include "relsep/separator.hpp"

namespace relsep::acceptance {

struct Result {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
  double limit_seconds = 0;  // 0: no runtime bound
};

namespace limits {
inline constexpr double horoball_s = 60, relgeo_s = 120, bcp_s = 120, combination_s = 300, pipeline_s = 600;
inline constexpr int horoball_n = 64, horoball_depth = 6;
inline constexpr std::int64_t relgeo_r = 5, bcp_r = 6, delta_r = 4;
inline constexpr int delta_depth = 4;
inline constexpr std::size_t bcp_small = 500, bcp_large = 1000, delta_small = 1000, delta_large = 2000;
inline constexpr std::int64_t theta = 6;
inline constexpr int l_inj = 6, fqc_L = 6;
inline constexpr std::int64_t membership_budget = 12;
inline constexpr int lattice_instances = 100, lattice_rank = 3, lattice_entry = 10;
inline constexpr int stallings_subgroups = 50, stallings_len = 8;
}  // namespace limits

namespace detail {

template <class F>
Result timed(int id, std::string name, double limit, F body) {
  Result r{id, std::move(name), false, {}, 0, limit};
  auto t0 = std::chrono::steady_clock::now();
  std::ostringstream detail;
  try {
    r.pass = body(detail);
  } catch (const Error& e) {
    detail << "error: " << e.what();
    r.pass = false;
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit > 0 && r.seconds > limit) {
    detail << " runtime " << r.seconds << "s over " << limit << "s";
    r.pass = false;
  }
  r.detail = detail.str();
  return r;
}

inline std::vector<FactorElem> reduced_words(int n) {
  std::vector<FactorElem> out{{}};
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (static_cast<int>(out[k].size()) == n) continue;
    for (std::int64_t l : {1, -1, 2, -2}) {
      if (!out[k].empty() && out[k].back() == -l) continue;
      auto w = out[k];
      w.push_back(l);
      out.push_back(std::move(w));
    }
  }
  return out;
}

}  // namespace detail

inline Result horoball_geodesics(bool quick) {
  return detail::timed(1, "horoball regular geodesics", limits::horoball_s, [&](std::ostream& out) {
    const int n = quick ? 24 : limits::horoball_n;
    HoroballGraph h(DiscreteMetricSpace::zline(n), limits::horoball_depth);
    std::size_t pairs = 0, mismatches = 0;
    std::vector<std::pair<int, int>> all;
    for (int a = 0; a < h.vertex_count(); ++a) {
      auto d = h.graph().bfs(a);
      for (int b = 0; b < h.vertex_count(); ++b) {
        ++pairs;
        mismatches += regular_geodesic(h, h.vertex(a), h.vertex(b)).length() != d[static_cast<std::size_t>(b)];
        all.push_back({a, b});
      }
    }
    auto bound = geodesic_depth_bound_check(h, all);
    out << "pairs=" << pairs << " mismatches=" << mismatches << " depth_bound_violations=" << bound.violations;
    return mismatches == 0 && bound.violations == 0;
  });
}

inline Result relative_geodesics(bool quick) {
  return detail::timed(2, "relative geodesics", limits::relgeo_s, [&](std::ostream& out) {
    auto g = z2_free_product();
    auto elems = ball(g, quick ? 3 : limits::relgeo_r);
    auto d = bounded_rel_distances(g, elems);
    std::size_t mismatches = 0, bad_paths = 0;
    for (std::size_t k = 0; k < elems.size(); ++k) {
      mismatches += d[k] != rel_length(g, elems[k]);
      auto p = rel_geodesic(g, elems[k]);
      bool ok = phase_vertices(g, p).size() == p.length() + 1;
      for (const auto& c : p_components(g, p)) ok = ok && c.end - c.begin == 1 && c.isolated;
      bad_paths += !ok;
    }
    out << "elements=" << elems.size() << " mismatches=" << mismatches << " bad_paths=" << bad_paths;
    return mismatches == 0 && bad_paths == 0;
  });
}

inline Result bcp_stability(bool quick) {
  return detail::timed(3, "BCP clause (iii) stability", limits::bcp_s, [&](std::ostream& out) {
    auto g = z2_free_product();
    auto targets = ball(g, quick ? 4 : limits::bcp_r);
    auto small = bcp_probe(g, 1.0, 0, 0, targets, limits::bcp_small, 7);
    auto large = bcp_probe(g, 1.0, 0, 0, targets, limits::bcp_large, 7);
    out << "clause_iii(500)=" << small.clause_iii << " clause_iii(1000)=" << large.clause_iii
        << " epsilon=" << large.epsilon << " rejected=" << large.rejected;
    return small.clause_iii == large.clause_iii;
  });
}

inline Result delta_stability(bool quick) {
  return detail::timed(4, "cusped delta stability", 0, [&](std::ostream& out) {
    auto g = z2_free_product();
    auto x = build_cusped_ball(g, quick ? 3 : limits::delta_r, limits::delta_depth);
    auto small = estimate_delta(x, limits::delta_small, 11);
    auto large = estimate_delta(x, limits::delta_large, 11);
    MarkedGroup f2({Factor::free("F", 2)}, {});
    auto tree = estimate_delta(build_cusped_ball(f2, 5, 1), limits::delta_small, 11);
    std::size_t first = 0;
    while (first < large.running.size() && large.running[first] < large.delta) ++first;
    out << "vertices=" << x.vertices.size() << " delta(1000)=" << small.delta << " delta(2000)=" << large.delta
        << " first_max_at=" << first + 1 << " tree_delta=" << tree.delta;
    return small.delta == large.delta && tree.delta == 0;
  });
}

inline Result combination_certificate(bool quick) {
  return detail::timed(5, "combination certificate", limits::combination_s, [&](std::ostream& out) {
    auto g = z2_free_product();
    auto q = subgroup_from_words(g, {"x1 x2"});
    CombineOptions opt;
    opt.theta = limits::theta;
    opt.l_inj = quick ? 4 : limits::l_inj;
    opt.samples = quick ? 200 : 1000;
    AmalgamStructure probe(g, q, 0, {}, Lattice::zero(2));
    auto pools = amalgam_pools(probe, opt.pool);
    std::int64_t margin = 0;
    for (const auto& x : pools.first)
      for (const auto* s : {&x.syllables.front(), &x.syllables.back()})
        if (s->factor == 0) margin = std::max(margin, 2 * g.factor(0).length(s->elem));
    auto r = separate_with_minlength(Lattice::zero(2), {}, opt.theta + margin);
    auto res = combine(g, q, 0, {}, r, opt);
    const auto& c = res.certificate;
    out << "R=" << r.basis()[0][0] << "Z^2 forms=" << c.forms_checked << " collisions=" << c.collisions
        << " samples=" << c.samples << " min_long_component=" << c.min_long_component << " theta=" << c.theta;
    return c.collisions == 0 && c.samples > 0 && c.min_long_component > c.theta;
  });
}

inline Result fully_quasiconvex(bool) {
  return detail::timed(6, "fully quasiconvex enlargement", 0, [&](std::ostream& out) {
    auto g = z2_free_product();
    bool ok = true;
    FqcOptions opt;
    opt.membership_budget = limits::membership_budget;
    for (auto [words, elem] : {std::pair<std::vector<std::string>, std::string>{{"x1"}, "y1"},
                               std::pair<std::vector<std::string>, std::string>{{"x1^2", "y1", "x2"}, "x1"}}) {
      auto res = fully_quasiconvexify(g, subgroup_from_words(g, words), g.parse(elem), opt);
      auto sigma = qc_sigma_estimate(g, res.h, limits::fqc_L, 4);
      ok = ok && res.fully_quasiconvex && res.final_membership == Verdict::no;
      out << "[" << elem << ": steps=" << res.steps.size() << " fully_qc=" << res.fully_quasiconvex
          << " sigma(L=6)=" << sigma.constant << " member=" << to_string(res.final_membership) << "] ";
    }
    return ok;
  });
}

inline Result filling_checks(bool) {
  return detail::timed(7, "Dehn filling", 0, [&](std::ostream& out) {
    auto g = z2_free_product();
    bool ok = true;
    std::size_t collisions = 0;
    for (std::int64_t r = 1; r <= 3; ++r) {
      FillingKernels k(2);
      k.kernels[0] = k.kernels[1] = Lattice::scaled(2, 2 * r + 2);
      collisions += !injective_on(fill(g, k), ball(g, r)).injective;
    }
    ok = collisions == 0;
    std::size_t fillings = 0, h_fillings = 0;
    std::vector<SubgroupSpec> hs{subgroup_from_words(g, {"x1 x2"}), subgroup_from_words(g, {"x1^2", "y1^2"})};
    hs.push_back(fully_quasiconvexify(g, subgroup_from_words(g, {"x1"}), g.parse("y1")).h);
    hs.push_back(fully_quasiconvexify(g, subgroup_from_words(g, {"x1^2", "y1", "x2"}), g.parse("x1")).h);
    std::int64_t worst_delta = 0;
    for (const auto& h : hs) {
      FoldedSubgroup fh(g, h);
      auto k = choose_kernels(fh, 5, 3);
      ++fillings;
      h_fillings += is_h_filling(fh, k, 3).h_filling;
      auto d = quotient_delta_probe(fill(g, k), 2, 200, 3);
      worst_delta = std::max<std::int64_t>(worst_delta, d.delta);
    }
    ok = ok && h_fillings == fillings;
    out << "injectivity_failures=" << collisions << " h_fillings=" << h_fillings << "/" << fillings
        << " max_quotient_delta=" << worst_delta;
    return ok;
  });
}

inline Result lattice_separation(bool) {
  return detail::timed(8, "lattice separation", 0, [&](std::ostream& out) {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> entry(-limits::lattice_entry, limits::lattice_entry);
    std::size_t violations = 0, instances = 0;
    while (static_cast<int>(instances) < limits::lattice_instances) {
      const std::size_t n = 1 + rng() % limits::lattice_rank;
      Matrix gens(rng() % (n + 1), Vec(n));
      for (auto& row : gens)
        for (auto& x : row) x = entry(rng);
      Lattice k(n, gens);
      std::vector<Vec> avoid;
      for (int j = 0; j < 3; ++j) {
        Vec v(n);
        for (auto& x : v) x = entry(rng);
        if (!k.contains(v)) avoid.push_back(v);
      }
      const std::int64_t d = 1 + static_cast<std::int64_t>(rng() % 5);
      ++instances;
      for (const auto& r : {separate(k, avoid), separate_with_minlength(k, avoid, d)}) {
        violations += !r.is_full_rank() || !r.contains(k);
        for (const auto& v : avoid) violations += r.contains(v);
      }
      auto rm = separate_with_minlength(k, avoid, d);
      // exhaustive scan of the l1 ball of radius d
      for (const auto& v : l1_ball(n, d)) violations += rm.contains(v) && !k.contains(v);
    }
    out << "instances=" << instances << " violations=" << violations;
    return violations == 0;
  });
}

inline Result stallings(bool quick) {
  return detail::timed(9, "Stallings membership and Hall separation", 0, [&](std::ostream& out) {
    std::mt19937_64 rng(9);
    auto words = detail::reduced_words(quick ? 6 : limits::stallings_len);
    auto f2 = free_group(2);
    std::size_t mismatches = 0, certificates = 0, failed = 0;
    auto random_word = [&](int len) {
      static const std::int64_t letters[] = {1, -1, 2, -2};
      FactorElem w;
      while (static_cast<int>(w.size()) < len) {
        auto l = letters[rng() % 4];
        if (!w.empty() && w.back() == -l) continue;
        w.push_back(l);
      }
      return w;
    };
    auto nf = [](const FactorElem& w) {
      NormalForm x;
      if (!w.empty()) x.syllables.push_back({0, w});
      return x;
    };
    for (int t = 0; t < limits::stallings_subgroups; ++t) {
      std::vector<FactorElem> gens;
      for (int k = 0, c = 1 + static_cast<int>(rng() % 3); k < c; ++k) gens.push_back(random_word(1 + static_cast<int>(rng() % 4)));
      auto h = stallings_fold(2, gens);
      SubgroupSpec spec;
      for (const auto& w : gens) spec.generators.push_back(nf(w));
      FoldedSubgroup oracle(f2, spec);
      // generator products: every element found must be accepted
      std::set<FactorElem> found{{}};
      std::vector<FactorElem> queue{{}};
      auto f = f2.factor(0);
      for (std::size_t k = 0; k < queue.size(); ++k)
        for (const auto& s : gens)
          for (const auto& m : {s, f.inv(s)}) {
            auto w = f.mul(queue[k], m);
            if (static_cast<int>(w.size()) <= 10 && found.insert(w).second) queue.push_back(w);
          }
      for (const auto& w : found) mismatches += static_cast<int>(w.size()) <= 8 && !h.contains(w);
      for (const auto& w : words) mismatches += h.contains(w) != oracle.contains(nf(w));
      int made = 0;
      for (std::size_t k = 1; k < words.size() && made < 3; k += 131) {
        if (h.contains(words[k])) continue;
        auto rep = hall_separate(h, words[k]);
        ++certificates;
        ++made;
        bool ok = rep.satisfies_relations(f2) && rep(f2, nf(words[k]))[0] != 0;
        for (const auto& s : gens) ok = ok && rep(f2, nf(s))[0] == 0;
        failed += !ok;
      }
    }
    out << "subgroups=" << limits::stallings_subgroups << " words=" << words.size() << " mismatches=" << mismatches
        << " hall_certificates=" << certificates << " failed=" << failed;
    return mismatches == 0 && failed == 0;
  });
}

inline Result end_to_end(bool) {
  return detail::timed(10, "end-to-end separation", limits::pipeline_s, [&](std::ostream& out) {
    auto g = z2_free_product();
    bool ok = true;
    struct Scenario {
      std::vector<std::string> q;
      std::string x;
    };
    for (const auto& s : {Scenario{{"x1"}, "y1"}, Scenario{{"x1^2", "y1", "x2"}, "x1"}, Scenario{{"x1 x2"}, "x2 x1"}}) {
      auto cert = end_to_end_separate(g, subgroup_from_words(g, s.q), g.parse(s.x));
      auto v = verify_certificate(cert);
      ok = ok && v.valid;
      out << "[" << s.x << ": degree=" << cert.rep.degree << " valid=" << v.valid << "] ";
    }
    return ok;
  });
}

inline std::vector<std::function<Result(bool)>> criteria() {
  return {horoball_geodesics, relative_geodesics, bcp_stability,  delta_stability, combination_certificate,
          fully_quasiconvex,  filling_checks,     lattice_separation, stallings,      end_to_end};
}

inline std::string line(const Result& r) {
  std::ostringstream s;
  s << (r.pass ? "PASS" : "FAIL") << " criterion " << r.id << " (" << r.name << "): " << r.detail << " ["
    << static_cast<long long>(r.seconds * 1000) << " ms]";
  return s.str();
}

}  // namespace relsep::acceptance
