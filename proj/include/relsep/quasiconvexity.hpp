#pragma once

// Measured quasiconvexity constants for the three definitions, maximal
// parabolic subgroups, and full quasiconvexity.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "relsep/cusped.hpp"
#include "relsep/enumerate.hpp"
#include "relsep/relgraph.hpp"
#include "relsep/subgroup_graph.hpp"

namespace relsep {

struct QcReport {
  std::string notion;
  std::int64_t constant = 0;
  std::int64_t radius = 0;
  std::size_t samples = 0;
  std::vector<NormalForm> witness;  // the pair attaining the constant
  NormalForm witness_vertex;
};

/// dist_S(v, H) when it is at most `cap`: the least |u| with v u in H.
inline std::optional<std::int64_t> distance_to_subgroup(const FoldedSubgroup& h, const NormalForm& v,
                                                        const std::vector<NormalForm>& cap_ball) {
  const auto& g = h.group();
  for (const auto& u : cap_ball)
    if (h.contains(g.multiply(v, u))) return g.s_length(u);
  return std::nullopt;
}

/// Max over pairs f, g in Q cap ball(L) of the S-distance from the vertices
/// of the relative geodesic [f, g] to Q.
inline QcReport qc_sigma_estimate(const MarkedGroup& g, const SubgroupSpec& q, std::int64_t L, std::int64_t cap = 6) {
  require(L >= 1, ErrorKind::precondition, "L must be at least 1");
  FoldedSubgroup h(g, q);
  auto elems = enumerate_subgroup(h, L);
  auto cap_ball = ball(g, cap);
  QcReport rep{"QC-O", 0, L, 0, {}, {}};
  ElementMap<std::int64_t> memo;
  for (const auto& f : elems)
    for (const auto& e : elems) {
      ++rep.samples;
      auto path = rel_geodesic(g, g.multiply(g.invert(f), e), f);
      for (const auto& v : path.vertices(g)) {
        auto it = memo.find(v);
        if (it == memo.end()) {
          auto d = distance_to_subgroup(h, v, cap_ball);
          require(d.has_value(), ErrorKind::budget_exceeded, "distance to the subgroup exceeds the search cap");
          it = memo.emplace(v, *d).first;
        }
        if (it->second > rep.constant || rep.witness.empty()) {
          if (it->second >= rep.constant) {
            rep.constant = it->second;
            rep.witness = {f, e};
            rep.witness_vertex = v;
          }
        }
      }
    }
  return rep;
}

/// Depth-0 vertices of X holding elements of H.
inline std::vector<int> subgroup_vertices(const FoldedSubgroup& h, const CuspedBall& x) {
  std::vector<int> out;
  for (std::size_t k = 0; k < x.elements.size(); ++k)
    if (h.contains(x.elements[k])) out.push_back(static_cast<int>(k));
  return out;
}

/// Max over BFS geodesics of the truncated space X_n between points of H of
/// the distance (in X_n) from the geodesic to H.
inline QcReport qch_mu_estimate(const MarkedGroup& g, const SubgroupSpec& q, const CuspedBall& x, int n,
                                std::int64_t L) {
  require(x.radius >= L, ErrorKind::precondition, "cusped ball does not cover the subgroup enumeration");
  FoldedSubgroup h(g, q);
  auto xn = truncate(x, n);
  std::vector<int> pts;
  for (const auto& e : enumerate_subgroup(h, L)) pts.push_back(xn.element_index.at(e));
  auto to_h = xn.graph.bfs(subgroup_vertices(h, xn));
  QcReport rep{"QC-H", 0, L, 0, {}, {}};
  for (std::size_t a = 0; a < pts.size(); ++a) {
    std::vector<int> parent;
    auto d = xn.graph.bfs(pts[a], &parent);
    for (std::size_t b = 0; b < pts.size(); ++b) {
      if (a == b) continue;
      ++rep.samples;
      require(d[pts[b]] >= 0, ErrorKind::precondition, "subgroup points disconnected in the truncated ball");
      for (int v = pts[b]; v != pts[a]; v = parent[v])
        if (to_h[v] > rep.constant) {
          rep.constant = to_h[v];
          rep.witness = {xn.elements[pts[a]], xn.elements[pts[b]]};
          rep.witness_vertex = xn.elements[xn.vertices[v].element];
        }
    }
  }
  return rep;
}

enum class ParabolicClass { trivial, finite, finite_index, infinite_index };

inline const char* to_string(ParabolicClass c) {
  switch (c) {
    case ParabolicClass::trivial: return "trivial";
    case ParabolicClass::finite: return "finite";
    case ParabolicClass::finite_index: return "infinite-finite-index";
    case ParabolicClass::infinite_index: return "infinite-infinite-index";
  }
  return "?";
}

struct ParabolicDatum {
  int factor = 0;
  NormalForm conjugator;         // f: the datum is Q cap f P f^-1 = f K f^-1
  Lattice lattice;               // K for free-abelian factors (HNF)
  std::vector<int> finite_elems;  // K for finite factors
  ParabolicClass kind = ParabolicClass::trivial;

  bool infinite() const { return kind == ParabolicClass::finite_index || kind == ParabolicClass::infinite_index; }
};

inline ParabolicClass classify(const MarkedGroup& g, int factor, const Lattice& lat, const std::vector<int>& fin) {
  if (g.factor(factor).kind == Factor::Kind::finite) return fin.size() <= 1 ? ParabolicClass::trivial : ParabolicClass::finite;
  if (lat.is_zero()) return ParabolicClass::trivial;
  return lat.is_full_rank() ? ParabolicClass::finite_index : ParabolicClass::infinite_index;
}

/// Nontrivial intersections of Q with conjugates of the peripheral
/// subgroups, one per Q-conjugacy class.
inline std::vector<ParabolicDatum> maximal_parabolics(const FoldedSubgroup& h) {
  const auto& g = h.group();
  std::vector<ParabolicDatum> out;
  for (auto& c : h.cluster_groups()) {
    if (!g.is_peripheral(c.factor)) continue;
    ParabolicDatum d;
    d.factor = c.factor;
    d.conjugator = c.conjugator;
    d.lattice = c.lattice;
    d.finite_elems = c.finite_elems;
    d.kind = classify(g, c.factor, d.lattice, d.finite_elems);
    out.push_back(std::move(d));
  }
  std::sort(out.begin(), out.end(), [](const ParabolicDatum& a, const ParabolicDatum& b) {
    return std::tie(a.factor, a.conjugator) < std::tie(b.factor, b.conjugator);
  });
  return out;
}

inline std::vector<ParabolicDatum> maximal_parabolics(const MarkedGroup& g, const SubgroupSpec& q) {
  return maximal_parabolics(FoldedSubgroup(g, q));
}

/// Generators of a datum as elements of G.
inline std::vector<NormalForm> datum_generators(const MarkedGroup& g, const ParabolicDatum& d) {
  std::vector<NormalForm> out;
  if (g.factor(d.factor).kind == Factor::Kind::finite) {
    for (int e : d.finite_elems)
      if (e != g.factor(d.factor).identity) out.push_back(g.conjugate(d.conjugator, g.syllable(d.factor, {e})));
  } else {
    for (const auto& row : d.lattice.basis()) out.push_back(g.conjugate(d.conjugator, g.vec(d.factor, row)));
  }
  return out;
}

/// Q cap P_i^f computed by closing the members found in a bounded
/// enumeration into a lattice; a cross-check for the graph computation.
inline Lattice bounded_parabolic(const MarkedGroup& g, const std::vector<NormalForm>& members, const NormalForm& f,
                                 int factor) {
  Matrix gens;
  for (const auto& x : members) {
    auto y = g.multiply({g.invert(f), x, f});
    if (y.empty()) continue;
    if (y.size() == 1 && y.syllables[0].factor == factor) gens.push_back(y.syllables[0].elem);
  }
  return Lattice(static_cast<std::size_t>(g.factor(factor).rank), gens);
}

struct FullyQcReport {
  bool fully_quasiconvex = true;
  std::vector<ParabolicDatum> table;
};

/// Every infinite parabolic must have finite index in its peripheral conjugate.
inline FullyQcReport is_fully_quasiconvex(const FoldedSubgroup& h) {
  FullyQcReport rep;
  rep.table = maximal_parabolics(h);
  for (const auto& d : rep.table)
    if (d.kind == ParabolicClass::infinite_index) rep.fully_quasiconvex = false;
  return rep;
}

inline FullyQcReport is_fully_quasiconvex(const MarkedGroup& g, const SubgroupSpec& q) {
  return is_fully_quasiconvex(FoldedSubgroup(g, q));
}

// ---- cusped ball of (H, D) and the check map into X -----------------------

struct SubgroupCuspedBall {
  std::vector<NormalForm> elements;  // H-ball in the generator word metric
  ElementMap<int> index;
  struct Vertex {
    int element = 0;
    int datum = -1;
    int depth = 0;
  };
  std::vector<Vertex> vertices;
  Graph graph;
};

/// Cayley ball of H (generators and inverses) of radius R with horoballs of
/// depth D glued along the cosets h D_i.
inline SubgroupCuspedBall build_subgroup_cusped_ball(const MarkedGroup& g, const SubgroupSpec& q,
                                                     const std::vector<ParabolicDatum>& data, int R, int D) {
  SubgroupCuspedBall y;
  std::vector<NormalForm> gens;
  for (const auto& x : q.all_generators(g)) {
    gens.push_back(x);
    gens.push_back(g.invert(x));
  }
  y.elements.push_back(g.identity());
  y.index[g.identity()] = 0;
  std::vector<int> dist{0};
  for (std::size_t k = 0; k < y.elements.size(); ++k) {
    if (dist[k] >= R) continue;
    for (const auto& s : gens) {
      auto z = g.multiply(y.elements[k], s);
      if (y.index.count(z)) continue;
      y.index[z] = static_cast<int>(y.elements.size());
      y.elements.push_back(z);
      dist.push_back(dist[k] + 1);
    }
  }
  Graph cayley(static_cast<int>(y.elements.size()));
  for (std::size_t k = 0; k < y.elements.size(); ++k) {
    y.vertices.push_back({static_cast<int>(k), -1, 0});
    for (const auto& s : gens) {
      auto it = y.index.find(g.multiply(y.elements[k], s));
      if (it != y.index.end()) cayley.add_edge(static_cast<int>(k), it->second);
    }
  }
  cayley.finalize();
  std::map<std::tuple<int, int, int>, int> horo;  // (datum, element, depth)
  std::vector<std::pair<int, int>> edges;
  for (std::size_t di = 0; di < data.size(); ++di) {
    const auto& d = data[di];
    std::map<NormalForm, std::vector<int>> cosets;
    for (std::size_t k = 0; k < y.elements.size(); ++k)
      cosets[g.coset_prefix(g.multiply(y.elements[k], d.conjugator), d.factor)].push_back(static_cast<int>(k));
    for (const auto& [key, members] : cosets) {
      for (int e : members)
        for (int n = 1; n <= D; ++n) {
          horo[{static_cast<int>(di), e, n}] = static_cast<int>(y.vertices.size());
          y.vertices.push_back({e, static_cast<int>(di), n});
          edges.push_back({n == 1 ? e : horo[{static_cast<int>(di), e, n - 1}], static_cast<int>(y.vertices.size()) - 1});
        }
      for (int a : members) {
        auto da = cayley.bfs(a);
        for (int b : members)
          if (a < b && da[b] >= 0)
            for (int n = 1; n <= D; ++n)
              if (da[b] <= pow2(n))
                edges.push_back({horo[{static_cast<int>(di), a, n}], horo[{static_cast<int>(di), b, n}]});
      }
    }
  }
  y.graph = Graph(static_cast<int>(y.vertices.size()));
  for (std::size_t k = 0; k < y.elements.size(); ++k)
    for (int w : cayley.neighbors(static_cast<int>(k))) y.graph.add_edge(static_cast<int>(k), w);
  for (auto [a, b] : edges) y.graph.add_edge(a, b);
  y.graph.finalize();
  return y;
}

struct CheckMapReport {
  std::vector<int> image;  // X vertex per subgroup-ball vertex, -1 if outside X
  std::int64_t lipschitz = 0;
  std::size_t equivariance_checks = 0;
  std::size_t equivariance_failures = 0;
};

struct XLabel {
  int factor = -1;
  NormalForm coset;
  NormalForm element;
  int depth = 0;
  friend bool operator==(const XLabel&, const XLabel&) = default;
};

inline XLabel check_map_label(const MarkedGroup& g, const ParabolicDatum* d, const NormalForm& h, int depth) {
  if (!d || depth == 0) return {-1, {}, h, 0};
  auto e = g.multiply(h, d->conjugator);
  return {d->factor, g.coset_prefix(e, d->factor), e, depth};
}

/// The H-equivariant map (s D_i, h, n) -> (h c_i P_j, h c_i, n), with its
/// measured Lipschitz constant and sampled equivariance checks.
inline CheckMapReport check_map(const MarkedGroup& g, const SubgroupSpec& q, const std::vector<ParabolicDatum>& data,
                                const SubgroupCuspedBall& y, const CuspedBall& x, std::size_t samples,
                                std::uint64_t seed) {
  FoldedSubgroup h(g, q);
  for (const auto& d : data)
    for (const auto& gen : datum_generators(g, d)) {
      require(h.contains(gen), ErrorKind::precondition, "parabolic datum generator is not in the subgroup");
      auto c = g.multiply({g.invert(d.conjugator), gen, d.conjugator});
      require(c.size() == 1 && c.syllables[0].factor == d.factor, ErrorKind::precondition,
              "conjugator does not carry the datum into its peripheral subgroup");
    }
  std::map<std::pair<int, NormalForm>, int> coset_index;
  for (std::size_t c = 0; c < x.cosets.size(); ++c) coset_index[{x.cosets[c].factor, x.cosets[c].prefix}] = static_cast<int>(c);
  auto locate = [&](const XLabel& l) -> int {
    auto it = x.element_index.find(l.element);
    if (it == x.element_index.end()) return -1;
    if (l.depth == 0) return it->second;
    auto ci = coset_index.find({l.factor, l.coset});
    if (ci == coset_index.end() || l.depth > x.max_depth) return -1;
    return x.vertex_at(ci->second, it->second, l.depth);
  };
  CheckMapReport rep;
  for (const auto& v : y.vertices) {
    const ParabolicDatum* d = v.datum >= 0 ? &data[v.datum] : nullptr;
    rep.image.push_back(locate(check_map_label(g, d, y.elements[v.element], v.depth)));
  }
  for (int u = 0; u < y.graph.size(); ++u) {
    if (rep.image[u] < 0) continue;
    auto dx = x.graph.bfs(rep.image[u]);
    for (int w : y.graph.neighbors(u))
      if (rep.image[w] >= 0 && dx[rep.image[w]] >= 0) rep.lipschitz = std::max<std::int64_t>(rep.lipschitz, dx[rep.image[w]]);
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_v(0, y.vertices.size() - 1), pick_h(0, y.elements.size() - 1);
  for (std::size_t k = 0; k < samples; ++k) {
    const auto& v = y.vertices[pick_v(rng)];
    const auto& t = y.elements[pick_h(rng)];
    const ParabolicDatum* d = v.datum >= 0 ? &data[v.datum] : nullptr;
    XLabel image = check_map_label(g, d, y.elements[v.element], v.depth);
    XLabel moved = check_map_label(g, d, g.multiply(t, y.elements[v.element]), v.depth);
    XLabel translated = image;
    translated.element = g.multiply(t, image.element);
    if (translated.factor >= 0) translated.coset = g.coset_prefix(translated.element, translated.factor);
    ++rep.equivariance_checks;
    if (!(moved == translated)) ++rep.equivariance_failures;
  }
  return rep;
}

/// Max over sampled X-geodesics with endpoints in the image of the distance
/// from the geodesic to the image.
inline QcReport qc_agm_estimate(const std::vector<int>& image, const CuspedBall& x, std::size_t samples,
                                std::uint64_t seed) {
  std::vector<int> pts;
  for (int v : image)
    if (v >= 0) pts.push_back(v);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  require(!pts.empty(), ErrorKind::precondition, "empty image");
  QcReport rep{"QC-AGM", 0, x.radius, 0, {}, {}};
  auto to_image = x.graph.bfs(pts);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  for (std::size_t k = 0; k < samples; ++k) {
    int a = pts[pick(rng)], b = pts[pick(rng)];
    ++rep.samples;
    for (int v : x.graph.geodesic(a, b))
      if (to_image[v] > rep.constant) {
        rep.constant = to_image[v];
        rep.witness = {x.elements[x.vertices[a].element], x.elements[x.vertices[b].element]};
        rep.witness_vertex = x.elements[x.vertices[v].element];
      }
  }
  return rep;
}

struct PenetrationPoint {
  int coset = 0;
  int depth = 0;
  std::size_t intersection_rank = 0;  // rank of H cap Stab(horoball)
  bool infinite = false;
};

struct PenetrationReport {
  int r_hat = 0;  // deepest penetration of a horoball whose stabilizer meets H finitely
  std::vector<PenetrationPoint> points;
  bool consistent = true;  // every penetration deeper than r_hat has infinite intersection
};

inline PenetrationReport penetration_stabilizer_probe(const MarkedGroup& g, const SubgroupSpec& q, const CuspedBall& x,
                                                      std::int64_t L, std::size_t samples, std::uint64_t seed) {
  FoldedSubgroup h(g, q);
  std::vector<int> pts;
  for (const auto& e : enumerate_subgroup(h, std::min<std::int64_t>(L, x.radius))) pts.push_back(x.element_index.at(e));
  PenetrationReport rep;
  std::vector<std::optional<std::pair<std::size_t, bool>>> stab(x.cosets.size());
  auto stabilizer = [&](int c) {
    if (!stab[c]) {
      const auto& cs = x.cosets[c];
      auto pi = h.peripheral_intersection(cs.prefix, cs.factor);
      bool fin = g.factor(cs.factor).kind == Factor::Kind::finite;
      std::size_t rank = fin ? 0 : pi.lattice.rank();
      stab[c] = std::make_pair(rank, rank > 0);
    }
    return *stab[c];
  };
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  for (std::size_t k = 0; k < samples; ++k) {
    auto path = x.graph.geodesic(pts[pick(rng)], pts[pick(rng)]);
    std::map<int, int> depth;
    for (int v : path)
      if (x.vertices[v].coset >= 0) depth[x.vertices[v].coset] = std::max(depth[x.vertices[v].coset], x.vertices[v].depth);
    for (auto [c, dd] : depth) {
      auto [rank, inf] = stabilizer(c);
      rep.points.push_back({c, dd, rank, inf});
      if (!inf) rep.r_hat = std::max(rep.r_hat, dd);
    }
  }
  for (const auto& p : rep.points)
    if (p.depth > rep.r_hat && !p.infinite) rep.consistent = false;
  return rep;
}

/// Smallest L' with N_L(xH) cap N_L(yK) cap ball(R) inside N_L'(xHx^-1 cap yKy^-1).
inline std::int64_t coset_neighborhood_constant(const MarkedGroup& g, const NormalForm& x, const SubgroupSpec& hq,
                                                const NormalForm& y, const SubgroupSpec& kq, std::int64_t L,
                                                std::int64_t R, std::int64_t cap) {
  FoldedSubgroup h(g, hq), k(g, kq);
  auto near = ball(g, L);
  auto within = [&](const FoldedSubgroup& s, const NormalForm& t, const NormalForm& b) {
    // dist(b, tS) <= L  iff  t^-1 b u in S for some |u| <= L
    auto tb = g.multiply(g.invert(t), b);
    return std::any_of(near.begin(), near.end(), [&](const NormalForm& u) { return s.contains(g.multiply(tb, u)); });
  };
  auto cap_ball = ball(g, cap);
  std::int64_t worst = 0;
  for (const auto& b : ball(g, R)) {
    if (!within(h, x, b) || !within(k, y, b)) continue;
    std::optional<std::int64_t> best;
    for (const auto& u : cap_ball) {
      auto z = g.multiply(b, u);  // z in xHx^-1 cap yKy^-1
      if (h.contains(g.multiply({g.invert(x), z, x})) && k.contains(g.multiply({g.invert(y), z, y}))) {
        best = g.s_length(u);
        break;
      }
    }
    require(best.has_value(), ErrorKind::budget_exceeded, "intersection not reached within the search cap");
    worst = std::max(worst, *best);
  }
  return worst;
}

}  // namespace relsep
