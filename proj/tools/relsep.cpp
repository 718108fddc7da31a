// relsep: experiment runner over the library. Reports are JSON (schema
// relsep.report/1) or TSV with one row per measurement.

#include <chrono>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "relsep/acceptance.hpp"
#include "relsep/io.hpp"

using namespace relsep;
using io::json;

namespace {

struct Common {
  std::string format = "json";
  std::string out;
  std::uint64_t seed = 1;
  bool timing = false;
};

struct Report {
  std::string command;
  json params = json::object();
  json results = json::object();
  int status = 0;
};

std::string render(const Report& r, const Common& c) {
  if (c.format == "tsv") {
    std::ostringstream s;
    s << "measurement\tvalue\n";
    const auto flat = r.results.flatten();
    for (const auto& [key, value] : flat.items())
      s << key << '\t' << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
    return s.str();
  }
  json j{{"schema", io::report_schema}, {"command", r.command}, {"params", r.params}, {"results", r.results}};
  return j.dump(2) + "\n";
}

void emit(const Report& r, const Common& c) {
  auto text = render(r, c);
  if (c.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(c.out);
    require(f.good(), ErrorKind::malformed_input, "cannot write " + c.out);
    f << text;
  }
}

json to_json(const QcReport& q, const MarkedGroup& g) {
  json w = json::array();
  for (const auto& x : q.witness) w.push_back(g.format(x));
  return {{"notion", q.notion}, {"constant", q.constant}, {"radius", q.radius}, {"samples", q.samples},
          {"witness", w}, {"witness_vertex", g.format(q.witness_vertex)}};
}

json to_json(const ParabolicDatum& d, const MarkedGroup& g) {
  json j{{"factor", g.factor(d.factor).name}, {"conjugator", g.format(d.conjugator)}, {"class", to_string(d.kind)}};
  if (g.factor(d.factor).kind == Factor::Kind::finite)
    j["elements"] = d.finite_elems;
  else
    j["lattice"] = io::to_json(d.lattice);
  return j;
}

json to_json(const CombinationCertificate& c) {
  return {{"theta", c.theta},          {"l_inj", c.l_inj},
          {"forms_checked", c.forms_checked}, {"collisions", c.collisions},
          {"injective", c.injective},  {"samples", c.samples},
          {"min_long_component", c.min_long_component}, {"conclusion3", c.conclusion3},
          {"boundary_margin", c.boundary_margin}, {"q_pool", c.q_pool}, {"r_pool", c.r_pool}};
}

// "1,0;0,2" -> rows; "" -> no rows
Matrix parse_rows(const std::string& text, std::size_t n) {
  Matrix out;
  std::stringstream rows(text);
  std::string row;
  while (std::getline(rows, row, ';')) {
    if (row.find_first_not_of(" ") == std::string::npos) continue;
    Vec v;
    std::stringstream cells(row);
    std::string cell;
    while (std::getline(cells, cell, ',')) {
      try {
        v.push_back(std::stoll(cell));
      } catch (const std::exception&) {
        fail(ErrorKind::malformed_input, "not an integer: '" + cell + "'");
      }
    }
    require(v.size() == n, ErrorKind::malformed_input, "row '" + row + "' does not have " + std::to_string(n) + " entries");
    out.push_back(std::move(v));
  }
  return out;
}

struct Inputs {
  std::string group, subgroup;
};

MarkedGroup load_group_only(const Inputs& in) {
  require(!in.group.empty(), ErrorKind::malformed_input, "--group is required");
  return io::load_group(in.group);
}

io::LoadedSubgroup load_pair(const Inputs& in) {
  require(!in.subgroup.empty(), ErrorKind::malformed_input, "--subgroup is required");
  return io::load_subgroup(in.subgroup, in.group);
}

DiscreteMetricSpace load_base(const std::string& spec) {
  const std::string prefix = "builtin:zline:";
  if (spec.rfind(prefix, 0) == 0) {
    int n = 0;
    try {
      n = std::stoi(spec.substr(prefix.size()));
    } catch (const std::exception&) {
      fail(ErrorKind::malformed_input, "bad zline size in '" + spec + "'");
    }
    require(n >= 0, ErrorKind::malformed_input, "zline size must be nonnegative");
    return DiscreteMetricSpace::zline(n);
  }
  DiscreteMetricSpace a;
  a.dist = io::field<std::vector<std::vector<std::int64_t>>>(io::read_json(spec), "dist");
  return a;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative hyperbolicity, Dehn filling and subgroup separation at desk scale"};
  app.require_subcommand(1);
  Common common;
  std::function<Report()> run;

  auto add_common = [&](CLI::App* s, bool sampled) {
    s->add_option("--format", common.format, "json or tsv")->check(CLI::IsMember({"json", "tsv"}));
    s->add_option("--out", common.out, "report path (stdout when omitted)");
    s->add_flag("--timing", common.timing, "include runtime in the report (breaks byte-identical reruns)");
    if (sampled) s->add_option("--seed", common.seed, "seed for sampled estimates");
  };
  auto timed = [&](Report r, std::chrono::steady_clock::time_point t0) {
    if (common.timing)
      r.results["runtime_ms"] =
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };

  // horoball
  std::string base = "builtin:zline:16";
  int depth = 4;
  bool check_regular = false;
  auto* horoball = app.add_subcommand("horoball", "combinatorial horoball over a finite metric space");
  horoball->add_option("--base", base, "metric JSON {\"dist\": [[...]]} or builtin:zline:N");
  horoball->add_option("--depth", depth, "maximal depth")->check(CLI::PositiveNumber);
  horoball->add_flag("--check-regular", check_regular, "compare regular geodesics with BFS on all pairs");
  add_common(horoball, false);
  horoball->callback([&] {
    run = [&] {
      auto t0 = std::chrono::steady_clock::now();
      HoroballGraph h(load_base(base), depth);
      Report r{"horoball", {{"base", base}, {"depth", depth}}};
      r.results["vertices"] = h.vertex_count();
      if (check_regular) {
        std::size_t mismatches = 0;
        std::vector<std::pair<int, int>> pairs;
        for (int a = 0; a < h.vertex_count(); ++a) {
          auto d = h.graph().bfs(a);
          for (int b = 0; b < h.vertex_count(); ++b) {
            mismatches += regular_geodesic(h, h.vertex(a), h.vertex(b)).length() != d[static_cast<std::size_t>(b)];
            pairs.push_back({a, b});
          }
        }
        auto bound = geodesic_depth_bound_check(h, pairs);
        r.results["pairs"] = pairs.size();
        r.results["bfs_mismatches"] = mismatches;
        r.results["depth_bound_violations"] = bound.violations;
        r.results["max_slack"] = bound.max_slack;
        if (mismatches || bound.violations) r.status = 1;
      }
      return timed(r, t0);
    };
  });

  // delta
  Inputs in;
  std::int64_t radius = 3;
  std::size_t samples = 1000;
  auto* delta = app.add_subcommand("delta", "thin-triangle constant of a cusped ball");
  delta->add_option("--group", in.group, "group JSON or builtin:z2z2 / builtin:f2")->required();
  delta->add_option("-r", radius, "ball radius")->check(CLI::PositiveNumber);
  delta->add_option("--depth", depth, "horoball depth");
  delta->add_option("--samples", samples, "sampled triangles")->check(CLI::PositiveNumber);
  add_common(delta, true);
  delta->callback([&] {
    run = [&] {
      auto t0 = std::chrono::steady_clock::now();
      auto g = load_group_only(in);
      auto x = build_cusped_ball(g, radius, depth);
      auto d = estimate_delta(x, samples, common.seed);
      Report r{"delta", {{"group", in.group}, {"r", radius}, {"depth", depth}, {"samples", samples}, {"seed", common.seed}}};
      r.results = {{"delta", d.delta}, {"samples", d.samples}, {"vertices", x.vertices.size()},
                   {"witness", d.witness}};
      return timed(r, t0);
    };
  });

  // bcp
  double lambda = 1;
  std::int64_t bcp_c = 0, bcp_k = 0;
  auto* bcp = app.add_subcommand("bcp", "bounded coset penetration probe");
  bcp->add_option("--group", in.group, "group")->required();
  bcp->add_option("--lambda", lambda, "quasigeodesic multiplier");
  bcp->add_option("--c", bcp_c, "quasigeodesic additive constant");
  bcp->add_option("-k", bcp_k, "backtracking bound");
  bcp->add_option("-r", radius, "target ball radius")->check(CLI::PositiveNumber);
  bcp->add_option("--samples", samples, "sampled path pairs")->check(CLI::PositiveNumber);
  add_common(bcp, true);
  bcp->callback([&] {
    run = [&] {
      auto t0 = std::chrono::steady_clock::now();
      auto g = load_group_only(in);
      auto b = bcp_probe(g, lambda, bcp_c, bcp_k, ball(g, radius), samples, common.seed);
      Report r{"bcp", {{"group", in.group}, {"lambda", lambda}, {"c", bcp_c}, {"k", bcp_k}, {"r", radius},
                       {"samples", samples}, {"seed", common.seed}}};
      r.results = {{"epsilon", b.epsilon}, {"clause_i", b.clause_i}, {"clause_ii", b.clause_ii},
                   {"clause_iii", b.clause_iii}, {"samples", b.samples}, {"rejected", b.rejected},
                   {"witness", g.format(b.witness)}};
      return timed(r, t0);
    };
  });

  // qc
  std::string notion = "o";
  std::int64_t L = 3, cap = 4;
  int truncate_n = 0;
  auto* qc = app.add_subcommand("qc", "quasiconvexity constants under the three notions");
  auto add_pair = [&](CLI::App* s) {
    s->add_option("--group", in.group, "group (overrides the one named by the subgroup file)");
    s->add_option("--subgroup", in.subgroup, "subgroup JSON")->required();
  };
  add_pair(qc);
  qc->add_option("--notion", notion, "o, h, agm or all")->check(CLI::IsMember({"o", "h", "agm", "all"}));
  qc->add_option("-L", L, "subgroup enumeration radius")->check(CLI::PositiveNumber);
  qc->add_option("--cap", cap, "search cap for distances to the subgroup")->check(CLI::PositiveNumber);
  qc->add_option("--truncate", truncate_n, "truncation depth n of X_n for QC-H");
  qc->add_option("--samples", samples, "sampled geodesics for QC-AGM")->check(CLI::PositiveNumber);
  add_common(qc, true);
  qc->callback([&] {
    run = [&] {
      auto t0 = std::chrono::steady_clock::now();
      auto [g, q] = load_pair(in);
      Report r{"qc", {{"subgroup", in.subgroup}, {"notion", notion}, {"L", L}, {"cap", cap}, {"seed", common.seed}}};
      if (notion == "o" || notion == "all") r.results["qc_o"] = to_json(qc_sigma_estimate(g, q, L, cap), g);
      if (notion != "o") {
        auto x = build_cusped_ball(g, L, default_max_depth(L));
        if (notion == "h" || notion == "all") r.results["qc_h"] = to_json(qch_mu_estimate(g, q, x, truncate_n, L), g);
        if (notion == "agm" || notion == "all") {
          auto data = maximal_parabolics(g, q);
          auto y = build_subgroup_cusped_ball(g, q, data, static_cast<int>(L), x.max_depth);
          auto m = check_map(g, q, data, y, x, samples, common.seed);
          auto a = to_json(qc_agm_estimate(m.image, x, samples, common.seed), g);
          a["lipschitz"] = m.lipschitz;
          a["equivariance_failures"] = m.equivariance_failures;
          r.results["qc_agm"] = a;
        }
      }
      return timed(r, t0);
    };
  });

  // parabolics
  auto* parabolics = app.add_subcommand("parabolics", "maximal parabolic subgroups up to conjugacy");
  add_pair(parabolics);
  add_common(parabolics, false);
  parabolics->callback([&] {
    run = [&] {
      auto t0 = std::chrono::steady_clock::now();
      auto [g, q] = load_pair(in);
      auto f = is_fully_quasiconvex(g, q);
      Report r{"parabolics", {{"subgroup", in.subgroup}}};
      r.results["fully_quasiconvex"] = f.fully_quasiconvex;
      r.results["parabolics"] = json::array();
      for (const auto& d : f.table) r.results["parabolics"].push_back(to_json(d, g));
      return timed(r, t0);
    };
  });

  // fullyqc
  std::string element;
  FqcOptions fqc;
  auto* fullyqc = app.add_subcommand("fullyqc", "enlarge Q to a fully quasiconvex H avoiding an element");
  add_pair(fullyqc);
  fullyqc->add_option("--element", element, "element to keep outside")->required();
  fullyqc->add_option("--theta0", fqc.theta0, "initial theta")->check(CLI::PositiveNumber);
  fullyqc->add_option("--Linj", fqc.l_inj, "injectivity length")->check(CLI::PositiveNumber);
  fullyqc->add_option("--samples", fqc.samples, "sampled words for the long-component check");
  fullyqc->add_option("--membership-budget", fqc.membership_budget, "bounded membership budget")->check(CLI::PositiveNumber);
  add_common(fullyqc, true);
  fullyqc->callback([&] {
    run = [&] {
      auto t0 = std::chrono::steady_clock::now();
      auto [g, q] = load_pair(in);
      fqc.seed = common.seed;
      auto res = fully_quasiconvexify(g, q, g.parse(element), fqc);
      Report r{"fullyqc", {{"subgroup", in.subgroup}, {"element", element}, {"theta0", fqc.theta0},
                           {"l_inj", fqc.l_inj}, {"samples", fqc.samples}, {"seed", common.seed}}};
      r.results["steps"] = json::array();
      for (const auto& s : res.steps)
        r.results["steps"].push_back({{"factor", g.factor(s.factor).name}, {"conjugator", g.format(s.conjugator)},
                                      {"K", io::to_json(s.k)}, {"R", io::to_json(s.r)}, {"theta", s.theta},
                                      {"retries", s.retries}, {"finite_index_ok", s.finite_index_ok},
                                      {"representatives_ok", s.representatives_ok},
                                      {"long_component_ok", s.long_component_ok},
                                      {"membership", to_string(s.membership)}, {"certificate", to_json(s.certificate)}});
      r.results["subgroup"] = io::to_json(g, res.h);
      r.results["fully_quasiconvex"] = res.fully_quasiconvex;
      r.results["membership"] = to_string(res.final_membership);
      return timed(r, t0);
    };
  });

  // lerf
  std::size_t rank = 2;
  std::string k_text, avoid_text;
  std::optional<std::int64_t> minlen;
  auto* lerf = app.add_subcommand("lerf", "finite-index R >= K avoiding vectors of Z^n");
  lerf->add_option("--rank", rank, "n")->check(CLI::PositiveNumber);
  lerf->add_option("--K", k_text, "generators of K, rows separated by ';', entries by ','");
  lerf->add_option("--avoid", avoid_text, "vectors to avoid, same syntax");
  lerf->add_option("--minlen", minlen, "every vector of R \\ K has l1 length above this");
  add_common(lerf, false);
  lerf->callback([&] {
    run = [&] {
      auto t0 = std::chrono::steady_clock::now();
      Lattice k(rank, parse_rows(k_text, rank));
      auto avoid = parse_rows(avoid_text, rank);
      auto rl = minlen ? separate_with_minlength(k, avoid, *minlen) : separate(k, avoid);
      Report r{"lerf", {{"rank", rank}, {"K", k.generators()}, {"avoid", avoid}}};
      if (minlen) r.params["minlen"] = *minlen;
      std::vector<std::string> transcript;
      bool ok = rl.contains(k) && rl.is_full_rank();
      transcript.push_back(std::string("R contains K: ") + (rl.contains(k) ? "yes" : "no"));
      transcript.push_back("index of R: " + std::to_string(*rl.index()));
      for (const auto& v : avoid) {
        bool in_r = rl.contains(v);
        ok = ok && !in_r;
        transcript.push_back(std::string("avoided vector ") + json(v).dump() + (in_r ? " lies in R" : " outside R"));
      }
      if (minlen) {
        auto s = shortest_nonmember(rl, k, *minlen);
        ok = ok && !s;
        transcript.push_back(s ? "short vector of R \\ K: " + json(*s).dump()
                               : "no vector of R \\ K has length <= " + std::to_string(*minlen));
      }
      r.results = {{"R", io::to_json(rl)}, {"index", *rl.index()}, {"verified", ok}, {"transcript", transcript}};
      if (!ok) r.status = 1;
      return timed(r, t0);
    };
  });

  // fill
  std::int64_t B = 5, budget = 3;
  bool torsion_variant = false;
  auto* fillcmd = app.add_subcommand("fill", "H-filling kernels and the filled group");
  add_pair(fillcmd);
  fillcmd->add_option("--B", B, "kernels avoid the l1 ball of radius B")->check(CLI::PositiveNumber);
  fillcmd->add_option("--budget", budget, "coset search radius")->check(CLI::PositiveNumber);
  fillcmd->add_flag("--torsion-variant", torsion_variant, "H-filling condition on infinite intersections only");
  add_common(fillcmd, false);
  fillcmd->callback([&] {
    run = [&] {
      auto t0 = std::chrono::steady_clock::now();
      auto [g, q] = load_pair(in);
      FoldedSubgroup h(g, q);
      auto k = choose_kernels(h, B, budget);
      auto pi = fill(g, k);
      auto hf = is_h_filling(h, k, budget, torsion_variant);
      Report r{"fill", {{"subgroup", in.subgroup}, {"B", B}, {"budget", budget}, {"torsion_variant", torsion_variant}}};
      r.results["kernels"] = io::to_json(g, k);
      r.results["invariants"] = json::object();
      for (std::size_t i = 0; i < k.kernels.size(); ++i)
        if (k.kernels[i])
          r.results["invariants"][g.factor(static_cast<int>(i)).name] = pi.filled().invariants[i].torsion();
      r.results["h_filling"] = hf.h_filling;
      r.results["peripheral_images_injective"] = peripheral_images_injective(pi);
      r.results["transcript"] = json::array();
      for (const auto& row : hf.table) {
        json j{{"factor", g.factor(row.factor).name}, {"coset", g.format(row.coset)},
               {"intersection", io::to_json(row.lattice)}, {"nontrivial", row.nontrivial}, {"contained", row.contained}};
        if (row.witness) j["witness"] = *row.witness;
        r.results["transcript"].push_back(j);
      }
      r.results["quotient"] = json::array();
      for (const auto& f : pi.target().factors()) {
        json j{{"name", f.name}};
        if (f.kind == Factor::Kind::finite)
          j["order"] = f.table.size();
        else
          j["rank"] = f.rank;
        r.results["quotient"].push_back(j);
      }
      if (!hf.h_filling) r.status = 1;
      return timed(r, t0);
    };
  });

  // separate
  SeparateOptions sep;
  auto* separatecmd = app.add_subcommand("separate", "finite quotient separating an element from H");
  add_pair(separatecmd);
  separatecmd->add_option("--element", element, "element to separate")->required();
  separatecmd->add_option("--coset-budget", sep.coset_budget, "coset search radius for the kernels");
  separatecmd->add_option("--degree-bound", sep.degree_bound, "largest permutation degree");
  add_common(separatecmd, true);
  separatecmd->callback([&] {
    run = [&] {
      auto [g, q] = load_pair(in);
      sep.fqc.seed = common.seed;
      auto cert = end_to_end_separate(g, q, g.parse(element), sep);
      auto v = verify_certificate(cert);
      require(v.valid, ErrorKind::verification_failed, "certificate does not verify: " + v.reason);
      auto text = io::to_json(cert).dump(2) + "\n";
      if (common.out.empty()) {
        std::cout << text;
      } else {
        std::ofstream(common.out) << text;
        std::cerr << "certificate of degree " << cert.rep.degree << " written to " << common.out << "\n";
      }
      return Report{"separate", {}, {}, -1};
    };
  });

  // verify
  std::string cert_path;
  std::size_t closure_limit = 200000;
  auto* verify = app.add_subcommand("verify", "check a separation certificate");
  verify->add_option("certificate", cert_path, "certificate JSON")->required();
  verify->add_option("--closure-limit", closure_limit, "largest closure enumerated");
  add_common(verify, false);
  verify->callback([&] {
    run = [&] {
      auto cert = io::certificate_from_json(io::read_json(cert_path));
      auto v = verify_certificate(cert, closure_limit);
      Report r{"verify", {{"certificate", cert_path}}};
      r.results = {{"valid", v.valid}, {"reason", v.reason}, {"degree", cert.rep.degree}};
      if (v.closure_order) r.results["closure_order"] = *v.closure_order;
      r.status = v.valid ? 0 : 1;
      return r;
    };
  });

  // acceptance
  bool quick = false;
  auto* accept = app.add_subcommand("acceptance", "run the acceptance suite");
  accept->add_flag("--quick", quick, "smaller instances");
  add_common(accept, false);
  accept->callback([&] {
    run = [&] {
      Report r{"acceptance", {{"quick", quick}}};
      r.results["criteria"] = json::array();
      for (const auto& c : acceptance::criteria()) {
        auto res = c(quick);
        std::cerr << acceptance::line(res) << std::endl;
        json j{{"id", res.id}, {"name", res.name}, {"pass", res.pass}, {"detail", res.detail}};
        if (common.timing) j["seconds"] = res.seconds;
        r.results["criteria"].push_back(j);
        if (!res.pass) r.status = 1;
      }
      return r;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorKind::malformed_input);
  }
  try {
    auto report = run();
    if (report.status < 0) return 0;
    emit(report, common);
    return report.status;
  } catch (const Error& e) {
    std::cerr << "relsep: " << e.what() << "\n";
    return exit_code(e.kind());
  }
}
