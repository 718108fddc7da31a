#pragma once

// JSON reading and writing: group and subgroup files, lattices, certificates.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "relsep/group.hpp"
#include "relsep/separator.hpp"

namespace relsep::io {

using json = nlohmann::json;

inline constexpr const char* certificate_schema = "relsep.certificate/1";
inline constexpr const char* report_schema = "relsep.report/1";

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::malformed_input, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::malformed_input, path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::malformed_input, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

template <class T>
T field(const json& j, const char* key) {
  require(j.is_object() && j.contains(key), ErrorKind::malformed_input, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::malformed_input, std::string("field '") + key + "': " + e.what());
  }
}

// --- groups ----------------------------------------------------------------

inline Factor factor_from_json(const json& j) {
  auto kind = field<std::string>(j, "kind");
  auto name = field<std::string>(j, "name");
  if (kind == "free_abelian") return Factor::free_abelian(name, field<int>(j, "rank"));
  if (kind == "free") return Factor::free(name, field<int>(j, "rank"));
  if (kind == "finite") {
    if (j.contains("table"))
      return Factor::finite(name, field<std::vector<std::vector<int>>>(j, "table"), j.value("identity", 0));
    return Factor::cyclic(name, field<int>(j, "order"));
  }
  fail(ErrorKind::malformed_input, "unknown factor kind '" + kind + "'");
}

inline json to_json(const Factor& f) {
  json j{{"name", f.name}};
  switch (f.kind) {
    case Factor::Kind::free_abelian: j["kind"] = "free_abelian"; j["rank"] = f.rank; break;
    case Factor::Kind::free: j["kind"] = "free"; j["rank"] = f.rank; break;
    case Factor::Kind::finite:
      j["kind"] = "finite";
      j["table"] = f.table;
      j["identity"] = f.identity;
      break;
  }
  return j;
}

inline MarkedGroup group_from_json(const json& j) {
  std::vector<Factor> factors;
  for (const auto& f : field<json>(j, "factors")) factors.push_back(factor_from_json(f));
  std::vector<int> peripheral;
  for (const auto& name : j.value("peripheral", std::vector<std::string>{})) {
    int found = -1;
    for (std::size_t i = 0; i < factors.size(); ++i)
      if (factors[i].name == name) found = static_cast<int>(i);
    require(found >= 0, ErrorKind::malformed_input, "peripheral factor '" + name + "' not declared");
    peripheral.push_back(found);
  }
  return MarkedGroup(std::move(factors), peripheral);
}

inline json to_json(const MarkedGroup& g) {
  json j{{"factors", json::array()}, {"peripheral", json::array()}};
  for (const auto& f : g.factors()) j["factors"].push_back(to_json(f));
  for (int i : g.peripheral_indices()) j["peripheral"].push_back(g.factor(i).name);
  return j;
}

/// "builtin:z2z2" or "builtin:f2", otherwise a JSON file.
inline MarkedGroup load_group(const std::string& spec) {
  if (spec == "builtin:z2z2") return z2_free_product();
  if (spec == "builtin:f2") return free_group(2);
  return group_from_json(read_json(spec));
}

// --- lattices and subgroups --------------------------------------------------

inline json to_json(const Lattice& l) { return json{{"rank", l.ambient_rank()}, {"hnf", l.basis()}}; }

inline Lattice lattice_from_json(const json& j) {
  return Lattice(field<std::size_t>(j, "rank"), field<Matrix>(j, "hnf"));
}

inline SubgroupSpec subgroup_from_json(const MarkedGroup& g, const json& j) {
  auto q = subgroup_from_words(g, field<std::vector<std::string>>(j, "generators"));
  for (const auto& b : j.value("blocks", json::array())) {
    auto name = field<std::string>(b, "factor");
    auto f = g.factor_by_name(name);
    require(f.has_value(), ErrorKind::malformed_input, "unknown factor '" + name + "'");
    q.blocks.push_back({*f, g.parse(b.value("conjugator", std::string("1"))), lattice_from_json(b.at("lattice"))});
  }
  return q;
}

inline json to_json(const MarkedGroup& g, const SubgroupSpec& q) {
  json j{{"generators", json::array()}, {"blocks", json::array()}};
  for (const auto& x : q.generators) j["generators"].push_back(g.format(x));
  for (const auto& b : q.blocks)
    j["blocks"].push_back({{"factor", g.factor(b.factor).name}, {"conjugator", g.format(b.conjugator)},
                           {"lattice", to_json(b.lattice)}});
  return j;
}

struct LoadedSubgroup {
  MarkedGroup group;
  SubgroupSpec subgroup;
};

/// Subgroup file {"group": <path relative to the file>, "generators": [...]}.
/// A group given on the command line takes precedence.
inline LoadedSubgroup load_subgroup(const std::string& path, const std::string& group_override = {}) {
  auto j = read_json(path);
  LoadedSubgroup out;
  if (!group_override.empty()) {
    out.group = load_group(group_override);
  } else {
    auto gp = field<std::string>(j, "group");
    if (gp.rfind("builtin:", 0) != 0) gp = (std::filesystem::path(path).parent_path() / gp).string();
    out.group = load_group(gp);
  }
  out.subgroup = subgroup_from_json(out.group, j);
  return out;
}

// --- certificates ------------------------------------------------------------

inline json to_json(const MarkedGroup& g, const FillingKernels& k) {
  json out = json::array();
  for (std::size_t i = 0; i < k.kernels.size(); ++i)
    if (k.kernels[i]) out.push_back({{"factor", g.factor(static_cast<int>(i)).name}, {"lattice", to_json(*k.kernels[i])}});
  return out;
}

inline json to_json(const FiniteQuotientCertificate& c) {
  json j;
  j["schema"] = certificate_schema;
  j["group"] = to_json(c.group);
  j["kernels"] = to_json(c.group, c.kernels);
  j["element"] = c.group.format(c.element);
  j["subgroup_generators"] = json::array();
  for (const auto& x : c.subgroup_generators) j["subgroup_generators"].push_back(c.group.format(x));
  j["degree"] = c.rep.degree;
  j["action"] = c.rep.images;
  j["element_image"] = c.element_image;
  j["generator_images"] = c.generator_images;
  j["transcript"] = c.transcript;
  return j;
}

inline FiniteQuotientCertificate certificate_from_json(const json& j) {
  require(j.value("schema", std::string()) == certificate_schema, ErrorKind::malformed_input,
          "not a certificate of schema " + std::string(certificate_schema));
  FiniteQuotientCertificate c;
  c.group = group_from_json(field<json>(j, "group"));
  c.kernels = FillingKernels(static_cast<std::size_t>(c.group.factor_count()));
  for (const auto& k : field<json>(j, "kernels")) {
    auto f = c.group.factor_by_name(field<std::string>(k, "factor"));
    require(f.has_value(), ErrorKind::malformed_input, "kernel for an unknown factor");
    c.kernels.kernels[static_cast<std::size_t>(*f)] = lattice_from_json(k.at("lattice"));
  }
  c.element = c.group.parse(field<std::string>(j, "element"));
  for (const auto& w : field<std::vector<std::string>>(j, "subgroup_generators")) c.subgroup_generators.push_back(c.group.parse(w));
  c.rep.degree = field<int>(j, "degree");
  c.rep.images = field<std::vector<std::vector<Perm>>>(j, "action");
  c.element_image = field<Perm>(j, "element_image");
  c.generator_images = field<std::vector<Perm>>(j, "generator_images");
  c.transcript = j.value("transcript", std::vector<std::string>{});
  return c;
}

}  // namespace relsep::io
