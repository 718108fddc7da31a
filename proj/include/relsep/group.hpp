#pragma once

// Sandbox groups: ordered free products of free-abelian, free, and finite
// factors, with exact free-product normal forms.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "relsep/error.hpp"
#include "relsep/lattice.hpp"

namespace relsep {

/// Element of a single factor. FreeAbelian: coordinates. Free: reduced word
/// with letters +-(j+1). Finite: a single table index.
using FactorElem = std::vector<std::int64_t>;

struct Factor {
  enum class Kind { free_abelian, free, finite };

  Kind kind = Kind::free_abelian;
  std::string name;
  int rank = 0;                            // free_abelian / free
  std::vector<std::vector<int>> table;     // finite: table[a][b] = a*b
  int identity = 0;                        // finite
  std::vector<int> inverse;                // finite, derived
  std::vector<std::string> letter_names;   // basis letters, or one per finite element (empty at identity)
  std::vector<Vec> finite_labels;          // optional: vector label per finite element (filled quotients)

  static Factor free_abelian(std::string name, int rank) {
    require(rank >= 1, ErrorKind::malformed_input, "free abelian factor needs rank >= 1");
    Factor f;
    f.kind = Kind::free_abelian;
    f.name = std::move(name);
    f.rank = rank;
    return f;
  }

  static Factor free(std::string name, int rank) {
    require(rank >= 1, ErrorKind::malformed_input, "free factor needs rank >= 1");
    Factor f;
    f.kind = Kind::free;
    f.name = std::move(name);
    f.rank = rank;
    return f;
  }

  /// Validates associativity, identity, and inverses.
  static Factor finite(std::string name, std::vector<std::vector<int>> table, int identity) {
    const int n = static_cast<int>(table.size());
    require(n >= 1, ErrorKind::malformed_input, "finite factor needs a nonempty table");
    require(identity >= 0 && identity < n, ErrorKind::malformed_input, "identity index out of range");
    for (const auto& row : table) {
      require(static_cast<int>(row.size()) == n, ErrorKind::malformed_input, "multiplication table is not square");
      for (int x : row) require(x >= 0 && x < n, ErrorKind::malformed_input, "table entry out of range");
    }
    for (int a = 0; a < n; ++a)
      require(table[identity][a] == a && table[a][identity] == a, ErrorKind::malformed_input,
              "identity is not two-sided in factor " + name);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          require(table[table[a][b]][c] == table[a][table[b][c]], ErrorKind::malformed_input,
                  "multiplication table of " + name + " is not associative");
    Factor f;
    f.kind = Kind::finite;
    f.name = std::move(name);
    f.table = std::move(table);
    f.identity = identity;
    f.inverse.assign(n, -1);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (f.table[a][b] == identity && f.table[b][a] == identity) f.inverse[a] = b;
    for (int a = 0; a < n; ++a)
      require(f.inverse[a] >= 0, ErrorKind::malformed_input, "element without inverse in factor " + f.name);
    return f;
  }

  static Factor cyclic(std::string name, int order) {
    require(order >= 1, ErrorKind::malformed_input, "cyclic factor needs order >= 1");
    std::vector<std::vector<int>> t(order, std::vector<int>(order));
    for (int a = 0; a < order; ++a)
      for (int b = 0; b < order; ++b) t[a][b] = (a + b) % order;
    return finite(std::move(name), std::move(t), 0);
  }

  int order() const { return static_cast<int>(table.size()); }

  FactorElem identity_elem() const {
    switch (kind) {
      case Kind::free_abelian: return FactorElem(rank, 0);
      case Kind::free: return {};
      case Kind::finite: return {identity};
    }
    return {};
  }

  bool is_identity(const FactorElem& a) const {
    switch (kind) {
      case Kind::free_abelian: return detail::is_zero(a);
      case Kind::free: return a.empty();
      case Kind::finite: return a.size() == 1 && a[0] == identity;
    }
    return false;
  }

  bool valid(const FactorElem& a) const {
    switch (kind) {
      case Kind::free_abelian: return static_cast<int>(a.size()) == rank;
      case Kind::free:
        for (std::size_t i = 0; i < a.size(); ++i) {
          if (a[i] == 0 || std::llabs(a[i]) > rank) return false;
          if (i > 0 && a[i] == -a[i - 1]) return false;
        }
        return true;
      case Kind::finite: return a.size() == 1 && a[0] >= 0 && a[0] < order();
    }
    return false;
  }

  FactorElem mul(const FactorElem& a, const FactorElem& b) const {
    switch (kind) {
      case Kind::free_abelian: return add(a, b);
      case Kind::free: {
        FactorElem r = a;
        for (auto x : b) {
          if (!r.empty() && r.back() == -x)
            r.pop_back();
          else
            r.push_back(x);
        }
        return r;
      }
      case Kind::finite: return {table[a[0]][b[0]]};
    }
    return {};
  }

  FactorElem inv(const FactorElem& a) const {
    switch (kind) {
      case Kind::free_abelian: return neg(a);
      case Kind::free: {
        FactorElem r(a.rbegin(), a.rend());
        for (auto& x : r) x = -x;
        return r;
      }
      case Kind::finite: return {inverse[a[0]]};
    }
    return {};
  }

  /// Word length with respect to this factor's part of S.
  std::int64_t length(const FactorElem& a) const {
    switch (kind) {
      case Kind::free_abelian: return l1(a);
      case Kind::free: return static_cast<std::int64_t>(a.size());
      case Kind::finite: return is_identity(a) ? 0 : 1;
    }
    return 0;
  }
};

struct Syllable {
  int factor = 0;
  FactorElem elem;

  friend bool operator==(const Syllable&, const Syllable&) = default;
  friend auto operator<=>(const Syllable&, const Syllable&) = default;
};

/// Alternating syllables; no identity syllable, adjacent factors distinct.
struct NormalForm {
  std::vector<Syllable> syllables;

  bool empty() const { return syllables.empty(); }
  std::size_t size() const { return syllables.size(); }

  friend bool operator==(const NormalForm&, const NormalForm&) = default;
  friend auto operator<=>(const NormalForm&, const NormalForm&) = default;
};

struct NormalFormHash {
  std::size_t operator()(const NormalForm& g) const noexcept {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (const auto& s : g.syllables) {
      h ^= static_cast<std::size_t>(s.factor) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      for (auto x : s.elem) h ^= std::hash<std::int64_t>{}(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
  }
};

template <class V>
using ElementMap = std::unordered_map<NormalForm, V, NormalFormHash>;

struct Letter {
  std::string name;
  int factor = 0;
  FactorElem elem;
};

class MarkedGroup {
 public:
  MarkedGroup() = default;

  MarkedGroup(std::vector<Factor> factors, std::vector<int> peripheral)
      : factors_(std::move(factors)), peripheral_flags_(factors_.size(), false) {
    require(!factors_.empty(), ErrorKind::malformed_input, "group needs at least one factor");
    for (int i : peripheral) {
      require(i >= 0 && i < static_cast<int>(factors_.size()), ErrorKind::malformed_input, "peripheral index out of range");
      require(factors_[i].kind != Factor::Kind::free, ErrorKind::malformed_input,
              "peripheral factor " + factors_[i].name + " must be free abelian or finite");
      peripheral_flags_[i] = true;
    }
    for (std::size_t i = 0; i < factors_.size(); ++i)
      require(peripheral_flags_[i] || factors_[i].kind != Factor::Kind::free_abelian || factors_[i].rank == 1,
              ErrorKind::malformed_input,
              "non-peripheral free abelian factor " + factors_[i].name + " must have rank 1");
    build_letters();
  }

  const std::vector<Factor>& factors() const { return factors_; }
  const Factor& factor(int i) const { return factors_.at(static_cast<std::size_t>(i)); }
  int factor_count() const { return static_cast<int>(factors_.size()); }
  bool is_peripheral(int i) const { return peripheral_flags_.at(static_cast<std::size_t>(i)); }

  std::vector<int> peripheral_indices() const {
    std::vector<int> out;
    for (int i = 0; i < factor_count(); ++i)
      if (is_peripheral(i)) out.push_back(i);
    return out;
  }

  std::optional<int> factor_by_name(const std::string& name) const {
    for (int i = 0; i < factor_count(); ++i)
      if (factors_[i].name == name) return i;
    return std::nullopt;
  }

  /// The symmetric generating set S.
  const std::vector<Letter>& generators() const { return letters_; }

  const Letter& letter(const std::string& name) const {
    auto it = letter_index_.find(name);
    if (it == letter_index_.end()) fail(ErrorKind::malformed_input, "unknown letter '" + name + "'");
    return letters_[it->second];
  }

  bool has_letter(const std::string& name) const { return letter_index_.count(name) > 0; }

  NormalForm identity() const { return {}; }

  NormalForm syllable(int factor, FactorElem elem) const {
    NormalForm g;
    append(g, factor, std::move(elem));
    return g;
  }

  /// Free-abelian factor element from coordinates.
  NormalForm vec(int factor, const Vec& v) const { return syllable(factor, v); }

  void append(NormalForm& g, int factor, FactorElem elem) const {
    check_factor_elem(factor, elem);
    const Factor& f = factors_[factor];
    if (f.is_identity(elem)) return;
    if (!g.syllables.empty() && g.syllables.back().factor == factor) {
      auto merged = f.mul(g.syllables.back().elem, elem);
      if (f.is_identity(merged))
        g.syllables.pop_back();
      else
        g.syllables.back().elem = std::move(merged);
    } else {
      g.syllables.push_back({factor, std::move(elem)});
    }
  }

  NormalForm multiply(const NormalForm& a, const NormalForm& b) const {
    check(a);
    NormalForm r = a;
    for (const auto& s : b.syllables) append(r, s.factor, s.elem);
    return r;
  }

  NormalForm multiply(std::initializer_list<NormalForm> xs) const {
    NormalForm r;
    for (const auto& x : xs) r = multiply(r, x);
    return r;
  }

  NormalForm invert(const NormalForm& a) const {
    check(a);
    NormalForm r;
    for (auto it = a.syllables.rbegin(); it != a.syllables.rend(); ++it)
      r.syllables.push_back({it->factor, factors_[it->factor].inv(it->elem)});
    return r;
  }

  NormalForm power(const NormalForm& a, std::int64_t k) const {
    NormalForm base = k < 0 ? invert(a) : a;
    NormalForm r;
    for (std::int64_t i = 0; i < std::llabs(k); ++i) r = multiply(r, base);
    return r;
  }

  NormalForm conjugate(const NormalForm& f, const NormalForm& x) const {  // f x f^-1
    return multiply({f, x, invert(f)});
  }

  bool is_identity(const NormalForm& a) const { return a.syllables.empty(); }

  std::int64_t s_length(const NormalForm& a) const {
    std::int64_t s = 0;
    for (const auto& syl : a.syllables) s += factors_[syl.factor].length(syl.elem);
    return s;
  }

  std::int64_t s_distance(const NormalForm& a, const NormalForm& b) const { return s_length(multiply(invert(a), b)); }

  NormalForm normalize(const std::vector<std::string>& word) const {
    NormalForm g;
    for (const auto& name : word) {
      const auto& l = letter(name);
      append(g, l.factor, l.elem);
    }
    return g;
  }

  /// Parses "x1 y1^-1 x2^3"; "1" or "" is the identity.
  NormalForm parse(const std::string& text) const {
    std::istringstream in(text);
    std::string tok;
    NormalForm g;
    while (in >> tok) {
      if (tok == "1") continue;
      std::string name = tok;
      std::int64_t exponent = 1;
      if (auto caret = tok.find('^'); caret != std::string::npos) {
        name = tok.substr(0, caret);
        try {
          std::size_t used = 0;
          exponent = std::stoll(tok.substr(caret + 1), &used);
          require(used == tok.size() - caret - 1, ErrorKind::malformed_input, "bad exponent in '" + tok + "'");
        } catch (const std::logic_error&) {
          fail(ErrorKind::malformed_input, "bad exponent in '" + tok + "'");
        }
      }
      const auto& l = letter(name);
      g = multiply(g, power(syllable(l.factor, l.elem), exponent));
    }
    return g;
  }

  /// Shortest word over S spelling the normal form (the canonical spelling).
  std::vector<std::string> spell(const NormalForm& g) const {
    std::vector<std::string> out;
    for (const auto& s : g.syllables) {
      const Factor& f = factors_[s.factor];
      switch (f.kind) {
        case Factor::Kind::free_abelian:
          for (int j = 0; j < f.rank; ++j)
            for (std::int64_t k = 0; k < std::llabs(s.elem[j]); ++k)
              out.push_back(s.elem[j] > 0 ? f.letter_names[j] : f.letter_names[j] + "^-1");
          break;
        case Factor::Kind::free:
          for (auto x : s.elem)
            out.push_back(x > 0 ? f.letter_names[x - 1] : f.letter_names[-x - 1] + "^-1");
          break;
        case Factor::Kind::finite: out.push_back(f.letter_names[s.elem[0]]); break;
      }
    }
    return out;
  }

  /// Compact text with exponents, parseable by `parse`.
  std::string format(const NormalForm& g) const {
    if (g.empty()) return "1";
    std::string out;
    auto emit = [&](const std::string& name, std::int64_t k) {
      if (k == 0) return;
      if (!out.empty()) out += ' ';
      out += name;
      if (k != 1) out += "^" + std::to_string(k);
    };
    for (const auto& s : g.syllables) {
      const Factor& f = factors_[s.factor];
      switch (f.kind) {
        case Factor::Kind::free_abelian:
          for (int j = 0; j < f.rank; ++j) emit(f.letter_names[j], s.elem[j]);
          break;
        case Factor::Kind::free: {
          std::size_t i = 0;
          while (i < s.elem.size()) {
            std::size_t j = i;
            while (j < s.elem.size() && s.elem[j] == s.elem[i]) ++j;
            auto x = s.elem[i];
            emit(f.letter_names[std::llabs(x) - 1], (x > 0 ? 1 : -1) * static_cast<std::int64_t>(j - i));
            i = j;
          }
          break;
        }
        case Factor::Kind::finite: emit(f.letter_names[s.elem[0]], 1); break;
      }
    }
    return out;
  }

  /// Canonical left coset id of g * P_i: the normal form with a trailing
  /// factor-i syllable stripped (the shortest coset representative).
  NormalForm coset_prefix(const NormalForm& g, int factor) const {
    NormalForm p = g;
    if (!p.syllables.empty() && p.syllables.back().factor == factor) p.syllables.pop_back();
    return p;
  }

  /// The factor-i part of g relative to its coset prefix.
  FactorElem coset_offset(const NormalForm& g, int factor) const {
    if (!g.syllables.empty() && g.syllables.back().factor == factor) return g.syllables.back().elem;
    return factors_[factor].identity_elem();
  }

  void check(const NormalForm& g) const {
    for (std::size_t k = 0; k < g.syllables.size(); ++k) {
      const auto& s = g.syllables[k];
      check_factor_elem(s.factor, s.elem);
      require(!factors_[s.factor].is_identity(s.elem), ErrorKind::malformed_input, "identity syllable in normal form");
      require(k == 0 || g.syllables[k - 1].factor != s.factor, ErrorKind::malformed_input,
              "adjacent syllables share a factor");
    }
  }

 private:
  void check_factor_elem(int factor, const FactorElem& elem) const {
    require(factor >= 0 && factor < factor_count(), ErrorKind::malformed_input,
            "syllable references a factor outside this group");
    require(factors_[factor].valid(elem), ErrorKind::malformed_input, "syllable element does not belong to its factor");
  }

  void add_letter(std::string name, int factor, FactorElem elem) {
    require(!letter_index_.count(name), ErrorKind::malformed_input, "duplicate letter name '" + name + "'");
    letter_index_[name] = letters_.size();
    letters_.push_back({std::move(name), factor, std::move(elem)});
  }

  void build_letters() {
    static const char* abelian_names = "xyzw";
    static const char* free_names = "abcd";
    for (int i = 0; i < factor_count(); ++i) {
      Factor& f = factors_[i];
      const std::string pos = std::to_string(i + 1);
      switch (f.kind) {
        case Factor::Kind::free_abelian:
        case Factor::Kind::free: {
          const bool ab = f.kind == Factor::Kind::free_abelian;
          if (f.letter_names.empty())
            for (int j = 0; j < f.rank; ++j)
              f.letter_names.push_back(f.rank <= 4 ? std::string(1, (ab ? abelian_names : free_names)[j]) + pos
                                                   : std::string(ab ? "e" : "f") + std::to_string(j + 1) + "_" + pos);
          require(static_cast<int>(f.letter_names.size()) == f.rank, ErrorKind::malformed_input,
                  "letter list of " + f.name + " has wrong length");
          for (int j = 0; j < f.rank; ++j) {
            FactorElem up, down;
            if (ab) {
              up.assign(f.rank, 0);
              down.assign(f.rank, 0);
              up[j] = 1;
              down[j] = -1;
            } else {
              up = {j + 1};
              down = {-(j + 1)};
            }
            add_letter(f.letter_names[j], i, up);
            add_letter(f.letter_names[j] + "^-1", i, down);
          }
          break;
        }
        case Factor::Kind::finite:
          if (f.letter_names.empty()) {
            f.letter_names.assign(f.order(), "");
            for (int e = 0; e < f.order(); ++e)
              if (e != f.identity) f.letter_names[e] = "t" + pos + "_" + std::to_string(e);
          }
          require(static_cast<int>(f.letter_names.size()) == f.order(), ErrorKind::malformed_input,
                  "letter list of " + f.name + " has wrong length");
          for (int e = 0; e < f.order(); ++e)
            if (e != f.identity) add_letter(f.letter_names[e], i, {e});
          break;
      }
    }
  }

  std::vector<Factor> factors_;
  std::vector<bool> peripheral_flags_;
  std::vector<Letter> letters_;
  std::unordered_map<std::string, std::size_t> letter_index_;
};

/// Finitely generated subgroup given by generators; optionally with whole
/// lattice blocks f*R*f^-1 inside a conjugate of a free-abelian factor.
struct SubgroupSpec {
  struct Block {
    int factor = 0;
    NormalForm conjugator;
    Lattice lattice;
  };

  std::vector<NormalForm> generators;
  std::vector<Block> blocks;

  /// Generators including the basis elements of every block.
  std::vector<NormalForm> all_generators(const MarkedGroup& g) const {
    std::vector<NormalForm> out = generators;
    for (const auto& b : blocks)
      for (const auto& row : b.lattice.basis()) out.push_back(g.conjugate(b.conjugator, g.vec(b.factor, row)));
    return out;
  }
};

inline SubgroupSpec subgroup_from_words(const MarkedGroup& g, const std::vector<std::string>& words) {
  SubgroupSpec q;
  for (const auto& w : words) {
    auto nf = g.parse(w);
    if (!nf.empty()) q.generators.push_back(nf);
  }
  return q;
}

/// Z^2 * Z^2 with both factors peripheral: letters x1 y1 | x2 y2.
inline MarkedGroup z2_free_product() {
  return MarkedGroup({Factor::free_abelian("P1", 2), Factor::free_abelian("P2", 2)}, {0, 1});
}

}  // namespace relsep
