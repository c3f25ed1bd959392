#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace substlab {

using Symbol = int;
using Word = std::vector<Symbol>;

// ---------------------------------------------------------------------------
// Alphabet: ordered list of distinct display names; symbols are handled as
// 0-based indices everywhere and rendered as names only at the I/O boundary.
// ---------------------------------------------------------------------------

struct Alphabet {
  std::vector<std::string> names;

  int size() const { return static_cast<int>(names.size()); }

  int index_of(const std::string& name) const {
    for (int i = 0; i < size(); ++i)
      if (names[i] == name) return i;
    throw model_error("unknown symbol name '" + name + "'");
  }
};

inline Alphabet make_alphabet(std::vector<std::string> names) {
  if (names.size() < 2) throw model_error("alphabet: need at least 2 symbols");
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (n.empty()) throw model_error("alphabet: empty symbol name");
    if (!seen.insert(n).second) throw model_error("alphabet: duplicate symbol name '" + n + "'");
  }
  return Alphabet{std::move(names)};
}

inline void validate_word(const Word& w, int asize) {
  for (Symbol s : w)
    if (s < 0 || s >= asize)
      throw model_error("word: symbol index " + std::to_string(s) + " out of range");
}

// ---------------------------------------------------------------------------
// Word <-> index codec. Words of a fixed length N over an alphabet of size k
// are enumerated lexicographically: index = sum_i w_i * k^(N-1-i), so the
// first letter is the most significant digit.
// ---------------------------------------------------------------------------

inline std::uint64_t pow_u64(std::uint64_t base, int exp) {
  std::uint64_t r = 1;
  for (int i = 0; i < exp; ++i) {
    if (r > (std::uint64_t(1) << 62) / base)
      throw budget_error("word space too large", std::uint64_t(-1), std::uint64_t(1) << 62);
    r *= base;
  }
  return r;
}

inline std::size_t word_index(std::span<const Symbol> w, int asize) {
  std::size_t idx = 0;
  for (Symbol s : w) idx = idx * static_cast<std::size_t>(asize) + static_cast<std::size_t>(s);
  return idx;
}

inline Word word_from_index(std::size_t idx, int len, int asize) {
  Word w(static_cast<std::size_t>(len));
  for (int i = len - 1; i >= 0; --i) {
    w[static_cast<std::size_t>(i)] = static_cast<Symbol>(idx % static_cast<std::size_t>(asize));
    idx /= static_cast<std::size_t>(asize);
  }
  return w;
}

inline std::string format_word(const Word& w, const Alphabet& a) {
  std::string out;
  for (Symbol s : w) out += a.names[static_cast<std::size_t>(s)];
  return out;
}

// ---------------------------------------------------------------------------
// Substitution rules and rule sets.
// ---------------------------------------------------------------------------

// One substitution sigma: A -> A^+, one non-empty image word per symbol.
struct SubstitutionRule {
  std::vector<Word> images;  // indexed by symbol

  const Word& image(Symbol s) const { return images[static_cast<std::size_t>(s)]; }
};

struct SubstitutionSet {
  std::vector<SubstitutionRule> rules;
  int min_length = 0;  // ell_S
  int max_length = 0;  // L_S

  int count() const { return static_cast<int>(rules.size()); }
  bool constant_length() const { return min_length == max_length; }
};

struct LengthProfile {
  int min_length;
  int max_length;
  bool constant;
};

inline LengthProfile classify_lengths(const SubstitutionSet& s) {
  if (s.rules.empty()) throw model_error("substitution set: no rules");
  int lo = std::numeric_limits<int>::max(), hi = 0;
  for (const auto& r : s.rules)
    for (const auto& img : r.images) {
      lo = std::min(lo, static_cast<int>(img.size()));
      hi = std::max(hi, static_cast<int>(img.size()));
    }
  return LengthProfile{lo, hi, lo == hi};
}

inline SubstitutionSet make_substitution_set(std::vector<SubstitutionRule> rules, int asize) {
  SubstitutionSet s;
  s.rules = std::move(rules);
  if (s.rules.empty()) throw model_error("substitution set: no rules");
  for (std::size_t i = 0; i < s.rules.size(); ++i) {
    const auto& r = s.rules[i];
    if (static_cast<int>(r.images.size()) != asize)
      throw model_error("rule " + std::to_string(i) + ": needs one image per symbol");
    for (const auto& img : r.images) {
      if (img.empty()) throw model_error("rule " + std::to_string(i) + ": empty image");
      validate_word(img, asize);
    }
  }
  auto lp = classify_lengths(s);
  s.min_length = lp.min_length;
  s.max_length = lp.max_length;
  return s;
}

// Concatenation s_1(b_1) s_2(b_2) ... s_N(b_N). Extra rules are ignored.
inline Word apply_rules(std::span<const SubstitutionRule> rules, const Word& b) {
  if (rules.size() < b.size()) throw model_error("apply_rules: fewer rules than symbols");
  Word out;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const Word& img = rules[i].image(b[i]);
    out.insert(out.end(), img.begin(), img.end());
  }
  return out;
}

// Bundle structure (constant-length sets only): the image set of each symbol
// factorizes as the product of its per-position symbol sets.
inline bool has_bundle_structure(const SubstitutionSet& s, int asize) {
  if (!s.constant_length())
    throw unsupported_structure_error("has_bundle_structure: constant-length sets only");
  const int L = s.min_length;
  for (Symbol a = 0; a < asize; ++a) {
    std::set<Word> images;
    for (const auto& r : s.rules) images.insert(r.image(a));
    std::size_t prod = 1;
    for (int j = 0; j < L; ++j) {
      std::set<Symbol> column;
      for (const auto& r : s.rules) column.insert(r.image(a)[static_cast<std::size_t>(j)]);
      prod *= column.size();
    }
    if (images.size() != prod) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Product laws over rule sequences. Three declarable families keep the
// dispersion sup_n rho(nu_1, nu_n) exactly computable.
// ---------------------------------------------------------------------------

enum class LawKind { bernoulli, periodic, prefix };

inline const char* law_kind_name(LawKind k) {
  switch (k) {
    case LawKind::bernoulli: return "bernoulli";
    case LawKind::periodic: return "periodic";
    case LawKind::prefix: return "prefix";
  }
  return "?";
}

struct SubstitutionLaw {
  LawKind kind = LawKind::bernoulli;
  // bernoulli: 1 table; periodic: one table per residue class (position 1 maps
  // to table 0); prefix: tables for positions 1..k followed by the default.
  std::vector<std::vector<double>> tables;

  const std::vector<double>& at(std::int64_t pos) const {
    switch (kind) {
      case LawKind::bernoulli:
        return tables[0];
      case LawKind::periodic:
        return tables[static_cast<std::size_t>((pos - 1) % static_cast<std::int64_t>(tables.size()))];
      case LawKind::prefix: {
        std::size_t i = static_cast<std::size_t>(pos - 1);
        return i < tables.size() - 1 ? tables[i] : tables.back();
      }
    }
    return tables[0];
  }

  // Representatives of the finitely many distinct position laws, position 1 first.
  std::vector<std::int64_t> representative_positions() const {
    std::vector<std::int64_t> r;
    for (std::int64_t p = 1; p <= static_cast<std::int64_t>(tables.size()); ++p) r.push_back(p);
    return r;
  }
};

inline constexpr double kMinLawWeight = 1e-9;  // full-support floor, enforced at parse time

inline void validate_weight_table(const std::vector<double>& w, int rule_count,
                                  const std::string& where) {
  if (static_cast<int>(w.size()) != rule_count)
    throw model_error(where + ": expected " + std::to_string(rule_count) + " weights, got " +
                      std::to_string(w.size()));
  double sum = 0;
  for (double x : w) {
    if (!(x >= kMinLawWeight))
      throw model_error(where + ": weight " + std::to_string(x) + " below full-support floor");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw model_error(where + ": weights sum to " + std::to_string(sum) + ", expected 1");
}

inline SubstitutionLaw make_law(LawKind kind, std::vector<std::vector<double>> tables,
                                int rule_count) {
  if (tables.empty()) throw model_error("law: no weight tables");
  if (kind == LawKind::bernoulli && tables.size() != 1)
    throw model_error("law: bernoulli takes exactly one weight table");
  for (std::size_t i = 0; i < tables.size(); ++i)
    validate_weight_table(tables[i], rule_count, "law table " + std::to_string(i));
  return SubstitutionLaw{kind, std::move(tables)};
}

// nu[s] for the rule block s at positions start, start+1, ...
inline double law_cylinder_weight(const SubstitutionLaw& law, std::int64_t start,
                                  std::span<const int> rule_indices) {
  double w = 1.0;
  for (std::size_t i = 0; i < rule_indices.size(); ++i)
    w *= law.at(start + static_cast<std::int64_t>(i))[static_cast<std::size_t>(rule_indices[i])];
  return w;
}

// ---------------------------------------------------------------------------
// The full model: alphabet + rule set + product law.
// ---------------------------------------------------------------------------

struct SubstitutionSystem {
  Alphabet alphabet;
  SubstitutionSet set;
  SubstitutionLaw law;

  int asize() const { return alphabet.size(); }
  int rule_count() const { return set.count(); }
  bool constant_length() const { return set.constant_length(); }
  int length() const { return set.min_length; }  // L for constant-length systems

  void require_constant_length(const char* op) const {
    if (!constant_length())
      throw unsupported_structure_error(std::string(op) + ": constant-length systems only");
  }
};

inline SubstitutionSystem make_system(Alphabet a, SubstitutionSet s, SubstitutionLaw law) {
  for (const auto& t : law.tables) validate_weight_table(t, s.count(), "law table");
  return SubstitutionSystem{std::move(a), std::move(s), std::move(law)};
}

}  // namespace substlab
