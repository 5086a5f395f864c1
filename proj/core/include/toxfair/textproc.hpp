#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "toxfair/example.hpp"

namespace toxfair {

/// Lowercases and splits on non-alphanumeric boundaries. Apostrophes (ASCII
/// or U+2019) between two word characters stay inside the token, so "I'm"
/// becomes "i'm". Non-ASCII letters are word characters; general punctuation,
/// symbols and whitespace blocks are separators.
std::vector<std::string> tokenize(std::string_view text);

/// Lowercase copy of UTF-8 text (ASCII, Latin-1, Greek and Cyrillic ranges).
std::string to_lower(std::string_view text);

/// Whole-phrase substitutions applied together to produce one paraphrase.
struct VariantRule {
  std::string source;
  std::string replacement;
};
using Variant = std::vector<VariantRule>;

/// A comment pattern with `{identity}` and optional `{slur}` slots. The
/// unmodified pattern is always variant 0; `variants` lists the rewrites.
struct Template {
  Category category = Category::kNonToxicIdentity;
  std::string pattern;
  std::vector<Variant> variants;

  /// Number of paraphrases including the unmodified pattern.
  std::size_t variant_count() const noexcept { return variants.size() + 1; }
  /// Lowercased pattern with variant `index` applied (0 = unmodified).
  std::string render_variant(std::size_t index) const;
  /// Throws DataError if slot usage does not match the category or a rule
  /// would disturb a slot marker.
  void validate() const;
};

struct TermLexicon {
  std::vector<std::string> identity_terms;
  std::vector<std::string> slur_terms;
};

/// Lowercases, trims, drops blanks and '#' comments, deduplicates keeping
/// first occurrence.
std::vector<std::string> read_term_list(std::istream& in);

/// Parses `category<TAB>pattern<TAB>variant-rules` lines. Variant rules are
/// `src=>dst` pairs joined by ',' within one variant and '|' between variants;
/// the third field may be empty. Blank lines and '#' comments are skipped.
std::vector<Template> read_templates(std::istream& in);

/// Applies whole-word, case-insensitive substitutions to lowercased text.
std::string apply_variant(std::string_view lowered_text, const Variant& variant);

/// Emits exactly `per_category_target` synthetic examples for each category
/// in `categories` by seeded sampling over template x identity term x slur
/// term x variant. Combinations are drawn without replacement until the
/// space is exhausted, then with replacement. Throws DomainError naming the
/// category when its space is empty.
std::vector<LabeledExample> synthesize_comments(
    const std::vector<Template>& templates, const TermLexicon& lexicon,
    std::size_t per_category_target, std::uint64_t seed,
    const std::vector<Category>& categories = {Category::kToxicIdentity, Category::kToxicNonIdentity,
                                               Category::kNonToxicIdentity});

}  // namespace toxfair
