#include "toxfair/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <unordered_map>
#include <unordered_set>

#include "toxfair/error.hpp"
#include "toxfair/rng.hpp"

namespace toxfair {

namespace {

constexpr char32_t kInvalid = 0xFFFD;

// Decodes one code point starting at text[i], advancing i. Malformed bytes
// decode to U+FFFD and consume a single byte.
char32_t decode_utf8(std::string_view text, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int extra = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    extra = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    extra = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    extra = 3;
    cp = b0 & 0x07;
  } else {
    ++i;
    return kInvalid;
  }
  if (i + extra >= text.size()) {
    ++i;
    return kInvalid;
  }
  for (int k = 1; k <= extra; ++k) {
    const auto b = static_cast<unsigned char>(text[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return kInvalid;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  i += extra + 1;
  return cp;
}

void encode_utf8(char32_t cp, std::string& out) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

char32_t lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0x80) return cp;
  if ((cp >= 0xC0 && cp <= 0xDE && cp != 0xD7)) return cp + 0x20;
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 0x20;  // Greek
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;                  // Cyrillic
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
  if (cp >= 0x100 && cp <= 0x17F && (cp % 2 == 0) && cp != 0x130 && cp != 0x138) return cp + 1;
  return cp;
}

bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  }
  if (cp == kInvalid) return false;
  if (cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;  // Latin-1 punctuation/symbols
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;    // punctuation, symbols, arrows, shapes
  if (cp >= 0x3000 && cp <= 0x303F) return false;    // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;    // CJK compatibility forms
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;    // fullwidth punctuation
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;  // emoji and pictographs
  if (cp >= 0xFE00 && cp <= 0xFE0F) return false;    // variation selectors
  return true;
}

bool is_apostrophe(char32_t cp) { return cp == '\'' || cp == 0x2019; }

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto begin = s.find_first_not_of(ws);
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(ws);
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split(std::string_view s, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + sep.size();
  }
}

bool ascii_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return u >= 0x80 || std::isalnum(u) || c == '\'';
}

std::size_t count_occurrences(std::string_view text, std::string_view what) {
  std::size_t n = 0;
  for (auto pos = text.find(what); pos != std::string_view::npos; pos = text.find(what, pos + what.size())) ++n;
  return n;
}

constexpr std::string_view kIdentitySlot = "{identity}";
constexpr std::string_view kSlurSlot = "{slur}";

std::string replace_all(std::string text, std::string_view slot, std::string_view value) {
  for (auto pos = text.find(slot); pos != std::string::npos; pos = text.find(slot, pos + value.size())) {
    text.replace(pos, slot.size(), value);
  }
  return text;
}

}  // namespace

std::string to_lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) encode_utf8(lower(decode_utf8(text, i)), out);
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<char32_t> cps;
  cps.reserve(text.size());
  for (std::size_t i = 0; i < text.size();) cps.push_back(lower(decode_utf8(text, i)));

  std::vector<std::string> tokens;
  std::string current;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t cp = cps[i];
    if (is_word_char(cp)) {
      encode_utf8(cp, current);
    } else if (is_apostrophe(cp) && !current.empty() && i + 1 < cps.size() && is_word_char(cps[i + 1])) {
      current.push_back('\'');
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string apply_variant(std::string_view text, const Variant& variant) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    bool matched = false;
    const bool left_ok = i == 0 || !ascii_word_byte(text[i - 1]);
    if (left_ok) {
      for (const auto& rule : variant) {
        const auto& src = rule.source;
        if (src.empty() || text.compare(i, src.size(), src) != 0) continue;
        const std::size_t end = i + src.size();
        if (end < text.size() && ascii_word_byte(text[end])) continue;
        out += rule.replacement;
        i = end;
        matched = true;
        break;
      }
    }
    if (!matched) out.push_back(text[i++]);
  }
  return out;
}

std::string Template::render_variant(std::size_t index) const {
  const std::string lowered = to_lower(pattern);
  if (index == 0) return lowered;
  return apply_variant(lowered, variants.at(index - 1));
}

void Template::validate() const {
  const std::string lowered = to_lower(pattern);
  const bool has_identity = lowered.find(kIdentitySlot) != std::string::npos;
  if (category == Category::kNonToxicNonIdentity) {
    throw DataError("templates cannot target non_toxic_non_identity");
  }
  if (is_identity(category) && !has_identity) {
    throw DataError("identity template lacks {identity} slot: " + pattern);
  }
  if (!is_identity(category) && has_identity) {
    throw DataError("non-identity template contains {identity} slot: " + pattern);
  }
  if (!is_toxic(category) && lowered.find(kSlurSlot) != std::string::npos) {
    throw DataError("non-toxic template contains {slur} slot: " + pattern);
  }
  const auto ids = count_occurrences(lowered, kIdentitySlot);
  const auto slurs = count_occurrences(lowered, kSlurSlot);
  for (std::size_t v = 1; v < variant_count(); ++v) {
    for (const auto& rule : variants[v - 1]) {
      if (rule.source.find('{') != std::string::npos || rule.replacement.find('{') != std::string::npos) {
        throw DataError("variant rule touches a slot marker: " + rule.source + "=>" + rule.replacement);
      }
    }
    const auto rendered = render_variant(v);
    if (count_occurrences(rendered, kIdentitySlot) != ids || count_occurrences(rendered, kSlurSlot) != slurs) {
      throw DataError("variant " + std::to_string(v) + " disturbs slot markers in: " + pattern);
    }
  }
}

std::vector<std::string> read_term_list(std::istream& in) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    auto term = to_lower(trim(line));
    if (term.empty() || term.front() == '#') continue;
    if (seen.insert(term).second) out.push_back(std::move(term));
  }
  return out;
}

std::vector<Template> read_templates(std::istream& in) {
  std::vector<Template> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto fields = split(line, "\t");
    if (fields.size() < 2 || fields.size() > 3) {
      throw RowError(line_no, "template line needs 2 or 3 tab-separated fields");
    }
    Template t;
    try {
      t.category = parse_category(trim(fields[0]));
    } catch (const DataError& e) {
      throw RowError(line_no, e.what());
    }
    t.pattern = trim(fields[1]);
    if (fields.size() == 3 && !trim(fields[2]).empty()) {
      for (const auto& group : split(fields[2], "|")) {
        Variant variant;
        for (const auto& rule_text : split(group, ",")) {
          if (trim(rule_text).empty()) continue;
          const auto parts = split(rule_text, "=>");
          if (parts.size() != 2 || trim(parts[0]).empty()) {
            throw RowError(line_no, "malformed variant rule '" + rule_text + "'");
          }
          variant.push_back({to_lower(trim(parts[0])), to_lower(trim(parts[1]))});
        }
        if (!variant.empty()) t.variants.push_back(std::move(variant));
      }
    }
    try {
      t.validate();
    } catch (const DataError& e) {
      throw RowError(line_no, e.what());
    }
    out.push_back(std::move(t));
  }
  return out;
}

namespace {

// Mixed-radix view of one template's combination space.
struct TemplateSpace {
  const Template* tmpl = nullptr;
  std::size_t identity_count = 1;
  std::size_t slur_count = 1;
  std::size_t variant_count = 1;
  std::size_t size() const { return identity_count * slur_count * variant_count; }
};

std::string render(const TemplateSpace& space, std::size_t index, const TermLexicon& lexicon) {
  const std::size_t variant = index % space.variant_count;
  index /= space.variant_count;
  const std::size_t slur = index % space.slur_count;
  const std::size_t identity = index / space.slur_count;
  std::string text = space.tmpl->render_variant(variant);
  if (text.find(kIdentitySlot) != std::string::npos) {
    text = replace_all(std::move(text), kIdentitySlot, lexicon.identity_terms[identity]);
  }
  if (text.find(kSlurSlot) != std::string::npos) {
    text = replace_all(std::move(text), kSlurSlot, lexicon.slur_terms[slur]);
  }
  return text;
}

// Partial Fisher-Yates over [0, n) with lazily materialized swaps.
class LazyPermutation {
 public:
  explicit LazyPermutation(std::uint64_t n) : n_(n) {}
  bool exhausted() const { return drawn_ == n_; }
  std::uint64_t next(Rng& rng) {
    const std::uint64_t j = drawn_ + rng.below(n_ - drawn_);
    const std::uint64_t at_j = value(j);
    swapped_[j] = value(drawn_);
    ++drawn_;
    return at_j;
  }

 private:
  std::uint64_t value(std::uint64_t k) const {
    auto it = swapped_.find(k);
    return it == swapped_.end() ? k : it->second;
  }
  std::uint64_t n_;
  std::uint64_t drawn_ = 0;
  std::unordered_map<std::uint64_t, std::uint64_t> swapped_;
};

}  // namespace

std::vector<LabeledExample> synthesize_comments(const std::vector<Template>& templates,
                                                const TermLexicon& lexicon,
                                                std::size_t per_category_target, std::uint64_t seed,
                                                const std::vector<Category>& categories) {
  std::vector<LabeledExample> out;
  if (per_category_target == 0) return out;
  out.reserve(per_category_target * categories.size());

  for (const auto category : categories) {
    std::vector<TemplateSpace> spaces;
    std::size_t total = 0;
    for (const auto& t : templates) {
      if (t.category != category) continue;
      const std::string lowered = to_lower(t.pattern);
      TemplateSpace space;
      space.tmpl = &t;
      space.variant_count = t.variant_count();
      if (lowered.find(kIdentitySlot) != std::string::npos) space.identity_count = lexicon.identity_terms.size();
      if (lowered.find(kSlurSlot) != std::string::npos) space.slur_count = lexicon.slur_terms.size();
      if (space.size() == 0) continue;
      total += space.size();
      spaces.push_back(space);
    }
    if (total == 0) {
      throw DomainError("no template combinations for category " + std::string(to_string(category)));
    }

    Rng rng(Rng::derive(seed, index_of(category)));
    LazyPermutation permutation(total);
    for (std::size_t k = 0; k < per_category_target; ++k) {
      std::uint64_t flat = permutation.exhausted() ? rng.below(total) : permutation.next(rng);
      const TemplateSpace* space = &spaces.front();
      for (const auto& s : spaces) {
        if (flat < s.size()) {
          space = &s;
          break;
        }
        flat -= s.size();
      }
      LabeledExample ex;
      ex.id = "syn-" + std::string(to_string(category)) + "-" + std::to_string(k);
      ex.text = render(*space, flat, lexicon);
      ex.tokens = tokenize(ex.text);
      ex.label = is_toxic(category) ? 1 : 0;
      ex.identity = is_identity(category) ? IdentityFlag::kIdentity : IdentityFlag::kNonIdentity;
      ex.category = category;
      ex.origin = Origin::kSynthetic;
      out.push_back(std::move(ex));
    }
  }
  return out;
}

}  // namespace toxfair
