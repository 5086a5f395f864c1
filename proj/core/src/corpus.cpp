#include "toxfair/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "toxfair/csv.hpp"
#include "toxfair/error.hpp"
#include "toxfair/rng.hpp"
#include "toxfair/textproc.hpp"

namespace toxfair {

std::vector<std::string> CommentSchema::default_identity_columns() {
  return {"male",
          "female",
          "transgender",
          "other_gender",
          "heterosexual",
          "homosexual_gay_or_lesbian",
          "bisexual",
          "other_sexual_orientation",
          "christian",
          "jewish",
          "muslim",
          "hindu",
          "buddhist",
          "atheist",
          "other_religion",
          "black",
          "white",
          "asian",
          "latino",
          "other_race_or_ethnicity",
          "physical_disability",
          "intellectual_or_learning_disability",
          "psychiatric_or_mental_illness",
          "other_disability"};
}

namespace {

std::string_view trim_view(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::optional<double> parse_real(std::string_view s) {
  s = trim_view(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw DataError("'" + std::string(s) + "' is not a number");
  }
  return v;
}

bool blank_record(const std::vector<std::string>& fields) {
  return fields.size() == 1 && trim_view(fields.front()).empty();
}

// Shortest text that parses back to the same double.
std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<CommentRecord> parse_comments(std::istream& in, const CommentSchema& schema) {
  CsvReader reader(in);
  auto header_fields = reader.next();
  if (!header_fields) throw SchemaError(schema.text_column);
  const CsvHeader header(std::move(*header_fields));
  const auto id_col = header.require(schema.id_column);
  const auto text_col = header.require(schema.text_column);
  const auto target_col = header.require(schema.target_column);
  std::vector<std::pair<std::string, std::size_t>> identity_cols;
  for (const auto& name : schema.identity_columns) {
    if (auto pos = header.find(name)) identity_cols.emplace_back(name, *pos);
  }

  std::vector<CommentRecord> out;
  std::size_t row = 0;
  while (auto fields = reader.next()) {
    if (blank_record(*fields)) continue;
    ++row;
    if (fields->size() != header.size()) {
      throw RowError(row, "expected " + std::to_string(header.size()) + " fields, found " +
                              std::to_string(fields->size()));
    }
    CommentRecord rec;
    rec.id = (*fields)[id_col];
    rec.text = (*fields)[text_col];
    if (trim_view(rec.text).empty()) throw RowError(row, "empty comment text");
    try {
      const auto target = parse_real((*fields)[target_col]);
      if (!target) throw DataError("missing target");
      if (*target < 0.0 || *target > 1.0) {
        throw DataError("target " + format_real(*target) + " outside [0,1]");
      }
      rec.toxicity = *target;
      std::map<std::string, double> fractions;
      for (const auto& [name, pos] : identity_cols) {
        const auto value = parse_real((*fields)[pos]);
        if (!value) continue;
        if (*value < 0.0 || *value > 1.0) {
          throw DataError("identity '" + name + "' value " + format_real(*value) + " outside [0,1]");
        }
        fractions.emplace(name, *value);
      }
      if (!fractions.empty()) rec.identity_fractions = std::move(fractions);
    } catch (const RowError&) {
      throw;
    } catch (const DataError& e) {
      throw RowError(row, e.what());
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void write_comments(std::ostream& out, const std::vector<CommentRecord>& records, const CommentSchema& schema) {
  std::vector<std::string> header = {schema.id_column, schema.text_column, schema.target_column};
  header.insert(header.end(), schema.identity_columns.begin(), schema.identity_columns.end());
  write_csv_row(out, header);
  for (const auto& rec : records) {
    std::vector<std::string> fields = {rec.id, rec.text, format_real(rec.toxicity)};
    for (const auto& name : schema.identity_columns) {
      if (!rec.identity_fractions) {
        fields.emplace_back();
        continue;
      }
      auto it = rec.identity_fractions->find(name);
      fields.push_back(it == rec.identity_fractions->end() ? "0" : format_real(it->second));
    }
    write_csv_row(out, fields);
  }
}

LabeledExample label_example(const CommentRecord& record, const LabelingOptions& options) {
  if (!(options.threshold > 0.0 && options.threshold < 1.0)) {
    throw ConfigError("labeling threshold must lie in (0,1)");
  }
  if (!(options.identity_epsilon >= 0.0)) throw ConfigError("identity_epsilon must be non-negative");
  LabeledExample ex;
  ex.id = record.id;
  ex.text = record.text;
  ex.tokens = tokenize(record.text);
  ex.label = record.toxicity >= options.threshold ? 1 : 0;
  if (!record.identity_fractions) {
    ex.identity = IdentityFlag::kUnannotated;
  } else {
    const bool any = std::any_of(record.identity_fractions->begin(), record.identity_fractions->end(),
                                 [&](const auto& kv) { return kv.second > options.identity_epsilon; });
    ex.identity = any ? IdentityFlag::kIdentity : IdentityFlag::kNonIdentity;
  }
  ex.category = category_for(ex.label, ex.identity);
  ex.origin = Origin::kReal;
  return ex;
}

DatasetSplit split_dataset(std::vector<LabeledExample> examples, const SplitFractions& fractions,
                           std::uint64_t seed) {
  const double parts[] = {fractions.train, fractions.validation, fractions.test};
  for (double p : parts) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("split fractions must be non-negative");
  }
  if (std::abs(fractions.train + fractions.validation + fractions.test - 1.0) > 1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
  if (examples.empty()) throw DomainError("cannot split an empty dataset");

  const std::size_t n = examples.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions.validation));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions.test));
  const std::size_t n_train = n - n_val - n_test;

  DatasetSplit split;
  split.seed = seed;
  split.fractions = fractions;
  split.train.reserve(n_train);
  split.validation.reserve(n_val);
  split.test.reserve(n_test);
  for (std::size_t k = 0; k < n; ++k) {
    auto& ex = examples[order[k]];
    if (k < n_train) {
      split.train.push_back(std::move(ex));
    } else if (k < n_train + n_val) {
      split.validation.push_back(std::move(ex));
    } else {
      split.test.push_back(std::move(ex));
    }
  }
  return split;
}

std::vector<std::size_t> sample_indices(std::size_t n, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("sample fraction must lie in (0,1]");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (fraction == 1.0) return order;
  Rng rng(Rng::derive(seed, 0x5A3B1E));
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction)));
  std::sort(order.begin(), order.end());
  return order;
}

namespace {

bool contains_sequence(const std::vector<std::string>& tokens, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > tokens.size()) return false;
  return std::search(tokens.begin(), tokens.end(), needle.begin(), needle.end()) != tokens.end();
}

}  // namespace

std::vector<TweetRecord> load_identity_texts(std::istream& in, const std::vector<std::string>& identity_terms) {
  if (identity_terms.empty()) throw ConfigError("identity term list is empty");
  std::vector<std::vector<std::string>> term_tokens;
  for (const auto& term : identity_terms) {
    auto toks = tokenize(term);
    if (!toks.empty()) term_tokens.push_back(std::move(toks));
  }

  CsvReader reader(in);
  auto header_fields = reader.next();
  if (!header_fields) throw SchemaError("Tweet");
  const CsvHeader header(std::move(*header_fields));
  const auto party_col = header.require("Party");
  const auto handle_col = header.require("Handle");
  const auto text_col = header.require("Tweet");
  const auto id_col = header.find("id");

  std::vector<TweetRecord> out;
  std::size_t row = 0;
  while (auto fields = reader.next()) {
    if (blank_record(*fields)) continue;
    ++row;
    if (fields->size() != header.size()) {
      throw RowError(row, "expected " + std::to_string(header.size()) + " fields, found " +
                              std::to_string(fields->size()));
    }
    TweetRecord tweet;
    tweet.id = id_col ? (*fields)[*id_col] : std::to_string(row);
    tweet.party = (*fields)[party_col];
    tweet.handle = (*fields)[handle_col];
    tweet.text = (*fields)[text_col];
    if (trim_view(tweet.text).empty()) continue;
    const auto tokens = tokenize(tweet.text);
    const bool keep = std::any_of(term_tokens.begin(), term_tokens.end(),
                                  [&](const auto& t) { return contains_sequence(tokens, t); });
    if (keep) out.push_back(std::move(tweet));
  }
  return out;
}

CorpusStats corpus_stats(const std::vector<LabeledExample>& examples) {
  CorpusStats stats;
  for (const auto& ex : examples) {
    ++stats.total;
    stats.toxic += ex.label == 1 ? 1 : 0;
    if (ex.category) {
      ++stats.category_counts[index_of(*ex.category)];
    } else {
      ++stats.unannotated;
    }
  }
  return stats;
}

std::uint64_t fingerprint(const std::vector<LabeledExample>& examples) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::string_view bytes) {
    for (unsigned char c : bytes) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& ex : examples) {
    mix(ex.id);
    mix(ex.label ? "\x1f" "1" : "\x1f" "0");
    mix(to_string(ex.origin));
    mix("\x1e");
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[value & 0xF];
    value >>= 4;
  }
  return out;
}

}  // namespace toxfair
