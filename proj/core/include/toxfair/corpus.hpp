#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toxfair/example.hpp"

namespace toxfair {

/// One row of a comment corpus.
struct CommentRecord {
  std::string id;
  std::string text;
  double toxicity = 0.0;
  /// Absent when the row carries no identity annotation at all.
  std::optional<std::map<std::string, double>> identity_fractions;
};

/// Column names for the comment CSV.
struct CommentSchema {
  std::string id_column = "id";
  std::string text_column = "comment_text";
  std::string target_column = "target";
  std::vector<std::string> identity_columns = default_identity_columns();

  static std::vector<std::string> default_identity_columns();
};

/// Parses a comment CSV. Identity columns named in the schema but missing
/// from the header are ignored; a row whose identity fields are all empty is
/// unannotated. Throws SchemaError for a missing id/text/target column and
/// RowError (1-based data row) for malformed or out-of-range values.
std::vector<CommentRecord> parse_comments(std::istream& in, const CommentSchema& schema = {});

/// Writes records in the layout parse_comments reads.
void write_comments(std::ostream& out, const std::vector<CommentRecord>& records,
                    const CommentSchema& schema = {});

struct LabelingOptions {
  double threshold = 0.5;
  double identity_epsilon = 0.0;
};

/// label = toxicity >= threshold; identity when any fraction > epsilon.
LabeledExample label_example(const CommentRecord& record, const LabelingOptions& options = {});

struct SplitFractions {
  double train = 0.8;
  double validation = 0.0;
  double test = 0.2;
};

struct DatasetSplit {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> validation;
  std::vector<LabeledExample> test;
  std::uint64_t seed = 0;
  SplitFractions fractions;
};

/// Seeded shuffle then contiguous partition. Validation and test sizes are
/// floor(n * fraction); the remainder goes to train.
DatasetSplit split_dataset(std::vector<LabeledExample> examples, const SplitFractions& fractions,
                           std::uint64_t seed);

/// Keeps floor(n * fraction) items chosen by seeded draw, in input order.
std::vector<std::size_t> sample_indices(std::size_t n, double fraction, std::uint64_t seed);

struct TweetRecord {
  std::string id;
  std::string party;
  std::string handle;
  std::string text;
};

/// Reads a `Party,Handle,Tweet` CSV (optional `id` column; otherwise the
/// 1-based data row number is the id) and keeps tweets whose tokens contain
/// one of `identity_terms`. Multi-word terms match as contiguous tokens.
std::vector<TweetRecord> load_identity_texts(std::istream& in, const std::vector<std::string>& identity_terms);

/// Per-category counts plus unannotated and label totals.
struct CorpusStats {
  std::array<std::size_t, 4> category_counts{};
  std::size_t unannotated = 0;
  std::size_t toxic = 0;
  std::size_t total = 0;
};
CorpusStats corpus_stats(const std::vector<LabeledExample>& examples);

/// Order-sensitive 64-bit FNV-1a over example ids and labels.
std::uint64_t fingerprint(const std::vector<LabeledExample>& examples);
std::string hex64(std::uint64_t value);

}  // namespace toxfair
