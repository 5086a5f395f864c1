#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "toxfair/numerics.hpp"

namespace toxfair {

/// Sparse row: ascending column indices with matching values.
struct SparseVector {
  std::size_t dim = 0;
  std::vector<std::uint32_t> indices;
  std::vector<double> values;

  double norm() const;
  std::vector<double> to_dense() const;
};

/// Fitted vocabulary and smoothed inverse document frequencies.
///
/// idf(t) = ln((1 + N) / (1 + df(t))) + 1. Vocabulary columns are assigned in
/// lexicographic token order so that fits are byte-reproducible.
class TfIdfModel {
 public:
  static TfIdfModel fit(const std::vector<std::vector<std::string>>& documents, std::size_t min_df = 1);

  /// raw_count(t) * idf(t), then L2-normalized. Unknown tokens are ignored;
  /// an all-unknown document maps to the zero vector.
  SparseVector transform(const std::vector<std::string>& tokens) const;
  /// Raw in-vocabulary token counts (bag of words).
  SparseVector counts(const std::vector<std::string>& tokens) const;

  CsrMatrix transform_all(const std::vector<std::vector<std::string>>& documents) const;
  CsrMatrix counts_all(const std::vector<std::vector<std::string>>& documents) const;

  std::size_t vocabulary_size() const noexcept { return tokens_.size(); }
  std::size_t document_count() const noexcept { return doc_count_; }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<double>& idf() const noexcept { return idf_; }
  /// Column for a token, or -1.
  std::int64_t column(const std::string& token) const;
  double idf(const std::string& token) const;

  /// JSON artifact: {"format_version", "document_count", "vocabulary", "idf"}.
  void save(std::ostream& out) const;
  static TfIdfModel load(std::istream& in);

 private:
  std::vector<std::string> tokens_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::uint32_t> index_;
  std::size_t doc_count_ = 0;

  void rebuild_index();
};

enum class OovPolicy { kZero, kUnknownVector };

/// Word vectors of a fixed dimension.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = 0) : dim_(dim), zeros_(dim, 0.0) {}

  /// Parses `word v1 ... v_dim` lines. Duplicate words keep the first
  /// occurrence. Throws RowError (1-based line) on a wrong component count or
  /// a non-numeric component.
  static EmbeddingTable load(std::istream& in, std::size_t expected_dim);

  /// Returns false (and leaves the table unchanged) when the word exists.
  bool add(const std::string& word, std::vector<double> vector);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return words_.size(); }
  std::size_t duplicate_count() const noexcept { return duplicates_; }
  bool contains(const std::string& word) const { return index_.count(word) != 0; }

  /// Vector for a word; out-of-vocabulary words follow the OOV policy.
  std::span<const double> lookup(const std::string& word) const;

  void set_oov_policy(OovPolicy policy, std::vector<double> unknown = {});
  OovPolicy oov_policy() const noexcept { return oov_policy_; }
  const std::vector<double>& unknown_vector() const noexcept { return unknown_; }

  void save(std::ostream& out) const;

 private:
  std::size_t dim_;
  std::vector<std::string> words_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t duplicates_ = 0;
  OovPolicy oov_policy_ = OovPolicy::kZero;
  std::vector<double> unknown_;
  std::vector<double> zeros_;
};

/// Fixed-length sequence of word vectors; rows >= true_length are zero.
struct SequenceFeature {
  Matrix matrix;
  std::size_t true_length = 0;
};

/// Componentwise sum of the token vectors.
std::vector<double> embed_sum(const EmbeddingTable& table, const std::vector<std::string>& tokens);

/// First max_len token vectors, zero rows appended up to max_len.
SequenceFeature embed_sequence(const EmbeddingTable& table, const std::vector<std::string>& tokens,
                               std::size_t max_len);

/// Seeded random table over the given words, uniform in [-scale, scale].
/// Stand-in for pretrained vectors in desk-scale runs.
EmbeddingTable random_embeddings(const std::vector<std::string>& words, std::size_t dim, std::uint64_t seed,
                                 double scale = 0.5);

}  // namespace toxfair
