#include "toxfair/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "toxfair/error.hpp"
#include "toxfair/rng.hpp"

namespace toxfair {

double SparseVector::norm() const {
  double s = 0.0;
  for (double v : values) s += v * v;
  return std::sqrt(s);
}

std::vector<double> SparseVector::to_dense() const {
  std::vector<double> out(dim, 0.0);
  for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] = values[k];
  return out;
}

TfIdfModel TfIdfModel::fit(const std::vector<std::vector<std::string>>& documents, std::size_t min_df) {
  if (documents.empty()) throw DomainError("cannot fit TF-IDF on an empty corpus");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    std::vector<std::string_view> unique(doc.begin(), doc.end());
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    for (auto tok : unique) ++df[std::string(tok)];
  }
  TfIdfModel model;
  model.doc_count_ = documents.size();
  const double n = static_cast<double>(documents.size());
  for (const auto& [token, count] : df) {
    if (count < std::max<std::size_t>(min_df, 1)) continue;
    model.tokens_.push_back(token);
    model.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  model.rebuild_index();
  return model;
}

void TfIdfModel::rebuild_index() {
  index_.clear();
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], static_cast<std::uint32_t>(i));
}

std::int64_t TfIdfModel::column(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

double TfIdfModel::idf(const std::string& token) const {
  const auto col = column(token);
  if (col < 0) throw DomainError("token '" + token + "' is not in the vocabulary");
  return idf_[static_cast<std::size_t>(col)];
}

SparseVector TfIdfModel::counts(const std::vector<std::string>& tokens) const {
  std::map<std::uint32_t, double> acc;
  for (const auto& tok : tokens) {
    auto it = index_.find(tok);
    if (it != index_.end()) acc[it->second] += 1.0;
  }
  SparseVector out;
  out.dim = tokens_.size();
  for (const auto& [col, count] : acc) {
    out.indices.push_back(col);
    out.values.push_back(count);
  }
  return out;
}

SparseVector TfIdfModel::transform(const std::vector<std::string>& tokens) const {
  SparseVector out = counts(tokens);
  for (std::size_t k = 0; k < out.indices.size(); ++k) out.values[k] *= idf_[out.indices[k]];
  const double norm = out.norm();
  if (norm > 0.0) {
    for (auto& v : out.values) v /= norm;
  }
  return out;
}

namespace {
template <typename F>
CsrMatrix stack_rows(std::size_t cols, const std::vector<std::vector<std::string>>& docs, F row_fn) {
  CsrMatrix m;
  m.cols = cols;
  for (const auto& doc : docs) {
    const SparseVector row = row_fn(doc);
    m.append_row(row.indices, row.values);
  }
  return m;
}
}  // namespace

CsrMatrix TfIdfModel::transform_all(const std::vector<std::vector<std::string>>& documents) const {
  return stack_rows(vocabulary_size(), documents, [this](const auto& d) { return transform(d); });
}

CsrMatrix TfIdfModel::counts_all(const std::vector<std::vector<std::string>>& documents) const {
  return stack_rows(vocabulary_size(), documents, [this](const auto& d) { return counts(d); });
}

void TfIdfModel::save(std::ostream& out) const {
  nlohmann::json j;
  j["format_version"] = 1;
  j["document_count"] = doc_count_;
  j["vocabulary"] = tokens_;
  j["idf"] = idf_;
  out << j.dump() << '\n';
}

TfIdfModel TfIdfModel::load(std::istream& in) {
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed TF-IDF artifact: ") + e.what());
  }
  if (j.value("format_version", 0) != 1) throw DataError("unsupported TF-IDF artifact version");
  TfIdfModel model;
  model.doc_count_ = j.at("document_count").get<std::size_t>();
  model.tokens_ = j.at("vocabulary").get<std::vector<std::string>>();
  model.idf_ = j.at("idf").get<std::vector<double>>();
  if (model.tokens_.size() != model.idf_.size()) throw DataError("TF-IDF artifact vocabulary/idf length mismatch");
  model.rebuild_index();
  return model;
}

EmbeddingTable EmbeddingTable::load(std::istream& in, std::size_t expected_dim) {
  if (expected_dim == 0) throw ConfigError("embedding dimension must be positive");
  EmbeddingTable table(expected_dim);
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> vec;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(' ') == std::string::npos) continue;
    std::istringstream fields(line);
    std::string word;
    fields >> word;
    vec.clear();
    std::string component;
    while (fields >> component) {
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(component.data(), component.data() + component.size(), v);
      if (ec != std::errc{} || ptr != component.data() + component.size()) {
        throw RowError(line_no, "non-numeric embedding component '" + component + "'");
      }
      vec.push_back(v);
    }
    if (vec.size() != expected_dim) {
      throw RowError(line_no, "expected " + std::to_string(expected_dim) + " components, found " +
                                  std::to_string(vec.size()));
    }
    table.add(word, vec);
  }
  return table;
}

bool EmbeddingTable::add(const std::string& word, std::vector<double> vector) {
  if (vector.size() != dim_) {
    throw ShapeError("embedding for '" + word + "' has " + std::to_string(vector.size()) +
                     " components, table dim is " + std::to_string(dim_));
  }
  if (index_.count(word)) {
    ++duplicates_;
    return false;
  }
  index_.emplace(word, words_.size());
  words_.push_back(word);
  data_.insert(data_.end(), vector.begin(), vector.end());
  return true;
}

std::span<const double> EmbeddingTable::lookup(const std::string& word) const {
  auto it = index_.find(word);
  if (it != index_.end()) return {data_.data() + it->second * dim_, dim_};
  if (oov_policy_ == OovPolicy::kUnknownVector) return unknown_;
  return zeros_;
}

void EmbeddingTable::set_oov_policy(OovPolicy policy, std::vector<double> unknown) {
  if (policy == OovPolicy::kUnknownVector && unknown.size() != dim_) {
    throw ShapeError("unknown-word vector must have the table dimension");
  }
  oov_policy_ = policy;
  unknown_ = std::move(unknown);
}

void EmbeddingTable::save(std::ostream& out) const {
  std::ostringstream line;
  line.precision(17);
  for (std::size_t w = 0; w < words_.size(); ++w) {
    line.str({});
    line << words_[w];
    for (std::size_t k = 0; k < dim_; ++k) line << ' ' << data_[w * dim_ + k];
    out << line.str() << '\n';
  }
}

std::vector<double> embed_sum(const EmbeddingTable& table, const std::vector<std::string>& tokens) {
  std::vector<double> out(table.dim(), 0.0);
  for (const auto& tok : tokens) {
    const auto v = table.lookup(tok);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += v[k];
  }
  return out;
}

SequenceFeature embed_sequence(const EmbeddingTable& table, const std::vector<std::string>& tokens,
                               std::size_t max_len) {
  if (max_len == 0) throw ConfigError("sequence max_len must be at least 1");
  SequenceFeature out;
  out.matrix = Matrix(max_len, table.dim());
  out.true_length = std::min(max_len, tokens.size());
  for (std::size_t t = 0; t < out.true_length; ++t) {
    const auto v = table.lookup(tokens[t]);
    std::copy(v.begin(), v.end(), out.matrix.row(t).begin());
  }
  return out;
}

EmbeddingTable random_embeddings(const std::vector<std::string>& words, std::size_t dim, std::uint64_t seed,
                                 double scale) {
  EmbeddingTable table(dim);
  Rng rng(seed);
  std::vector<double> v(dim);
  for (const auto& w : words) {
    for (auto& x : v) x = rng.uniform(-scale, scale);
    table.add(w, v);
  }
  return table;
}

}  // namespace toxfair
