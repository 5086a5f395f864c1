#include "toxfair/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "toxfair/csv.hpp"
#include "toxfair/error.hpp"
#include "toxfair/rng.hpp"

#ifndef TOXFAIR_VERSION
#define TOXFAIR_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace toxfair {

std::string_view version() noexcept { return TOXFAIR_VERSION; }

std::string to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kTfIdf:
      return "tfidf";
    case FeatureKind::kEmbedSum:
      return "embed_sum";
    case FeatureKind::kEmbedSeq:
      return "embed_seq";
  }
  return "tfidf";
}

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "tfidf") return FeatureKind::kTfIdf;
  if (name == "embed_sum") return FeatureKind::kEmbedSum;
  if (name == "embed_seq") return FeatureKind::kEmbedSeq;
  throw ConfigError("unknown feature kind '" + name + "' (expected tfidf, embed_sum or embed_seq)");
}

namespace {

// ---------------------------------------------------------------------------
// config parsing helpers

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read_if(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + " has the wrong type");
  }
}

std::string resolve(const std::string& path, const fs::path& base) {
  if (path.empty() || base.empty()) return path;
  const fs::path p(path);
  return p.is_absolute() ? path : (base / p).lexically_normal().string();
}

json targets_json(const CategoryTargets& t) {
  json j;
  for (Category c : kAllCategories) j[std::string(to_string(c))] = t[index_of(c)];
  return j;
}

CategoryTargets targets_from(const json& j, const std::string& where) {
  CategoryTargets t{};
  if (j.is_array()) {
    if (j.size() != 4) throw ConfigError(where + " must list four counts");
    for (std::size_t i = 0; i < 4; ++i) t[i] = j[i].get<std::size_t>();
    return t;
  }
  reject_unknown(j, where, {"toxic_identity", "toxic_non_identity", "non_toxic_identity", "non_toxic_non_identity"});
  for (Category c : kAllCategories) read_if(j, std::string(to_string(c)).c_str(), t[index_of(c)], where);
  return t;
}

Category category_from(const std::string& name) {
  try {
    return parse_category(name);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// file helpers

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string("cannot open ") + what + " '" + path + "'");
  return in;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

/// Write to a sibling temp file, then rename over the target.
void write_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_text(tmp, text);
  fs::rename(tmp, path);
}

std::string csv_text(const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (const auto& row : rows) write_csv_row(out, row);
  return out.str();
}

TermLexicon load_lexicon(const ExperimentConfig& config) {
  TermLexicon lexicon;
  if (!config.paths.identity_terms.empty()) {
    auto in = open_input(config.paths.identity_terms, "identity term list");
    lexicon.identity_terms = read_term_list(in);
  }
  if (!config.paths.slur_terms.empty()) {
    auto in = open_input(config.paths.slur_terms, "slur placeholder list");
    lexicon.slur_terms = read_term_list(in);
  }
  return lexicon;
}

std::vector<int> labels_of(const std::vector<LabeledExample>& examples) {
  std::vector<int> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.label);
  return out;
}

std::vector<std::vector<std::string>> tokens_of(const std::vector<LabeledExample>& examples) {
  std::vector<std::vector<std::string>> out;
  out.reserve(examples.size());
  for (const auto& e : examples) out.push_back(e.tokens);
  return out;
}

/// Runs `fn`, prefixing any library error with the stage name while keeping
/// its type (the CLI maps types to exit codes).
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  const std::string prefix = std::string(name) + ": ";
  try {
    return fn();
  } catch (const DivergenceError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const DomainError& e) {
    throw DomainError(prefix + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(prefix + e.what());
  } catch (const fs::filesystem_error& e) {
    throw DataError(prefix + e.what());
  }
}

class StageClock {
 public:
  void start() { t0_ = std::chrono::steady_clock::now(); }
  void stop(const std::string& name) {
    const auto dt = std::chrono::steady_clock::now() - t0_;
    timings_[name] = std::chrono::duration<double, std::milli>(dt).count();
  }
  json to_json() const { return timings_; }

 private:
  std::chrono::steady_clock::time_point t0_;
  json timings_ = json::object();
};

std::string history_csv(const TrainedModel& model) {
  std::vector<std::vector<std::string>> rows = {{"epoch", "loss", "validation_f1", "selected"}};
  for (const auto& e : model.history) {
    rows.push_back({std::to_string(e.epoch), format_number(e.loss),
                    e.validation_f1 ? format_number(*e.validation_f1) : "",
                    e.epoch == model.selected_epoch ? "1" : "0"});
  }
  return csv_text(rows);
}

/// id, origin, category, label and multiplicity, in order of first draw.
std::string training_manifest_csv(const std::vector<LabeledExample>& examples) {
  std::vector<std::size_t> order;
  std::unordered_map<std::string, std::size_t> first;
  std::vector<std::size_t> count(examples.size(), 0);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    auto [it, inserted] = first.emplace(examples[i].id, i);
    if (inserted) order.push_back(i);
    ++count[it->second];
  }
  std::vector<std::vector<std::string>> rows = {{"id", "origin", "category", "label", "multiplicity"}};
  for (std::size_t i : order) {
    const auto& e = examples[i];
    rows.push_back({e.id, std::string(to_string(e.origin)),
                    e.category ? std::string(to_string(*e.category)) : std::string(),
                    std::to_string(e.label), std::to_string(count[i])});
  }
  return csv_text(rows);
}

std::string report_csv(const FairnessReport& report) {
  return csv_text({report_csv_columns(), report_csv_values(report)});
}

json read_json_file(const fs::path& path) {
  auto in = open_input(path.string(), "JSON file");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

/// Moves every staged file into the output directory, the manifest last.
void publish(const fs::path& staging, const fs::path& out, const std::vector<std::string>& files) {
  fs::create_directories(out);
  for (const auto& f : files) {
    if (f == "manifest.json") continue;
    fs::rename(staging / f, out / f);
  }
  fs::rename(staging / "manifest.json", out / "manifest.json");
  fs::remove_all(staging);
}

}  // namespace

// ---------------------------------------------------------------------------
// configuration

void ExperimentConfig::validate(bool check_paths) const {
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0)) throw ConfigError("sample_fraction must lie in (0,1]");
  const double sum = split.train + split.validation + split.test;
  if (split.train <= 0.0 || split.validation < 0.0 || split.test <= 0.0 || std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split fractions must be non-negative, train and test positive, and sum to 1");
  }
  if (!(labeling.threshold > 0.0 && labeling.threshold < 1.0)) {
    throw ConfigError("labeling.threshold must lie in (0,1)");
  }
  if (!(labeling.identity_epsilon >= 0.0)) throw ConfigError("labeling.identity_epsilon must be >= 0");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0,1]");
  if (!(external_threshold >= 0.0 && external_threshold <= 1.0)) {
    throw ConfigError("external_threshold must lie in [0,1]");
  }
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  if (min_df == 0) throw ConfigError("features.min_df must be at least 1");
  if (!(nb_alpha > 0.0)) throw ConfigError("model.alpha must be positive");

  switch (model) {
    case ModelKind::kNaiveBayes:
      if (features != FeatureKind::kTfIdf) throw ConfigError("naive_bayes needs tfidf features (bag of words)");
      break;
    case ModelKind::kLogistic:
    case ModelKind::kMlp:
      if (features == FeatureKind::kEmbedSeq) {
        throw ConfigError(to_string(model) + " needs tfidf or embed_sum features, not embed_seq");
      }
      if (model == ModelKind::kMlp && gradient.hidden.empty()) {
        throw ConfigError("mlp needs at least one hidden layer");
      }
      {
        GradientModelConfig g = gradient;
        g.input_dim = 1;
        if (model == ModelKind::kLogistic) g.hidden.clear();
        try {
          g.validate();
        } catch (const Error& e) {
          throw ConfigError(e.what());
        }
      }
      break;
    case ModelKind::kBiLstm:
      if (features != FeatureKind::kEmbedSeq) throw ConfigError("bilstm needs embed_seq features");
      if (split.validation <= 0.0) throw ConfigError("bilstm selects epochs on validation data; set split.validation");
      try {
        bilstm.validate();
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      break;
  }
  if (features != FeatureKind::kTfIdf && paths.embeddings.empty()) {
    throw ConfigError(to_string(features) + " features need paths.embeddings");
  }
  if (rebalance.enabled && rebalance.synthetic_per_category > 0) {
    if (paths.templates.empty() || paths.identity_terms.empty()) {
      throw ConfigError("synthetic rebalancing needs paths.templates and paths.identity_terms");
    }
  }
  if (sweep) {
    try {
      make_sweep(sweep->category, sweep->from, sweep->to, sweep->step, rebalance.targets);
    } catch (const Error& e) {
      throw ConfigError(std::string("sweep: ") + e.what());
    }
  }

  if (!check_paths) return;
  if (paths.comments.empty()) throw ConfigError("paths.comments is required");
  const std::pair<const char*, const std::string*> required[] = {
      {"comments", &paths.comments},     {"embeddings", &paths.embeddings},
      {"templates", &paths.templates},   {"identity_terms", &paths.identity_terms},
      {"slur_terms", &paths.slur_terms}, {"tweets", &paths.tweets},
      {"external_scores", &paths.external_scores}};
  for (const auto& [name, path] : required) {
    if (!path->empty() && !fs::exists(*path)) {
      throw ConfigError(std::string("paths.") + name + " does not exist: " + *path);
    }
  }
}

ExperimentConfig config_from_json(const json& j, const fs::path& base_dir) {
  ExperimentConfig c;
  reject_unknown(j, "config",
                 {"paths", "schema", "sample_fraction", "split", "labeling", "features", "model", "rebalance",
                  "sweep", "threshold", "external_threshold", "seed", "split_seed", "output_dir"});
  try {
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      reject_unknown(p, "paths",
                     {"comments", "embeddings", "templates", "identity_terms", "slur_terms", "tweets",
                      "external_scores"});
      read_if(p, "comments", c.paths.comments, "paths");
      read_if(p, "embeddings", c.paths.embeddings, "paths");
      read_if(p, "templates", c.paths.templates, "paths");
      read_if(p, "identity_terms", c.paths.identity_terms, "paths");
      read_if(p, "slur_terms", c.paths.slur_terms, "paths");
      read_if(p, "tweets", c.paths.tweets, "paths");
      read_if(p, "external_scores", c.paths.external_scores, "paths");
      for (auto* s : {&c.paths.comments, &c.paths.embeddings, &c.paths.templates, &c.paths.identity_terms,
                      &c.paths.slur_terms, &c.paths.tweets, &c.paths.external_scores}) {
        *s = resolve(*s, base_dir);
      }
    }
    if (j.contains("schema")) {
      const auto& s = j.at("schema");
      reject_unknown(s, "schema", {"id_column", "text_column", "target_column", "identity_columns"});
      read_if(s, "id_column", c.schema.id_column, "schema");
      read_if(s, "text_column", c.schema.text_column, "schema");
      read_if(s, "target_column", c.schema.target_column, "schema");
      read_if(s, "identity_columns", c.schema.identity_columns, "schema");
    }
    read_if(j, "sample_fraction", c.sample_fraction, "config");
    if (j.contains("split")) {
      const auto& s = j.at("split");
      reject_unknown(s, "split", {"train", "validation", "test"});
      read_if(s, "train", c.split.train, "split");
      read_if(s, "validation", c.split.validation, "split");
      read_if(s, "test", c.split.test, "split");
    }
    if (j.contains("labeling")) {
      const auto& l = j.at("labeling");
      reject_unknown(l, "labeling", {"threshold", "identity_epsilon"});
      read_if(l, "threshold", c.labeling.threshold, "labeling");
      read_if(l, "identity_epsilon", c.labeling.identity_epsilon, "labeling");
    }
    if (j.contains("features")) {
      const auto& f = j.at("features");
      reject_unknown(f, "features", {"kind", "min_df", "embed_dim", "max_len", "oov"});
      std::string kind = to_string(c.features);
      read_if(f, "kind", kind, "features");
      c.features = parse_feature_kind(kind);
      read_if(f, "min_df", c.min_df, "features");
      read_if(f, "embed_dim", c.embed_dim, "features");
      read_if(f, "max_len", c.bilstm.max_len, "features");
      std::string oov = c.oov_policy == OovPolicy::kZero ? "zero" : "unknown_vector";
      read_if(f, "oov", oov, "features");
      if (oov == "zero") {
        c.oov_policy = OovPolicy::kZero;
      } else if (oov == "unknown_vector") {
        c.oov_policy = OovPolicy::kUnknownVector;
      } else {
        throw ConfigError("features.oov must be 'zero' or 'unknown_vector'");
      }
    }
    bool hidden_given = false;
    bool optimizer_given = false;
    if (j.contains("model")) {
      const auto& m = j.at("model");
      reject_unknown(m, "model",
                     {"kind", "alpha", "hidden", "optimizer", "learning_rate", "batch_size", "epochs", "lstm"});
      std::string kind = to_string(c.model);
      read_if(m, "kind", kind, "model");
      try {
        c.model = parse_model_kind(kind);
      } catch (const Error& e) {
        throw ConfigError(e.what());
      }
      read_if(m, "alpha", c.nb_alpha, "model");
      hidden_given = m.contains("hidden");
      read_if(m, "hidden", c.gradient.hidden, "model");
      if (m.contains("optimizer")) {
        optimizer_given = true;
        try {
          c.gradient.optimizer.kind = parse_optimizer_kind(m.at("optimizer").get<std::string>());
        } catch (const Error& e) {
          throw ConfigError(e.what());
        }
      }
      read_if(m, "learning_rate", c.gradient.optimizer.learning_rate, "model");
      read_if(m, "batch_size", c.gradient.batch_size, "model");
      read_if(m, "epochs", c.gradient.epochs, "model");
      if (m.contains("lstm")) {
        const auto& l = m.at("lstm");
        reject_unknown(l, "model.lstm", {"hidden_units", "layers", "spatial_dropout", "head_hidden"});
        read_if(l, "hidden_units", c.bilstm.hidden_units, "model.lstm");
        read_if(l, "layers", c.bilstm.layers, "model.lstm");
        read_if(l, "spatial_dropout", c.bilstm.spatial_dropout, "model.lstm");
        read_if(l, "head_hidden", c.bilstm.head_hidden, "model.lstm");
      }
    }
    if (c.model == ModelKind::kMlp && !hidden_given) c.gradient.hidden = {100};
    if (c.model != ModelKind::kMlp) c.gradient.hidden.clear();
    // The BiLSTM shares the generic training knobs but defaults to adam.
    c.bilstm.optimizer = c.gradient.optimizer;
    if (!optimizer_given && c.model == ModelKind::kBiLstm) c.bilstm.optimizer.kind = OptimizerKind::kAdam;
    c.bilstm.batch_size = c.gradient.batch_size;
    c.bilstm.epochs = c.gradient.epochs;
    c.bilstm.embed_dim = c.embed_dim;

    if (j.contains("rebalance")) {
      const auto& r = j.at("rebalance");
      reject_unknown(r, "rebalance", {"enabled", "targets", "synthetic_per_category"});
      read_if(r, "enabled", c.rebalance.enabled, "rebalance");
      if (r.contains("targets")) c.rebalance.targets = targets_from(r.at("targets"), "rebalance.targets");
      read_if(r, "synthetic_per_category", c.rebalance.synthetic_per_category, "rebalance");
    }
    if (j.contains("sweep") && !j.at("sweep").is_null()) {
      const auto& s = j.at("sweep");
      reject_unknown(s, "sweep", {"category", "from", "to", "step"});
      SweepConfig sw;
      std::string cat = std::string(to_string(sw.category));
      read_if(s, "category", cat, "sweep");
      sw.category = category_from(cat);
      read_if(s, "from", sw.from, "sweep");
      read_if(s, "to", sw.to, "sweep");
      read_if(s, "step", sw.step, "sweep");
      c.sweep = sw;
    }
    read_if(j, "threshold", c.threshold, "config");
    read_if(j, "external_threshold", c.external_threshold, "config");
    read_if(j, "seed", c.seed, "config");
    if (j.contains("split_seed") && !j.at("split_seed").is_null()) {
      std::uint64_t s = 0;
      read_if(j, "split_seed", s, "config");
      c.split_seed = s;
    }
    read_if(j, "output_dir", c.output_dir, "config");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["paths"] = {{"comments", c.paths.comments},
                {"embeddings", c.paths.embeddings},
                {"templates", c.paths.templates},
                {"identity_terms", c.paths.identity_terms},
                {"slur_terms", c.paths.slur_terms},
                {"tweets", c.paths.tweets},
                {"external_scores", c.paths.external_scores}};
  j["schema"] = {{"id_column", c.schema.id_column},
                 {"text_column", c.schema.text_column},
                 {"target_column", c.schema.target_column},
                 {"identity_columns", c.schema.identity_columns}};
  j["sample_fraction"] = c.sample_fraction;
  j["split"] = {{"train", c.split.train}, {"validation", c.split.validation}, {"test", c.split.test}};
  j["labeling"] = {{"threshold", c.labeling.threshold}, {"identity_epsilon", c.labeling.identity_epsilon}};
  j["features"] = {{"kind", to_string(c.features)},
                   {"min_df", c.min_df},
                   {"embed_dim", c.embed_dim},
                   {"max_len", c.bilstm.max_len},
                   {"oov", c.oov_policy == OovPolicy::kZero ? "zero" : "unknown_vector"}};
  const auto& opt = c.model == ModelKind::kBiLstm ? c.bilstm.optimizer : c.gradient.optimizer;
  j["model"] = {{"kind", to_string(c.model)},
                {"alpha", c.nb_alpha},
                {"hidden", c.gradient.hidden},
                {"optimizer", to_string(opt.kind)},
                {"learning_rate", opt.learning_rate},
                {"batch_size", c.gradient.batch_size},
                {"epochs", c.gradient.epochs},
                {"lstm",
                 {{"hidden_units", c.bilstm.hidden_units},
                  {"layers", c.bilstm.layers},
                  {"spatial_dropout", c.bilstm.spatial_dropout},
                  {"head_hidden", c.bilstm.head_hidden}}}};
  j["rebalance"] = {{"enabled", c.rebalance.enabled},
                    {"targets", targets_json(c.rebalance.targets)},
                    {"synthetic_per_category", c.rebalance.synthetic_per_category}};
  if (c.sweep) {
    j["sweep"] = {{"category", to_string(c.sweep->category)},
                  {"from", c.sweep->from},
                  {"to", c.sweep->to},
                  {"step", c.sweep->step}};
  } else {
    j["sweep"] = nullptr;
  }
  j["threshold"] = c.threshold;
  j["external_threshold"] = c.external_threshold;
  j["seed"] = c.seed;
  j["split_seed"] = c.split_seed ? json(*c.split_seed) : json(nullptr);
  j["output_dir"] = c.output_dir;
  return j;
}

std::string config_hash(const ExperimentConfig& config) { return hex64(fnv1a(to_json(config).dump())); }

// ---------------------------------------------------------------------------
// stages

PreparedData prepare_data(const ExperimentConfig& config) {
  PreparedData data;
  auto in = open_input(config.paths.comments, "comments CSV");
  const auto records = parse_comments(in, config.schema);
  data.parsed_rows = records.size();
  const auto keep = sample_indices(records.size(), config.sample_fraction, config.effective_split_seed());
  std::vector<LabeledExample> examples;
  examples.reserve(keep.size());
  for (std::size_t i : keep) examples.push_back(label_example(records[i], config.labeling));
  data.sampled_rows = examples.size();
  data.stats = corpus_stats(examples);
  data.split = split_dataset(std::move(examples), config.split, config.effective_split_seed());
  return data;
}

TrainingSet build_training_set(const ExperimentConfig& config, const std::vector<LabeledExample>& train) {
  TrainingSet set;
  if (!config.rebalance.enabled) {
    set.examples = train;
    return set;
  }
  std::vector<LabeledExample> synthetic;
  if (config.rebalance.synthetic_per_category > 0) {
    const auto lexicon = load_lexicon(config);
    auto in = open_input(config.paths.templates, "template file");
    const auto templates = read_templates(in);
    synthetic = synthesize_comments(templates, lexicon, config.rebalance.synthetic_per_category,
                                    Rng::derive(config.seed, 1));
  }
  set.synthetic_generated = synthetic.size();
  const auto pools = build_pools(train, std::move(synthetic));
  set.excluded_unannotated = pools.remainder.size();
  auto sample = sample_balanced(pools, RebalanceSpec{config.rebalance.targets, Rng::derive(config.seed, 2)});
  set.examples = std::move(sample.examples);
  set.rebalanced = true;
  return set;
}

Featurizer Featurizer::fit(const ExperimentConfig& config, const std::vector<LabeledExample>& train) {
  Featurizer f;
  f.kind_ = config.features;
  f.max_len_ = config.bilstm.max_len;
  if (f.kind_ == FeatureKind::kTfIdf) {
    if (train.empty()) throw DomainError("cannot fit TF-IDF on an empty training set");
    f.tfidf_ = TfIdfModel::fit(tokens_of(train), config.min_df);
    return f;
  }
  auto in = open_input(config.paths.embeddings, "embedding file");
  auto table = EmbeddingTable::load(in, config.embed_dim);
  if (config.oov_policy == OovPolicy::kUnknownVector) {
    // The unknown-word vector is the mean over in-vocabulary training tokens.
    std::vector<double> mean(table.dim(), 0.0);
    {
      std::size_t n = 0;
      for (const auto& ex : train) {
        for (const auto& tok : ex.tokens) {
          if (!table.contains(tok)) continue;
          const auto v = table.lookup(tok);
          for (std::size_t k = 0; k < mean.size(); ++k) mean[k] += v[k];
          ++n;
        }
      }
      if (n) {
        for (double& m : mean) m /= static_cast<double>(n);
      }
    }
    table.set_oov_policy(OovPolicy::kUnknownVector, std::move(mean));
  }
  f.embeddings_ = std::move(table);
  return f;
}

FeatureMatrix Featurizer::matrix(const std::vector<LabeledExample>& examples) const {
  if (kind_ == FeatureKind::kTfIdf) return tfidf_->transform_all(tokens_of(examples));
  if (kind_ == FeatureKind::kEmbedSeq) throw ConfigError("embed_seq features do not form a matrix");
  Matrix m(examples.size(), embeddings_->dim());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto v = embed_sum(*embeddings_, examples[i].tokens);
    std::copy(v.begin(), v.end(), m.row(i).begin());
  }
  return m;
}

ModelInput Featurizer::transform(const std::vector<LabeledExample>& examples, ModelKind model) const {
  switch (model) {
    case ModelKind::kNaiveBayes:
      if (kind_ != FeatureKind::kTfIdf) throw ConfigError("naive_bayes needs tfidf features");
      return tfidf_->counts_all(tokens_of(examples));
    case ModelKind::kLogistic:
    case ModelKind::kMlp: {
      auto m = matrix(examples);
      if (auto* dense = std::get_if<Matrix>(&m)) return std::move(*dense);
      return std::get<CsrMatrix>(std::move(m));
    }
    case ModelKind::kBiLstm: {
      if (kind_ != FeatureKind::kEmbedSeq) throw ConfigError("bilstm needs embed_seq features");
      std::vector<SequenceFeature> seqs;
      seqs.reserve(examples.size());
      for (const auto& e : examples) seqs.push_back(embed_sequence(*embeddings_, e.tokens, max_len_));
      return seqs;
    }
  }
  throw ConfigError("unknown model kind");
}

std::size_t Featurizer::dimension() const {
  return kind_ == FeatureKind::kTfIdf ? tfidf_->vocabulary_size() : embeddings_->dim();
}

json Featurizer::to_json() const {
  json j;
  j["kind"] = toxfair::to_string(kind_);
  j["max_len"] = max_len_;
  if (tfidf_) {
    std::ostringstream out;
    tfidf_->save(out);
    j["tfidf"] = json::parse(out.str());
  } else {
    j["embed_dim"] = embeddings_->dim();
    j["oov"] = embeddings_->oov_policy() == OovPolicy::kZero ? "zero" : "unknown_vector";
    if (embeddings_->oov_policy() == OovPolicy::kUnknownVector) j["unknown_vector"] = embeddings_->unknown_vector();
  }
  return j;
}

Featurizer Featurizer::from_json(const json& j, const ExperimentConfig& config) {
  try {
    const auto kind = parse_feature_kind(j.at("kind").get<std::string>());
    if (kind == FeatureKind::kTfIdf) {
      Featurizer f;
      f.kind_ = kind;
      f.max_len_ = j.at("max_len").get<std::size_t>();
      std::istringstream in(j.at("tfidf").dump());
      f.tfidf_ = TfIdfModel::load(in);
      return f;
    }
    // Embedding tables are not copied into run directories; reload from
    // the configured file with the settings the run used.
    ExperimentConfig c = config;
    c.features = kind;
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.bilstm.max_len = j.at("max_len").get<std::size_t>();
    c.oov_policy = OovPolicy::kZero;
    if (c.paths.embeddings.empty()) throw ConfigError("paths.embeddings is needed to reload embedding features");
    auto f = fit(c, {});
    if (j.at("oov").get<std::string>() != "zero") {
      f.embeddings_->set_oov_policy(OovPolicy::kUnknownVector, j.at("unknown_vector").get<std::vector<double>>());
    }
    return f;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed features.json: ") + e.what());
  }
}

TrainedModel train_model(const ExperimentConfig& config, const Featurizer& featurizer, const TrainingSet& train,
                         const std::vector<LabeledExample>& validation) {
  const auto labels = labels_of(train.examples);
  const auto val_labels = labels_of(validation);
  switch (config.model) {
    case ModelKind::kNaiveBayes: {
      const auto counts = std::get<CsrMatrix>(featurizer.transform(train.examples, ModelKind::kNaiveBayes));
      auto model = wrap_naive_bayes(fit_naive_bayes(counts, labels, config.nb_alpha));
      return model;
    }
    case ModelKind::kLogistic:
    case ModelKind::kMlp: {
      GradientModelConfig g = config.gradient;
      if (config.model == ModelKind::kLogistic) g.hidden.clear();
      g.input_dim = featurizer.dimension();
      g.seed = config.seed;
      const auto x = featurizer.matrix(train.examples);
      if (validation.empty()) return fit_gradient_model(g, x, labels);
      const auto vx = featurizer.matrix(validation);
      return fit_gradient_model(g, x, labels, ValidationSet{&vx, val_labels});
    }
    case ModelKind::kBiLstm: {
      BiLstmConfig b = config.bilstm;
      b.embed_dim = featurizer.dimension();
      b.seed = config.seed;
      const auto x = std::get<std::vector<SequenceFeature>>(featurizer.transform(train.examples, ModelKind::kBiLstm));
      const auto vx = std::get<std::vector<SequenceFeature>>(featurizer.transform(validation, ModelKind::kBiLstm));
      return fit_bilstm(b, x, labels, vx, val_labels);
    }
  }
  throw ConfigError("unknown model kind");
}

FairnessReport evaluate_model(const ExperimentConfig& config, const Featurizer& featurizer,
                              const TrainedModel& model, const std::vector<LabeledExample>& test) {
  const auto proba = predict_proba(model, featurizer.transform(test, model.kind));
  const auto preds = classify(proba, config.threshold);
  const auto labels = labels_of(test);
  std::vector<IdentityFlag> flags;
  flags.reserve(test.size());
  for (const auto& e : test) flags.push_back(e.identity);
  return subgroup_report(labels, preds, proba, flags, config.threshold);
}

// ---------------------------------------------------------------------------
// runs

RunResult run_experiment(const ExperimentConfig& config) {
  stage("validate", [&] { config.validate(true); });
  const auto data = stage("prepare", [&] { return prepare_data(config); });
  return run_experiment(config, data);
}

RunResult run_experiment(const ExperimentConfig& config, const PreparedData& data) {
  stage("validate", [&] { config.validate(true); });
  const fs::path out(config.output_dir);
  fs::path staging = out;
  staging += ".staging";
  StageClock clock;

  try {
    fs::remove_all(staging);
    fs::create_directories(staging);

    clock.start();
    const auto train = stage("rebalance", [&] { return build_training_set(config, data.split.train); });
    clock.stop("rebalance");

    clock.start();
    const auto featurizer = stage("featurize", [&] { return Featurizer::fit(config, train.examples); });
    clock.stop("featurize");

    clock.start();
    const auto model = stage("train", [&] { return train_model(config, featurizer, train, data.split.validation); });
    clock.stop("train");

    clock.start();
    const auto report = stage("evaluate", [&] { return evaluate_model(config, featurizer, model, data.split.test); });
    clock.stop("evaluate");

    RunResult result;
    result.report = report;
    result.training_examples = train.examples.size();
    result.test_fingerprint = hex64(fingerprint(data.split.test));

    clock.start();
    stage("write", [&] {
      write_text(staging / "config.json", to_json(config).dump(2) + "\n");
      write_text(staging / "report.json", to_json(report).dump(2) + "\n");
      write_text(staging / "report.csv", report_csv(report));
      write_text(staging / "history.csv", history_csv(model));
      write_text(staging / "training_manifest.csv", training_manifest_csv(train.examples));
      write_text(staging / "features.json", featurizer.to_json().dump() + "\n");
      {
        std::ofstream bin(staging / "model.bin", std::ios::binary);
        if (!bin) throw DataError("cannot write model.bin");
        model.save(bin);
      }
    });
    clock.stop("write");

    const std::vector<std::string> files = {"config.json",           "report.json",   "report.csv",
                                            "history.csv",           "features.json", "model.bin",
                                            "training_manifest.csv", "manifest.json"};
    const auto train_stats = corpus_stats(train.examples);
    json counts = {{"parsed_rows", data.parsed_rows},
                   {"sampled_rows", data.sampled_rows},
                   {"train", data.split.train.size()},
                   {"validation", data.split.validation.size()},
                   {"test", data.split.test.size()},
                   {"training_set", train.examples.size()},
                   {"training_toxic", train_stats.toxic},
                   {"synthetic_generated", train.synthetic_generated},
                   {"excluded_unannotated_from_training", train.excluded_unannotated}};
    json category_counts;
    for (Category c : kAllCategories) category_counts[std::string(to_string(c))] = train_stats.category_counts[index_of(c)];
    counts["training_categories"] = category_counts;

    json manifest;
    manifest["tool"] = "toxfair";
    manifest["version"] = std::string(version());
    manifest["config_hash"] = config_hash(config);
    manifest["seed"] = config.seed;
    manifest["split_seed"] = config.effective_split_seed();
    manifest["model"] = to_string(model.kind);
    manifest["features"] = to_string(config.features);
    manifest["selected_epoch"] = model.selected_epoch;
    manifest["rebalance"] = {{"enabled", train.rebalanced}, {"targets", targets_json(config.rebalance.targets)}};
    manifest["fingerprints"] = {{"train", hex64(fingerprint(data.split.train))},
                                {"validation", hex64(fingerprint(data.split.validation))},
                                {"test", result.test_fingerprint},
                                {"training_set", hex64(fingerprint(train.examples))}};
    manifest["counts"] = counts;
    manifest["timings_ms"] = clock.to_json();
    json artifacts;
    for (const auto& f : files) {
      if (f == "manifest.json") continue;
      std::string key = f;
      std::replace(key.begin(), key.end(), '.', '_');
      artifacts[key] = f;
    }
    manifest["artifacts"] = artifacts;
    result.manifest = manifest;

    stage("write", [&] {
      write_atomic(staging / "manifest.json", manifest.dump(2) + "\n");
      publish(staging, out, files);
    });
    return result;
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
}

FairnessReport evaluate_saved(const ExperimentConfig& config, const fs::path& model_dir) {
  stage("validate", [&] { config.validate(true); });
  const auto data = stage("prepare", [&] { return prepare_data(config); });
  const auto featurizer =
      stage("load", [&] { return Featurizer::from_json(read_json_file(model_dir / "features.json"), config); });
  const auto model = stage("load", [&] {
    auto in = open_input((model_dir / "model.bin").string(), "model file");
    return TrainedModel::load(in);
  });
  const auto report = stage("evaluate", [&] { return evaluate_model(config, featurizer, model, data.split.test); });
  stage("write", [&] {
    const fs::path out(config.output_dir);
    fs::create_directories(out);
    json j = to_json(report);
    j["test_fingerprint"] = hex64(fingerprint(data.split.test));
    j["model_dir"] = model_dir.string();
    write_atomic(out / "evaluation.json", j.dump(2) + "\n");
    write_atomic(out / "evaluation.csv", report_csv(report));
  });
  return report;
}

std::size_t SweepResult::failures() const {
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(), [](const SweepPoint& p) {
    return !p.result.has_value();
  }));
}

namespace {

std::string point_dir_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "point-%02zu", i);
  return buf;
}

std::vector<std::string> sweep_csv_columns() {
  std::vector<std::string> cols = {"point", "varied", "varied_target", "toxic_identity", "toxic_non_identity",
                                   "non_toxic_identity", "non_toxic_non_identity", "status", "test_fingerprint",
                                   "training_examples"};
  for (auto& c : report_csv_columns()) cols.push_back(c);
  cols.push_back("error");
  return cols;
}

/// sweep.csv rendered from sweep.json plus each point's report.json.
fs::path render_sweep_csv(const fs::path& dir) {
  const json sweep = read_json_file(dir / "sweep.json");
  std::vector<std::vector<std::string>> rows = {sweep_csv_columns()};
  const auto blank = report_csv_columns().size();
  for (const auto& p : sweep.at("points")) {
    std::vector<std::string> row = {std::to_string(p.at("index").get<std::size_t>()),
                                    sweep.at("varied").get<std::string>(),
                                    std::to_string(p.at("varied_target").get<std::size_t>())};
    for (Category c : kAllCategories) {
      row.push_back(std::to_string(p.at("targets").at(std::string(to_string(c))).get<std::size_t>()));
    }
    const bool ok = p.at("status") == "ok";
    row.push_back(p.at("status").get<std::string>());
    row.push_back(ok ? p.at("test_fingerprint").get<std::string>() : "");
    row.push_back(ok ? std::to_string(p.at("training_examples").get<std::size_t>()) : "");
    if (ok) {
      const auto report = fairness_report_from_json(read_json_file(dir / p.at("dir").get<std::string>() / "report.json"));
      for (auto& v : report_csv_values(report)) row.push_back(std::move(v));
    } else {
      row.insert(row.end(), blank, "");
    }
    row.push_back(ok ? "" : p.at("error").get<std::string>());
    rows.push_back(std::move(row));
  }
  write_atomic(dir / "sweep.csv", csv_text(rows));
  return dir / "sweep.csv";
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& config) {
  stage("validate", [&] { config.validate(true); });
  if (!config.sweep) throw ConfigError("config has no sweep section");
  SweepResult result;
  result.schedule = make_sweep(config.sweep->category, config.sweep->from, config.sweep->to, config.sweep->step,
                               config.rebalance.targets);

  ExperimentConfig base = config;
  base.split_seed = config.effective_split_seed();
  const auto data = stage("prepare", [&] { return prepare_data(base); });
  const fs::path out(config.output_dir);
  fs::create_directories(out);

  json points = json::array();
  for (std::size_t i = 0; i < result.schedule.targets.size(); ++i) {
    SweepPoint point;
    point.index = i;
    point.targets = result.schedule.point(i);
    ExperimentConfig cfg = base;
    cfg.sweep.reset();
    cfg.rebalance.enabled = true;
    cfg.rebalance.targets = point.targets;
    cfg.seed = config.seed + i;
    cfg.output_dir = (out / point_dir_name(i)).string();

    json row = {{"index", i},
                {"dir", point_dir_name(i)},
                {"varied_target", result.schedule.targets[i]},
                {"targets", targets_json(point.targets)},
                {"seed", cfg.seed}};
    try {
      point.result = run_experiment(cfg, data);
      row["status"] = "ok";
      row["test_fingerprint"] = point.result->test_fingerprint;
      row["training_examples"] = point.result->training_examples;
    } catch (const Error& e) {
      point.error = e.what();
      row["status"] = "failed";
      row["error"] = point.error;
    }
    points.push_back(row);
    result.points.push_back(std::move(point));
  }

  json sweep;
  sweep["varied"] = std::string(to_string(result.schedule.varied));
  sweep["schedule"] = result.schedule.targets;
  // Baseline policy: the categories not being swept stay at these targets.
  sweep["fixed_targets"] = targets_json(result.schedule.fixed);
  sweep["seed"] = config.seed;
  sweep["split_seed"] = base.effective_split_seed();
  sweep["config_hash"] = config_hash(config);
  sweep["points"] = points;
  sweep["failures"] = result.failures();
  write_atomic(out / "sweep.json", sweep.dump(2) + "\n");
  render_sweep_csv(out);
  return result;
}

std::map<std::string, double> read_external_scores(std::istream& in) {
  CsvReader reader(in);
  auto header_row = reader.next();
  if (!header_row) throw DataError("external score file is empty");
  const CsvHeader header(*header_row);
  const auto id_col = header.require("id");
  const auto score_col = header.require("score");
  std::map<std::string, double> scores;
  std::size_t row = 0;
  while (auto rec = reader.next()) {
    ++row;
    if (rec->size() == 1 && (*rec)[0].empty()) continue;
    if (rec->size() != header.size()) throw RowError(row, "expected " + std::to_string(header.size()) + " fields");
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod((*rec)[score_col], &used);
      if (used != (*rec)[score_col].size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw RowError(row, "score '" + (*rec)[score_col] + "' is not a number");
    }
    if (!(v >= 0.0 && v <= 1.0)) throw RowError(row, "score outside [0,1]");
    if (!scores.emplace((*rec)[id_col], v).second) throw RowError(row, "duplicate id '" + (*rec)[id_col] + "'");
  }
  return scores;
}

ExternalComparison compare_external(const ExperimentConfig& config, const fs::path& model_dir) {
  if (config.paths.tweets.empty() || config.paths.external_scores.empty() || config.paths.identity_terms.empty()) {
    throw ConfigError("compare-external needs paths.tweets, paths.external_scores and paths.identity_terms");
  }
  stage("validate", [&] { config.validate(false); });
  const auto lexicon = stage("load", [&] { return load_lexicon(config); });
  const auto tweets = stage("load", [&] {
    auto in = open_input(config.paths.tweets, "tweet CSV");
    return load_identity_texts(in, lexicon.identity_terms);
  });
  const auto external = stage("load", [&] {
    auto in = open_input(config.paths.external_scores, "external score file");
    return read_external_scores(in);
  });
  const auto featurizer =
      stage("load", [&] { return Featurizer::from_json(read_json_file(model_dir / "features.json"), config); });
  const auto model = stage("load", [&] {
    auto in = open_input((model_dir / "model.bin").string(), "model file");
    return TrainedModel::load(in);
  });

  std::vector<LabeledExample> examples;
  std::vector<std::string> ids;
  for (const auto& t : tweets) {
    LabeledExample e;
    e.id = t.id;
    e.text = t.text;
    e.tokens = tokenize(t.text);
    e.identity = IdentityFlag::kIdentity;
    examples.push_back(std::move(e));
    ids.push_back(t.id);
  }
  const auto proba = stage("evaluate", [&] { return predict_proba(model, featurizer.transform(examples, model.kind)); });
  const auto comparison =
      stage("compare", [&] { return compare_scores(ids, proba, external, config.threshold, config.external_threshold); });

  stage("write", [&] {
    const fs::path out(config.output_dir);
    fs::create_directories(out);
    std::map<std::string, std::size_t> where;
    for (std::size_t i = 0; i < tweets.size(); ++i) where[tweets[i].id] = i;
    auto listing = [&](const std::vector<std::string>& set) {
      json arr = json::array();
      for (std::size_t k = 0; k < set.size() && k < 10; ++k) {
        const auto i = where.at(set[k]);
        arr.push_back({{"id", set[k]}, {"text", tweets[i].text}, {"ours", proba[i]}, {"theirs", external.at(set[k])}});
      }
      return arr;
    };
    json j = to_json(comparison);
    j["examples"] = {{"ours_only", listing(comparison.ours_only)}, {"theirs_only", listing(comparison.theirs_only)}};
    j["model_dir"] = model_dir.string();
    write_atomic(out / "comparison.json", j.dump(2) + "\n");

    std::vector<std::vector<std::string>> rows = {
        {"id", "party", "handle", "ours", "theirs", "ours_toxic", "theirs_toxic", "text"}};
    for (std::size_t i = 0; i < tweets.size(); ++i) {
      const double theirs = external.at(tweets[i].id);
      rows.push_back({tweets[i].id, tweets[i].party, tweets[i].handle, format_number(proba[i]), format_number(theirs),
                      proba[i] >= config.threshold ? "1" : "0", theirs >= config.external_threshold ? "1" : "0",
                      tweets[i].text});
    }
    write_atomic(out / "comparison.csv", csv_text(rows));
  });
  return comparison;
}

std::vector<fs::path> rerender_reports(const fs::path& dir) {
  if (fs::exists(dir / "sweep.json")) {
    std::vector<fs::path> written;
    const json sweep = read_json_file(dir / "sweep.json");
    for (const auto& p : sweep.at("points")) {
      if (p.at("status") != "ok") continue;
      for (auto& f : rerender_reports(dir / p.at("dir").get<std::string>())) written.push_back(std::move(f));
    }
    written.push_back(render_sweep_csv(dir));
    return written;
  }
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw DataError("no manifest.json or sweep.json in '" + dir.string() + "'");
  const json manifest = read_json_file(manifest_path);
  const auto& artifacts = manifest.at("artifacts");
  const fs::path config_path = dir / artifacts.at("config_json").get<std::string>();
  const auto stored = config_from_json(read_json_file(config_path));
  if (config_hash(stored) != manifest.at("config_hash").get<std::string>()) {
    throw DataError("config hash mismatch in '" + dir.string() + "': config.json was modified after the run");
  }
  const auto report = fairness_report_from_json(read_json_file(dir / artifacts.at("report_json").get<std::string>()));
  const fs::path csv = dir / "report.csv";
  write_atomic(csv, report_csv(report));
  return {csv};
}

}  // namespace toxfair
