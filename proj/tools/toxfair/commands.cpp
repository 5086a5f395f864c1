#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include "toxfair/csv.hpp"
#include "toxfair/demo_corpus.hpp"
#include "toxfair/error.hpp"
#include "toxfair/rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace toxfair::cli {

namespace {

std::ofstream create(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

std::vector<std::string> read_terms(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("no ") + what + " given (use the config or a flag)");
  std::ifstream in(path);
  if (!in) throw DataError(std::string("cannot open ") + what + " '" + path + "'");
  return read_term_list(in);
}

std::vector<Template> read_template_file(const std::string& path) {
  if (path.empty()) throw ConfigError("no template file given (use the config or --templates)");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open template file '" + path + "'");
  return read_templates(in);
}

bool print_config_if_asked(const CommonOptions& common, const ExperimentConfig& config) {
  if (!common.print_effective_config) return false;
  std::cout << to_json(config).dump(2) << "\n";
  return true;
}

void print_report(const FairnessReport& r) {
  std::cout << "auc " << format_number(r.auc) << (r.auc_defined ? "" : " (undefined)") << "  f1 "
            << format_number(r.overall.f1.value) << "  fpr identity/non-identity "
            << format_number(r.identity.fpr.value) << "/" << format_number(r.non_identity.fpr.value) << "  fpr_ratio "
            << (r.fpr_ratio.defined ? format_number(r.fpr_ratio.value) : "undefined") << "  fnr_ratio "
            << (r.fnr_ratio.defined ? format_number(r.fnr_ratio.value) : "undefined") << "\n";
}

}  // namespace

ExperimentConfig effective_config(const CommonOptions& common) {
  ExperimentConfig config = common.config_path.empty() ? ExperimentConfig{} : load_config(common.config_path);
  if (common.seed) config.seed = *common.seed;
  if (common.out) config.output_dir = *common.out;
  if (common.sample_fraction) config.sample_fraction = *common.sample_fraction;
  return config;
}

int cmd_prepare(const CommonOptions& common) {
  const auto config = effective_config(common);
  if (print_config_if_asked(common, config)) return 0;
  config.validate(true);
  const auto data = prepare_data(config);
  const auto& split = data.split;

  const auto& counts = data.stats.category_counts;
  const std::size_t ti = counts[index_of(Category::kToxicIdentity)];
  const std::size_t ni = ti + counts[index_of(Category::kNonToxicIdentity)];
  const std::size_t tn = counts[index_of(Category::kToxicNonIdentity)];
  const std::size_t nn = tn + counts[index_of(Category::kNonToxicNonIdentity)];

  json j;
  j["parsed_rows"] = data.parsed_rows;
  j["sampled_rows"] = data.sampled_rows;
  j["toxic"] = data.stats.toxic;
  j["unannotated"] = data.stats.unannotated;
  json cats;
  for (Category c : kAllCategories) cats[std::string(to_string(c))] = counts[index_of(c)];
  j["categories"] = cats;
  j["split"] = {{"train", split.train.size()}, {"validation", split.validation.size()}, {"test", split.test.size()}};
  j["fingerprints"] = {{"train", hex64(fingerprint(split.train))},
                       {"validation", hex64(fingerprint(split.validation))},
                       {"test", hex64(fingerprint(split.test))}};
  if (ni > 0 && nn > 0) {
    const auto test = two_proportion_test(ti, ni, tn, nn);
    j["toxic_rate_identity"] = static_cast<double>(ti) / static_cast<double>(ni);
    j["toxic_rate_non_identity"] = static_cast<double>(tn) / static_cast<double>(nn);
    j["two_proportion_test"] = {{"z", test.z}, {"p_two_sided", test.p_two_sided}, {"degenerate", test.degenerate}};
  }

  const fs::path out(config.output_dir);
  fs::create_directories(out);
  create(out / "prepare.json") << j.dump(2) << "\n";
  auto csv = create(out / "splits.csv");
  write_csv_row(csv, {"id", "split", "label", "identity", "category"});
  const std::pair<const char*, const std::vector<LabeledExample>*> parts[] = {
      {"train", &split.train}, {"validation", &split.validation}, {"test", &split.test}};
  for (const auto& [name, part] : parts) {
    for (const auto& e : *part) {
      write_csv_row(csv, {e.id, name, std::to_string(e.label), std::string(to_string(e.identity)),
                          e.category ? std::string(to_string(*e.category)) : std::string()});
    }
  }
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_synth(const CommonOptions& common, const SynthOptions& options) {
  const auto config = effective_config(common);
  if (print_config_if_asked(common, config)) return 0;
  const std::string identity_path = options.identity_terms.empty() ? config.paths.identity_terms : options.identity_terms;
  const std::string slur_path = options.slur_terms.empty() ? config.paths.slur_terms : options.slur_terms;
  const std::string template_path = options.templates.empty() ? config.paths.templates : options.templates;

  TermLexicon lexicon;
  lexicon.identity_terms = read_terms(identity_path, "identity term list");
  lexicon.slur_terms = read_terms(slur_path, "slur placeholder list");
  const fs::path out(config.output_dir);
  fs::create_directories(out);

  if (options.demo_corpus) {
    DemoCorpusOptions demo;
    demo.comments = options.comments;
    demo.seed = config.seed;
    const auto comments = make_demo_corpus(demo, lexicon);
    {
      auto f = create(out / "comments.csv");
      write_comments(f, comments);
    }
    const auto tweets = make_demo_tweets(options.tweets, lexicon, Rng::derive(config.seed, 7));
    {
      auto f = create(out / "tweets.csv");
      write_csv_row(f, {"id", "Party", "Handle", "Tweet"});
      for (const auto& t : tweets) write_csv_row(f, {t.id, t.party, t.handle, t.text});
    }
    {
      auto f = create(out / "external_scores.csv");
      write_csv_row(f, {"id", "score"});
      for (const auto& [id, score] : make_demo_external_scores(tweets, lexicon, Rng::derive(config.seed, 8))) {
        write_csv_row(f, {id, format_number(score)});
      }
    }
    // Random vectors over every word the generators and templates can emit.
    auto words = demo_vocabulary(lexicon);
    if (!template_path.empty()) {
      std::set<std::string> all(words.begin(), words.end());
      for (const auto& t : read_template_file(template_path)) {
        for (std::size_t v = 0; v < t.variant_count(); ++v) {
          for (auto& tok : tokenize(t.render_variant(v))) all.insert(tok);
        }
      }
      words.assign(all.begin(), all.end());
    }
    {
      auto f = create(out / "embeddings.txt");
      random_embeddings(words, config.embed_dim, Rng::derive(config.seed, 9)).save(f);
    }
    std::cout << "wrote " << comments.size() << " comments, " << tweets.size() << " tweets and " << words.size()
              << " embedding rows to " << out.string() << "\n";
    return 0;
  }

  const std::size_t per_category =
      options.per_category ? options.per_category : config.rebalance.synthetic_per_category;
  if (per_category == 0) throw ConfigError("nothing to synthesize: set --per-category or rebalance.synthetic_per_category");
  const auto templates = read_template_file(template_path);
  const auto examples = synthesize_comments(templates, lexicon, per_category, config.seed);
  auto f = create(out / "synthetic.csv");
  write_csv_row(f, {"id", "category", "label", "text"});
  for (const auto& e : examples) {
    write_csv_row(f, {e.id, std::string(to_string(*e.category)), std::to_string(e.label), e.text});
  }
  std::cout << "wrote " << examples.size() << " synthetic comments to " << (out / "synthetic.csv").string() << "\n";
  return 0;
}

int cmd_train(const CommonOptions& common) {
  const auto config = effective_config(common);
  if (print_config_if_asked(common, config)) return 0;
  const auto result = run_experiment(config);
  std::cout << "trained " << to_string(config.model) << " on " << result.training_examples << " examples -> "
            << config.output_dir << "\n";
  print_report(result.report);
  return 0;
}

int cmd_evaluate(const CommonOptions& common, const std::string& model_dir) {
  auto config = effective_config(common);
  if (!common.out) config.output_dir = model_dir;
  if (print_config_if_asked(common, config)) return 0;
  print_report(evaluate_saved(config, model_dir));
  return 0;
}

int cmd_sweep(const CommonOptions& common) {
  const auto config = effective_config(common);
  if (print_config_if_asked(common, config)) return 0;
  const auto result = run_sweep(config);
  for (const auto& p : result.points) {
    std::cout << "point " << p.index << " target " << result.schedule.targets[p.index] << ": ";
    if (p.result) {
      print_report(p.result->report);
    } else {
      std::cout << "FAILED " << p.error << "\n";
    }
  }
  if (result.failures() > 0) {
    std::cerr << result.failures() << " of " << result.points.size() << " sweep points failed\n";
    return 5;
  }
  return 0;
}

int cmd_compare_external(const CommonOptions& common, const std::string& model_dir) {
  const auto config = effective_config(common);
  if (print_config_if_asked(common, config)) return 0;
  const auto c = compare_external(config, model_dir);
  std::cout << c.total << " identity texts: ours flags " << c.ours_toxic << " (" << format_number(100 * c.ours_fraction)
            << "%), external flags " << c.theirs_toxic << " (" << format_number(100 * c.theirs_fraction)
            << "%); ours only " << c.ours_only.size() << ", external only " << c.theirs_only.size() << "\n";
  return 0;
}

int cmd_report(const std::string& dir) {
  for (const auto& f : rerender_reports(dir)) std::cout << "wrote " << f.string() << "\n";
  return 0;
}

}  // namespace toxfair::cli
