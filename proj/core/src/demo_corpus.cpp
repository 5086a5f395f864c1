#include "toxfair/demo_corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "toxfair/error.hpp"
#include "toxfair/rng.hpp"

namespace toxfair {

namespace {

const std::vector<std::string>& neutral_words() {
  static const std::vector<std::string> words = {
      "the",      "article",  "city",     "council",  "vote",      "people",   "should",   "read",
      "story",    "about",    "new",      "plan",     "budget",    "school",   "road",     "tax",
      "think",    "really",   "good",     "point",    "agree",     "with",     "this",     "that",
      "writer",   "year",     "time",     "would",    "could",     "just",     "more",     "than",
      "public",   "policy",   "local",    "government", "election", "weather", "game",     "team",
      "season",   "market",   "price",    "house",    "family",    "friends",  "work",     "job",
      "health",   "care",     "system",   "change",   "future",    "state",    "law",      "court",
      "police",   "report",   "news",     "paper",    "comment",   "section",  "thanks",   "sharing",
      "interesting", "idea",  "question", "answer",   "many",      "some",     "most",     "every",
      "community", "support", "church",   "event",    "weekend",   "summer",   "winter",   "park",
      "water",    "energy",   "oil",      "gas",      "money",     "bank",     "loan",     "rent",
      "business", "owner",    "store",    "street",   "traffic",   "bridge",   "project",  "cost",
      "million",  "dollars",  "percent",  "number",   "data",      "study",    "science",  "doctor",
      "hospital", "student",  "teacher",  "class",    "parents",   "children", "kids",     "home",
      "neighbors", "town",    "country",  "world",    "history",   "book",     "film",     "music",
      "food",     "restaurant", "coffee", "morning",  "evening",   "today",    "tomorrow", "yesterday",
      "right",    "wrong",    "true",     "fact",     "opinion",   "view",     "side",     "issue",
      "problem",  "solution", "reason",   "because",  "however",   "also",     "still",    "even"};
  return words;
}

const std::vector<std::string>& mild_words() {
  static const std::vector<std::string> words = {"annoying", "silly", "ridiculous", "nonsense", "awful",
                                                 "terrible", "lazy",  "crazy",      "weird",    "angry",
                                                 "rude",     "mess",  "boring",     "shameful", "bad"};
  return words;
}

const std::vector<std::string>& insult_words() {
  static const std::vector<std::string> words = {"idiot",    "stupid",   "moron",    "pathetic",  "loser",
                                                 "garbage",  "trash",    "disgusting", "worthless", "clown",
                                                 "ignorant", "fool",     "scum",     "hypocrite", "liar",
                                                 "dumb",     "imbecile", "jerk",     "coward",    "filthy"};
  return words;
}

const std::map<std::string, std::string>& identity_columns_by_term() {
  static const std::map<std::string, std::string> m = {
      {"woman", "female"},       {"women", "female"},      {"female", "female"},
      {"man", "male"},           {"men", "male"},          {"male", "male"},
      {"transgender", "transgender"}, {"trans", "transgender"},
      {"gay", "homosexual_gay_or_lesbian"}, {"lesbian", "homosexual_gay_or_lesbian"},
      {"homosexual", "homosexual_gay_or_lesbian"}, {"bisexual", "bisexual"},
      {"straight", "heterosexual"}, {"christian", "christian"}, {"catholic", "christian"},
      {"jewish", "jewish"},      {"jew", "jewish"},        {"muslim", "muslim"},
      {"islam", "muslim"},       {"hindu", "hindu"},       {"buddhist", "buddhist"},
      {"atheist", "atheist"},    {"black", "black"},       {"white", "white"},
      {"asian", "asian"},        {"latino", "latino"},     {"latina", "latino"},
      {"hispanic", "latino"},    {"mexican", "latino"},    {"immigrant", "other_race_or_ethnicity"},
      {"disabled", "physical_disability"}, {"blind", "physical_disability"},
      {"deaf", "physical_disability"}, {"autistic", "intellectual_or_learning_disability"},
      {"mentally ill", "psychiatric_or_mental_illness"}};
  return m;
}

std::string column_for(const std::string& term) {
  const auto& m = identity_columns_by_term();
  if (auto it = m.find(term); it != m.end()) return it->second;
  const auto cols = CommentSchema::default_identity_columns();
  std::size_t h = 0;
  for (unsigned char c : term) h = h * 131 + c;
  return cols[h % cols.size()];
}

// Draw index k with weight 1/(k+1)^exponent.
std::size_t zipf(Rng& rng, std::size_t n, double exponent) {
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) total += std::pow(static_cast<double>(k + 1), -exponent);
  double u = rng.uniform() * total;
  for (std::size_t k = 0; k < n; ++k) {
    u -= std::pow(static_cast<double>(k + 1), -exponent);
    if (u <= 0.0) return k;
  }
  return n - 1;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.below(items.size())];
}

std::string sentence(std::vector<std::string> words) {
  std::string text;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) text.push_back(' ');
    text += words[i];
  }
  if (!text.empty() && text[0] >= 'a' && text[0] <= 'z') text[0] = static_cast<char>(text[0] - 32);
  text.push_back('.');
  return text;
}

void insert_randomly(Rng& rng, std::vector<std::string>& words, const std::string& w) {
  const std::size_t pos = rng.below(words.size() + 1);
  words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), w);
}

}  // namespace

std::vector<CommentRecord> make_demo_corpus(const DemoCorpusOptions& options, const TermLexicon& lexicon) {
  if (lexicon.identity_terms.empty()) throw ConfigError("demo corpus needs identity terms");
  if (lexicon.slur_terms.empty()) throw ConfigError("demo corpus needs slur placeholder terms");
  const auto& insults = insult_words();
  const auto columns = CommentSchema::default_identity_columns();
  Rng rng(options.seed);

  std::vector<CommentRecord> out;
  out.reserve(options.comments);
  for (std::size_t n = 0; n < options.comments; ++n) {
    const bool identity = rng.bernoulli(options.identity_share);
    const bool annotated = !rng.bernoulli(options.unannotated_share);
    const bool toxic = rng.bernoulli(identity ? options.toxic_rate_identity : options.toxic_rate_non_identity);

    std::vector<std::string> words;
    const std::size_t length = options.min_words + (options.extra_words ? rng.below(options.extra_words) : 0);
    for (std::size_t k = 0; k < length; ++k) words.push_back(pick(rng, neutral_words()));

    std::vector<std::string> terms;
    if (identity) {
      terms.push_back(pick(rng, lexicon.identity_terms));
      insert_randomly(rng, words, terms.back());
    }
    // Exactly one toxic word per toxic comment. Common insults also turn up
    // in non-toxic comments; slur placeholders only in toxic ones.
    if (toxic) {
      if (rng.bernoulli(options.slur_share)) {
        const auto& slurs = lexicon.slur_terms;
        insert_randomly(rng, words, slurs[zipf(rng, slurs.size(), options.slur_zipf_exponent)]);
      } else {
        insert_randomly(rng, words, insults[zipf(rng, insults.size(), 1.0)]);
      }
    } else if (rng.bernoulli(options.insult_in_non_toxic)) {
      insert_randomly(rng, words, insults[zipf(rng, insults.size(), 1.0)]);
    }
    if (rng.bernoulli(0.2)) insert_randomly(rng, words, pick(rng, mild_words()));

    CommentRecord rec;
    rec.id = "demo-" + std::to_string(n + 1);
    rec.text = sentence(std::move(words));
    // Round to rater-fraction-like values.
    const double raw = toxic ? 0.5 + 0.5 * rng.uniform() : 0.49 * rng.uniform();
    rec.toxicity = std::round(raw * 1000.0) / 1000.0;
    if (toxic && rec.toxicity < 0.5) rec.toxicity = 0.5;
    if (!toxic && rec.toxicity >= 0.5) rec.toxicity = 0.49;
    if (annotated) {
      std::map<std::string, double> fractions;
      for (const auto& c : columns) fractions[c] = 0.0;
      for (const auto& t : terms) {
        fractions[column_for(t)] = std::round((0.3 + 0.7 * rng.uniform()) * 1000.0) / 1000.0;
      }
      rec.identity_fractions = std::move(fractions);
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<TweetRecord> make_demo_tweets(std::size_t count, const TermLexicon& lexicon, std::uint64_t seed) {
  if (lexicon.identity_terms.empty()) throw ConfigError("demo tweets need identity terms");
  static const std::vector<std::string> parties = {"Democrat", "Republican"};
  Rng rng(seed);
  std::vector<TweetRecord> out;
  for (std::size_t n = 0; n < count; ++n) {
    std::vector<std::string> words;
    const std::size_t length = 8 + rng.below(8);
    for (std::size_t k = 0; k < length; ++k) words.push_back(pick(rng, neutral_words()));
    insert_randomly(rng, words, pick(rng, lexicon.identity_terms));
    if (rng.bernoulli(0.15)) insert_randomly(rng, words, pick(rng, mild_words()));
    TweetRecord t;
    t.id = std::to_string(n + 1);
    t.party = pick(rng, parties);
    t.handle = "@Rep" + std::to_string(1 + rng.below(435));
    t.text = sentence(std::move(words));
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::pair<std::string, double>> make_demo_external_scores(const std::vector<TweetRecord>& tweets,
                                                                      const TermLexicon& lexicon, std::uint64_t seed) {
  const std::set<std::string> terms(lexicon.identity_terms.begin(), lexicon.identity_terms.end());
  const std::set<std::string> mild(mild_words().begin(), mild_words().end());
  Rng rng(seed);
  std::vector<std::pair<std::string, double>> out;
  for (const auto& t : tweets) {
    double score = 0.05 + 0.3 * rng.uniform();
    for (const auto& tok : tokenize(t.text)) {
      if (terms.count(tok)) score += 0.12;
      if (mild.count(tok)) score += 0.2;
    }
    out.emplace_back(t.id, std::min(1.0, std::round(score * 1000.0) / 1000.0));
  }
  return out;
}

std::vector<std::string> demo_vocabulary(const TermLexicon& lexicon) {
  std::set<std::string> words;
  for (const auto* list : {&neutral_words(), &mild_words(), &insult_words(), &lexicon.slur_terms}) {
    for (const auto& w : *list) {
      for (auto& tok : tokenize(w)) words.insert(tok);
    }
  }
  for (const auto& term : lexicon.identity_terms) {
    for (auto& tok : tokenize(term)) words.insert(tok);
  }
  return {words.begin(), words.end()};
}

}  // namespace toxfair
