#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "toxfair/corpus.hpp"
#include "toxfair/textproc.hpp"

namespace toxfair {

/// Knobs for the planted-bias corpus. Identity-referencing comments are made
/// toxic at a higher rate than other comments, and toxic comments carry
/// identity terms, so a model trained on it learns identity terms as toxicity
/// evidence.
struct DemoCorpusOptions {
  std::size_t comments = 30000;
  double identity_share = 0.4;
  double unannotated_share = 0.2;
  double toxic_rate_identity = 0.18;
  double toxic_rate_non_identity = 0.09;
  /// Share of non-toxic comments that still contain an insult (quoted,
  /// reported speech, ...). These drive the false positives.
  double insult_in_non_toxic = 0.15;
  /// Share of toxic comments whose toxic word is a slur placeholder rather
  /// than a common insult. Slurs never occur in non-toxic comments and are
  /// drawn with Zipf weights, so most of them are rare in real data while
  /// the templates cover them uniformly.
  double slur_share = 0.5;
  double slur_zipf_exponent = 1.0;
  /// Neutral filler words per comment: min_words + [0, extra_words).
  std::size_t min_words = 8;
  std::size_t extra_words = 4;
  std::uint64_t seed = 1;
};

/// Comment rows with identity fractions in the default identity columns.
/// Toxic words come from the lexicon's slur list plus a built-in insult list.
std::vector<CommentRecord> make_demo_corpus(const DemoCorpusOptions& options, const TermLexicon& lexicon);

/// Non-toxic identity-referencing posts in the `Party,Handle,Tweet` layout.
std::vector<TweetRecord> make_demo_tweets(std::size_t count, const TermLexicon& lexicon, std::uint64_t seed);

/// Scores from a simulated external classifier that over-weights identity
/// terms; rows are (tweet id, score).
std::vector<std::pair<std::string, double>> make_demo_external_scores(const std::vector<TweetRecord>& tweets,
                                                                      const TermLexicon& lexicon, std::uint64_t seed);

/// Every word the demo generators can emit (for building an embedding table).
std::vector<std::string> demo_vocabulary(const TermLexicon& lexicon);

}  // namespace toxfair
