#include <set>
#include <sstream>

#include "doctest.h"
#include "toxfair/corpus.hpp"
#include "toxfair/demo_corpus.hpp"
#include "toxfair/error.hpp"

using namespace toxfair;

namespace {

CommentSchema two_identity_schema() {
  CommentSchema s;
  s.identity_columns = {"female", "muslim"};
  return s;
}

}  // namespace

TEST_CASE("comments parse with optional identity annotation") {
  std::istringstream in(
      "id,comment_text,target,female,muslim,extra\n"
      "1,\"hello, world\",0.2,0.0,0.5,x\n"
      "2,plain,0.7,,,y\n"
      "\n"
      "3,\"multi\nline\",1,0,0,z\n");
  const auto rows = parse_comments(in, two_identity_schema());
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].text == "hello, world");
  CHECK(rows[0].identity_fractions->at("muslim") == 0.5);
  CHECK_FALSE(rows[1].identity_fractions.has_value());
  CHECK(rows[2].text == "multi\nline");
  CHECK(rows[2].identity_fractions->size() == 2);
}

TEST_CASE("identity columns absent from the header are ignored") {
  std::istringstream in("id,comment_text,target,female\n1,t,0.1,1\n");
  const auto rows = parse_comments(in, two_identity_schema());
  CHECK(rows[0].identity_fractions->size() == 1);
}

TEST_CASE("schema and row errors") {
  std::istringstream no_target("id,comment_text\n1,hi\n");
  try {
    parse_comments(no_target);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.column() == "target");
  }
  std::istringstream empty("");
  CHECK_THROWS_AS(parse_comments(empty), SchemaError);

  auto row_of = [](const std::string& csv) -> std::size_t {
    std::istringstream in(csv);
    try {
      parse_comments(in, two_identity_schema());
    } catch (const RowError& e) {
      return e.row();
    }
    return 0;
  };
  const std::string head = "id,comment_text,target,female\n";
  CHECK(row_of(head + "1,ok,0.1,0\n2,bad,1.5,0\n") == 2);
  CHECK(row_of(head + "1,ok,abc,0\n") == 1);
  CHECK(row_of(head + "1,ok,,0\n") == 1);
  CHECK(row_of(head + "1,   ,0.1,0\n") == 1);
  CHECK(row_of(head + "1,ok,0.1,-0.1\n") == 1);
  CHECK(row_of(head + "1,ok,0.1\n") == 1);
  CHECK(row_of(head + "1,ok,0.1,0\n\n3,ok,0.1,0,9\n") == 2);
  CHECK(row_of(head + "1,ok,0.1,0\n") == 0);
}

TEST_CASE("write_comments round-trips through parse_comments") {
  std::vector<CommentRecord> rows(2);
  rows[0] = {"a", "she said \"hi\", then left", 0.697, std::map<std::string, double>{{"female", 0.3}}};
  rows[1] = {"b", "x", 0.0, std::nullopt};
  std::stringstream s;
  write_comments(s, rows, two_identity_schema());
  CHECK(s.str().find("0.697,") != std::string::npos);
  const auto back = parse_comments(s, two_identity_schema());
  REQUIRE(back.size() == 2);
  CHECK(back[0].text == rows[0].text);
  CHECK(back[0].toxicity == 0.697);
  CHECK(back[0].identity_fractions->at("female") == 0.3);
  CHECK(back[0].identity_fractions->at("muslim") == 0.0);
  CHECK_FALSE(back[1].identity_fractions.has_value());
}

TEST_CASE("labeling thresholds") {
  CommentRecord r{"1", "Some Text", 0.5, std::map<std::string, double>{{"female", 0.0}}};
  auto e = label_example(r);
  CHECK(e.label == 1);
  CHECK(e.identity == IdentityFlag::kNonIdentity);
  CHECK(e.category == Category::kToxicNonIdentity);
  CHECK(e.tokens == std::vector<std::string>{"some", "text"});

  r.toxicity = 0.4999;
  r.identity_fractions = std::map<std::string, double>{{"female", 0.2}};
  e = label_example(r);
  CHECK(e.category == Category::kNonToxicIdentity);
  CHECK(label_example(r, {0.5, 0.2}).identity == IdentityFlag::kNonIdentity);

  r.identity_fractions.reset();
  e = label_example(r);
  CHECK(e.identity == IdentityFlag::kUnannotated);
  CHECK_FALSE(e.category.has_value());

  CHECK_THROWS_AS(label_example(r, {1.0, 0.0}), ConfigError);
  CHECK_THROWS_AS(label_example(r, {0.5, -1.0}), ConfigError);
}

TEST_CASE("splits are seeded partitions with floored held-out sizes") {
  std::vector<LabeledExample> examples(103);
  for (std::size_t i = 0; i < examples.size(); ++i) examples[i].id = std::to_string(i);
  const SplitFractions f{0.7, 0.1, 0.2};
  const auto a = split_dataset(examples, f, 5);
  CHECK(a.validation.size() == 10);
  CHECK(a.test.size() == 20);
  CHECK(a.train.size() == 73);
  std::set<std::string> all;
  for (const auto* part : {&a.train, &a.validation, &a.test})
    for (const auto& e : *part) all.insert(e.id);
  CHECK(all.size() == 103);

  const auto b = split_dataset(examples, f, 5);
  CHECK(fingerprint(a.test) == fingerprint(b.test));
  CHECK(fingerprint(a.test) != fingerprint(split_dataset(examples, f, 6).test));

  CHECK_THROWS_AS(split_dataset(examples, {0.5, 0.1, 0.1}, 1), ConfigError);
  CHECK_THROWS_AS(split_dataset(examples, {1.2, -0.2, 0.0}, 1), ConfigError);
  CHECK_THROWS_AS(split_dataset({}, f, 1), DomainError);
}

TEST_CASE("sample_indices keeps floor(n * fraction) sorted indices") {
  const auto all = sample_indices(10, 1.0, 3);
  CHECK(all.size() == 10);
  const auto part = sample_indices(1000, 0.1, 3);
  CHECK(part.size() == 100);
  CHECK(std::is_sorted(part.begin(), part.end()));
  CHECK(std::set<std::size_t>(part.begin(), part.end()).size() == 100);
  CHECK(part == sample_indices(1000, 0.1, 3));
  CHECK(part != sample_indices(1000, 0.1, 4));
  CHECK_THROWS_AS(sample_indices(10, 0.0, 1), ConfigError);
  CHECK_THROWS_AS(sample_indices(10, 1.5, 1), ConfigError);
}

TEST_CASE("identity-filtered tweets") {
  std::istringstream in(
      "Party,Handle,Tweet\n"
      "D,@a,Proud of my Muslim neighbors\n"
      "R,@b,Nothing to see here\n"
      "D,@c,\"Support for the mentally ill, now\"\n"
      "R,@d,He is ill but not mentally\n");
  const auto kept = load_identity_texts(in, {"muslim", "mentally ill"});
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == "1");
  CHECK(kept[1].id == "3");
  CHECK(kept[1].handle == "@c");

  std::istringstream with_ids("id,Party,Handle,Tweet\nt9,D,@x,gay rights\n");
  CHECK(load_identity_texts(with_ids, {"gay"})[0].id == "t9");

  std::istringstream missing("Party,Tweet\nD,x\n");
  CHECK_THROWS_AS(load_identity_texts(missing, {"gay"}), SchemaError);
  std::istringstream any("Party,Handle,Tweet\n");
  CHECK_THROWS_AS(load_identity_texts(any, {}), ConfigError);
}

TEST_CASE("corpus statistics and fingerprints") {
  std::vector<LabeledExample> ex(3);
  ex[0].label = 1;
  ex[0].category = Category::kToxicIdentity;
  ex[1].category = Category::kNonToxicNonIdentity;
  const auto stats = corpus_stats(ex);
  CHECK(stats.total == 3);
  CHECK(stats.toxic == 1);
  CHECK(stats.unannotated == 1);
  CHECK(stats.category_counts[index_of(Category::kToxicIdentity)] == 1);

  auto swapped = ex;
  std::swap(swapped[0], swapped[1]);
  CHECK(fingerprint(ex) != fingerprint(swapped));
  CHECK(hex64(0xABCull) == "0000000000000abc");
}

TEST_CASE("the demo corpus plants the identity/toxicity correlation") {
  const TermLexicon lexicon{{"muslim", "gay", "black", "female"}, {"zorblat", "grimbo", "fenwicker"}};
  DemoCorpusOptions options;
  options.comments = 4000;
  const auto rows = make_demo_corpus(options, lexicon);
  CHECK(rows.size() == 4000);
  std::size_t id_toxic = 0, id_total = 0, non_toxic = 0, non_total = 0, unannotated = 0;
  for (const auto& r : rows) {
    const auto e = label_example(r);
    if (e.identity == IdentityFlag::kUnannotated) {
      ++unannotated;
    } else if (e.identity == IdentityFlag::kIdentity) {
      ++id_total;
      id_toxic += e.label;
    } else {
      ++non_total;
      non_toxic += e.label;
    }
  }
  const double id_rate = static_cast<double>(id_toxic) / static_cast<double>(id_total);
  const double non_rate = static_cast<double>(non_toxic) / static_cast<double>(non_total);
  CHECK(id_rate > 1.5 * non_rate);
  CHECK(unannotated > 600);
  CHECK(unannotated < 1000);

  std::stringstream a, b;
  write_comments(a, rows);
  write_comments(b, make_demo_corpus(options, lexicon));
  CHECK(a.str() == b.str());
}
