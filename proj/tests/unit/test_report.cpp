#include <algorithm>
#include <map>

#include "doctest.h"
#include "toxfair/error.hpp"
#include "toxfair/report.hpp"

using namespace toxfair;

namespace {

FairnessReport sample_report() {
  using F = IdentityFlag;
  const std::vector<int> y{0, 0, 1, 1, 0, 1};
  const std::vector<double> s{0.7, 0.2, 0.9, 0.4, 0.6, 0.8};
  const std::vector<int> p{1, 0, 1, 0, 1, 1};
  const std::vector<F> id{F::kIdentity, F::kIdentity, F::kIdentity, F::kNonIdentity, F::kNonIdentity,
                          F::kUnannotated};
  return subgroup_report(y, p, s, id, 0.5);
}

}  // namespace

TEST_CASE("report JSON carries every field and round-trips") {
  const auto r = sample_report();
  const auto j = to_json(r);
  for (const char* key : {"auc", "f1", "precision", "recall", "threshold", "confusion", "confusion_identity",
                          "confusion_non_identity", "fpr_identity", "fpr_non_identity", "fnr_identity",
                          "fnr_non_identity", "fpr_ratio", "fnr_ratio", "excluded_unannotated", "undefined"}) {
    CHECK_MESSAGE(j.contains(key), key);
  }
  const auto back = fairness_report_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.identity.confusion == r.identity.confusion);
  CHECK(back.fnr_ratio.defined == r.fnr_ratio.defined);
}

TEST_CASE("undefined rates are listed by name") {
  const auto r = sample_report();
  // Non-identity has one positive, predicted 0: fnr 1. Identity fnr 0. fnr_ratio = 0, defined.
  const auto j = to_json(r);
  CHECK(j["fnr_ratio"] == 0.0);
  const auto undefined = j["undefined"].get<std::vector<std::string>>();
  CHECK(std::find(undefined.begin(), undefined.end(), "fnr_ratio") == undefined.end());

  FairnessReport empty;
  const auto je = to_json(empty);
  const auto names = je["undefined"].get<std::vector<std::string>>();
  CHECK(std::find(names.begin(), names.end(), "fpr_ratio") != names.end());
  CHECK(std::find(names.begin(), names.end(), "auc") != names.end());
  CHECK(je["fpr_ratio"] == 0.0);
}

TEST_CASE("malformed report JSON is a data error") {
  CHECK_THROWS_AS(fairness_report_from_json(nlohmann::json{{"auc", 1}}), DataError);
}

TEST_CASE("CSV columns and values line up") {
  const auto r = sample_report();
  const auto cols = report_csv_columns();
  const auto vals = report_csv_values(r);
  CHECK(cols.size() == vals.size());
  CHECK(cols.front() == "auc");
  CHECK(vals.front() == format_number(r.auc));
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.3333333333");
  CHECK(format_number(2.0) == "2");

  FairnessReport empty;
  const auto names = to_json(empty)["undefined"].get<std::vector<std::string>>();
  std::string joined;
  for (const auto& n : names) joined += (joined.empty() ? "" : ";") + n;
  CHECK(report_csv_values(empty).back() == joined);
  CHECK(joined.find("fpr_ratio") != std::string::npos);
}

TEST_CASE("external comparison partitions the flagged ids") {
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  const std::vector<double> ours{0.9, 0.1, 0.6, 0.2};
  const std::map<std::string, double> theirs{{"a", 0.8}, {"b", 0.7}, {"c", 0.1}, {"d", 0.3}, {"z", 1.0}};
  const auto c = compare_scores(ids, ours, theirs, 0.5, 0.5);
  CHECK(c.total == 4);
  CHECK(c.ours_toxic == 2);
  CHECK(c.theirs_toxic == 2);
  CHECK(c.both == std::vector<std::string>{"a"});
  CHECK(c.ours_only == std::vector<std::string>{"c"});
  CHECK(c.theirs_only == std::vector<std::string>{"b"});
  CHECK(c.ours_fraction == 0.5);
  CHECK(to_json(c)["theirs_only"][0] == "b");

  const std::map<std::string, double> partial{{"a", 0.1}};
  try {
    compare_scores(ids, ours, partial, 0.5, 0.5);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("3 text(s)") != std::string::npos);
    CHECK(what.find("b, c, d") != std::string::npos);
  }
  CHECK_THROWS_AS(compare_scores(ids, {0.1}, theirs, 0.5, 0.5), ShapeError);
}
