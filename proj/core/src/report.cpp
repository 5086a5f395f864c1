#include "toxfair/report.hpp"

#include <algorithm>
#include <cstdio>

#include "toxfair/error.hpp"

namespace toxfair {

namespace {

nlohmann::json confusion_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

ConfusionCounts confusion_from(const nlohmann::json& j) {
  ConfusionCounts c;
  c.tp = j.at("tp").get<std::size_t>();
  c.fp = j.at("fp").get<std::size_t>();
  c.tn = j.at("tn").get<std::size_t>();
  c.fn = j.at("fn").get<std::size_t>();
  return c;
}

Rate rate_from(const nlohmann::json& j, const char* key, const std::vector<std::string>& undefined) {
  Rate r;
  r.value = j.at(key).get<double>();
  r.defined = std::find(undefined.begin(), undefined.end(), key) == undefined.end();
  return r;
}

}  // namespace

nlohmann::json to_json(const FairnessReport& r) {
  nlohmann::json undefined = nlohmann::json::array();
  auto note = [&](const char* name, bool defined) {
    if (!defined) undefined.push_back(name);
  };
  note("auc", r.auc_defined);
  note("precision", r.overall.precision.defined);
  note("recall", r.overall.recall.defined);
  note("f1", r.overall.f1.defined);
  note("fpr_identity", r.identity.fpr.defined);
  note("fpr_non_identity", r.non_identity.fpr.defined);
  note("fnr_identity", r.identity.fnr.defined);
  note("fnr_non_identity", r.non_identity.fnr.defined);
  note("fpr_ratio", r.fpr_ratio.defined);
  note("fnr_ratio", r.fnr_ratio.defined);

  nlohmann::json j;
  j["auc"] = r.auc;
  j["f1"] = r.overall.f1.value;
  j["precision"] = r.overall.precision.value;
  j["recall"] = r.overall.recall.value;
  j["threshold"] = r.threshold;
  j["confusion"] = confusion_json(r.confusion);
  j["confusion_identity"] = confusion_json(r.identity.confusion);
  j["confusion_non_identity"] = confusion_json(r.non_identity.confusion);
  j["fpr_identity"] = r.identity.fpr.value;
  j["fpr_non_identity"] = r.non_identity.fpr.value;
  j["fnr_identity"] = r.identity.fnr.value;
  j["fnr_non_identity"] = r.non_identity.fnr.value;
  j["fpr_ratio"] = r.fpr_ratio.value;
  j["fnr_ratio"] = r.fnr_ratio.value;
  j["excluded_unannotated"] = r.excluded_unannotated;
  j["undefined"] = std::move(undefined);
  return j;
}

FairnessReport fairness_report_from_json(const nlohmann::json& j) {
  try {
    const auto undefined = j.at("undefined").get<std::vector<std::string>>();
    FairnessReport r;
    r.auc = j.at("auc").get<double>();
    r.auc_defined = std::find(undefined.begin(), undefined.end(), "auc") == undefined.end();
    r.overall.precision = rate_from(j, "precision", undefined);
    r.overall.recall = rate_from(j, "recall", undefined);
    r.overall.f1 = rate_from(j, "f1", undefined);
    r.threshold = j.at("threshold").get<double>();
    r.confusion = confusion_from(j.at("confusion"));
    r.identity.confusion = confusion_from(j.at("confusion_identity"));
    r.non_identity.confusion = confusion_from(j.at("confusion_non_identity"));
    r.identity.fpr = rate_from(j, "fpr_identity", undefined);
    r.non_identity.fpr = rate_from(j, "fpr_non_identity", undefined);
    r.identity.fnr = rate_from(j, "fnr_identity", undefined);
    r.non_identity.fnr = rate_from(j, "fnr_non_identity", undefined);
    r.fpr_ratio = rate_from(j, "fpr_ratio", undefined);
    r.fnr_ratio = rate_from(j, "fnr_ratio", undefined);
    r.excluded_unannotated = j.at("excluded_unannotated").get<std::size_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report JSON: ") + e.what());
  }
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", value);
  return buf;
}

std::vector<std::string> report_csv_columns() {
  return {"auc",          "f1",           "precision",        "recall",           "threshold",
          "tp",           "fp",           "tn",               "fn",               "fpr_identity",
          "fpr_non_identity", "fnr_identity", "fnr_non_identity", "fpr_ratio",     "fnr_ratio",
          "excluded_unannotated", "undefined"};
}

std::vector<std::string> report_csv_values(const FairnessReport& r) {
  const auto j = to_json(r);
  std::string undefined;
  for (const auto& name : j.at("undefined")) {
    if (!undefined.empty()) undefined += ';';
    undefined += name.get<std::string>();
  }
  return {format_number(r.auc),
          format_number(r.overall.f1.value),
          format_number(r.overall.precision.value),
          format_number(r.overall.recall.value),
          format_number(r.threshold),
          std::to_string(r.confusion.tp),
          std::to_string(r.confusion.fp),
          std::to_string(r.confusion.tn),
          std::to_string(r.confusion.fn),
          format_number(r.identity.fpr.value),
          format_number(r.non_identity.fpr.value),
          format_number(r.identity.fnr.value),
          format_number(r.non_identity.fnr.value),
          format_number(r.fpr_ratio.value),
          format_number(r.fnr_ratio.value),
          std::to_string(r.excluded_unannotated),
          undefined};
}

ExternalComparison compare_scores(const std::vector<std::string>& ids, const std::vector<double>& ours,
                                  const std::map<std::string, double>& external, double threshold,
                                  double external_threshold) {
  if (ids.size() != ours.size()) throw ShapeError("compare_scores: ids and scores differ in length");
  std::string missing;
  std::size_t missing_count = 0;
  for (const auto& id : ids) {
    if (external.count(id)) continue;
    if (missing_count < 20) missing += (missing.empty() ? "" : ", ") + id;
    ++missing_count;
  }
  if (missing_count) {
    if (missing_count > 20) missing += ", ...";
    throw DataError("no external score for " + std::to_string(missing_count) + " text(s): " + missing);
  }

  ExternalComparison out;
  out.total = ids.size();
  out.threshold = threshold;
  out.external_threshold = external_threshold;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const bool mine = ours[i] >= threshold;
    const bool theirs = external.at(ids[i]) >= external_threshold;
    out.ours_toxic += mine;
    out.theirs_toxic += theirs;
    if (mine && theirs) {
      out.both.push_back(ids[i]);
    } else if (mine) {
      out.ours_only.push_back(ids[i]);
    } else if (theirs) {
      out.theirs_only.push_back(ids[i]);
    }
  }
  if (out.total) {
    out.ours_fraction = static_cast<double>(out.ours_toxic) / static_cast<double>(out.total);
    out.theirs_fraction = static_cast<double>(out.theirs_toxic) / static_cast<double>(out.total);
  }
  return out;
}

nlohmann::json to_json(const ExternalComparison& c) {
  return {{"total", c.total},
          {"threshold", c.threshold},
          {"external_threshold", c.external_threshold},
          {"ours_toxic", c.ours_toxic},
          {"theirs_toxic", c.theirs_toxic},
          {"ours_fraction", c.ours_fraction},
          {"theirs_fraction", c.theirs_fraction},
          {"ours_only", c.ours_only},
          {"theirs_only", c.theirs_only},
          {"both", c.both}};
}

}  // namespace toxfair
