#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "toxfair/metrics.hpp"

namespace toxfair {

/// Field names are fixed; rates whose denominator was zero are emitted as 0
/// and listed under "undefined".
nlohmann::json to_json(const FairnessReport& report);
FairnessReport fairness_report_from_json(const nlohmann::json& j);

/// Flat CSV layout used for single runs and sweep aggregation.
std::vector<std::string> report_csv_columns();
std::vector<std::string> report_csv_values(const FairnessReport& report);

/// Fixed-precision rendering shared by every CSV writer, so reruns are
/// byte-identical.
std::string format_number(double value);

/// Our model against a precomputed external scorer on texts presumed
/// non-toxic, so every positive is a false positive.
struct ExternalComparison {
  std::size_t total = 0;
  double threshold = 0.5;
  double external_threshold = 0.5;
  std::size_t ours_toxic = 0;
  std::size_t theirs_toxic = 0;
  double ours_fraction = 0.0;
  double theirs_fraction = 0.0;
  /// Ids flagged by exactly one scorer, or by both, in input order.
  std::vector<std::string> ours_only;
  std::vector<std::string> theirs_only;
  std::vector<std::string> both;
};

/// Throws DataError listing every id that has no external score.
ExternalComparison compare_scores(const std::vector<std::string>& ids, const std::vector<double>& ours,
                                  const std::map<std::string, double>& external, double threshold,
                                  double external_threshold);

nlohmann::json to_json(const ExternalComparison& comparison);

}  // namespace toxfair
