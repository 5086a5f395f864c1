#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "toxfair/example.hpp"

namespace toxfair {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    tn += o.tn;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

ConfusionCounts confusion(std::span<const int> labels, std::span<const int> predictions);

/// A rate or score that reports 0 with `defined == false` when its
/// denominator is zero.
struct Rate {
  double value = 0.0;
  bool defined = false;
};

struct PrecisionRecallF1 {
  Rate precision;
  Rate recall;
  Rate f1;
};

PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c);
/// Harmonic mean of two already-computed values (0 when both are 0).
double f1_from(double precision, double recall) noexcept;

Rate false_positive_rate(const ConfusionCounts& c);
Rate false_negative_rate(const ConfusionCounts& c);

/// Rank-statistic AUC with midranks for ties. Throws DomainError unless both
/// classes are present.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct SubgroupMetrics {
  ConfusionCounts confusion;
  Rate fpr;
  Rate fnr;
};

struct FairnessReport {
  double auc = 0.0;
  bool auc_defined = false;
  PrecisionRecallF1 overall;
  ConfusionCounts confusion;
  SubgroupMetrics identity;
  SubgroupMetrics non_identity;
  Rate fpr_ratio;
  Rate fnr_ratio;
  std::size_t excluded_unannotated = 0;
  double threshold = 0.5;
};

/// Overall metrics over every row; subgroup metrics over annotated rows only.
FairnessReport subgroup_report(std::span<const int> labels, std::span<const int> predictions,
                               std::span<const double> scores, std::span<const IdentityFlag> identity,
                               double threshold);

struct ProportionTest {
  double z = 0.0;
  double p_two_sided = 1.0;
  /// Pooled proportion was 0 or 1, so the standard error vanished.
  bool degenerate = false;
};

/// Pooled two-proportion z test with an erfc-based two-sided p value.
ProportionTest two_proportion_test(std::size_t k1, std::size_t n1, std::size_t k2, std::size_t n2);

}  // namespace toxfair
