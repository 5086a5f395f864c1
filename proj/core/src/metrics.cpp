#include "toxfair/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "toxfair/error.hpp"

namespace toxfair {

ConfusionCounts confusion(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size()) {
    throw ShapeError("confusion: " + std::to_string(labels.size()) + " labels vs " +
                     std::to_string(predictions.size()) + " predictions");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool y = labels[i] != 0;
    const bool p = predictions[i] != 0;
    if (y && p) {
      ++c.tp;
    } else if (!y && p) {
      ++c.fp;
    } else if (!y && !p) {
      ++c.tn;
    } else {
      ++c.fn;
    }
  }
  return c;
}

namespace {
Rate ratio(double num, double den) {
  if (den <= 0.0) return {0.0, false};
  return {num / den, true};
}
}  // namespace

double f1_from(double precision, double recall) noexcept {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c) {
  PrecisionRecallF1 out;
  out.precision = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fp));
  out.recall = ratio(static_cast<double>(c.tp), static_cast<double>(c.tp + c.fn));
  const double s = out.precision.value + out.recall.value;
  out.f1.defined = out.precision.defined && out.recall.defined && s > 0.0;
  out.f1.value = out.f1.defined ? f1_from(out.precision.value, out.recall.value) : 0.0;
  return out;
}

Rate false_positive_rate(const ConfusionCounts& c) {
  return ratio(static_cast<double>(c.fp), static_cast<double>(c.fp + c.tn));
}

Rate false_negative_rate(const ConfusionCounts& c) {
  return ratio(static_cast<double>(c.fn), static_cast<double>(c.fn + c.tp));
}

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ShapeError("roc_auc: " + std::to_string(scores.size()) + " scores vs " +
                     std::to_string(labels.size()) + " labels");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j+1 share the midrank.
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] != 0) {
        positive_rank_sum += midrank;
        ++positives;
      }
    }
    i = j + 1;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw DomainError("roc_auc requires both classes");
  const double p = static_cast<double>(positives);
  return (positive_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

FairnessReport subgroup_report(std::span<const int> labels, std::span<const int> predictions,
                               std::span<const double> scores, std::span<const IdentityFlag> identity,
                               double threshold) {
  if (labels.size() != predictions.size() || labels.size() != scores.size() || labels.size() != identity.size()) {
    throw ShapeError("subgroup_report: input vectors differ in length");
  }
  FairnessReport report;
  report.threshold = threshold;
  report.confusion = confusion(labels, predictions);
  report.overall = precision_recall_f1(report.confusion);
  const bool has_pos = report.confusion.tp + report.confusion.fn > 0;
  const bool has_neg = report.confusion.tn + report.confusion.fp > 0;
  if (has_pos && has_neg) {
    report.auc = roc_auc(scores, labels);
    report.auc_defined = true;
  }

  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto one = confusion(labels.subspan(i, 1), predictions.subspan(i, 1));
    switch (identity[i]) {
      case IdentityFlag::kIdentity:
        report.identity.confusion += one;
        break;
      case IdentityFlag::kNonIdentity:
        report.non_identity.confusion += one;
        break;
      case IdentityFlag::kUnannotated:
        ++report.excluded_unannotated;
        break;
    }
  }
  for (auto* group : {&report.identity, &report.non_identity}) {
    group->fpr = false_positive_rate(group->confusion);
    group->fnr = false_negative_rate(group->confusion);
  }
  auto gap = [](const Rate& num, const Rate& den) -> Rate {
    if (!num.defined || !den.defined || den.value <= 0.0) return {0.0, false};
    return {num.value / den.value, true};
  };
  report.fpr_ratio = gap(report.identity.fpr, report.non_identity.fpr);
  report.fnr_ratio = gap(report.identity.fnr, report.non_identity.fnr);
  return report;
}

ProportionTest two_proportion_test(std::size_t k1, std::size_t n1, std::size_t k2, std::size_t n2) {
  if (n1 == 0 || n2 == 0) throw DomainError("two_proportion_test: sample sizes must be positive");
  if (k1 > n1 || k2 > n2) throw DomainError("two_proportion_test: successes exceed sample size");
  const double p1 = static_cast<double>(k1) / static_cast<double>(n1);
  const double p2 = static_cast<double>(k2) / static_cast<double>(n2);
  const double pooled = static_cast<double>(k1 + k2) / static_cast<double>(n1 + n2);
  ProportionTest out;
  if (pooled <= 0.0 || pooled >= 1.0) {
    out.degenerate = true;
    return out;
  }
  const double se =
      std::sqrt(pooled * (1.0 - pooled) * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
  out.z = (p1 - p2) / se;
  out.p_two_sided = std::erfc(std::abs(out.z) / std::sqrt(2.0));
  return out;
}

}  // namespace toxfair
