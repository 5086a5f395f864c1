#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "toxfair/example.hpp"

namespace toxfair {

/// Annotated examples grouped by category; real examples precede synthetic
/// ones inside each pool.
struct CategoryPools {
  std::array<std::vector<LabeledExample>, 4> pools;
  std::array<std::size_t, 4> real_counts{};
  std::array<std::size_t, 4> synthetic_counts{};
  /// Unannotated examples, excluded from balancing.
  std::vector<LabeledExample> remainder;

  const std::vector<LabeledExample>& pool(Category c) const { return pools[index_of(c)]; }
};

CategoryPools build_pools(std::vector<LabeledExample> examples, std::vector<LabeledExample> synthetic);

using CategoryTargets = std::array<std::size_t, 4>;

struct RebalanceSpec {
  CategoryTargets targets{};
  std::uint64_t seed = 0;
};

/// One drawn example with its pool provenance, for manifests.
struct DrawRecord {
  Category category;
  std::size_t pool_index;
};

struct BalancedSample {
  std::vector<LabeledExample> examples;
  std::vector<DrawRecord> draws;
};

/// Exactly targets[c] examples per category. Pools at or above target are
/// undersampled without replacement. Smaller pools contribute every member
/// once, synthetic members first; remaining slots are filled by drawing real
/// members with replacement (synthetic when the pool has no real members).
/// The union is returned in seeded shuffled order. Throws DomainError naming
/// the category when a positive target meets an empty pool.
BalancedSample sample_balanced(const CategoryPools& pools, const RebalanceSpec& spec);

struct SweepSchedule {
  Category varied = Category::kToxicIdentity;
  std::vector<std::size_t> targets;
  CategoryTargets fixed{};

  /// Full target vector at schedule point `i`.
  CategoryTargets point(std::size_t i) const;
};

/// [from, from+step, ..., to], reversed for non-toxic categories so that the
/// schedule always moves toward balance in the direction the rebalancing
/// does (toxic counts rise, non-toxic counts fall). Throws ConfigError when
/// step is zero or does not divide the range.
SweepSchedule make_sweep(Category category, std::size_t from, std::size_t to, std::size_t step,
                         const CategoryTargets& fixed_targets);

}  // namespace toxfair
