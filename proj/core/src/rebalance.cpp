#include "toxfair/rebalance.hpp"

#include <algorithm>
#include <numeric>

#include "toxfair/error.hpp"
#include "toxfair/rng.hpp"

namespace toxfair {

CategoryPools build_pools(std::vector<LabeledExample> examples, std::vector<LabeledExample> synthetic) {
  CategoryPools out;
  auto route = [&out](LabeledExample&& ex) {
    if (!ex.category) {
      out.remainder.push_back(std::move(ex));
      return;
    }
    const auto c = index_of(*ex.category);
    if (ex.origin == Origin::kSynthetic) {
      ++out.synthetic_counts[c];
    } else {
      ++out.real_counts[c];
    }
    out.pools[c].push_back(std::move(ex));
  };
  for (auto& ex : examples) route(std::move(ex));
  for (auto& ex : synthetic) route(std::move(ex));
  return out;
}

BalancedSample sample_balanced(const CategoryPools& pools, const RebalanceSpec& spec) {
  BalancedSample out;
  Rng rng(spec.seed);
  for (const auto category : kAllCategories) {
    const std::size_t target = spec.targets[index_of(category)];
    if (target == 0) continue;
    const auto& pool = pools.pool(category);
    if (pool.empty()) {
      throw DomainError("pool for category " + std::string(to_string(category)) + " is empty but target is " +
                        std::to_string(target));
    }
    std::vector<std::size_t> picked;
    picked.reserve(target);
    if (pool.size() >= target) {
      std::vector<std::size_t> order(pool.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      // Partial Fisher-Yates: the first `target` slots are a uniform draw.
      for (std::size_t i = 0; i < target; ++i) {
        const std::size_t j = i + rng.below(order.size() - i);
        std::swap(order[i], order[j]);
      }
      picked.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(target));
    } else {
      std::vector<std::size_t> real;
      std::vector<std::size_t> synth;
      for (std::size_t i = 0; i < pool.size(); ++i) {
        (pool[i].origin == Origin::kSynthetic ? synth : real).push_back(i);
      }
      picked.insert(picked.end(), synth.begin(), synth.end());
      picked.insert(picked.end(), real.begin(), real.end());
      const auto& repeat_from = real.empty() ? synth : real;
      while (picked.size() < target) picked.push_back(repeat_from[rng.below(repeat_from.size())]);
    }
    for (auto idx : picked) out.draws.push_back({category, idx});
  }

  rng.shuffle(std::span<DrawRecord>(out.draws));
  out.examples.reserve(out.draws.size());
  for (const auto& d : out.draws) out.examples.push_back(pools.pool(d.category)[d.pool_index]);
  return out;
}

CategoryTargets SweepSchedule::point(std::size_t i) const {
  CategoryTargets t = fixed;
  t[index_of(varied)] = targets.at(i);
  return t;
}

SweepSchedule make_sweep(Category category, std::size_t from, std::size_t to, std::size_t step,
                         const CategoryTargets& fixed_targets) {
  if (step == 0) throw ConfigError("sweep step must be positive");
  const std::size_t lo = std::min(from, to);
  const std::size_t hi = std::max(from, to);
  if ((hi - lo) % step != 0) {
    throw ConfigError("sweep range " + std::to_string(from) + ".." + std::to_string(to) +
                      " is not divisible by step " + std::to_string(step));
  }
  SweepSchedule s;
  s.varied = category;
  s.fixed = fixed_targets;
  for (std::size_t v = lo; v <= hi; v += step) s.targets.push_back(v);
  if (!is_toxic(category)) std::reverse(s.targets.begin(), s.targets.end());
  return s;
}

}  // namespace toxfair
