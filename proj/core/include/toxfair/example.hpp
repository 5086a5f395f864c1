#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace toxfair {

/// One cell of the toxicity x identity taxonomy used for balancing.
enum class Category { kToxicIdentity, kToxicNonIdentity, kNonToxicIdentity, kNonToxicNonIdentity };

inline constexpr std::array<Category, 4> kAllCategories = {
    Category::kToxicIdentity, Category::kToxicNonIdentity, Category::kNonToxicIdentity,
    Category::kNonToxicNonIdentity};

enum class IdentityFlag { kIdentity, kNonIdentity, kUnannotated };

enum class Origin { kReal, kSynthetic };

/// Stable snake_case names used in files and reports.
std::string_view to_string(Category c) noexcept;
std::string_view to_string(IdentityFlag f) noexcept;
std::string_view to_string(Origin o) noexcept;
Category parse_category(std::string_view name);

constexpr bool is_toxic(Category c) noexcept {
  return c == Category::kToxicIdentity || c == Category::kToxicNonIdentity;
}
constexpr bool is_identity(Category c) noexcept {
  return c == Category::kToxicIdentity || c == Category::kNonToxicIdentity;
}
constexpr std::size_t index_of(Category c) noexcept { return static_cast<std::size_t>(c); }

/// Category for an annotated (label, identity) pair; empty when unannotated.
std::optional<Category> category_for(int label, IdentityFlag identity) noexcept;

/// A tokenized comment ready for featurization.
struct LabeledExample {
  std::string id;
  std::string text;
  std::vector<std::string> tokens;
  int label = 0;
  IdentityFlag identity = IdentityFlag::kUnannotated;
  std::optional<Category> category;
  Origin origin = Origin::kReal;

  friend bool operator==(const LabeledExample&, const LabeledExample&) = default;
};

}  // namespace toxfair
