#include "toxfair/example.hpp"

#include "toxfair/error.hpp"

namespace toxfair {

std::string_view to_string(Category c) noexcept {
  switch (c) {
    case Category::kToxicIdentity:
      return "toxic_identity";
    case Category::kToxicNonIdentity:
      return "toxic_non_identity";
    case Category::kNonToxicIdentity:
      return "non_toxic_identity";
    case Category::kNonToxicNonIdentity:
      return "non_toxic_non_identity";
  }
  return "unknown";
}

std::string_view to_string(IdentityFlag f) noexcept {
  switch (f) {
    case IdentityFlag::kIdentity:
      return "identity";
    case IdentityFlag::kNonIdentity:
      return "non_identity";
    case IdentityFlag::kUnannotated:
      return "unannotated";
  }
  return "unknown";
}

std::string_view to_string(Origin o) noexcept { return o == Origin::kReal ? "real" : "synthetic"; }

Category parse_category(std::string_view name) {
  for (auto c : kAllCategories) {
    if (name == to_string(c)) return c;
  }
  throw DataError("unknown category '" + std::string(name) + "'");
}

std::optional<Category> category_for(int label, IdentityFlag identity) noexcept {
  if (identity == IdentityFlag::kUnannotated) return std::nullopt;
  const bool id = identity == IdentityFlag::kIdentity;
  if (label == 1) return id ? Category::kToxicIdentity : Category::kToxicNonIdentity;
  return id ? Category::kNonToxicIdentity : Category::kNonToxicNonIdentity;
}

}  // namespace toxfair
