#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace matrag {

enum class FacetSource { explicit_pref, implicit_pref, contextual, temporal };
std::string_view to_string(FacetSource source);

struct PreferenceFacet {
  std::string key;    // normalized attribute name
  std::string value;  // normalized attribute value
  double weight = 1.0;
  FacetSource source = FacetSource::implicit_pref;

  friend bool operator==(const PreferenceFacet&, const PreferenceFacet&) = default;
};

// Facets are unique per (key, value, source) and sorted by that triple.
struct UserProfile {
  std::string user_id;
  std::vector<PreferenceFacet> facets;
  std::int64_t built_at = 0;
  std::size_t history_length = 0;
  // Set when the explicit channel could not be extracted.
  bool degraded = false;

  bool empty() const { return facets.empty(); }
  // One "key=value" line per distinct (key, value), in facet order.
  std::string render() const;

  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

// Sorts and merges duplicates (keeping the larger weight); enforces the
// profile invariants.
void canonicalize(std::vector<PreferenceFacet>& facets);

}  // namespace matrag
