#include "matrag/profile.hpp"

#include <algorithm>
#include <set>
#include <tuple>
#include <utility>

namespace matrag {

std::string_view to_string(FacetSource source) {
  switch (source) {
    case FacetSource::explicit_pref: return "explicit";
    case FacetSource::implicit_pref: return "implicit";
    case FacetSource::contextual: return "contextual";
    case FacetSource::temporal: return "temporal";
  }
  return "unknown";
}

std::string UserProfile::render() const {
  std::string out;
  std::set<std::pair<std::string_view, std::string_view>> seen;
  for (const auto& f : facets) {
    if (!seen.emplace(f.key, f.value).second) continue;
    out += f.key;
    out += '=';
    out += f.value;
    out += '\n';
  }
  return out;
}

void canonicalize(std::vector<PreferenceFacet>& facets) {
  std::erase_if(facets, [](const PreferenceFacet& f) { return f.key.empty() || f.value.empty(); });
  for (auto& f : facets) f.weight = std::clamp(f.weight, 0.0, 1.0);
  const auto id = [](const PreferenceFacet& f) { return std::tie(f.source, f.key, f.value); };
  std::sort(facets.begin(), facets.end(), [&](const auto& a, const auto& b) {
    if (id(a) != id(b)) return id(a) < id(b);
    return a.weight > b.weight;
  });
  facets.erase(std::unique(facets.begin(), facets.end(),
                           [&](const auto& a, const auto& b) { return id(a) == id(b); }),
               facets.end());
}

}  // namespace matrag
