#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "matrag/profile.hpp"

namespace matrag {

enum class EntityId : std::uint32_t {};
enum class RelationId : std::uint32_t {};
enum class TripleId : std::uint32_t {};

constexpr std::uint32_t raw(EntityId id) { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t raw(RelationId id) { return static_cast<std::uint32_t>(id); }
constexpr std::uint32_t raw(TripleId id) { return static_cast<std::uint32_t>(id); }

// Evidence id of a triple: "t<k>" with k the 1-based file ordinal.
std::string evidence_id(TripleId id);
std::optional<TripleId> parse_triple_evidence(std::string_view evidence);

struct Entity {
  std::string label;
  std::vector<std::string> aliases;
};

struct Triple {
  TripleId id;
  EntityId head;
  RelationId relation;
  EntityId tail;
};

// Entities and relations are keyed by their surface strings. Triple ids are the
// ordinal of each distinct triple's first occurrence, so they are stable across
// reloads of the same file. Immutable once built; safe for concurrent readers.
class KnowledgeGraph {
 public:
  EntityId add_entity(std::string_view label);
  RelationId add_relation(std::string_view label);
  // Returns the existing id for a duplicate triple.
  TripleId add_triple(std::string_view head, std::string_view relation, std::string_view tail);
  void add_alias(EntityId entity, std::string_view alias);

  std::size_t entity_count() const { return entities_.size(); }
  std::size_t relation_count() const { return relations_.size(); }
  std::size_t triple_count() const { return triples_.size(); }

  const Entity& entity(EntityId id) const;
  const std::string& relation_label(RelationId id) const;
  // Throws IntegrityError for an id that is not in the graph.
  const Triple& triple(TripleId id) const;
  bool contains(TripleId id) const { return raw(id) < triples_.size(); }
  bool contains(EntityId id) const { return raw(id) < entities_.size(); }
  std::span<const Triple> triples() const { return triples_; }

  std::optional<EntityId> find_entity(std::string_view exact_label) const;
  std::optional<RelationId> find_relation(std::string_view exact_label) const;
  // Entities whose normalized label equals `normalized`.
  std::span<const EntityId> entities_with_normalized_label(std::string_view normalized) const;
  std::span<const EntityId> entities_with_alias(std::string_view normalized) const;

  // Incident triple ids (either endpoint), ascending.
  std::span<const TripleId> incident(EntityId id) const;

 private:
  std::vector<Entity> entities_;
  std::vector<std::string> relations_;
  std::vector<Triple> triples_;
  std::vector<std::vector<TripleId>> adjacency_;
  std::unordered_map<std::string, EntityId> entity_by_label_;
  std::unordered_map<std::string, RelationId> relation_by_label_;
  std::map<std::tuple<std::uint32_t, std::uint32_t, std::uint32_t>, TripleId> triple_index_;
  std::map<std::string, std::vector<EntityId>, std::less<>> by_normalized_label_;
  std::map<std::string, std::vector<EntityId>, std::less<>> by_alias_;
};

// Line format: <head>\t<relation>\t<tail>
KnowledgeGraph parse_triples(std::istream& in, std::string_view source);
KnowledgeGraph load_triples(const std::filesystem::path& path);

// Normalized alias -> entity label.
using AliasTable = std::map<std::string, std::string, std::less<>>;
// Line format: <alias>\t<entity>
AliasTable parse_aliases(std::istream& in, std::string_view source);
AliasTable load_aliases(const std::filesystem::path& path);
// Records the table's aliases on the graph's entities; unknown entities are
// skipped and counted in the return value.
std::size_t attach_aliases(KnowledgeGraph& kg, const AliasTable& aliases);

// Exact match on normalized label, then the graph's alias lists, then `aliases`.
// Throws AmbiguityError when more than one entity matches at the same stage.
std::optional<EntityId> link_entity(const KnowledgeGraph& kg, std::string_view item_label,
                                    const AliasTable* aliases = nullptr);

inline constexpr std::size_t kNoTripleCap = std::numeric_limits<std::size_t>::max();
inline constexpr std::size_t kDefaultMaxTriples = 64;

struct Subgraph {
  // Absent for the no-evidence fallback of an unlinkable item.
  std::optional<EntityId> center;
  std::size_t radius = 0;
  std::vector<TripleId> triples;  // BFS layer, then triple id
  bool truncated = false;

  friend bool operator==(const Subgraph&, const Subgraph&) = default;
};

// Undirected BFS. A triple is included when its nearer endpoint lies within
// k-1 hops of the center; layers are emitted in order, each sorted by id.
// Stops at max_triples and sets `truncated` if anything was cut.
Subgraph extract_k_hop(const KnowledgeGraph& kg, EntityId center, std::size_t k,
                       std::size_t max_triples = kDefaultMaxTriples);

using RelationSet = std::set<std::string, std::less<>>;

struct FilteredSubgraph {
  Subgraph subgraph;
  // False when nothing matched and the input was returned unchanged.
  bool applied = false;
};

// Keeps triples whose relation is in the allowlist, or (without an allowlist)
// whose relation or tail label shares a word token with any facet key or
// value. If no triple qualifies the input is returned unchanged.
FilteredSubgraph filter_relations(const Subgraph& sub, const KnowledgeGraph& kg,
                                  const UserProfile& profile,
                                  const RelationSet* allowlist = nullptr);

}  // namespace matrag
