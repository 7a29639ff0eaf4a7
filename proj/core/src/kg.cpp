#include "matrag/kg.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <unordered_set>

#include "matrag/error.hpp"
#include "matrag/text.hpp"

namespace matrag {

// Rendered 1-based so the first triple in the file is "t1".
std::string evidence_id(TripleId id) { return "t" + std::to_string(std::uint64_t{raw(id)} + 1); }

std::optional<TripleId> parse_triple_evidence(std::string_view evidence) {
  if (evidence.size() < 2 || evidence.front() != 't') return std::nullopt;
  auto v = text::parse_int64(evidence.substr(1));
  if (!v || *v < 1 || *v > std::numeric_limits<std::uint32_t>::max()) return std::nullopt;
  return TripleId{static_cast<std::uint32_t>(*v - 1)};
}

EntityId KnowledgeGraph::add_entity(std::string_view label) {
  auto [it, inserted] = entity_by_label_.try_emplace(
      std::string(label), EntityId{static_cast<std::uint32_t>(entities_.size())});
  if (inserted) {
    entities_.push_back(Entity{std::string(label), {}});
    adjacency_.emplace_back();
    by_normalized_label_[text::normalize_label(label)].push_back(it->second);
  }
  return it->second;
}

RelationId KnowledgeGraph::add_relation(std::string_view label) {
  auto [it, inserted] = relation_by_label_.try_emplace(
      std::string(label), RelationId{static_cast<std::uint32_t>(relations_.size())});
  if (inserted) relations_.emplace_back(label);
  return it->second;
}

TripleId KnowledgeGraph::add_triple(std::string_view head, std::string_view relation,
                                    std::string_view tail) {
  const auto h = add_entity(head);
  const auto r = add_relation(relation);
  const auto t = add_entity(tail);
  auto key = std::make_tuple(raw(h), raw(r), raw(t));
  auto [it, inserted] =
      triple_index_.try_emplace(key, TripleId{static_cast<std::uint32_t>(triples_.size())});
  if (inserted) {
    triples_.push_back(Triple{it->second, h, r, t});
    adjacency_[raw(h)].push_back(it->second);
    if (t != h) adjacency_[raw(t)].push_back(it->second);
  }
  return it->second;
}

void KnowledgeGraph::add_alias(EntityId entity, std::string_view alias) {
  auto& e = entities_.at(raw(entity));
  const auto norm = text::normalize_label(alias);
  if (std::find(e.aliases.begin(), e.aliases.end(), alias) == e.aliases.end()) {
    e.aliases.emplace_back(alias);
  }
  auto& v = by_alias_[norm];
  if (std::find(v.begin(), v.end(), entity) == v.end()) v.push_back(entity);
}

const Entity& KnowledgeGraph::entity(EntityId id) const {
  if (!contains(id)) throw IntegrityError("unknown entity id " + std::to_string(raw(id)));
  return entities_[raw(id)];
}

const std::string& KnowledgeGraph::relation_label(RelationId id) const {
  if (raw(id) >= relations_.size()) {
    throw IntegrityError("unknown relation id " + std::to_string(raw(id)));
  }
  return relations_[raw(id)];
}

const Triple& KnowledgeGraph::triple(TripleId id) const {
  if (!contains(id)) throw IntegrityError("dangling triple id " + evidence_id(id));
  return triples_[raw(id)];
}

std::optional<EntityId> KnowledgeGraph::find_entity(std::string_view exact_label) const {
  auto it = entity_by_label_.find(std::string(exact_label));
  if (it == entity_by_label_.end()) return std::nullopt;
  return it->second;
}

std::optional<RelationId> KnowledgeGraph::find_relation(std::string_view exact_label) const {
  auto it = relation_by_label_.find(std::string(exact_label));
  if (it == relation_by_label_.end()) return std::nullopt;
  return it->second;
}

std::span<const EntityId> KnowledgeGraph::entities_with_normalized_label(
    std::string_view normalized) const {
  auto it = by_normalized_label_.find(normalized);
  if (it == by_normalized_label_.end()) return {};
  return it->second;
}

std::span<const EntityId> KnowledgeGraph::entities_with_alias(std::string_view normalized) const {
  auto it = by_alias_.find(normalized);
  if (it == by_alias_.end()) return {};
  return it->second;
}

std::span<const TripleId> KnowledgeGraph::incident(EntityId id) const {
  if (!contains(id)) throw LookupError("unknown entity id " + std::to_string(raw(id)));
  return adjacency_[raw(id)];
}

KnowledgeGraph parse_triples(std::istream& in, std::string_view source) {
  KnowledgeGraph kg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(std::string(source) + ":" + std::to_string(line_no) +
                           ": expected <head>\\t<relation>\\t<tail>, got " +
                           std::to_string(fields.size()) + " fields",
                       line_no);
    }
    const auto h = text::trim(fields[0]);
    const auto r = text::trim(fields[1]);
    const auto t = text::trim(fields[2]);
    if (h.empty() || r.empty() || t.empty()) {
      throw ParseError(std::string(source) + ":" + std::to_string(line_no) + ": empty field",
                       line_no);
    }
    kg.add_triple(h, r, t);
  }
  return kg;
}

KnowledgeGraph load_triples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read triples file: " + path.string());
  return parse_triples(in, path.string());
}

AliasTable parse_aliases(std::istream& in, std::string_view source) {
  AliasTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() != 2 || text::trim(fields[0]).empty() || text::trim(fields[1]).empty()) {
      throw ParseError(std::string(source) + ":" + std::to_string(line_no) +
                           ": expected <alias>\\t<entity>",
                       line_no);
    }
    table[text::normalize_label(fields[0])] = std::string(text::trim(fields[1]));
  }
  return table;
}

AliasTable load_aliases(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read alias file: " + path.string());
  return parse_aliases(in, path.string());
}

std::size_t attach_aliases(KnowledgeGraph& kg, const AliasTable& aliases) {
  std::size_t skipped = 0;
  for (const auto& [alias, label] : aliases) {
    if (auto e = kg.find_entity(label)) {
      kg.add_alias(*e, alias);
    } else {
      ++skipped;
    }
  }
  return skipped;
}

namespace {

std::optional<EntityId> unique_or_throw(const KnowledgeGraph& kg, std::span<const EntityId> hits,
                                        std::string_view what) {
  if (hits.empty()) return std::nullopt;
  if (hits.size() == 1) return hits.front();
  std::string msg = "ambiguous entity link for '" + std::string(what) + "': candidates";
  for (auto id : hits) msg += " '" + kg.entity(id).label + "'";
  throw AmbiguityError(msg);
}

}  // namespace

std::optional<EntityId> link_entity(const KnowledgeGraph& kg, std::string_view item_label,
                                    const AliasTable* aliases) {
  const auto norm = text::normalize_label(item_label);
  if (norm.empty()) return std::nullopt;
  if (auto hit = unique_or_throw(kg, kg.entities_with_normalized_label(norm), item_label)) {
    return hit;
  }
  if (auto hit = unique_or_throw(kg, kg.entities_with_alias(norm), item_label)) return hit;
  if (aliases != nullptr) {
    auto it = aliases->find(norm);
    if (it != aliases->end()) {
      if (auto exact = kg.find_entity(it->second)) return exact;
      return unique_or_throw(kg, kg.entities_with_normalized_label(text::normalize_label(it->second)),
                             it->second);
    }
  }
  return std::nullopt;
}

Subgraph extract_k_hop(const KnowledgeGraph& kg, EntityId center, std::size_t k,
                       std::size_t max_triples) {
  if (!kg.contains(center)) {
    throw LookupError("unknown center entity id " + std::to_string(raw(center)));
  }
  Subgraph out;
  out.center = center;
  out.radius = k;
  if (k == 0) return out;

  std::unordered_set<std::uint32_t> visited{raw(center)};
  std::unordered_set<std::uint32_t> taken;
  std::vector<EntityId> frontier{center};
  std::vector<TripleId> layer;
  for (std::size_t depth = 0; depth < k && !frontier.empty(); ++depth) {
    layer.clear();
    std::vector<EntityId> next;
    for (auto node : frontier) {
      for (auto tid : kg.incident(node)) {
        if (taken.insert(raw(tid)).second) layer.push_back(tid);
        const auto& t = kg.triple(tid);
        const auto other = t.head == node ? t.tail : t.head;
        if (visited.insert(raw(other)).second) next.push_back(other);
      }
    }
    std::sort(layer.begin(), layer.end());
    for (auto tid : layer) {
      if (out.triples.size() >= max_triples) {
        out.truncated = true;
        return out;
      }
      out.triples.push_back(tid);
    }
    frontier = std::move(next);
  }
  return out;
}

FilteredSubgraph filter_relations(const Subgraph& sub, const KnowledgeGraph& kg,
                                  const UserProfile& profile, const RelationSet* allowlist) {
  std::unordered_set<std::string> facet_tokens;
  if (allowlist == nullptr) {
    for (const auto& f : profile.facets) {
      for (auto& tok : text::word_tokens(f.key)) facet_tokens.insert(std::move(tok));
      for (auto& tok : text::word_tokens(f.value)) facet_tokens.insert(std::move(tok));
    }
  }
  auto overlaps = [&](std::string_view label) {
    for (const auto& tok : text::word_tokens(label)) {
      if (facet_tokens.contains(tok)) return true;
    }
    return false;
  };

  FilteredSubgraph out{sub, false};
  out.subgraph.triples.clear();
  for (auto tid : sub.triples) {
    const auto& t = kg.triple(tid);
    const auto& rel = kg.relation_label(t.relation);
    const bool keep = allowlist != nullptr
                          ? allowlist->contains(rel)
                          : overlaps(rel) || overlaps(kg.entity(t.tail).label);
    if (keep) out.subgraph.triples.push_back(tid);
  }
  if (out.subgraph.triples.empty()) return FilteredSubgraph{sub, false};
  out.applied = true;
  return out;
}

}  // namespace matrag
