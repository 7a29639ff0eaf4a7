#include "matrag/agents.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <unordered_set>

#include <json.hpp>

#include "matrag/error.hpp"
#include "matrag/prompts.hpp"
#include "matrag/text.hpp"

namespace matrag {

// --- item attributes --------------------------------------------------------

AttributeTable parse_item_attributes(std::istream& in, std::string_view source) {
  AttributeTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, '\t');
    const auto item = text::trim(fields[0]);
    if (item.empty()) {
      throw ParseError(std::string(source) + ":" + std::to_string(line_no) + ": empty item id",
                       line_no);
    }
    auto& attrs = table[std::string(item)];
    for (std::size_t i = 1; i < fields.size(); ++i) {
      if (text::trim(fields[i]).empty()) continue;
      const auto eq = fields[i].find('=');
      if (eq == std::string_view::npos) {
        throw ParseError(std::string(source) + ":" + std::to_string(line_no) + ": field " +
                             std::to_string(i + 1) + " is not key=value",
                         line_no);
      }
      auto key = text::normalize_attribute(fields[i].substr(0, eq));
      auto value = text::normalize_attribute(fields[i].substr(eq + 1));
      if (key.empty() || value.empty()) {
        throw ParseError(std::string(source) + ":" + std::to_string(line_no) + ": field " +
                             std::to_string(i + 1) + " has an empty key or value",
                         line_no);
      }
      attrs.emplace(std::move(key), std::move(value));
    }
  }
  return table;
}

AttributeTable load_item_attributes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read attribute file " + path.string());
  return parse_item_attributes(in, path.string());
}

ItemCatalog::ItemCatalog(const AttributeTable* file_attributes, const KnowledgeGraph* kg,
                         const AliasTable* aliases, std::span<const std::string> items) {
  std::set<std::string, std::less<>> universe(items.begin(), items.end());
  if (file_attributes != nullptr) {
    for (const auto& [item, attrs] : *file_attributes) {
      universe.insert(item);
      attributes_[item].insert(attrs.begin(), attrs.end());
    }
  }
  for (const auto& item : universe) {
    auto& attrs = attributes_[item];
    if (kg == nullptr) continue;
    std::optional<EntityId> e;
    try {
      e = link_entity(*kg, item, aliases);
    } catch (const AmbiguityError&) {
      continue;
    }
    if (!e) continue;
    entities_.emplace(item, *e);
    for (auto tid : kg->incident(*e)) {
      const auto& t = kg->triple(tid);
      const EntityId other = t.head == *e ? t.tail : t.head;
      auto key = text::normalize_attribute(kg->relation_label(t.relation));
      auto value = text::normalize_attribute(kg->entity(other).label);
      if (!key.empty() && !value.empty()) attrs.emplace(std::move(key), std::move(value));
    }
  }
}

const AttributeSet& ItemCatalog::attributes(std::string_view item) const {
  static const AttributeSet kEmpty;
  auto it = attributes_.find(item);
  return it == attributes_.end() ? kEmpty : it->second;
}

std::optional<EntityId> ItemCatalog::entity(std::string_view item) const {
  auto it = entities_.find(item);
  if (it == entities_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> ItemCatalog::items() const {
  std::vector<std::string> out;
  out.reserve(attributes_.size());
  for (const auto& [item, attrs] : attributes_) out.push_back(item);
  return out;
}

// --- user modeling ----------------------------------------------------------

std::vector<Attribute> parse_profile_reply(std::string_view reply) {
  std::vector<Attribute> out;
  auto add = [&](std::string_view k, std::string_view v) {
    auto key = text::normalize_attribute(k);
    auto value = text::normalize_attribute(v);
    if (!key.empty() && !value.empty()) out.emplace_back(std::move(key), std::move(value));
  };
  const auto body = text::trim(reply);
  if (body.starts_with('{')) {
    const auto doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_object()) {
      for (const auto& [k, v] : doc.items()) {
        if (v.is_string()) {
          add(k, v.get<std::string>());
        } else if (v.is_array()) {
          for (const auto& e : v) {
            if (e.is_string()) add(k, e.get<std::string>());
          }
        }
      }
      return out;
    }
  }
  for (auto line : text::split(body, '\n')) {
    line = text::trim(line);
    if (line.starts_with("- ")) line.remove_prefix(2);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) continue;
    add(line.substr(0, eq), line.substr(eq + 1));
  }
  return out;
}

UserProfile build_profile(const Backend& backend, std::string_view user_id,
                          std::span<const Interaction> history, std::int64_t now,
                          const ItemCatalog& catalog, const ProfileOptions& options) {
  if (!(options.half_life_days > 0.0)) throw ValidationError("half_life_days must be positive");
  UserProfile profile;
  profile.user_id = std::string(user_id);
  profile.built_at = now;
  profile.history_length = history.size();
  std::vector<PreferenceFacet> facets;

  std::vector<std::string> reviews;
  for (const auto& h : history) {
    if (h.text && !text::trim(*h.text).empty()) reviews.push_back(*h.text);
  }
  if (!reviews.empty()) {
    try {
      const auto reply = complete(backend, {prompts::user_modeling(reviews), options.seed});
      for (auto& [k, v] : parse_profile_reply(reply)) {
        facets.push_back({std::move(k), std::move(v), 1.0, FacetSource::explicit_pref});
      }
    } catch (const BackendError&) {
      profile.degraded = true;
    }
  }

  const double half_life = options.half_life_days * 86400.0;
  std::map<Attribute, double> counts;
  std::map<Attribute, double> decayed;
  for (const auto& h : history) {
    if (h.rating < options.positive_threshold) continue;
    const double age = static_cast<double>(std::max<std::int64_t>(0, now - h.timestamp));
    const double decay = std::exp(-std::numbers::ln2 * age / half_life);
    for (const auto& a : catalog.attributes(h.item_id)) {
      counts[a] += 1.0;
      decayed[a] += decay;
    }
  }
  double max_count = 0.0;
  for (const auto& [a, c] : counts) max_count = std::max(max_count, c);
  for (const auto& [a, c] : counts) {
    facets.push_back({a.first, a.second, c / max_count, FacetSource::implicit_pref});
    facets.push_back({a.first, a.second, decayed[a] / max_count, FacetSource::temporal});
  }

  std::map<Attribute, double> context_counts;
  for (const auto& h : history) {
    for (const auto& [k, v] : h.context) {
      auto key = text::normalize_attribute(k);
      auto value = text::normalize_attribute(v);
      if (!key.empty() && !value.empty()) context_counts[{key, value}] += 1.0;
    }
  }
  double max_context = 0.0;
  for (const auto& [a, c] : context_counts) max_context = std::max(max_context, c);
  for (const auto& [a, c] : context_counts) {
    facets.push_back({a.first, a.second, c / max_context, FacetSource::contextual});
  }

  canonicalize(facets);
  profile.facets = std::move(facets);
  return profile;
}

std::vector<std::string> describe_facets(const UserProfile& profile) {
  std::vector<std::string> out;
  out.reserve(profile.facets.size());
  for (const auto& f : profile.facets) {
    out.push_back(f.key + "=" + f.value + " (" + std::string(to_string(f.source)) + ", " +
                  text::format_fixed(f.weight, 3) + ")");
  }
  return out;
}

// --- item analysis ----------------------------------------------------------

ScoredSubgraph no_evidence_subgraph() {
  ScoredSubgraph s;
  s.key = std::string(kNoEvidenceKey);
  s.similarity = 0.0;
  s.retrieval_rank = 1;
  s.rerank_rank = 1;
  return s;
}

std::string retrieval_query_text(const std::optional<std::string>& query,
                                 const UserProfile& profile, std::string_view item_id) {
  if (query && !text::trim(*query).empty()) return *query;
  auto rendered = profile.render();
  if (!text::trim(rendered).empty()) return rendered;
  return std::string(item_id);
}

std::optional<std::vector<std::size_t>> parse_permutation(std::string_view reply,
                                                          std::size_t count) {
  std::vector<std::size_t> order;
  std::vector<bool> seen(count, false);
  std::size_t i = 0;
  while (i < reply.size()) {
    if (!std::isdigit(static_cast<unsigned char>(reply[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
    // A digit run glued to a decimal point is not a candidate number.
    const bool decimal = (i > 0 && reply[i - 1] == '.') || (j < reply.size() && reply[j] == '.' &&
                                                            j + 1 < reply.size() &&
                                                            std::isdigit(static_cast<unsigned char>(reply[j + 1])));
    if (!decimal) {
      if (auto v = text::parse_int64(reply.substr(i, j - i)); v && *v >= 1 &&
                                                              static_cast<std::size_t>(*v) <= count) {
        const auto idx = static_cast<std::size_t>(*v - 1);
        if (!seen[idx]) {
          seen[idx] = true;
          order.push_back(idx);
        }
      }
    }
    i = j;
  }
  if (order.empty()) return std::nullopt;
  for (std::size_t k = 0; k < count; ++k) {
    if (!seen[k]) order.push_back(k);
  }
  return order;
}

namespace {

// Per-relation slices of a subgraph, keyed "<item>#<relation>".
std::map<std::string, Subgraph> slice_by_relation(const Subgraph& sub, const KnowledgeGraph& kg,
                                                  std::string_view item_id) {
  std::map<std::string, Subgraph> slices;
  if (sub.triples.empty()) {
    slices.emplace(std::string(item_id), sub);
    return slices;
  }
  for (auto tid : sub.triples) {
    const auto key =
        std::string(item_id) + "#" + kg.relation_label(kg.triple(tid).relation);
    auto [it, inserted] = slices.try_emplace(key);
    if (inserted) {
      it->second.center = sub.center;
      it->second.radius = sub.radius;
      it->second.truncated = sub.truncated;
    }
    it->second.triples.push_back(tid);
  }
  return slices;
}

}  // namespace

ItemAnalysis analyze_item(const Backend& backend, const KnowledgeGraph& kg,
                          const TripleEmbeddings& triples, const AliasTable* aliases,
                          std::string_view item_id, const UserProfile& profile,
                          const std::optional<std::string>& query,
                          const RetrievalOptions& options, const Vector* query_embedding) {
  if (options.n < 1 || options.k < options.n) {
    throw ValidationError("retrieval requires K >= N >= 1");
  }
  ItemAnalysis out;
  std::optional<EntityId> center;
  try {
    center = link_entity(kg, item_id, aliases);
  } catch (const AmbiguityError& e) {
    out.degraded = true;
    out.notes.push_back(e.what());
  }
  if (!center) {
    if (!out.degraded) out.notes.push_back("item " + std::string(item_id) + " not in graph");
    out.subgraphs.push_back(no_evidence_subgraph());
    return out;
  }
  out.linked = true;

  const auto sub = extract_k_hop(kg, *center, options.k_hop, options.max_triples);
  const auto filtered = filter_relations(sub, kg, profile, options.allowlist);
  const auto slices = slice_by_relation(filtered.subgraph, kg, item_id);

  std::vector<ScoredSubgraph> retrieved;
  try {
    VectorIndex index;
    for (const auto& [key, slice] : slices) {
      index.add(key, embed_subgraph(triples, backend, slice, kg));
    }
    const Vector q = query_embedding != nullptr
                         ? *query_embedding
                         : embed_text(backend, retrieval_query_text(query, profile, item_id));
    const auto hits = index.top_k(q, options.k);
    for (std::size_t i = 0; i < hits.size(); ++i) {
      retrieved.push_back({hits[i].key, slices.at(hits[i].key), hits[i].similarity, i + 1, {}});
    }
  } catch (const BackendError& e) {
    out.degraded = true;
    out.notes.push_back(std::string("embedding failed: ") + e.what());
    retrieved.clear();
    for (const auto& [key, slice] : slices) {
      if (retrieved.size() == options.k) break;
      retrieved.push_back({key, slice, 0.0, retrieved.size() + 1, {}});
    }
  }

  std::vector<std::size_t> order(retrieved.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  if (retrieved.size() > 1) {
    std::vector<std::string> candidates;
    candidates.reserve(retrieved.size());
    for (const auto& r : retrieved) candidates.push_back(verbalize_subgraph(r.subgraph, kg));
    try {
      const auto reply = complete(
          backend, {prompts::rerank(describe_facets(profile), query.value_or(""), candidates),
                    options.seed});
      if (auto perm = parse_permutation(reply, retrieved.size())) {
        order = std::move(*perm);
      } else {
        out.degraded = true;
        out.notes.push_back("rerank reply unparseable; kept similarity order");
      }
    } catch (const BackendError& e) {
      out.degraded = true;
      out.notes.push_back(std::string("rerank failed: ") + e.what());
    }
  }
  const std::size_t keep = std::min(options.n, order.size());
  out.subgraphs.reserve(keep);
  for (std::size_t r = 0; r < keep; ++r) {
    auto s = std::move(retrieved[order[r]]);
    s.rerank_rank = r + 1;
    out.subgraphs.push_back(std::move(s));
  }
  return out;
}

// --- scoring ----------------------------------------------------------------

CollaborativeIndex::CollaborativeIndex(const InteractionStore& train) : train_(train) {
  std::map<std::string_view, std::uint32_t> user_ids;
  for (const auto& i : train.interactions()) {
    user_ids.try_emplace(i.user_id, static_cast<std::uint32_t>(user_ids.size()));
  }
  for (const auto& i : train.interactions()) {
    columns_[i.item_id].push_back(user_ids.at(i.user_id));
  }
  for (auto& [item, users] : columns_) {
    std::sort(users.begin(), users.end());
    users.erase(std::unique(users.begin(), users.end()), users.end());
  }
}

const std::vector<std::uint32_t>* CollaborativeIndex::users_of(std::string_view item) const {
  auto it = columns_.find(item);
  return it == columns_.end() ? nullptr : &it->second;
}

double CollaborativeIndex::item_cosine(std::string_view a, std::string_view b) const {
  const auto* ua = users_of(a);
  const auto* ub = users_of(b);
  if (ua == nullptr || ub == nullptr || ua->empty() || ub->empty()) return 0.0;
  std::size_t common = 0;
  auto i = ua->begin();
  auto j = ub->begin();
  while (i != ua->end() && j != ub->end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  return std::min(1.0, static_cast<double>(common) /
                           std::sqrt(static_cast<double>(ua->size()) *
                                     static_cast<double>(ub->size())));
}

std::vector<std::string> CollaborativeIndex::recent_items(std::string_view user_id,
                                                          std::size_t l) const {
  std::vector<std::string> out;
  const auto positions = train_.user_positions(user_id);
  for (auto it = positions.rbegin(); it != positions.rend() && out.size() < l; ++it) {
    const auto& item = train_.at(*it).item_id;
    if (std::find(out.begin(), out.end(), item) == out.end()) out.push_back(item);
  }
  return out;
}

double score_cf(const CollaborativeIndex& cf, std::string_view user_id, std::string_view item_id,
                std::size_t l) {
  const auto recent = cf.recent_items(user_id, l);
  if (recent.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& j : recent) sum += cf.item_cosine(item_id, j);
  return sum / static_cast<double>(recent.size());
}

double score_cb(const UserProfile& profile, const AttributeSet& item_attributes) {
  double matched = 0.0;
  double total = 0.0;
  for (const auto& f : profile.facets) {
    total += f.weight;
    if (item_attributes.contains({f.key, f.value})) matched += f.weight;
  }
  return total > 0.0 ? std::clamp(matched / total, 0.0, 1.0) : 0.0;
}

std::vector<std::string> knowledge_lines(std::span<const ScoredSubgraph> subgraphs,
                                         const KnowledgeGraph& kg) {
  std::vector<std::string> out;
  std::unordered_set<std::uint32_t> seen;
  for (const auto& s : subgraphs) {
    for (auto tid : s.subgraph.triples) {
      if (seen.insert(raw(tid)).second) {
        out.push_back(text::format_tag(evidence_id(tid)) + " " + verbalize_triple(kg, tid));
      }
    }
  }
  return out;
}

std::optional<double> parse_preference(std::string_view reply) {
  const auto v = text::find_number(reply);
  if (!v || !std::isfinite(*v) || *v < 0.0 || *v > 1.0) return std::nullopt;
  return *v;
}

LlmScore score_llm(const Backend& backend, const UserProfile& profile, std::string_view item_id,
                   std::span<const ScoredSubgraph> subgraphs, const KnowledgeGraph& kg,
                   std::uint64_t seed) {
  try {
    const auto prompt =
        prompts::preference_score(describe_facets(profile), item_id, knowledge_lines(subgraphs, kg));
    if (auto v = parse_preference(complete(backend, {prompt, seed}))) return {*v, false};
  } catch (const BackendError&) {
  }
  return {kLlmFallbackScore, true};
}

void HybridWeights::validate() const {
  for (double w : {alpha, beta, gamma}) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("hybrid weights must be non-negative");
  }
  if (std::abs(alpha + beta + gamma - 1.0) > 1e-9) {
    throw ValidationError("hybrid weights alpha+beta+gamma must sum to 1 (got " +
                          text::format_shortest(alpha + beta + gamma) + ")");
  }
}

HybridWeights HybridWeights::normalized() const {
  for (double w : {alpha, beta, gamma}) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("hybrid weights must be non-negative");
  }
  const double sum = alpha + beta + gamma;
  if (!(sum > 0.0)) throw ValidationError("hybrid weights are all zero");
  return {alpha / sum, beta / sum, gamma / sum};
}

HybridWeights HybridWeights::with_alpha(double a) const {
  if (!(a >= 0.0 && a <= 1.0)) throw ValidationError("alpha must lie in [0,1]");
  const double rest = beta + gamma;
  if (rest <= 0.0) return {a, (1.0 - a) / 2.0, (1.0 - a) / 2.0};
  return {a, (1.0 - a) * beta / rest, (1.0 - a) * gamma / rest};
}

double hybrid_score(double cf, double cb, double llm, const HybridWeights& w) {
  w.validate();
  for (double s : {cf, cb, llm}) {
    if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("component scores must lie in [0,1]");
  }
  return std::clamp(w.alpha * cf + w.beta * cb + w.gamma * llm, 0.0, 1.0);
}

// --- reasoning --------------------------------------------------------------

std::vector<std::string> ReasoningChain::lines() const {
  std::vector<std::string> out;
  out.reserve(steps.size());
  for (const auto& s : steps) {
    std::string line = "- " + s.statement;
    for (const auto& e : s.evidence) line += " " + text::format_tag(e);
    out.push_back(std::move(line));
  }
  return out;
}

std::vector<std::string> ReasoningChain::evidence_ids() const {
  std::vector<std::string> out;
  for (const auto& s : steps) {
    for (const auto& e : s.evidence) {
      if (std::find(out.begin(), out.end(), e) == out.end()) out.push_back(e);
    }
  }
  return out;
}

std::string history_evidence_id(std::size_t index) { return "h" + std::to_string(index + 1); }

std::optional<std::size_t> parse_history_evidence(std::string_view id) {
  if (id.size() < 2 || id.front() != 'h') return std::nullopt;
  auto v = text::parse_int64(id.substr(1));
  if (!v || *v < 1) return std::nullopt;
  return static_cast<std::size_t>(*v - 1);
}

namespace {

std::string aggregation_statement(const Recommendation& rec) {
  return "combined score " + text::format_fixed(rec.score, 3) + " from collaborative " +
         text::format_fixed(rec.cf_score, 3) + ", content " + text::format_fixed(rec.cb_score, 3) +
         " and model preference " + text::format_fixed(rec.llm_score, 3);
}

// Leading triples of the best-ranked retained subgraph.
std::vector<std::string> leading_triples(const Recommendation& rec, std::size_t limit) {
  std::vector<std::string> out;
  for (const auto& s : rec.retrieved) {
    if (s.subgraph.triples.empty()) continue;
    for (auto tid : s.subgraph.triples) {
      if (out.size() == limit) break;
      out.push_back(evidence_id(tid));
    }
    break;
  }
  return out;
}

ReasoningStep aggregation_step(const Recommendation& rec) {
  return {aggregation_statement(rec), leading_triples(rec, 3), true};
}

}  // namespace

ReasoningChain aggregation_only_chain(const Recommendation& rec, const KnowledgeGraph*) {
  return {rec.item_id, {aggregation_step(rec)}};
}

ReasoningChain build_reasoning_chain(const Recommendation& rec, const ChainContext& ctx) {
  ReasoningChain chain{rec.item_id, {}};
  const auto& item_attrs = ctx.catalog.attributes(rec.item_id);
  const auto item_entity = ctx.catalog.entity(rec.item_id);

  std::map<Attribute, double> matched;
  for (const auto& f : ctx.profile.facets) {
    Attribute a{f.key, f.value};
    if (!item_attrs.contains(a)) continue;
    auto& w = matched[a];
    w = std::max(w, f.weight);
  }
  std::vector<std::pair<Attribute, double>> ranked(matched.begin(), matched.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });

  for (const auto& [attr, weight] : ranked) {
    if (chain.steps.size() == ctx.max_facet_steps) break;
    const auto& [key, value] = attr;
    std::vector<std::string> evidence;
    if (ctx.kg != nullptr && item_entity) {
      for (const auto& s : rec.retrieved) {
        for (auto tid : s.subgraph.triples) {
          const auto& t = ctx.kg->triple(tid);
          // only facts about this item, not its neighbours
          if (t.head != *item_entity && t.tail != *item_entity) continue;
          if (text::normalize_attribute(ctx.kg->relation_label(t.relation)) != key) continue;
          const EntityId other = t.head == *item_entity ? t.tail : t.head;
          if (text::normalize_attribute(ctx.kg->entity(other).label) == value) {
            auto id = evidence_id(tid);
            if (std::find(evidence.begin(), evidence.end(), id) == evidence.end()) {
              evidence.push_back(std::move(id));
            }
          }
        }
      }
    }
    std::size_t refs = 0;
    for (std::size_t i = ctx.history.size(); i-- > 0 && refs < ctx.max_history_refs;) {
      const auto& h = ctx.history[i];
      const bool carries = ctx.catalog.attributes(h.item_id).contains(attr);
      const bool mentions = h.text && text::fold_case(*h.text).find(value) != std::string::npos;
      if (carries || mentions) {
        evidence.push_back(history_evidence_id(i));
        ++refs;
      }
    }
    if (evidence.empty()) continue;
    chain.steps.push_back(
        {"its " + key + " is " + value + ", which matches your profile", std::move(evidence),
         false});
  }

  if (ctx.cf != nullptr && rec.cf_score > 0.0) {
    std::vector<std::pair<double, std::size_t>> contributors;
    for (const auto& j : ctx.cf->recent_items(ctx.profile.user_id, ctx.cf_history)) {
      const double sim = ctx.cf->item_cosine(rec.item_id, j);
      if (sim <= 0.0) continue;
      for (std::size_t i = ctx.history.size(); i-- > 0;) {
        if (ctx.history[i].item_id == j) {
          contributors.emplace_back(sim, i);
          break;
        }
      }
    }
    std::stable_sort(contributors.begin(), contributors.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    if (contributors.size() > ctx.max_history_refs) contributors.resize(ctx.max_history_refs);
    if (!contributors.empty()) {
      std::string items;
      std::vector<std::string> evidence;
      for (const auto& [sim, i] : contributors) {
        if (!items.empty()) items += ", ";
        items += ctx.history[i].item_id;
        evidence.push_back(history_evidence_id(i));
      }
      chain.steps.push_back({"people who engaged with " + items +
                                 " also engaged with this item (collaborative score " +
                                 text::format_fixed(rec.cf_score, 3) + ")",
                             std::move(evidence), false});
    }
  }

  chain.steps.push_back(aggregation_step(rec));
  return chain;
}

// --- explanation ------------------------------------------------------------

Explanation make_explanation(std::string item_id, ExplanationMode mode, std::string text_) {
  Explanation e{std::move(item_id), mode, std::move(text_), {}};
  e.cited_evidence = text::extract_tags(e.text);
  return e;
}

std::vector<std::string> citable_evidence(const Recommendation& rec) {
  auto out = rec.chain.evidence_ids();
  for (const auto& s : rec.retrieved) {
    for (auto tid : s.subgraph.triples) {
      auto id = evidence_id(tid);
      if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(std::move(id));
    }
  }
  return out;
}

Explanation generate_explanation(const Backend& backend, const Recommendation& rec,
                                 const UserProfile& profile, const KnowledgeGraph* kg,
                                 ExplanationMode mode, std::span<const Recommendation> alternatives,
                                 std::uint64_t seed, std::vector<std::string>* stripped) {
  if (mode == ExplanationMode::comparative && alternatives.empty()) {
    throw ValidationError("comparative explanations need at least one alternative");
  }
  prompts::ExplanationInputs in;
  in.mode = mode;
  in.item = rec.item_id;
  in.profile_lines = describe_facets(profile);
  in.chain_lines = rec.chain.lines();
  if (kg != nullptr) in.knowledge_lines = knowledge_lines(rec.retrieved, *kg);
  if (mode == ExplanationMode::comparative) {
    in.alternative_item = alternatives.front().item_id;
    in.alternative_chain_lines = alternatives.front().chain.lines();
  }
  const auto reply = complete(backend, {prompts::explanation(in), seed});
  std::vector<std::string> removed;
  auto body = text::keep_tags(reply, citable_evidence(rec), &removed);
  if (stripped != nullptr) *stripped = removed;
  body = text::collapse_whitespace(body);
  if (mode == ExplanationMode::concise) {
    const auto sentences = text::split_sentences(body);
    body = sentences.empty() ? std::string() : sentences.front();
  }
  if (text::trim(body).empty()) return template_explanation(rec, mode);
  return make_explanation(rec.item_id, mode, std::move(body));
}

Explanation template_explanation(const Recommendation& rec, ExplanationMode mode) {
  std::string body = rec.item_id + " is recommended with a combined score of " +
                     text::format_fixed(rec.score, 3) + ".";
  if (mode != ExplanationMode::concise) {
    body += " The score blends collaborative " + text::format_fixed(rec.cf_score, 3) +
            ", content " + text::format_fixed(rec.cb_score, 3) + " and model preference " +
            text::format_fixed(rec.llm_score, 3) + " signals.";
  }
  return make_explanation(rec.item_id, mode, std::move(body));
}

// --- constraints and diversity ---------------------------------------------

std::vector<Constraint> parse_constraints(std::string_view s) {
  std::vector<Constraint> out;
  for (auto piece : text::split(s, ',')) {
    piece = text::trim(piece);
    if (piece.empty()) continue;
    Constraint c;
    std::size_t op_at = piece.find("<=");
    std::size_t op_len = 2;
    if (op_at != std::string_view::npos) {
      c.op = Constraint::Op::le;
    } else if ((op_at = piece.find(">=")) != std::string_view::npos) {
      c.op = Constraint::Op::ge;
    } else if ((op_at = piece.find('=')) != std::string_view::npos) {
      c.op = Constraint::Op::eq;
      op_len = 1;
    } else {
      throw ValidationError("constraint '" + std::string(piece) + "' needs =, <= or >=");
    }
    c.key = text::normalize_attribute(piece.substr(0, op_at));
    const auto rhs = text::trim(piece.substr(op_at + op_len));
    if (c.key.empty() || rhs.empty()) {
      throw ValidationError("constraint '" + std::string(piece) + "' has an empty side");
    }
    if (c.op == Constraint::Op::eq) {
      c.value = text::normalize_attribute(rhs);
    } else {
      auto v = text::parse_double(rhs);
      if (!v) throw ValidationError("constraint '" + std::string(piece) + "' bound is not a number");
      c.bound = *v;
    }
    out.push_back(std::move(c));
  }
  return out;
}

bool satisfies(const AttributeSet& attributes, std::span<const Constraint> constraints) {
  for (const auto& c : constraints) {
    bool ok = false;
    if (c.op == Constraint::Op::eq) {
      ok = attributes.contains({c.key, c.value});
    } else {
      for (auto it = attributes.lower_bound({c.key, ""}); it != attributes.end() && it->first == c.key;
           ++it) {
        auto v = text::parse_double(it->second);
        if (v && (c.op == Constraint::Op::le ? *v <= c.bound : *v >= c.bound)) {
          ok = true;
          break;
        }
      }
    }
    if (!ok) return false;
  }
  return true;
}

namespace {

double attribute_cosine(const AttributeSet& a, const AttributeSet& b) {
  if (a.empty() || b.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& x : a) common += b.contains(x) ? 1 : 0;
  return static_cast<double>(common) /
         std::sqrt(static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

}  // namespace

std::vector<std::size_t> mmr_order(std::span<const double> scores,
                                   std::span<const AttributeSet* const> attributes, double lambda,
                                   std::size_t k) {
  if (scores.size() != attributes.size()) throw ValidationError("mmr input sizes differ");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ValidationError("mmr lambda must lie in [0,1]");
  std::vector<std::size_t> chosen;
  std::vector<bool> used(scores.size(), false);
  static const AttributeSet kEmpty;
  auto attrs = [&](std::size_t i) -> const AttributeSet& {
    return attributes[i] != nullptr ? *attributes[i] : kEmpty;
  };
  while (chosen.size() < std::min(k, scores.size())) {
    std::size_t best = scores.size();
    double best_value = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (used[i]) continue;
      double redundancy = 0.0;
      for (auto j : chosen) redundancy = std::max(redundancy, attribute_cosine(attrs(i), attrs(j)));
      const double value = lambda * scores[i] - (1.0 - lambda) * redundancy;
      if (best == scores.size() || value > best_value) {
        best = i;
        best_value = value;
      }
    }
    used[best] = true;
    chosen.push_back(best);
  }
  return chosen;
}

}  // namespace matrag
