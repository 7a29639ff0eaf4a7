#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "matrag/backend.hpp"
#include "matrag/corpus.hpp"
#include "matrag/index.hpp"
#include "matrag/kg.hpp"
#include "matrag/profile.hpp"

namespace matrag {

// --- item attributes --------------------------------------------------------

// (key, value), both normalized with text::normalize_attribute.
using Attribute = std::pair<std::string, std::string>;
using AttributeSet = std::set<Attribute>;
using AttributeTable = std::map<std::string, AttributeSet, std::less<>>;

// Line format: <item>\t<key>=<value>\t<key>=<value>...
AttributeTable parse_item_attributes(std::istream& in, std::string_view source);
AttributeTable load_item_attributes(const std::filesystem::path& path);

// Attributes per item: the attribute file plus, when a graph is given, one
// (relation label, neighbor label) pair per triple incident to the item's
// entity. Built eagerly, read-only afterwards.
class ItemCatalog {
 public:
  ItemCatalog() = default;
  ItemCatalog(const AttributeTable* file_attributes, const KnowledgeGraph* kg,
              const AliasTable* aliases, std::span<const std::string> items);

  // Empty for an unknown item.
  const AttributeSet& attributes(std::string_view item) const;
  std::optional<EntityId> entity(std::string_view item) const;
  std::vector<std::string> items() const;

 private:
  std::map<std::string, AttributeSet, std::less<>> attributes_;
  std::map<std::string, EntityId, std::less<>> entities_;
};

// --- user modeling ----------------------------------------------------------

struct ProfileOptions {
  double positive_threshold = 4.0;
  double half_life_days = 90.0;
  std::uint64_t seed = 0;
};

// `history` ascending by time. Explicit facets come from the backend reading
// the review texts; implicit facets are attributes of positively rated items
// weighted by frequency over the most frequent one; temporal facets reweight
// each occurrence by exp(-ln2 * age / half_life); contextual facets count
// interaction context pairs. A backend failure drops only the explicit channel
// and sets `degraded`.
UserProfile build_profile(const Backend& backend, std::string_view user_id,
                          std::span<const Interaction> history, std::int64_t now,
                          const ItemCatalog& catalog, const ProfileOptions& options = {});

// Facet lines for prompts: "key=value (source, weight)".
std::vector<std::string> describe_facets(const UserProfile& profile);

// Reads "key=value" lines or a flat JSON object from a user-modeling reply.
std::vector<Attribute> parse_profile_reply(std::string_view reply);

// --- item analysis ----------------------------------------------------------

struct RetrievalOptions {
  std::size_t k = 10;  // retrieved slices
  std::size_t n = 5;   // kept after rerank
  std::size_t k_hop = 2;
  std::size_t max_triples = kDefaultMaxTriples;
  const RelationSet* allowlist = nullptr;
  std::uint64_t seed = 0;
};

struct ItemAnalysis {
  std::vector<ScoredSubgraph> subgraphs;  // rerank order
  bool linked = false;
  bool degraded = false;
  std::vector<std::string> notes;
};

inline constexpr std::string_view kNoEvidenceKey = "no-evidence";

ScoredSubgraph no_evidence_subgraph();

// Embedding text for retrieval: the query if present, else the rendered
// profile, else the item id.
std::string retrieval_query_text(const std::optional<std::string>& query,
                                 const UserProfile& profile, std::string_view item_id);

// Links the item, extracts its k-hop neighborhood, filters it against the
// profile, splits it into per-relation slices, retrieves the top K slices by
// cosine to the query embedding and asks the backend to rerank them down to N.
// `query_embedding` may be supplied to skip re-embedding the query per item.
ItemAnalysis analyze_item(const Backend& backend, const KnowledgeGraph& kg,
                          const TripleEmbeddings& triples, const AliasTable* aliases,
                          std::string_view item_id, const UserProfile& profile,
                          const std::optional<std::string>& query,
                          const RetrievalOptions& options,
                          const Vector* query_embedding = nullptr);

// Parses a rerank reply into 0-based indices. Valid numbers are taken in
// order, duplicates and out-of-range ones ignored, missing ones appended in
// the original order. nullopt when the reply names no valid candidate.
std::optional<std::vector<std::size_t>> parse_permutation(std::string_view reply,
                                                          std::size_t count);

// --- scoring ----------------------------------------------------------------

inline constexpr std::size_t kDefaultCfHistory = 10;

// Binarized item columns over a training store.
class CollaborativeIndex {
 public:
  explicit CollaborativeIndex(const InteractionStore& train);

  // |U_a ∩ U_b| / sqrt(|U_a| |U_b|); 0 for an unseen item.
  double item_cosine(std::string_view a, std::string_view b) const;
  // The user's last L distinct items, most recent first.
  std::vector<std::string> recent_items(std::string_view user_id, std::size_t l) const;

 private:
  const std::vector<std::uint32_t>* users_of(std::string_view item) const;

  const InteractionStore& train_;
  std::map<std::string, std::vector<std::uint32_t>, std::less<>> columns_;
};

double score_cf(const CollaborativeIndex& cf, std::string_view user_id, std::string_view item_id,
                std::size_t l = kDefaultCfHistory);

double score_cb(const UserProfile& profile, const AttributeSet& item_attributes);

struct LlmScore {
  double value = 0.5;
  bool degraded = false;
};

inline constexpr double kLlmFallbackScore = 0.5;

// Knowledge lines: every triple of the retained subgraphs, tagged.
std::vector<std::string> knowledge_lines(std::span<const ScoredSubgraph> subgraphs,
                                         const KnowledgeGraph& kg);

LlmScore score_llm(const Backend& backend, const UserProfile& profile, std::string_view item_id,
                   std::span<const ScoredSubgraph> subgraphs, const KnowledgeGraph& kg,
                   std::uint64_t seed = 0);
// "preference: 0.83" -> 0.83; nullopt when no number in [0,1] is found.
std::optional<double> parse_preference(std::string_view reply);

struct HybridWeights {
  double alpha = 0.3;
  double beta = 0.3;
  double gamma = 0.4;

  // Throws ValidationError unless non-negative and summing to 1 within 1e-9.
  void validate() const;
  // Scales to sum 1; throws ValidationError if all are zero.
  HybridWeights normalized() const;
  // New alpha, with beta and gamma rescaled proportionally to fill the rest.
  HybridWeights with_alpha(double alpha) const;

  friend bool operator==(const HybridWeights&, const HybridWeights&) = default;
};

double hybrid_score(double cf, double cb, double llm, const HybridWeights& weights = {});

// --- reasoning --------------------------------------------------------------

struct ReasoningStep {
  std::string statement;
  std::vector<std::string> evidence;  // "t<k>" triples, "h<k>" history entries
  bool aggregation = false;

  friend bool operator==(const ReasoningStep&, const ReasoningStep&) = default;
};

struct ReasoningChain {
  std::string item_id;
  std::vector<ReasoningStep> steps;

  // "- <statement> [E:..] [E:..]" per step.
  std::vector<std::string> lines() const;
  std::vector<std::string> evidence_ids() const;

  friend bool operator==(const ReasoningChain&, const ReasoningChain&) = default;
};

struct Recommendation {
  std::string item_id;
  double score = 0.0;
  double cf_score = 0.0;
  double cb_score = 0.0;
  double llm_score = 0.0;
  ReasoningChain chain;
  std::vector<ScoredSubgraph> retrieved;

  friend bool operator==(const Recommendation&, const Recommendation&) = default;
};

// History entries are cited as "h<k>", the 1-based index into `history`.
std::string history_evidence_id(std::size_t index);
std::optional<std::size_t> parse_history_evidence(std::string_view id);

struct ChainContext {
  const UserProfile& profile;
  std::span<const Interaction> history;
  const ItemCatalog& catalog;
  const KnowledgeGraph* kg = nullptr;  // null when retrieval carries no triples
  const CollaborativeIndex* cf = nullptr;
  std::size_t cf_history = kDefaultCfHistory;
  std::size_t max_facet_steps = 5;
  std::size_t max_history_refs = 3;
};

// Facet steps (one per matched facet with evidence), then a collaborative
// step when cf > 0, then an aggregation step stating the three component
// scores. The aggregation step also cites the leading retained triples.
ReasoningChain build_reasoning_chain(const Recommendation& rec, const ChainContext& ctx);
// A chain carrying only the aggregation step.
ReasoningChain aggregation_only_chain(const Recommendation& rec, const KnowledgeGraph* kg);

// --- explanation ------------------------------------------------------------

struct Explanation {
  std::string item_id;
  ExplanationMode mode = ExplanationMode::detailed;
  std::string text;
  std::vector<std::string> cited_evidence;

  friend bool operator==(const Explanation&, const Explanation&) = default;
};

Explanation make_explanation(std::string item_id, ExplanationMode mode, std::string text);

// Ids an explanation may cite: the chain's plus every retained triple's.
std::vector<std::string> citable_evidence(const Recommendation& rec);

// Comparative mode requires at least one alternative (ValidationError).
// Foreign tags are removed and reported through `stripped`. Backend failures
// propagate.
Explanation generate_explanation(const Backend& backend, const Recommendation& rec,
                                 const UserProfile& profile, const KnowledgeGraph* kg,
                                 ExplanationMode mode,
                                 std::span<const Recommendation> alternatives = {},
                                 std::uint64_t seed = 0,
                                 std::vector<std::string>* stripped = nullptr);

// Fixed, backend-free explanation used when the explanation agent is off.
Explanation template_explanation(const Recommendation& rec, ExplanationMode mode);

// --- constraints and diversity ---------------------------------------------

struct Constraint {
  enum class Op { eq, le, ge };
  std::string key;
  Op op = Op::eq;
  std::string value;  // eq
  double bound = 0.0;  // le, ge

  friend bool operator==(const Constraint&, const Constraint&) = default;
};

// "key=value,key<=n,key>=n"; throws ValidationError on malformed input.
std::vector<Constraint> parse_constraints(std::string_view s);
bool satisfies(const AttributeSet& attributes, std::span<const Constraint> constraints);

// Maximal-marginal-relevance order over `scores` (higher is better) using
// binary attribute-vector cosine as the redundancy term. Returns indices.
std::vector<std::size_t> mmr_order(std::span<const double> scores,
                                   std::span<const AttributeSet* const> attributes,
                                   double lambda, std::size_t k);

}  // namespace matrag
