#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matrag/agents.hpp"
#include "matrag/backend.hpp"
#include "matrag/config.hpp"
#include "matrag/corpus.hpp"
#include "matrag/evalharness.hpp"
#include "matrag/index.hpp"
#include "matrag/kg.hpp"
#include "matrag/transparency.hpp"

namespace matrag {

enum class RequestKind { cold_start, re_rank, conversational, standard };
std::string_view to_string(RequestKind kind);

struct RecommendationRequest {
  std::string user_id;
  std::optional<std::string> query;
  std::size_t k = 10;
  std::vector<Constraint> constraints;
  ExplanationMode mode = ExplanationMode::detailed;
  std::size_t candidate_pool_size = 100;
  // Explicit candidates turn the request into a re-rank.
  std::optional<std::vector<std::string>> candidates;

  // Throws RequestError.
  void validate() const;
};

enum class TraceKind { thought, action, observation };
std::string_view to_string(TraceKind kind);

struct TraceEntry {
  TraceKind kind;
  std::string summary;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

struct RecommendationResponse {
  std::string user_id;
  RequestKind kind = RequestKind::standard;
  std::vector<Recommendation> recommendations;
  std::vector<Explanation> explanations;
  // nullopt when transparency scoring is disabled or failed.
  std::vector<std::optional<TransparencyScore>> transparency;
  std::vector<TraceEntry> trace;
  std::vector<std::string> degraded;
};

// Pretty-printed JSON; stable for identical inputs.
std::string to_json(const RecommendationResponse& response);

RequestKind classify_request(const RecommendationRequest& request, const InteractionStore& train);

// Popularity (train interaction count, ties by item id) over the item
// universe, minus the user's train items, filtered by the constraints.
// `explicit_candidates` restricts the universe for re-rank requests.
std::vector<std::string> select_candidates(const InteractionStore& train,
                                           const ItemCatalog& catalog,
                                           std::span<const std::string> universe,
                                           std::string_view user_id, RequestKind kind,
                                           std::size_t pool_size,
                                           std::span<const Constraint> constraints,
                                           const std::vector<std::string>* explicit_candidates =
                                               nullptr);

// Per-user state shared by every candidate of one request.
struct UserContext {
  std::string user_id;
  std::vector<Interaction> history;  // train history, ascending
  UserProfile profile;
  std::optional<std::string> query;
  std::optional<Vector> query_embedding;
  std::vector<std::string> degraded;
};

// Owns the read-only indices derived from the loaded data. All methods are
// const and safe to call concurrently.
class Pipeline {
 public:
  Pipeline(const Backend& backend, PipelineConfig config, const InteractionStore& train,
           const KnowledgeGraph* kg = nullptr, const AliasTable* aliases = nullptr,
           const AttributeTable* attributes = nullptr, const VectorIndex* triple_vectors = nullptr);

  RecommendationResponse handle(const RecommendationRequest& request) const;

  UserContext prepare_user(std::string_view user_id,
                           const std::optional<std::string>& query = std::nullopt) const;
  // Scores one candidate; the chain is built only when asked for.
  Recommendation score_item(const UserContext& user, std::string_view item_id, bool with_chain,
                            std::vector<std::string>* degraded = nullptr) const;
  std::vector<double> score_items(std::string_view user_id, std::span<const std::string> items) const;
  // Explanation and transparency for one user/item pair, as evaluate() wants
  // them. Comparative mode is explained in detailed mode.
  std::optional<ExplainedCase> explain(const std::string& user_id, const std::string& item_id) const;

  const PipelineConfig& config() const { return config_; }
  const ItemCatalog& catalog() const { return catalog_; }
  const std::vector<std::string>& universe() const { return universe_; }
  // Hybrid weights after ablations.
  const HybridWeights& weights() const { return weights_; }
  // Null under disable_kg.
  const KnowledgeGraph* kg() const { return kg_; }
  const Backend& backend() const { return backend_; }

 private:
  const Backend& backend_;
  PipelineConfig config_;
  const InteractionStore& train_;
  const KnowledgeGraph* kg_;
  const AliasTable* aliases_;
  HybridWeights weights_;
  ItemCatalog catalog_;
  std::vector<std::string> universe_;
  CollaborativeIndex cf_;
  std::unique_ptr<TripleEmbeddings> triple_embeddings_;
};

}  // namespace matrag
