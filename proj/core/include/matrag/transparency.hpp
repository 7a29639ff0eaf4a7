#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "matrag/agents.hpp"
#include "matrag/backend.hpp"
#include "matrag/index.hpp"
#include "matrag/kg.hpp"
#include "matrag/profile.hpp"

namespace matrag {

struct Claim {
  std::string text;
  std::optional<bool> entailed;

  friend bool operator==(const Claim&, const Claim&) = default;
};

// Sentence segmentation of the explanation. With a backend, claims come from a
// completion and are kept only if they occur in the explanation modulo
// whitespace.
std::vector<Claim> extract_claims(const Explanation& explanation,
                                  const Backend* backend = nullptr, std::uint64_t seed = 0);

// Evidence the claims are checked against: tagged chain statements, then the
// tagged triples of the retained subgraphs, one per line.
std::string evidence_text(const ReasoningChain& chain, std::span<const ScoredSubgraph> subgraphs,
                          const KnowledgeGraph* kg);

// Entailed claims over all claims; records each verdict on its claim. Zero
// claims score 0 and set *empty. Backend failures raise ScoringError.
double faithfulness(std::span<Claim> claims, const ReasoningChain& chain,
                    std::span<const ScoredSubgraph> subgraphs, const KnowledgeGraph* kg,
                    const Backend& backend, bool* empty = nullptr);

// (judge - 1) / 4. Backend failures raise ScoringError.
double coherence(const Explanation& explanation, const Backend& backend);

// max(0, cosine(explanation without tags, rendered profile)). An empty profile
// scores 0 and sets *empty_profile. Backend failures raise ScoringError.
double personalization(const Explanation& explanation, const UserProfile& profile,
                       const Backend& backend, bool* empty_profile = nullptr);

struct TransparencyWeights {
  double w1 = 0.5;
  double w2 = 0.25;
  double w3 = 0.25;

  void validate() const;

  friend bool operator==(const TransparencyWeights&, const TransparencyWeights&) = default;
};

struct TransparencyScore {
  double faithfulness = 0.0;
  double coherence = 0.0;
  double personalization = 0.0;
  double composite = 0.0;
  TransparencyWeights weights;
  std::vector<std::string> flags;

  friend bool operator==(const TransparencyScore&, const TransparencyScore&) = default;
};

// Throws ValidationError for bad weights or inputs outside [0,1].
TransparencyScore composite(double faith, double coher, double pers,
                            const TransparencyWeights& weights = {});

struct ScoringOptions {
  TransparencyWeights weights;
  bool backend_claims = false;
  std::uint64_t seed = 0;
};

TransparencyScore score_explanation(const Explanation& explanation, const Recommendation& rec,
                                    const UserProfile& profile, const KnowledgeGraph* kg,
                                    const Backend& backend, const ScoringOptions& options = {});

// "<item>\t<faith>\t<coher>\t<pers>\t<trans>\n", four decimals.
std::string format_score_line(std::string_view item_id, const TransparencyScore& score);

}  // namespace matrag
