#include "matrag/transparency.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "matrag/error.hpp"
#include "matrag/prompts.hpp"
#include "matrag/text.hpp"

namespace matrag {

namespace {

std::string squeeze(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

}  // namespace

std::vector<Claim> extract_claims(const Explanation& explanation, const Backend* backend,
                                  std::uint64_t seed) {
  std::vector<Claim> out;
  if (text::trim(explanation.text).empty()) return out;
  if (backend == nullptr) {
    for (auto& s : text::split_sentences(explanation.text)) out.push_back({std::move(s), {}});
    return out;
  }
  const auto reply = complete(*backend, {prompts::claims(explanation.text), seed});
  const auto haystack = squeeze(explanation.text);
  for (auto line : text::split(reply, '\n')) {
    line = text::trim(line);
    if (line.empty()) continue;
    const auto needle = squeeze(line);
    if (!needle.empty() && haystack.find(needle) != std::string::npos) {
      out.push_back({text::collapse_whitespace(line), {}});
    }
  }
  return out;
}

std::string evidence_text(const ReasoningChain& chain, std::span<const ScoredSubgraph> subgraphs,
                          const KnowledgeGraph* kg) {
  std::string out;
  for (const auto& line : chain.lines()) {
    out += line;
    out += '\n';
  }
  if (kg != nullptr) {
    for (const auto& line : knowledge_lines(subgraphs, *kg)) {
      out += line;
      out += '\n';
    }
  }
  return out;
}

double faithfulness(std::span<Claim> claims, const ReasoningChain& chain,
                    std::span<const ScoredSubgraph> subgraphs, const KnowledgeGraph* kg,
                    const Backend& backend, bool* empty) {
  if (empty != nullptr) *empty = claims.empty();
  if (claims.empty()) return 0.0;
  const auto evidence = evidence_text(chain, subgraphs, kg);
  std::size_t entailed = 0;
  for (auto& c : claims) {
    try {
      c.entailed = nli_entails(backend, c.text, evidence);
    } catch (const BackendError& e) {
      throw ScoringError(std::string("faithfulness: entailment failed: ") + e.what());
    }
    if (*c.entailed) ++entailed;
  }
  return static_cast<double>(entailed) / static_cast<double>(claims.size());
}

double coherence(const Explanation& explanation, const Backend& backend) {
  try {
    const int judged = judge_coherence(backend, explanation.text, explanation.mode);
    return (judged - 1) / 4.0;
  } catch (const BackendError& e) {
    throw ScoringError(std::string("coherence: judge failed: ") + e.what());
  }
}

double personalization(const Explanation& explanation, const UserProfile& profile,
                       const Backend& backend, bool* empty_profile) {
  const auto rendered = profile.render();
  if (empty_profile != nullptr) *empty_profile = text::trim(rendered).empty();
  if (text::trim(rendered).empty()) return 0.0;
  const auto body = text::strip_tags(explanation.text);
  if (text::trim(body).empty()) return 0.0;
  try {
    return std::max(0.0, cosine(embed_text(backend, body), embed_text(backend, rendered)));
  } catch (const BackendError& e) {
    throw ScoringError(std::string("personalization: embedding failed: ") + e.what());
  }
}

void TransparencyWeights::validate() const {
  for (double w : {w1, w2, w3}) {
    if (!std::isfinite(w) || w < 0.0) throw ValidationError("transparency weights must be non-negative");
  }
  if (std::abs(w1 + w2 + w3 - 1.0) > 1e-9) {
    throw ValidationError("transparency weights w1+w2+w3 must sum to 1 (got " +
                          text::format_shortest(w1 + w2 + w3) + ")");
  }
}

TransparencyScore composite(double faith, double coher, double pers,
                            const TransparencyWeights& weights) {
  weights.validate();
  for (double s : {faith, coher, pers}) {
    if (!(s >= 0.0 && s <= 1.0)) throw ValidationError("transparency inputs must lie in [0,1]");
  }
  TransparencyScore out;
  out.faithfulness = faith;
  out.coherence = coher;
  out.personalization = pers;
  out.weights = weights;
  out.composite = std::clamp(weights.w1 * faith + weights.w2 * coher + weights.w3 * pers, 0.0, 1.0);
  return out;
}

TransparencyScore score_explanation(const Explanation& explanation, const Recommendation& rec,
                                    const UserProfile& profile, const KnowledgeGraph* kg,
                                    const Backend& backend, const ScoringOptions& options) {
  std::vector<Claim> claims;
  try {
    claims = extract_claims(explanation, options.backend_claims ? &backend : nullptr, options.seed);
  } catch (const BackendError& e) {
    throw ScoringError(std::string("claim extraction failed: ") + e.what());
  }
  bool no_claims = false;
  const double faith = faithfulness(claims, rec.chain, rec.retrieved, kg, backend, &no_claims);
  const double coher = text::trim(explanation.text).empty() ? 0.0 : coherence(explanation, backend);
  bool no_profile = false;
  const double pers = personalization(explanation, profile, backend, &no_profile);
  auto score = composite(faith, coher, pers, options.weights);
  if (no_claims) score.flags.emplace_back("empty_explanation");
  if (no_profile) score.flags.emplace_back("empty_profile");
  return score;
}

std::string format_score_line(std::string_view item_id, const TransparencyScore& s) {
  std::string out(item_id);
  for (double v : {s.faithfulness, s.coherence, s.personalization, s.composite}) {
    out += '\t';
    out += text::format_fixed(v, 4);
  }
  out += '\n';
  return out;
}

}  // namespace matrag
