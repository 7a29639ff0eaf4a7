#include "matrag/orchestrator.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "matrag/error.hpp"
#include "matrag/parallel.hpp"
#include "matrag/text.hpp"

namespace matrag {

std::string_view to_string(RequestKind kind) {
  switch (kind) {
    case RequestKind::cold_start: return "cold_start";
    case RequestKind::re_rank: return "re_rank";
    case RequestKind::conversational: return "conversational";
    case RequestKind::standard: return "standard";
  }
  return "standard";
}

std::string_view to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::thought: return "thought";
    case TraceKind::action: return "action";
    case TraceKind::observation: return "observation";
  }
  return "thought";
}

void RecommendationRequest::validate() const {
  if (user_id.empty()) throw RequestError("request user_id is empty");
  if (k < 1) throw RequestError("request k must be at least 1");
  if (candidate_pool_size < k) throw RequestError("candidate_pool_size must be >= k");
  if (candidates && candidates->empty()) throw RequestError("explicit candidate list is empty");
}

RequestKind classify_request(const RecommendationRequest& request, const InteractionStore& train) {
  if (!train.has_user(request.user_id)) return RequestKind::cold_start;
  if (request.candidates) return RequestKind::re_rank;
  if (request.query && !text::trim(*request.query).empty()) return RequestKind::conversational;
  return RequestKind::standard;
}

std::vector<std::string> select_candidates(const InteractionStore& train,
                                           const ItemCatalog& catalog,
                                           std::span<const std::string> universe,
                                           std::string_view user_id, RequestKind kind,
                                           std::size_t pool_size,
                                           std::span<const Constraint> constraints,
                                           const std::vector<std::string>* explicit_candidates) {
  if (pool_size < 1) throw ValidationError("pool_size must be at least 1");
  std::set<std::string, std::less<>> seen;
  if (kind != RequestKind::cold_start) {
    for (auto p : train.user_positions(user_id)) seen.insert(train.at(p).item_id);
  }
  std::set<std::string, std::less<>> source;
  if (explicit_candidates != nullptr) {
    source.insert(explicit_candidates->begin(), explicit_candidates->end());
  } else {
    source.insert(universe.begin(), universe.end());
  }
  std::vector<std::pair<std::size_t, std::string>> ranked;
  for (const auto& item : source) {
    if (seen.contains(item)) continue;
    if (!satisfies(catalog.attributes(item), constraints)) continue;
    ranked.emplace_back(train.item_positions(item).size(), item);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < pool_size; ++i) out.push_back(ranked[i].second);
  return out;
}

namespace {

const KnowledgeGraph& empty_graph() {
  static const KnowledgeGraph kg;
  return kg;
}

bool better(const Recommendation& a, const Recommendation& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.item_id < b.item_id;
}

}  // namespace

Pipeline::Pipeline(const Backend& backend, PipelineConfig config, const InteractionStore& train,
                   const KnowledgeGraph* kg, const AliasTable* aliases,
                   const AttributeTable* attributes, const VectorIndex* triple_vectors)
    : backend_(backend),
      config_(std::move(config)),
      train_(train),
      kg_(config_.ablation.disable_kg ? nullptr : kg),
      aliases_(aliases),
      cf_(train) {
  config_.validate();
  weights_ = config_.ablation.disable_reasoning_hybrid ? HybridWeights{0.0, 0.0, 1.0}
                                                       : config_.hybrid;
  const auto items = train.items();
  catalog_ = ItemCatalog(attributes, kg_, aliases_, items);
  universe_ = catalog_.items();
  if (kg_ != nullptr) {
    triple_embeddings_ = std::make_unique<TripleEmbeddings>(backend_, *kg_);
    if (triple_vectors != nullptr) triple_embeddings_->preload(*triple_vectors);
  }
}

UserContext Pipeline::prepare_user(std::string_view user_id,
                                   const std::optional<std::string>& query) const {
  UserContext ctx;
  ctx.user_id = std::string(user_id);
  ctx.history = user_history(train_, user_id);
  ctx.query = query;
  const auto now = train_.empty() ? 0 : train_.max_timestamp();
  if (config_.ablation.disable_user_agent) {
    ctx.profile.user_id = ctx.user_id;
    ctx.profile.built_at = now;
    ctx.profile.history_length = ctx.history.size();
  } else {
    ctx.profile = build_profile(backend_, user_id, ctx.history, now, catalog_,
                                {config_.positive_threshold, config_.half_life_days, config_.seed});
    if (ctx.profile.degraded) ctx.degraded.push_back("profile: explicit preferences unavailable");
  }
  if (kg_ != nullptr && !config_.ablation.disable_item_agent) {
    const auto text = retrieval_query_text(query, ctx.profile, "");
    if (!text::trim(text).empty()) {
      try {
        ctx.query_embedding = embed_text(backend_, text);
      } catch (const BackendError& e) {
        ctx.degraded.push_back(std::string("query embedding failed: ") + e.what());
      }
    }
  }
  return ctx;
}

Recommendation Pipeline::score_item(const UserContext& user, std::string_view item_id,
                                    bool with_chain, std::vector<std::string>* degraded) const {
  Recommendation rec;
  rec.item_id = std::string(item_id);
  if (kg_ == nullptr || config_.ablation.disable_item_agent) {
    rec.retrieved.push_back(no_evidence_subgraph());
  } else {
    RetrievalOptions opts;
    opts.k = config_.retrieval_k;
    opts.n = config_.rerank_n;
    opts.k_hop = config_.k_hop;
    opts.max_triples = config_.max_triples;
    opts.seed = config_.seed;
    auto analysis = analyze_item(backend_, *kg_, *triple_embeddings_, aliases_, item_id,
                                 user.profile, user.query, opts,
                                 user.query_embedding ? &*user.query_embedding : nullptr);
    rec.retrieved = std::move(analysis.subgraphs);
    if (analysis.degraded && degraded != nullptr) {
      for (const auto& n : analysis.notes) degraded->push_back(rec.item_id + ": " + n);
    }
  }
  rec.cf_score = score_cf(cf_, user.user_id, item_id, config_.cf_history_length);
  rec.cb_score = score_cb(user.profile, catalog_.attributes(item_id));
  const auto llm = score_llm(backend_, user.profile, item_id, rec.retrieved,
                             kg_ != nullptr ? *kg_ : empty_graph(), config_.seed);
  rec.llm_score = llm.value;
  if (llm.degraded && degraded != nullptr) {
    degraded->push_back(rec.item_id + ": preference score fell back to 0.5");
  }
  rec.score = hybrid_score(rec.cf_score, rec.cb_score, rec.llm_score, weights_);
  if (with_chain) {
    if (config_.ablation.disable_reasoning_hybrid) {
      rec.chain = aggregation_only_chain(rec, kg_);
    } else {
      ChainContext ctx{user.profile, user.history, catalog_, kg_, &cf_, config_.cf_history_length};
      rec.chain = build_reasoning_chain(rec, ctx);
    }
  }
  return rec;
}

std::vector<double> Pipeline::score_items(std::string_view user_id,
                                          std::span<const std::string> items) const {
  const auto user = prepare_user(user_id);
  std::vector<double> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(score_item(user, item, false).score);
  return out;
}

std::optional<ExplainedCase> Pipeline::explain(const std::string& user_id,
                                              const std::string& item_id) const {
  const auto user = prepare_user(user_id);
  const auto rec = score_item(user, item_id, true);
  auto mode = config_.explanation_mode;
  if (mode == ExplanationMode::comparative) mode = ExplanationMode::detailed;
  ExplainedCase out;
  Explanation expl;
  if (config_.ablation.disable_explanation) {
    expl = template_explanation(rec, mode);
  } else {
    try {
      expl = generate_explanation(backend_, rec, user.profile, kg_, mode, {}, config_.seed);
    } catch (const BackendError&) {
      expl = template_explanation(rec, mode);
    }
  }
  out.text = expl.text;
  if (!config_.ablation.disable_transparency) {
    try {
      out.transparency = score_explanation(expl, rec, user.profile, kg_, backend_,
                                           {config_.transparency, config_.backend_claims,
                                            config_.seed});
    } catch (const ScoringError&) {
    }
  }
  return out;
}

RecommendationResponse Pipeline::handle(const RecommendationRequest& request) const {
  request.validate();
  RecommendationResponse resp;
  resp.user_id = request.user_id;
  auto trace = [&](TraceKind kind, std::string summary) {
    resp.trace.push_back({kind, std::move(summary)});
  };

  trace(TraceKind::thought, "request for user " + request.user_id + ", k=" +
                                std::to_string(request.k) + ", mode " +
                                std::string(to_string(request.mode)));
  trace(TraceKind::action, "classify_request");
  resp.kind = classify_request(request, train_);
  trace(TraceKind::observation, "request kind " + std::string(to_string(resp.kind)));

  trace(TraceKind::action, config_.ablation.disable_user_agent ? "build_profile (ablated)"
                                                               : "build_profile");
  const auto user = prepare_user(request.user_id, request.query);
  resp.degraded.insert(resp.degraded.end(), user.degraded.begin(), user.degraded.end());
  trace(TraceKind::observation, "profile with " + std::to_string(user.profile.facets.size()) +
                                    " facets from " + std::to_string(user.history.size()) +
                                    " interactions");

  trace(TraceKind::action, "select_candidates pool_size=" +
                               std::to_string(request.candidate_pool_size));
  const auto pool = select_candidates(
      train_, catalog_, universe_, request.user_id, resp.kind,
      std::min(request.candidate_pool_size, config_.pool_size), request.constraints,
      request.candidates ? &*request.candidates : nullptr);
  trace(TraceKind::observation, std::to_string(pool.size()) + " candidates");
  if (pool.empty()) {
    resp.degraded.emplace_back("empty candidate pool");
    trace(TraceKind::thought, "no candidate survives selection; returning an empty response");
    return resp;
  }

  trace(TraceKind::thought, "score each candidate with retrieval, collaborative, content and "
                            "model preference signals");
  trace(TraceKind::action, "analyze_item and score x" + std::to_string(pool.size()));
  std::vector<Recommendation> scored(pool.size());
  std::vector<std::vector<std::string>> notes(pool.size());
  parallel_for(pool.size(), backend_.parallelism_limit(), [&](std::size_t i) {
    scored[i] = score_item(user, pool[i], true, &notes[i]);
  });
  for (auto& n : notes) resp.degraded.insert(resp.degraded.end(), n.begin(), n.end());
  std::sort(scored.begin(), scored.end(), better);
  trace(TraceKind::observation, "best " + scored.front().item_id + " at " +
                                    text::format_fixed(scored.front().score, 3));

  if (config_.diversity) {
    trace(TraceKind::action, "diversity re-rank lambda=" + text::format_fixed(config_.mmr_lambda, 2));
    std::vector<double> scores;
    std::vector<const AttributeSet*> attrs;
    for (const auto& r : scored) {
      scores.push_back(r.score);
      attrs.push_back(&catalog_.attributes(r.item_id));
    }
    const auto order = mmr_order(scores, attrs, config_.mmr_lambda, request.k);
    std::vector<Recommendation> reordered;
    for (auto i : order) reordered.push_back(scored[i]);
    for (std::size_t i = 0; i < scored.size(); ++i) {
      if (std::find(order.begin(), order.end(), i) == order.end()) reordered.push_back(scored[i]);
    }
    scored = std::move(reordered);
    trace(TraceKind::observation, "diversified head " + scored.front().item_id);
  }

  const std::size_t n = std::min(request.k, scored.size());
  resp.recommendations.assign(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n));
  for (const auto& r : resp.recommendations) {
    const double hi = std::max({r.cf_score, r.cb_score, r.llm_score});
    const double lo = std::min({r.cf_score, r.cb_score, r.llm_score});
    if (hi - lo > config_.conflict_spread) {
      trace(TraceKind::thought, "conflict on " + r.item_id + ": component scores spread " +
                                    text::format_fixed(hi - lo, 3));
    }
  }

  auto mode = request.mode;
  if (mode == ExplanationMode::comparative && scored.size() < 2) {
    resp.degraded.emplace_back("comparative explanation needs an alternative; using detailed");
    mode = ExplanationMode::detailed;
  }
  trace(TraceKind::action, std::string(config_.ablation.disable_explanation
                                           ? "template explanations x"
                                           : "generate_explanation x") +
                               std::to_string(n));
  const KnowledgeGraph* kg = kg_;
  resp.explanations.resize(n);
  std::vector<std::string> explain_failures(n);
  parallel_for(n, backend_.parallelism_limit(), [&](std::size_t i) {
    const auto& rec = resp.recommendations[i];
    if (config_.ablation.disable_explanation) {
      resp.explanations[i] = template_explanation(rec, mode);
      return;
    }
    std::span<const Recommendation> alternatives;
    if (mode == ExplanationMode::comparative) {
      alternatives = std::span<const Recommendation>(&scored[i == 0 ? 1 : 0], 1);
    }
    try {
      resp.explanations[i] =
          generate_explanation(backend_, rec, user.profile, kg, mode, alternatives, config_.seed);
    } catch (const BackendError& e) {
      explain_failures[i] = rec.item_id + ": explanation fell back to template (" + e.what() + ")";
      resp.explanations[i] = template_explanation(rec, mode);
    }
  });
  std::size_t cited = 0;
  for (const auto& e : resp.explanations) cited += e.cited_evidence.size();
  for (auto& f : explain_failures) {
    if (!f.empty()) resp.degraded.push_back(std::move(f));
  }
  trace(TraceKind::observation, std::to_string(n) + " explanations citing " +
                                    std::to_string(cited) + " evidence ids");

  resp.transparency.assign(n, std::nullopt);
  if (config_.ablation.disable_transparency) {
    trace(TraceKind::thought, "transparency scoring disabled");
  } else {
    trace(TraceKind::action, "score_transparency x" + std::to_string(n));
    ScoringOptions opts{config_.transparency, config_.backend_claims, config_.seed};
    std::vector<std::string> failures(n);
    parallel_for(n, backend_.parallelism_limit(), [&](std::size_t i) {
      try {
        resp.transparency[i] = score_explanation(resp.explanations[i], resp.recommendations[i],
                                                 user.profile, kg, backend_, opts);
      } catch (const ScoringError& e) {
        failures[i] = resp.recommendations[i].item_id + ": transparency unavailable (" +
                      e.what() + ")";
      }
    });
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!failures[i].empty()) resp.degraded.push_back(failures[i]);
      if (resp.transparency[i]) {
        sum += resp.transparency[i]->composite;
        ++count;
      }
    }
    trace(TraceKind::observation,
          count == 0 ? std::string("no transparency scores")
                     : "mean transparency " + text::format_fixed(sum / static_cast<double>(count), 3));
  }
  trace(TraceKind::thought, "returning " + std::to_string(n) + " recommendations");
  return resp;
}

// --- serialization ----------------------------------------------------------

namespace {

using nlohmann::json;

json subgraph_json(const ScoredSubgraph& s) {
  json triples = json::array();
  for (auto t : s.subgraph.triples) triples.push_back(evidence_id(t));
  return {{"key", s.key},
          {"similarity", s.similarity},
          {"retrieval_rank", s.retrieval_rank},
          {"rerank_rank", s.rerank_rank ? json(*s.rerank_rank) : json(nullptr)},
          {"radius", s.subgraph.radius},
          {"triples", triples},
          {"truncated", s.subgraph.truncated}};
}

json recommendation_json(const Recommendation& r) {
  json steps = json::array();
  for (const auto& s : r.chain.steps) {
    steps.push_back({{"statement", s.statement}, {"evidence", s.evidence}, {"aggregation", s.aggregation}});
  }
  json retrieved = json::array();
  for (const auto& s : r.retrieved) retrieved.push_back(subgraph_json(s));
  return {{"item_id", r.item_id},     {"score", r.score},         {"cf_score", r.cf_score},
          {"cb_score", r.cb_score},   {"llm_score", r.llm_score}, {"chain", steps},
          {"retrieved", retrieved}};
}

}  // namespace

std::string to_json(const RecommendationResponse& response) {
  json recs = json::array();
  for (const auto& r : response.recommendations) recs.push_back(recommendation_json(r));
  json expls = json::array();
  for (const auto& e : response.explanations) {
    expls.push_back({{"item_id", e.item_id},
                     {"mode", std::string(to_string(e.mode))},
                     {"text", e.text},
                     {"cited_evidence", e.cited_evidence}});
  }
  json scores = json::array();
  for (const auto& t : response.transparency) {
    if (!t) {
      scores.push_back(nullptr);
      continue;
    }
    scores.push_back({{"faithfulness", t->faithfulness},
                      {"coherence", t->coherence},
                      {"personalization", t->personalization},
                      {"composite", t->composite},
                      {"weights", {t->weights.w1, t->weights.w2, t->weights.w3}},
                      {"flags", t->flags}});
  }
  json trace = json::array();
  for (const auto& t : response.trace) {
    trace.push_back({{"kind", std::string(to_string(t.kind))}, {"summary", t.summary}});
  }
  json doc = {{"user_id", response.user_id},
              {"request_kind", std::string(to_string(response.kind))},
              {"recommendations", recs},
              {"explanations", expls},
              {"transparency", scores},
              {"trace", trace},
              {"degraded", response.degraded}};
  return doc.dump(2);
}

}  // namespace matrag
