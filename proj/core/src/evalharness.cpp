#include "matrag/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "matrag/error.hpp"
#include "matrag/parallel.hpp"
#include "matrag/random.hpp"
#include "matrag/text.hpp"

namespace matrag {

void RankedList::validate() const {
  if (items.empty()) throw ValidationError("ranked list is empty");
  std::set<std::string_view> seen;
  for (const auto& i : items) {
    if (!seen.insert(i).second) throw ValidationError("ranked list repeats item " + i);
  }
}

std::optional<std::size_t> truth_rank(const RankedList& ranked) {
  auto it = std::find(ranked.items.begin(), ranked.items.end(), ranked.truth);
  if (it == ranked.items.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ranked.items.begin()) + 1;
}

double hit_rate(const RankedList& ranked, std::size_t k) {
  if (k < 1) throw ValidationError("K must be at least 1");
  const auto r = truth_rank(ranked);
  return r && *r <= k ? 1.0 : 0.0;
}

double ndcg(const RankedList& ranked, std::size_t k) {
  if (k < 1) throw ValidationError("K must be at least 1");
  const auto r = truth_rank(ranked);
  if (!r || *r > k) return 0.0;
  return 1.0 / std::log2(static_cast<double>(*r) + 1.0);
}

double mrr(const RankedList& ranked) {
  const auto r = truth_rank(ranked);
  return r ? 1.0 / static_cast<double>(*r) : 0.0;
}

std::vector<std::string> bleu_tokens(std::string_view s) {
  return text::whitespace_tokens(text::strip_tags(s));
}

namespace {

using Ngrams = std::map<std::vector<std::string_view>, std::size_t>;

Ngrams count_ngrams(const std::vector<std::string>& toks, std::size_t n) {
  Ngrams out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++out[std::vector<std::string_view>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                        toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return out;
}

}  // namespace

double bleu4(std::string_view candidate, std::span<const std::string> references) {
  if (references.empty()) throw ValidationError("BLEU needs at least one reference");
  const auto cand = bleu_tokens(candidate);
  if (cand.empty()) return 0.0;
  std::vector<std::vector<std::string>> refs;
  refs.reserve(references.size());
  for (const auto& r : references) refs.push_back(bleu_tokens(r));

  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto cand_counts = count_ngrams(cand, n);
    std::map<std::vector<std::string_view>, std::size_t> max_ref;
    for (const auto& r : refs) {
      for (const auto& [g, c] : count_ngrams(r, n)) {
        auto& m = max_ref[g];
        m = std::max(m, c);
      }
    }
    std::size_t clipped = 0;
    std::size_t total = 0;
    for (const auto& [g, c] : cand_counts) {
      total += c;
      auto it = max_ref.find(g);
      if (it != max_ref.end()) clipped += std::min(c, it->second);
    }
    if (total == 0 || clipped == 0) return 0.0;
    log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total));
  }

  const double c = static_cast<double>(cand.size());
  double r = 0.0;
  double best_gap = -1.0;
  for (const auto& ref : refs) {
    const double len = static_cast<double>(ref.size());
    const double gap = std::abs(len - c);
    if (best_gap < 0.0 || gap < best_gap || (gap == best_gap && len < r)) {
      best_gap = gap;
      r = len;
    }
  }
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return std::clamp(bp * std::exp(log_sum / 4.0), 0.0, 1.0);
}

std::vector<std::string> sample_negatives(std::span<const std::string> pool,
                                          const std::vector<std::string>& exclude_sorted,
                                          std::size_t count, std::uint64_t seed) {
  std::vector<std::string> available;
  available.reserve(pool.size());
  for (const auto& item : pool) {
    if (!std::binary_search(exclude_sorted.begin(), exclude_sorted.end(), item)) {
      available.push_back(item);
    }
  }
  if (count >= available.size()) return available;
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(available.size() - i));
    std::swap(available[i], available[j]);
  }
  available.resize(count);
  return available;
}

namespace {

std::string hit_name(std::size_t k) { return "HR@" + std::to_string(k); }
std::string ndcg_name(std::size_t k) { return "NDCG@" + std::to_string(k); }

void add(MetricMean& m, double v) {
  m.mean += v;
  ++m.count;
}

void finish(std::map<std::string, MetricMean>& means) {
  for (auto& [name, m] : means) {
    if (m.count > 0) m.mean /= static_cast<double>(m.count);
  }
}

std::map<std::string, MetricMean> aggregate(const std::vector<const EvalRow*>& rows,
                                            std::span<const std::size_t> ks) {
  std::map<std::string, MetricMean> means;
  for (std::size_t i = 0; i < ks.size(); ++i) {
    means[hit_name(ks[i])];
    means[ndcg_name(ks[i])];
  }
  means["MRR"];
  for (const auto* r : rows) {
    for (std::size_t i = 0; i < ks.size(); ++i) {
      add(means[hit_name(ks[i])], r->hit[i]);
      add(means[ndcg_name(ks[i])], r->ndcg[i]);
    }
    add(means["MRR"], r->mrr);
  }
  finish(means);
  return means;
}

struct Case {
  Position position;
  std::string user;
  std::string truth;
  std::vector<std::string> candidates;  // truth first
};

}  // namespace

EvalReport evaluate(const ScoreFn& scorer, const InteractionStore& store,
                    const SplitAssignment& split, const EvalOptions& options,
                    const ExplainFn& explainer) {
  if (!scorer) throw ValidationError("evaluate needs a scorer");
  if (options.ks.empty()) throw ValidationError("evaluate needs at least one cutoff");
  for (auto k : options.ks) {
    if (k < 1) throw ValidationError("cutoffs must be at least 1");
  }
  const auto& held_out = split.positions(options.part);
  if (held_out.empty()) throw ValidationError("the evaluated split part is empty");

  EvalReport report;
  report.ks = options.ks;
  report.negatives = options.negatives;
  report.seed = options.seed;

  std::map<std::string, std::size_t, std::less<>> train_counts;
  for (auto p : split.train) ++train_counts[store.at(p).user_id];

  const auto universe = store.items();
  std::vector<Case> cases;
  for (auto p : held_out) {
    const auto& it = store.at(p);
    if (options.require_train_history && !train_counts.contains(it.user_id)) {
      ++report.skipped;
      continue;
    }
    std::vector<std::string> seen;
    for (auto q : store.user_positions(it.user_id)) seen.push_back(store.at(q).item_id);
    std::sort(seen.begin(), seen.end());
    seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
    const auto case_seed =
        text::hash64(it.user_id + "\t" + it.item_id + "\t" + std::to_string(p), options.seed);
    Case c{p, it.user_id, it.item_id, {it.item_id}};
    for (auto& n : sample_negatives(universe, seen, options.negatives, case_seed)) {
      c.candidates.push_back(std::move(n));
    }
    cases.push_back(std::move(c));
  }

  report.rows.resize(cases.size());
  parallel_for(cases.size(), options.parallelism, [&](std::size_t i) {
    const auto& c = cases[i];
    const auto scores = scorer(c.user, c.candidates);
    if (scores.size() != c.candidates.size()) {
      throw ValidationError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                            std::to_string(c.candidates.size()) + " candidates");
    }
    std::vector<std::size_t> order(scores.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (scores[a] != scores[b]) return scores[a] > scores[b];
      return c.candidates[a] < c.candidates[b];
    });
    RankedList ranked{c.user, {}, c.truth};
    ranked.items.reserve(order.size());
    for (auto j : order) ranked.items.push_back(c.candidates[j]);
    EvalRow row;
    row.user_id = c.user;
    row.item_id = c.truth;
    row.rank = *truth_rank(ranked);
    row.candidates = c.candidates.size();
    for (auto k : options.ks) {
      row.hit.push_back(hit_rate(ranked, k));
      row.ndcg.push_back(ndcg(ranked, k));
    }
    row.mrr = mrr(ranked);
    report.rows[i] = std::move(row);
  });

  // Activity terciles by train interaction count.
  std::vector<std::pair<std::size_t, std::string>> users;
  {
    std::set<std::string> distinct;
    for (const auto& r : report.rows) distinct.insert(r.user_id);
    for (const auto& u : distinct) {
      auto it = train_counts.find(u);
      users.emplace_back(it == train_counts.end() ? 0 : it->second, u);
    }
    std::sort(users.begin(), users.end());
  }
  std::unordered_map<std::string, std::string> tier;
  for (std::size_t i = 0; i < users.size(); ++i) {
    const auto t = i * 3 / users.size();
    tier[users[i].second] = t == 0 ? "low" : t == 1 ? "mid" : "high";
  }
  std::map<std::string, std::vector<const EvalRow*>> grouped;
  std::vector<const EvalRow*> all;
  for (auto& r : report.rows) {
    r.activity = tier[r.user_id];
    grouped[r.activity].push_back(&r);
    all.push_back(&r);
  }
  report.means = aggregate(all, options.ks);
  for (const auto& [t, rows] : grouped) report.by_activity[t] = aggregate(rows, options.ks);

  if (explainer && options.explain_fraction > 0.0) {
    ExplanationSummary summary;
    for (const auto& c : cases) {
      std::uint64_t state = text::hash64(c.user + "\t" + c.truth, options.seed ^ 0x5eedULL);
      const double u = static_cast<double>(text::splitmix64(state) >> 11) * 0x1.0p-53;
      if (u >= options.explain_fraction) continue;
      const auto explained = explainer(c.user, c.truth);
      if (!explained) continue;
      ++summary.count;
      if (explained->transparency) {
        const auto& t = *explained->transparency;
        ++summary.scored;
        summary.faithfulness += t.faithfulness;
        summary.coherence += t.coherence;
        summary.personalization += t.personalization;
        summary.composite += t.composite;
      }
      const auto& reference = store.at(c.position).text;
      if (reference && !text::trim(*reference).empty()) {
        const std::string refs[] = {*reference};
        summary.bleu4 += bleu4(explained->text, refs);
        ++summary.bleu_count;
      }
    }
    if (summary.scored > 0) {
      const double n = static_cast<double>(summary.scored);
      summary.faithfulness /= n;
      summary.coherence /= n;
      summary.personalization /= n;
      summary.composite /= n;
    }
    if (summary.bleu_count > 0) summary.bleu4 /= static_cast<double>(summary.bleu_count);
    report.explanations = summary;
  }
  return report;
}

double EvalReport::metric(std::string_view name) const {
  auto it = means.find(std::string(name));
  if (it == means.end()) throw LookupError("no metric named " + std::string(name));
  return it->second.mean;
}

namespace {

nlohmann::json means_json(const std::map<std::string, MetricMean>& means) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [name, m] : means) out[name] = {{"mean", m.mean}, {"count", m.count}};
  return out;
}

}  // namespace

std::string EvalReport::to_json() const {
  using nlohmann::json;
  json doc;
  if (!label.empty()) doc["label"] = label;
  doc["config"] = {{"ks", ks}, {"negatives", negatives}, {"seed", seed}};
  doc["cases"] = rows.size();
  doc["skipped"] = skipped;
  doc["metrics"] = means_json(means);
  json tiers = json::object();
  for (const auto& [t, m] : by_activity) tiers[t] = means_json(m);
  doc["by_activity"] = tiers;
  if (explanations) {
    const auto& e = *explanations;
    doc["explanations"] = {{"count", e.count},
                           {"scored", e.scored},
                           {"faithfulness", e.faithfulness},
                           {"coherence", e.coherence},
                           {"personalization", e.personalization},
                           {"composite", e.composite},
                           {"bleu_count", e.bleu_count},
                           {"bleu4", e.bleu4}};
  }
  json rs = json::array();
  for (const auto& r : rows) {
    json row = {{"user", r.user_id}, {"item", r.item_id}, {"rank", r.rank},
                {"candidates", r.candidates}, {"activity", r.activity}, {"mrr", r.mrr}};
    for (std::size_t i = 0; i < ks.size(); ++i) {
      row[hit_name(ks[i])] = r.hit[i];
      row[ndcg_name(ks[i])] = r.ndcg[i];
    }
    rs.push_back(std::move(row));
  }
  doc["rows"] = rs;
  return doc.dump(2) + "\n";
}

std::string EvalReport::to_table() const {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%-10s %10s %8s\n", "metric", "mean", "count");
  out += buf;
  auto emit = [&](const std::string& name, const MetricMean& m) {
    std::snprintf(buf, sizeof buf, "%-10s %10.4f %8zu\n", name.c_str(), m.mean, m.count);
    out += buf;
  };
  for (auto k : ks) emit(hit_name(k), means.at(hit_name(k)));
  for (auto k : ks) emit(ndcg_name(k), means.at(ndcg_name(k)));
  emit("MRR", means.at("MRR"));
  if (skipped > 0) out += "skipped " + std::to_string(skipped) + " cases without train history\n";
  for (const auto& [t, m] : by_activity) {
    out += "activity " + t + ":";
    for (auto k : ks) out += " " + hit_name(k) + "=" + text::format_fixed(m.at(hit_name(k)).mean, 4);
    out += " MRR=" + text::format_fixed(m.at("MRR").mean, 4) + " (" +
           std::to_string(m.at("MRR").count) + ")\n";
  }
  if (explanations) {
    const auto& e = *explanations;
    out += "explanations " + std::to_string(e.count) + ": faithfulness " +
           text::format_fixed(e.faithfulness, 4) + ", coherence " +
           text::format_fixed(e.coherence, 4) + ", personalization " +
           text::format_fixed(e.personalization, 4) + ", composite " +
           text::format_fixed(e.composite, 4) + ", BLEU-4 " + text::format_fixed(e.bleu4, 4) + "\n";
  }
  return out;
}

std::string EvalReport::rows_tsv() const {
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < ks.size(); ++i) {
      out += r.user_id + "\t" + hit_name(ks[i]) + "\t" + text::format_fixed(r.hit[i], 4) + "\n";
      out += r.user_id + "\t" + ndcg_name(ks[i]) + "\t" + text::format_fixed(r.ndcg[i], 4) + "\n";
    }
    out += r.user_id + "\tMRR\t" + text::format_fixed(r.mrr, 4) + "\n";
  }
  return out;
}

}  // namespace matrag
