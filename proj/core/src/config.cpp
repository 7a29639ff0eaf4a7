#include "matrag/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "matrag/error.hpp"
#include "matrag/text.hpp"

namespace matrag {

namespace {

using nlohmann::json;

struct Binding {
  ConfigField meta;
  std::function<void(PipelineConfig&, const json&)> set;
  std::function<json(const PipelineConfig&)> get;
};

std::size_t as_size(const std::string& name, const json& v) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::size_t>();
  throw ConfigError(name, "expected a non-negative integer");
}

double as_real(const std::string& name, const json& v) {
  if (!v.is_number()) throw ConfigError(name, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(name, "expected a finite number");
  return d;
}

bool as_bool(const std::string& name, const json& v) {
  if (!v.is_boolean()) throw ConfigError(name, "expected true or false");
  return v.get<bool>();
}

std::string as_text(const std::string& name, const json& v) {
  if (!v.is_string()) throw ConfigError(name, "expected a string");
  return v.get<std::string>();
}

template <typename T>
Binding size_field(std::string name, std::string help, T PipelineConfig::*member) {
  return {{name, FieldKind::integer, std::move(help)},
          [name, member](PipelineConfig& c, const json& v) {
            c.*member = static_cast<T>(as_size(name, v));
          },
          [member](const PipelineConfig& c) { return json(c.*member); }};
}

template <typename Ref>
Binding real_field(std::string name, std::string help, Ref ref) {
  return {{name, FieldKind::real, std::move(help)},
          [name, ref](PipelineConfig& c, const json& v) { ref(c) = as_real(name, v); },
          [ref](const PipelineConfig& c) { return json(ref(c)); }};
}

template <typename Ref>
Binding bool_field(std::string name, std::string help, Ref ref) {
  return {{name, FieldKind::boolean, std::move(help)},
          [name, ref](PipelineConfig& c, const json& v) { ref(c) = as_bool(name, v); },
          [ref](const PipelineConfig& c) { return json(ref(c)); }};
}

template <typename Ref>
Binding text_field(std::string name, std::string help, Ref ref) {
  return {{name, FieldKind::text, std::move(help)},
          [name, ref](PipelineConfig& c, const json& v) { ref(c) = as_text(name, v); },
          [ref](const PipelineConfig& c) { return json(ref(c)); }};
}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = [] {
    std::vector<Binding> b;
    b.push_back(text_field("interactions", "interaction file", [](auto& c) -> auto& { return c.paths.interactions; }));
    b.push_back(text_field("triples", "knowledge-graph triple file", [](auto& c) -> auto& { return c.paths.triples; }));
    b.push_back(text_field("attributes", "item attribute file", [](auto& c) -> auto& { return c.paths.attributes; }));
    b.push_back(text_field("aliases", "entity alias file", [](auto& c) -> auto& { return c.paths.aliases; }));
    b.push_back(text_field("vectors", "precomputed triple vector file", [](auto& c) -> auto& { return c.paths.vectors; }));
    b.push_back(text_field("split", "split manifest file", [](auto& c) -> auto& { return c.paths.split; }));

    b.push_back(size_field("retrieval_k", "subgraph slices retrieved (K)", &PipelineConfig::retrieval_k));
    b.push_back(size_field("rerank_n", "subgraph slices kept after rerank (N)", &PipelineConfig::rerank_n));
    b.push_back(size_field("k_hop", "neighborhood radius in hops", &PipelineConfig::k_hop));
    b.push_back(size_field("pool_size", "candidate pool size", &PipelineConfig::pool_size));
    b.push_back(size_field("max_triples", "triple cap per neighborhood", &PipelineConfig::max_triples));
    b.push_back(real_field("alpha", "collaborative weight", [](auto& c) -> auto& { return c.hybrid.alpha; }));
    b.push_back(real_field("beta", "content weight", [](auto& c) -> auto& { return c.hybrid.beta; }));
    b.push_back(real_field("gamma", "model preference weight", [](auto& c) -> auto& { return c.hybrid.gamma; }));
    b.push_back(real_field("w1", "faithfulness weight", [](auto& c) -> auto& { return c.transparency.w1; }));
    b.push_back(real_field("w2", "coherence weight", [](auto& c) -> auto& { return c.transparency.w2; }));
    b.push_back(real_field("w3", "personalization weight", [](auto& c) -> auto& { return c.transparency.w3; }));
    b.push_back(real_field("half_life_days", "temporal decay half-life", [](auto& c) -> auto& { return c.half_life_days; }));
    b.push_back(real_field("positive_threshold", "minimum rating of a positive interaction", [](auto& c) -> auto& { return c.positive_threshold; }));
    b.push_back(size_field("cf_history_length", "recent items used by the collaborative score (L)", &PipelineConfig::cf_history_length));
    b.push_back(real_field("conflict_spread", "component-score spread that raises a warning", [](auto& c) -> auto& { return c.conflict_spread; }));
    b.push_back(bool_field("diversity", "enable MMR re-ranking", [](auto& c) -> auto& { return c.diversity; }));
    b.push_back(real_field("mmr_lambda", "MMR relevance weight", [](auto& c) -> auto& { return c.mmr_lambda; }));
    b.push_back({{"explanation_mode", FieldKind::text, "concise|detailed|comparative"},
                 [](PipelineConfig& c, const json& v) {
                   try {
                     c.explanation_mode = parse_explanation_mode(as_text("explanation_mode", v));
                   } catch (const ValidationError& e) {
                     throw ConfigError("explanation_mode", e.what());
                   }
                 },
                 [](const PipelineConfig& c) { return json(std::string(to_string(c.explanation_mode))); }});
    b.push_back(bool_field("backend_claims", "extract claims through the backend", [](auto& c) -> auto& { return c.backend_claims; }));
    b.push_back(bool_field("implicit_feedback", "treat interactions as unrated clicks", [](auto& c) -> auto& { return c.implicit_feedback; }));
    b.push_back(real_field("split_train", "train ratio", [](auto& c) -> auto& { return c.split_ratios.train; }));
    b.push_back(real_field("split_valid", "validation ratio", [](auto& c) -> auto& { return c.split_ratios.valid; }));
    b.push_back(real_field("split_test", "test ratio", [](auto& c) -> auto& { return c.split_ratios.test; }));

    b.push_back(size_field("negatives", "sampled negatives per test case", &PipelineConfig::negatives));
    b.push_back({{"eval_ks", FieldKind::list, "cutoffs for HR and NDCG"},
                 [](PipelineConfig& c, const json& v) {
                   if (!v.is_array()) throw ConfigError("eval_ks", "expected a list of integers");
                   std::vector<std::size_t> ks;
                   for (const auto& e : v) ks.push_back(as_size("eval_ks", e));
                   c.eval_ks = std::move(ks);
                 },
                 [](const PipelineConfig& c) { return json(c.eval_ks); }});
    b.push_back(real_field("explain_fraction", "share of test cases whose explanations are scored", [](auto& c) -> auto& { return c.explain_fraction; }));
    b.push_back({{"seed", FieldKind::integer, "seed for sampling and the mock backend"},
                 [](PipelineConfig& c, const json& v) { c.seed = as_size("seed", v); },
                 [](const PipelineConfig& c) { return json(c.seed); }});

    b.push_back({{"backend", FieldKind::text, "mock|http"},
                 [](PipelineConfig& c, const json& v) {
                   const auto s = as_text("backend", v);
                   if (s == "mock") c.backend.kind = BackendKind::mock;
                   else if (s == "http") c.backend.kind = BackendKind::http;
                   else throw ConfigError("backend", "expected mock|http, got '" + s + "'");
                 },
                 [](const PipelineConfig& c) {
                   return json(c.backend.kind == BackendKind::http ? "http" : "mock");
                 }});
    b.push_back(text_field("endpoint", "http backend base URL", [](auto& c) -> auto& { return c.backend.endpoint; }));
    b.push_back(text_field("model", "model name passed to the http backend", [](auto& c) -> auto& { return c.backend.model; }));
    b.push_back({{"parallelism", FieldKind::integer, "concurrent backend calls"},
                 [](PipelineConfig& c, const json& v) { c.backend.parallelism = as_size("parallelism", v); },
                 [](const PipelineConfig& c) { return json(c.backend.parallelism); }});
    b.push_back({{"timeout_ms", FieldKind::integer, "http timeout in milliseconds"},
                 [](PipelineConfig& c, const json& v) {
                   c.backend.timeout = std::chrono::milliseconds(as_size("timeout_ms", v));
                 },
                 [](const PipelineConfig& c) { return json(c.backend.timeout.count()); }});
    b.push_back({{"retries", FieldKind::integer, "http retries per call"},
                 [](PipelineConfig& c, const json& v) {
                   c.backend.retries = static_cast<int>(as_size("retries", v));
                 },
                 [](const PipelineConfig& c) { return json(c.backend.retries); }});
    b.push_back({{"embedding_dim", FieldKind::integer, "mock embedding width"},
                 [](PipelineConfig& c, const json& v) { c.backend.dimension = as_size("embedding_dim", v); },
                 [](const PipelineConfig& c) { return json(c.backend.dimension); }});

    b.push_back(bool_field("disable_user_agent", "ablate the user modeling agent", [](auto& c) -> auto& { return c.ablation.disable_user_agent; }));
    b.push_back(bool_field("disable_item_agent", "ablate the item analysis agent", [](auto& c) -> auto& { return c.ablation.disable_item_agent; }));
    b.push_back(bool_field("disable_reasoning_hybrid", "ablate hybrid reasoning", [](auto& c) -> auto& { return c.ablation.disable_reasoning_hybrid; }));
    b.push_back(bool_field("disable_explanation", "ablate the explanation agent", [](auto& c) -> auto& { return c.ablation.disable_explanation; }));
    b.push_back(bool_field("disable_kg", "ablate knowledge-graph retrieval", [](auto& c) -> auto& { return c.ablation.disable_kg; }));
    b.push_back(bool_field("disable_transparency", "ablate transparency scoring", [](auto& c) -> auto& { return c.ablation.disable_transparency; }));
    return b;
  }();
  return table;
}

const Binding* find_binding(std::string_view name) {
  for (const auto& b : bindings()) {
    if (b.meta.name == name) return &b;
  }
  return nullptr;
}

void check_simplex(std::string_view names, std::initializer_list<std::pair<const char*, double>> ws) {
  double sum = 0.0;
  for (const auto& [n, w] : ws) {
    if (!std::isfinite(w) || w < 0.0) throw ConfigError(n, "must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError(std::string(names), "must sum to 1, got " + text::format_shortest(sum));
  }
}

void check_unit(const char* name, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(name, "must lie in [0,1]");
}

}  // namespace

void PipelineConfig::validate() const {
  if (retrieval_k == 0) throw ConfigError("retrieval_k", "must be at least 1");
  if (rerank_n == 0) throw ConfigError("rerank_n", "must be at least 1");
  if (retrieval_k < rerank_n) throw ConfigError("retrieval_k", "must be >= rerank_n");
  if (pool_size == 0) throw ConfigError("pool_size", "must be at least 1");
  if (max_triples == 0) throw ConfigError("max_triples", "must be at least 1");
  if (cf_history_length == 0) throw ConfigError("cf_history_length", "must be at least 1");
  if (negatives == 0) throw ConfigError("negatives", "must be at least 1");
  if (eval_ks.empty()) throw ConfigError("eval_ks", "must not be empty");
  for (auto k : eval_ks) {
    if (k == 0) throw ConfigError("eval_ks", "cutoffs must be at least 1");
  }
  check_simplex("alpha+beta+gamma", {{"alpha", hybrid.alpha}, {"beta", hybrid.beta}, {"gamma", hybrid.gamma}});
  check_simplex("w1+w2+w3", {{"w1", transparency.w1}, {"w2", transparency.w2}, {"w3", transparency.w3}});
  check_simplex("split_train+split_valid+split_test",
                {{"split_train", split_ratios.train}, {"split_valid", split_ratios.valid},
                 {"split_test", split_ratios.test}});
  if (!(half_life_days > 0.0)) throw ConfigError("half_life_days", "must be positive");
  if (!(positive_threshold >= 1.0 && positive_threshold <= 5.0)) {
    throw ConfigError("positive_threshold", "must lie in [1,5]");
  }
  check_unit("conflict_spread", conflict_spread);
  check_unit("mmr_lambda", mmr_lambda);
  check_unit("explain_fraction", explain_fraction);
  backend.validate();
}

void PipelineConfig::check_paths() const {
  const std::pair<const char*, const std::string*> all[] = {
      {"interactions", &paths.interactions}, {"triples", &paths.triples},
      {"attributes", &paths.attributes},     {"aliases", &paths.aliases},
      {"vectors", &paths.vectors},           {"split", &paths.split}};
  for (const auto& [name, p] : all) {
    if (!p->empty() && !std::filesystem::exists(*p)) {
      throw ConfigError(name, "path does not exist: " + *p);
    }
  }
}

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> fields = [] {
    std::vector<ConfigField> out;
    for (const auto& b : bindings()) out.push_back(b.meta);
    return out;
  }();
  return fields;
}

void set_config_field(PipelineConfig& config, std::string_view name, std::string_view value) {
  const auto* b = find_binding(name);
  if (b == nullptr) throw ConfigError(std::string(name), "unknown field");
  const std::string n(name);
  json v;
  switch (b->meta.kind) {
    case FieldKind::integer: {
      auto i = text::parse_int64(value);
      if (!i) throw ConfigError(n, "expected an integer, got '" + std::string(value) + "'");
      v = *i;
      break;
    }
    case FieldKind::real: {
      auto d = text::parse_double(value);
      if (!d) throw ConfigError(n, "expected a number, got '" + std::string(value) + "'");
      v = *d;
      break;
    }
    case FieldKind::boolean: {
      const auto t = text::fold_case(text::trim(value));
      if (t == "true" || t == "1" || t.empty()) v = true;
      else if (t == "false" || t == "0") v = false;
      else throw ConfigError(n, "expected true or false, got '" + std::string(value) + "'");
      break;
    }
    case FieldKind::text:
      v = std::string(value);
      break;
    case FieldKind::list: {
      v = json::array();
      for (auto piece : text::split(value, ',')) {
        if (text::trim(piece).empty()) continue;
        auto i = text::parse_int64(piece);
        if (!i) throw ConfigError(n, "expected integers, got '" + std::string(piece) + "'");
        v.push_back(*i);
      }
      break;
    }
  }
  b->set(config, v);
}

PipelineConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("<file>", "expected a JSON object");
  PipelineConfig config;
  for (const auto& [key, value] : doc.items()) {
    const auto* b = find_binding(key);
    if (b == nullptr) throw ConfigError(key, "unknown field");
    b->set(config, value);
  }
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string to_json(const PipelineConfig& config) {
  json doc = json::object();
  for (const auto& b : bindings()) doc[b.meta.name] = b.get(config);
  return doc.dump(2);
}

}  // namespace matrag
