#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "matrag/agents.hpp"
#include "matrag/backend.hpp"
#include "matrag/corpus.hpp"
#include "matrag/transparency.hpp"

namespace matrag {

struct AblationFlags {
  bool disable_user_agent = false;
  bool disable_item_agent = false;
  bool disable_reasoning_hybrid = false;
  bool disable_explanation = false;
  bool disable_kg = false;
  bool disable_transparency = false;

  friend bool operator==(const AblationFlags&, const AblationFlags&) = default;
};

struct PipelinePaths {
  std::string interactions;
  std::string triples;
  std::string attributes;
  std::string aliases;
  std::string vectors;
  std::string split;  // split manifest written by ingest

  friend bool operator==(const PipelinePaths&, const PipelinePaths&) = default;
};

struct PipelineConfig {
  PipelinePaths paths;

  std::size_t retrieval_k = 10;
  std::size_t rerank_n = 5;
  std::size_t k_hop = 2;
  std::size_t pool_size = 100;
  std::size_t max_triples = kDefaultMaxTriples;
  HybridWeights hybrid;
  TransparencyWeights transparency;
  double half_life_days = 90.0;
  double positive_threshold = 4.0;
  std::size_t cf_history_length = kDefaultCfHistory;
  double conflict_spread = 0.6;
  bool diversity = false;
  double mmr_lambda = 0.7;
  ExplanationMode explanation_mode = ExplanationMode::detailed;
  bool backend_claims = false;
  bool implicit_feedback = false;
  SplitRatios split_ratios;

  std::size_t negatives = 99;
  std::vector<std::size_t> eval_ks{5, 10};
  double explain_fraction = 0.0;
  std::uint64_t seed = 0;

  BackendDescriptor backend;
  AblationFlags ablation;

  // Throws ConfigError naming the offending field.
  void validate() const;
  // Throws ConfigError for a set path that does not exist.
  void check_paths() const;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

enum class FieldKind { integer, real, boolean, text, list };

struct ConfigField {
  std::string name;
  FieldKind kind;
  std::string help;
};

// Every configurable field; names double as JSON keys and CLI flag names.
const std::vector<ConfigField>& config_fields();

// Assigns one field from its textual form (numbers, true/false, strings,
// comma-separated lists). Throws ConfigError naming the field.
void set_config_field(PipelineConfig& config, std::string_view name, std::string_view value);

// Flat JSON object keyed by field name. Unknown keys are errors. The result is
// not validated.
PipelineConfig parse_config(std::string_view json_text);
PipelineConfig load_config(const std::filesystem::path& path);
std::string to_json(const PipelineConfig& config);

}  // namespace matrag
