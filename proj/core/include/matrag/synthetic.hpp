#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "matrag/agents.hpp"
#include "matrag/corpus.hpp"
#include "matrag/kg.hpp"

namespace matrag {

// Planted-signal dataset: every user favors one genre; the genre of each item
// is recorded only in the knowledge graph.
struct SyntheticSpec {
  std::size_t users = 500;
  std::size_t items = 300;
  std::size_t genres = 10;  // at most 10
  std::size_t studios = 10;
  std::size_t min_history = 15;
  std::size_t max_history = 24;
  double planted_share = 0.8;
  double review_share = 0.5;
  std::int64_t start_time = 1'600'000'000;
  std::int64_t span_days = 365;
  std::uint64_t seed = 7;
};

struct SyntheticTriple {
  std::string head;
  std::string relation;
  std::string tail;
};

struct SyntheticData {
  std::vector<Interaction> interactions;
  std::vector<SyntheticTriple> triples;
  AttributeTable attributes;
  std::map<std::string, std::string> planted;  // user -> genre

  InteractionStore store() const;
  KnowledgeGraph graph() const;
  // interactions.tsv, triples.tsv, attributes.tsv
  void write(const std::filesystem::path& dir) const;
};

SyntheticData make_synthetic(const SyntheticSpec& spec = {});

}  // namespace matrag
