#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "matrag/backend.hpp"
#include "matrag/kg.hpp"
#include "matrag/vector.hpp"

namespace matrag {

// Throws ValidationError on blank text; backend failures propagate.
Vector embed_text(const Backend& backend, std::string_view text);

// "<head label> <relation label> <tail label>"
std::string verbalize_triple(const KnowledgeGraph& kg, TripleId id);
// Triples in subgraph order joined by "; "; a zero-triple subgraph verbalizes
// to its center label. Throws IntegrityError on a dangling triple id.
std::string verbalize_subgraph(const Subgraph& sub, const KnowledgeGraph& kg);
// "[E:t<k>] <triple text>" per triple, in subgraph order.
std::vector<std::string> tagged_triple_lines(const Subgraph& sub, const KnowledgeGraph& kg);

// Per-triple embeddings, computed on first use or taken from a preloaded
// index keyed by evidence id ("t<k>"). Thread-safe.
class TripleEmbeddings {
 public:
  TripleEmbeddings(const Backend& backend, const KnowledgeGraph& kg);

  void preload(const class VectorIndex& vectors);
  Vector get(TripleId id) const;

 private:
  const Backend& backend_;
  const KnowledgeGraph& kg_;
  mutable std::shared_mutex mu_;
  mutable std::unordered_map<std::uint32_t, Vector> cache_;
};

// Componentwise mean of the per-triple embeddings; a zero-triple subgraph
// embeds its center label.
Vector embed_subgraph(const Backend& backend, const Subgraph& sub, const KnowledgeGraph& kg);
Vector embed_subgraph(const TripleEmbeddings& triples, const Backend& backend,
                      const Subgraph& sub, const KnowledgeGraph& kg);

// Throws ValidationError on a dimension mismatch or a zero-norm input.
double cosine(const Vector& a, const Vector& b);

struct Neighbor {
  std::string key;
  double similarity = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Exact-scan index. Keys are unique; every vector shares one dimension.
class VectorIndex {
 public:
  VectorIndex() = default;
  explicit VectorIndex(std::size_t dimension) : dimension_(dimension) {}

  // Throws ValidationError on a duplicate key or dimension mismatch.
  void add(std::string key, Vector vector);

  std::size_t size() const { return keys_.size(); }
  bool empty() const { return keys_.empty(); }
  std::size_t dimension() const { return dimension_; }
  const std::string& key(std::size_t i) const { return keys_[i]; }
  const Vector& vector(std::size_t i) const { return vectors_[i]; }
  const Vector* find(std::string_view key) const;

  // The K highest-cosine entries, descending, ties by ascending key. Returns
  // everything when K >= size().
  std::vector<Neighbor> top_k(const Vector& query, std::size_t k) const;

  // "dim=<d>" then "<key>\t<c1>,<c2>,..." per entry (17 significant digits).
  void save(std::ostream& out) const;
  static VectorIndex load(std::istream& in, std::string_view source = "vectors");

 private:
  std::size_t dimension_ = 0;
  std::vector<std::string> keys_;
  std::vector<Vector> vectors_;
  std::vector<double> norms_;
  std::map<std::string, std::size_t, std::less<>> by_key_;
};

inline std::vector<Neighbor> top_k(const VectorIndex& index, const Vector& query, std::size_t k) {
  return index.top_k(query, k);
}

struct ScoredSubgraph {
  std::string key;  // slice key, e.g. "<item entity>#<relation>"
  Subgraph subgraph;
  double similarity = 0.0;
  std::size_t retrieval_rank = 1;
  std::optional<std::size_t> rerank_rank;

  friend bool operator==(const ScoredSubgraph&, const ScoredSubgraph&) = default;
};

}  // namespace matrag
