#include "matrag/index.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <mutex>
#include <ostream>

#include "matrag/error.hpp"
#include "matrag/text.hpp"

namespace matrag {

Vector::Vector(std::vector<double> components) : components_(std::move(components)) {
  if (components_.empty()) throw ValidationError("vector has no components");
  for (double c : components_) {
    if (!std::isfinite(c)) throw ValidationError("vector component is not finite");
  }
}

double Vector::norm() const {
  double sq = 0.0;
  for (double c : components_) sq += c * c;
  return std::sqrt(sq);
}

Vector embed_text(const Backend& backend, std::string_view s) {
  if (text::trim(s).empty()) throw ValidationError("cannot embed empty text");
  return backend.embed(s);
}

std::string verbalize_triple(const KnowledgeGraph& kg, TripleId id) {
  const auto& t = kg.triple(id);
  return kg.entity(t.head).label + " " + kg.relation_label(t.relation) + " " +
         kg.entity(t.tail).label;
}

std::string verbalize_subgraph(const Subgraph& sub, const KnowledgeGraph& kg) {
  if (sub.triples.empty()) return sub.center ? kg.entity(*sub.center).label : std::string();
  std::string out;
  for (auto id : sub.triples) {
    if (!out.empty()) out += "; ";
    out += verbalize_triple(kg, id);
  }
  return out;
}

std::vector<std::string> tagged_triple_lines(const Subgraph& sub, const KnowledgeGraph& kg) {
  std::vector<std::string> out;
  out.reserve(sub.triples.size());
  for (auto id : sub.triples) {
    out.push_back(text::format_tag(evidence_id(id)) + " " + verbalize_triple(kg, id));
  }
  return out;
}

TripleEmbeddings::TripleEmbeddings(const Backend& backend, const KnowledgeGraph& kg)
    : backend_(backend), kg_(kg) {}

void TripleEmbeddings::preload(const VectorIndex& vectors) {
  std::unique_lock lock(mu_);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (auto id = parse_triple_evidence(vectors.key(i)); id && kg_.contains(*id)) {
      cache_.insert_or_assign(raw(*id), vectors.vector(i));
    }
  }
}

Vector TripleEmbeddings::get(TripleId id) const {
  {
    std::shared_lock lock(mu_);
    if (auto it = cache_.find(raw(id)); it != cache_.end()) return it->second;
  }
  auto v = embed_text(backend_, verbalize_triple(kg_, id));
  std::unique_lock lock(mu_);
  return cache_.try_emplace(raw(id), std::move(v)).first->second;
}

namespace {

template <typename EmbedTriple>
Vector mean_embedding(const Backend& backend, const Subgraph& sub, const KnowledgeGraph& kg,
                      EmbedTriple&& embed_triple) {
  if (sub.triples.empty()) {
    if (!sub.center) throw ValidationError("cannot embed an empty subgraph without a center");
    return embed_text(backend, kg.entity(*sub.center).label);
  }
  std::vector<double> sum;
  for (auto id : sub.triples) {
    const auto v = embed_triple(id);
    if (sum.empty()) sum.assign(v.dimension(), 0.0);
    if (v.dimension() != sum.size()) throw ValidationError("triple embedding dimension mismatch");
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += v[i];
  }
  const double n = static_cast<double>(sub.triples.size());
  for (auto& c : sum) c /= n;
  return Vector(std::move(sum));
}

}  // namespace

Vector embed_subgraph(const Backend& backend, const Subgraph& sub, const KnowledgeGraph& kg) {
  return mean_embedding(backend, sub, kg, [&](TripleId id) {
    return embed_text(backend, verbalize_triple(kg, id));
  });
}

Vector embed_subgraph(const TripleEmbeddings& triples, const Backend& backend,
                      const Subgraph& sub, const KnowledgeGraph& kg) {
  return mean_embedding(backend, sub, kg, [&](TripleId id) { return triples.get(id); });
}

double cosine(const Vector& a, const Vector& b) {
  if (a.dimension() != b.dimension()) {
    throw ValidationError("cosine dimension mismatch: " + std::to_string(a.dimension()) + " vs " +
                          std::to_string(b.dimension()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.dimension(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ValidationError("cosine of a zero-norm vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

void VectorIndex::add(std::string key, Vector vector) {
  if (key.empty() || key.find_first_of("\t\n") != std::string::npos) {
    throw ValidationError("vector key must be non-empty and free of tabs/newlines");
  }
  if (vector.empty()) throw ValidationError("cannot index an empty vector");
  if (dimension_ == 0) dimension_ = vector.dimension();
  if (vector.dimension() != dimension_) {
    throw ValidationError("vector '" + key + "' has dimension " +
                          std::to_string(vector.dimension()) + ", index expects " +
                          std::to_string(dimension_));
  }
  if (by_key_.contains(key)) throw ValidationError("duplicate vector key '" + key + "'");
  by_key_.emplace(key, keys_.size());
  norms_.push_back(vector.norm());
  keys_.push_back(std::move(key));
  vectors_.push_back(std::move(vector));
}

const Vector* VectorIndex::find(std::string_view key) const {
  auto it = by_key_.find(key);
  return it == by_key_.end() ? nullptr : &vectors_[it->second];
}

std::vector<Neighbor> VectorIndex::top_k(const Vector& query, std::size_t k) const {
  if (k == 0) throw ValidationError("top_k requires K >= 1");
  if (empty()) return {};
  if (query.dimension() != dimension_) {
    throw ValidationError("query dimension " + std::to_string(query.dimension()) +
                          " does not match index dimension " + std::to_string(dimension_));
  }
  const double qn = query.norm();
  if (qn == 0.0) throw ValidationError("cosine of a zero-norm vector");
  std::vector<Neighbor> all;
  all.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    if (norms_[i] == 0.0) throw ValidationError("cosine of a zero-norm vector ('" + keys_[i] + "')");
    double dot = 0.0;
    const auto& v = vectors_[i];
    for (std::size_t d = 0; d < dimension_; ++d) dot += query[d] * v[d];
    all.push_back({keys_[i], std::clamp(dot / (qn * norms_[i]), -1.0, 1.0)});
  }
  const auto order = [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.key < b.key;
  };
  const std::size_t n = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(), order);
  all.resize(n);
  return all;
}

void VectorIndex::save(std::ostream& out) const {
  out << "dim=" << dimension_ << '\n';
  char buf[40];
  for (std::size_t i = 0; i < size(); ++i) {
    out << keys_[i] << '\t';
    const auto c = vectors_[i].components();
    for (std::size_t d = 0; d < c.size(); ++d) {
      if (d > 0) out << ',';
      std::snprintf(buf, sizeof buf, "%.17g", c[d]);
      out << buf;
    }
    out << '\n';
  }
}

VectorIndex VectorIndex::load(std::istream& in, std::string_view source) {
  std::string line;
  std::size_t line_no = 1;
  auto fail = [&](const std::string& what) {
    return ParseError(std::string(source) + ":" + std::to_string(line_no) + ": " + what, line_no);
  };
  if (!std::getline(in, line)) throw fail("missing dim=<d> header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (!line.starts_with("dim=")) throw fail("missing dim=<d> header");
  auto dim = text::parse_int64(std::string_view(line).substr(4));
  if (!dim || *dim <= 0) throw fail("bad dimension");
  VectorIndex index(static_cast<std::size_t>(*dim));
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw fail("expected <key>\\t<components>");
    std::vector<double> comps;
    for (auto piece : text::split(std::string_view(line).substr(tab + 1), ',')) {
      auto v = text::parse_double(piece);
      if (!v) throw fail("bad component '" + std::string(piece) + "'");
      comps.push_back(*v);
    }
    if (comps.size() != index.dimension()) throw fail("component count does not match dim");
    index.add(line.substr(0, tab), Vector(std::move(comps)));
  }
  return index;
}

}  // namespace matrag
