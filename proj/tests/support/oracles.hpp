#pragma once

// Reference implementations used as test oracles. They follow the textbook
// definitions directly and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// --- ranking metrics --------------------------------------------------------

inline double hit(const std::vector<std::string>& items, const std::string& truth, std::size_t k) {
  for (std::size_t i = 0; i < items.size() && i < k; ++i) {
    if (items[i] == truth) return 1.0;
  }
  return 0.0;
}

// Full DCG/IDCG with binary relevance.
inline double ndcg(const std::vector<std::string>& items, const std::string& truth, std::size_t k) {
  double dcg = 0.0;
  std::size_t relevant = 0;
  for (std::size_t i = 0; i < items.size(); ++i) relevant += items[i] == truth ? 1 : 0;
  for (std::size_t i = 0; i < items.size() && i < k; ++i) {
    const double rel = items[i] == truth ? 1.0 : 0.0;
    if (rel > 0.0) dcg += rel / std::log2(static_cast<double>(i) + 2.0);
  }
  double idcg = 0.0;
  for (std::size_t i = 0; i < std::min<std::size_t>(relevant, k); ++i) {
    idcg += 1.0 / std::log2(static_cast<double>(i) + 2.0);
  }
  return idcg == 0.0 ? 0.0 : dcg / idcg;
}

inline double reciprocal_rank(const std::vector<std::string>& items, const std::string& truth) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i] == truth) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

// --- exhaustive cosine scan -------------------------------------------------

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline std::vector<std::pair<std::string, double>> scan_top_k(
    const std::vector<std::pair<std::string, std::vector<double>>>& entries,
    const std::vector<double>& query, std::size_t k) {
  std::vector<std::pair<std::string, double>> all;
  for (const auto& [key, v] : entries) all.emplace_back(key, cosine(query, v));
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

// --- k-hop BFS --------------------------------------------------------------

struct Edge {
  std::size_t head;
  std::size_t tail;
};

// Triple indices within k hops of `center`, ordered by (layer, index), where a
// triple's layer is the BFS distance of its nearer endpoint.
inline std::vector<std::size_t> k_hop(std::size_t nodes, const std::vector<Edge>& edges,
                                      std::size_t center, std::size_t k) {
  if (k == 0) return {};
  std::vector<std::vector<std::size_t>> adj(nodes);
  for (const auto& e : edges) {
    adj[e.head].push_back(e.tail);
    adj[e.tail].push_back(e.head);
  }
  constexpr std::size_t inf = static_cast<std::size_t>(-1);
  std::vector<std::size_t> dist(nodes, inf);
  std::deque<std::size_t> q{center};
  dist[center] = 0;
  while (!q.empty()) {
    const auto u = q.front();
    q.pop_front();
    for (auto v : adj[u]) {
      if (dist[v] == inf) {
        dist[v] = dist[u] + 1;
        q.push_back(v);
      }
    }
  }
  std::vector<std::pair<std::size_t, std::size_t>> picked;  // (layer, index)
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto near = std::min(dist[edges[i].head], dist[edges[i].tail]);
    if (near != inf && near <= k - 1) picked.emplace_back(near, i);
  }
  std::sort(picked.begin(), picked.end());
  std::vector<std::size_t> out;
  for (const auto& p : picked) out.push_back(p.second);
  return out;
}

// --- uniform draws ----------------------------------------------------------

inline std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(dim);
  for (auto& x : v) x = n(rng);
  return v;
}

}  // namespace oracle
