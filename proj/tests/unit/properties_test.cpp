#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "fixtures.hpp"
#include "matrag/agents.hpp"
#include "matrag/evalharness.hpp"
#include "matrag/index.hpp"
#include "matrag/kg.hpp"
#include "matrag/synthetic.hpp"
#include "matrag/transparency.hpp"
#include "oracles.hpp"

using namespace matrag;

namespace {

std::array<double, 3> simplex(std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::array<double, 3> w{e(rng), e(rng), e(rng)};
  const double s = w[0] + w[1] + w[2];
  for (auto& x : w) x /= s;
  // absorb rounding so the sum is exactly 1
  w[2] = 1.0 - w[0] - w[1];
  return w;
}

KnowledgeGraph random_graph(std::mt19937_64& rng, std::size_t nodes, std::size_t edges,
                            std::vector<oracle::Edge>* out) {
  std::vector<fixture::TripleRow> rows;
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
  while (rows.size() < edges) {
    const auto h = rng() % nodes, t = rng() % nodes, r = rng() % 3;
    if (h == t || !seen.insert({h, r, t}).second) continue;
    rows.emplace_back("n" + std::to_string(h), "r" + std::to_string(r), "n" + std::to_string(t));
    if (out) out->push_back({h, t});
  }
  return fixture::graph(rows);
}

}  // namespace

TEST(Property, HybridScoreIsConvex) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const auto w = simplex(rng);
    const double a = u(rng), b = u(rng), c = u(rng);
    const double s = hybrid_score(a, b, c, {w[0], w[1], w[2]});
    EXPECT_GE(s, std::min({a, b, c}) - 1e-12);
    EXPECT_LE(s, std::max({a, b, c}) + 1e-12);
  }
}

TEST(Property, CompositeStaysInUnitInterval) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 2000; ++i) {
    const auto w = simplex(rng);
    const double f = u(rng), c = u(rng), p = u(rng);
    const auto t = composite(f, c, p, {w[0], w[1], w[2]});
    EXPECT_GE(t.composite, std::min({f, c, p}) - 1e-12);
    EXPECT_LE(t.composite, std::max({f, c, p}) + 1e-12);
  }
}

TEST(Property, KHopMatchesReferenceAndGrowsWithK) {
  std::mt19937_64 rng(3);
  for (int g = 0; g < 20; ++g) {
    std::vector<oracle::Edge> edges;
    const std::size_t nodes = 5 + rng() % 20;
    const auto kg = random_graph(rng, nodes, 4 + rng() % 30, &edges);
    const std::size_t center = rng() % nodes;
    const auto id = kg.find_entity("n" + std::to_string(center));
    if (!id) continue;  // isolated node never made it into the graph
    // reference edges in the graph's own entity numbering
    std::vector<oracle::Edge> mapped;
    for (std::size_t t = 0; t < kg.triple_count(); ++t) {
      const auto& tr = kg.triple(TripleId{static_cast<std::uint32_t>(t)});
      mapped.push_back({raw(tr.head), raw(tr.tail)});
    }
    std::size_t prev = 0;
    for (std::size_t k = 0; k <= 4; ++k) {
      const auto sub = extract_k_hop(kg, *id, k, kNoTripleCap);
      std::vector<std::size_t> got;
      for (auto t : sub.triples) got.push_back(raw(t));
      EXPECT_EQ(got, oracle::k_hop(kg.entity_count(), mapped, raw(*id), k));
      EXPECT_GE(got.size(), prev);
      prev = got.size();
    }
  }
}

TEST(Property, TopKIsSortedPrefixOfScan) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    VectorIndex idx(8);
    std::vector<std::pair<std::string, std::vector<double>>> raw_entries;
    for (int i = 0; i < 40; ++i) {
      auto v = oracle::random_vector(rng, 8);
      raw_entries.emplace_back("k" + std::to_string(i), v);
      idx.add("k" + std::to_string(i), Vector(v));
    }
    const auto q = oracle::random_vector(rng, 8);
    const auto got = idx.top_k(Vector(q), 7);
    const auto want = oracle::scan_top_k(raw_entries, q, 7);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].key, want[i].first);
      if (i > 0) EXPECT_GE(got[i - 1].similarity, got[i].similarity);
    }
  }
}

TEST(Property, FilterIsIdempotentSubset) {
  std::mt19937_64 rng(5);
  for (int g = 0; g < 30; ++g) {
    const auto kg = random_graph(rng, 12, 25, nullptr);
    UserProfile profile;
    profile.facets.push_back({"r" + std::to_string(rng() % 4), "n1", 1.0, {}});
    const auto sub = extract_k_hop(kg, EntityId{0}, 2, kNoTripleCap);
    const auto once = filter_relations(sub, kg, profile);
    const auto twice = filter_relations(once.subgraph, kg, profile);
    EXPECT_EQ(once.subgraph.triples, twice.subgraph.triples);
    for (auto t : once.subgraph.triples) {
      EXPECT_NE(std::find(sub.triples.begin(), sub.triples.end(), t), sub.triples.end());
    }
  }
}

TEST(Property, MmrReturnsPermutationPrefix) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    std::vector<double> scores(n);
    std::vector<AttributeSet> attrs(n);
    std::vector<const AttributeSet*> ptrs;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = u(rng);
      attrs[i] = {{"genre", "g" + std::to_string(rng() % 3)}};
    }
    for (auto& a : attrs) ptrs.push_back(&a);
    const std::size_t k = 1 + rng() % n;
    const auto order = mmr_order(scores, ptrs, 0.05 + 0.95 * u(rng), k);
    EXPECT_EQ(order.size(), k);
    EXPECT_EQ(std::set<std::size_t>(order.begin(), order.end()).size(), k);
    for (auto i : order) EXPECT_LT(i, n);
    // the best-scoring item always leads
    const auto best = static_cast<std::size_t>(
        std::max_element(scores.begin(), scores.end()) - scores.begin());
    EXPECT_EQ(order[0], best);
  }
}

TEST(Property, SplitIsTemporalPartition) {
  SyntheticSpec spec;
  spec.users = 60;
  spec.items = 80;
  spec.seed = 13;
  const auto store = make_synthetic(spec).store();
  const auto split = temporal_split(store, {});
  std::vector<Position> all;
  for (auto part : {&split.train, &split.valid, &split.test}) all.insert(all.end(), part->begin(), part->end());
  std::sort(all.begin(), all.end());
  ASSERT_EQ(all.size(), store.size());
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  for (const auto& user : store.users()) {
    std::int64_t last_train = std::numeric_limits<std::int64_t>::min();
    std::int64_t first_test = std::numeric_limits<std::int64_t>::max();
    for (auto p : store.user_positions(user)) {
      const auto part = split.part_of(p);
      if (part == SplitPart::train) last_train = std::max(last_train, store.at(p).timestamp);
      if (part == SplitPart::test) first_test = std::min(first_test, store.at(p).timestamp);
    }
    EXPECT_LE(last_train, first_test) << user;
  }
}

TEST(Property, BleuInUnitInterval) {
  std::mt19937_64 rng(7);
  const char* vocab[] = {"a", "b", "c", "d", "e", "f"};
  for (int i = 0; i < 500; ++i) {
    std::string cand, ref;
    for (int w = 0, n = 1 + rng() % 10; w < n; ++w) cand += std::string(vocab[rng() % 6]) + " ";
    for (int w = 0, n = 1 + rng() % 10; w < n; ++w) ref += std::string(vocab[rng() % 6]) + " ";
    const std::string refs[] = {ref};
    const double b = bleu4(cand, refs);
    EXPECT_GE(b, 0.0);
    EXPECT_LE(b, 1.0);
  }
}

TEST(Property, MockEmbeddingsAreUnitNorm) {
  MockBackend mock(9);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    const auto v = embed_text(mock, "text " + std::to_string(rng()));
    EXPECT_NEAR(v.norm(), 1.0, 1e-9);
  }
}
