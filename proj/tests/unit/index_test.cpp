#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "matrag/backend.hpp"
#include "matrag/error.hpp"
#include "matrag/index.hpp"

using namespace matrag;
using fixture::tid;

namespace {
Vector vec(std::vector<double> v) { return Vector(std::move(v)); }
}  // namespace

TEST(Embed, DeterministicAndDistinct) {
  MockBackend mock(11);
  EXPECT_EQ(embed_text(mock, "noir detective"), embed_text(mock, "noir detective"));
  EXPECT_NE(embed_text(mock, "noir detective"), embed_text(mock, "space opera"));
  EXPECT_EQ(embed_text(mock, "x").dimension(), 64u);
}

TEST(Embed, BlankTextRejected) {
  MockBackend mock;
  EXPECT_THROW(embed_text(mock, ""), ValidationError);
  EXPECT_THROW(embed_text(mock, "   "), ValidationError);
}

TEST(Embed, SeedChangesVectors) {
  EXPECT_NE(embed_text(MockBackend(1), "abc"), embed_text(MockBackend(2), "abc"));
}

TEST(Verbalize, TripleTemplate) {
  const auto kg = fixture::graph({{"Inception", "directed_by", "Nolan"}});
  EXPECT_EQ(verbalize_triple(kg, tid(0)), "Inception directed_by Nolan");
}

TEST(Verbalize, EmptySubgraphIsCenterLabel) {
  const auto kg = fixture::graph({{"Inception", "directed_by", "Nolan"}});
  Subgraph sub;
  sub.center = kg.find_entity("Inception");
  EXPECT_EQ(verbalize_subgraph(sub, kg), "Inception");
}

TEST(Verbalize, JoinsInSubgraphOrder) {
  const auto kg = fixture::graph({{"a", "r", "b"}, {"c", "s", "d"}});
  Subgraph sub;
  sub.center = kg.find_entity("a");
  sub.triples = {tid(1), tid(0)};
  EXPECT_EQ(verbalize_subgraph(sub, kg), "c s d; a r b");
  sub.triples.push_back(tid(9));
  EXPECT_THROW(verbalize_subgraph(sub, kg), IntegrityError);
}

TEST(SubgraphEmbedding, SingleTripleEqualsItsText) {
  MockBackend mock(3);
  const auto kg = fixture::graph({{"a", "r", "b"}});
  const auto sub = extract_k_hop(kg, *kg.find_entity("a"), 1);
  EXPECT_EQ(embed_subgraph(mock, sub, kg), embed_text(mock, "a r b"));
}

TEST(SubgraphEmbedding, MeanOfTwo) {
  MockBackend mock(3);
  const auto kg = fixture::graph({{"a", "r", "b"}, {"a", "s", "c"}});
  const auto sub = extract_k_hop(kg, *kg.find_entity("a"), 1);
  const auto u = embed_text(mock, "a r b");
  const auto v = embed_text(mock, "a s c");
  const auto m = embed_subgraph(mock, sub, kg);
  for (std::size_t i = 0; i < m.dimension(); ++i) EXPECT_NEAR(m[i], (u[i] + v[i]) / 2, 1e-12);
}

TEST(SubgraphEmbedding, EmptyFallsBackToCenter) {
  MockBackend mock(3);
  const auto kg = fixture::graph({{"Inception", "r", "b"}});
  Subgraph sub;
  sub.center = kg.find_entity("Inception");
  EXPECT_EQ(embed_subgraph(mock, sub, kg), embed_text(mock, "Inception"));
}

TEST(SubgraphEmbedding, OrderIndependent) {
  MockBackend mock(5);
  const auto kg = fixture::graph({{"a", "r", "b"}, {"a", "s", "c"}, {"c", "t", "d"}});
  Subgraph x;
  x.center = kg.find_entity("a");
  x.triples = {tid(0), tid(1), tid(2)};
  Subgraph y = x;
  y.triples = {tid(2), tid(0), tid(1)};
  const auto ex = embed_subgraph(mock, x, kg);
  const auto ey = embed_subgraph(mock, y, kg);
  for (std::size_t i = 0; i < ex.dimension(); ++i) EXPECT_NEAR(ex[i], ey[i], 1e-15);
}

TEST(Cosine, WorkedValues) {
  EXPECT_NEAR(cosine(vec({3, 4}), vec({3, 4})), 1.0, 1e-9);
  EXPECT_NEAR(cosine(vec({1, 0}), vec({0, 1})), 0.0, 1e-12);
  EXPECT_NEAR(cosine(vec({1, 1}), vec({1, 0})), 0.7071, 1e-4);
}

TEST(Cosine, Errors) {
  EXPECT_THROW(cosine(vec({1, 0}), vec({1, 0, 0})), ValidationError);
  EXPECT_THROW(cosine(vec({0, 0}), vec({1, 0})), ValidationError);
}

TEST(Cosine, SymmetricAndScaleInvariant) {
  const auto a = vec({0.3, -1.2, 2.5});
  const auto b = vec({1.1, 0.4, -0.7});
  EXPECT_NEAR(cosine(a, b), cosine(b, a), 1e-12);
  EXPECT_NEAR(cosine(vec({0.9, -3.6, 7.5}), b), cosine(a, b), 1e-9);
}

TEST(TopK, QueryEqualToStoredComesFirst) {
  VectorIndex idx;
  idx.add("a", vec({1, 0, 0}));
  idx.add("b", vec({0, 1, 0}));
  idx.add("c", vec({0.5, 0.5, 0}));
  const auto hits = idx.top_k(vec({0, 1, 0}), 2);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].key, "b");
  EXPECT_NEAR(hits[0].similarity, 1.0, 1e-12);
  EXPECT_EQ(hits[1].key, "c");
}

TEST(TopK, LargeKReturnsEverything) {
  VectorIndex idx;
  for (int i = 0; i < 4; ++i) idx.add("k" + std::to_string(i), vec({1.0 + i, 1.0}));
  EXPECT_EQ(idx.top_k(vec({1, 1}), 10).size(), 4u);
}

TEST(TopK, TiesBreakByKey) {
  VectorIndex idx;
  idx.add("zeta", vec({1, 1}));
  idx.add("alpha", vec({2, 2}));
  idx.add("mid", vec({1, 0}));
  const auto hits = idx.top_k(vec({1, 1}), 3);
  EXPECT_EQ(hits[0].key, "alpha");
  EXPECT_EQ(hits[1].key, "zeta");
  EXPECT_EQ(hits[2].key, "mid");
}

TEST(TopK, Errors) {
  VectorIndex idx;
  idx.add("a", vec({1, 0}));
  EXPECT_THROW(idx.top_k(vec({1, 0, 0}), 1), ValidationError);
  EXPECT_THROW(idx.top_k(vec({1, 0}), 0), ValidationError);
  EXPECT_THROW(idx.add("a", vec({0, 1})), ValidationError);
  EXPECT_THROW(idx.add("b", vec({0, 1, 1})), ValidationError);
}

TEST(VectorFile, RoundTripsExactly) {
  MockBackend mock(9);
  VectorIndex idx;
  idx.add("t1", embed_text(mock, "one"));
  idx.add("t2", embed_text(mock, "two"));
  std::stringstream s;
  idx.save(s);
  EXPECT_EQ(s.str().rfind("dim=64\n", 0), 0u);
  const auto back = VectorIndex::load(s);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(*back.find("t1"), *idx.find("t1"));
  EXPECT_EQ(*back.find("t2"), *idx.find("t2"));
}

TEST(VectorFile, MalformedLineReportsLine) {
  std::istringstream in("dim=2\nt1\t1,2\nt2\t1,x\n");
  try {
    VectorIndex::load(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}
