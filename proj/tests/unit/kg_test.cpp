#include <gtest/gtest.h>

#include <algorithm>

#include "fixtures.hpp"
#include "matrag/error.hpp"
#include "matrag/kg.hpp"

using namespace matrag;
using fixture::tid;

namespace {

UserProfile profile_with(std::vector<std::pair<std::string, std::string>> facets) {
  UserProfile p;
  p.user_id = "u";
  for (auto& [k, v] : facets) p.facets.push_back({k, v, 1.0, FacetSource::explicit_pref});
  canonicalize(p.facets);
  return p;
}

}  // namespace

TEST(Triples, CountsDistinctTriples) {
  const auto kg = fixture::graph({{"a", "r", "b"}, {"b", "r", "c"}, {"a", "s", "c"}});
  EXPECT_EQ(kg.triple_count(), 3u);
  EXPECT_EQ(kg.entity_count(), 3u);
  EXPECT_EQ(kg.relation_count(), 2u);
}

TEST(Triples, DuplicatesCollapse) {
  const auto kg = fixture::graph({{"a", "r", "b"}, {"a", "r", "b"}});
  EXPECT_EQ(kg.triple_count(), 1u);
}

TEST(Triples, IdsFollowFirstOccurrence) {
  const auto kg = fixture::graph({{"x", "r", "y"}, {"a", "r", "b"}, {"x", "r", "y"}, {"c", "r", "d"}});
  ASSERT_EQ(kg.triple_count(), 3u);
  EXPECT_EQ(kg.entity(kg.triple(tid(2)).head).label, "c");
  EXPECT_EQ(evidence_id(tid(0)), "t1");
  EXPECT_EQ(parse_triple_evidence("t3"), tid(2));
  EXPECT_FALSE(parse_triple_evidence("t0"));
  EXPECT_FALSE(parse_triple_evidence("h3"));
}

TEST(Triples, AdjacencyHoldsBothIncidentTriples) {
  const auto kg = fixture::graph({{"a", "r1", "b"}, {"b", "r2", "c"}});
  const auto b = *kg.find_entity("b");
  const auto inc = kg.incident(b);
  ASSERT_EQ(inc.size(), 2u);
  EXPECT_EQ(inc[0], tid(0));
  EXPECT_EQ(inc[1], tid(1));
}

TEST(Triples, MalformedLineReportsLine) {
  std::istringstream in("a\tr\tb\nbroken line\n");
  try {
    parse_triples(in, "t.tsv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Triples, EmptyFileIsEmptyGraph) {
  fixture::TempDir dir;
  EXPECT_EQ(load_triples(dir.write("t.tsv", "")).triple_count(), 0u);
}

TEST(Triples, DanglingIdIsIntegrityError) {
  const auto kg = fixture::graph({{"a", "r", "b"}});
  EXPECT_THROW(kg.triple(tid(5)), IntegrityError);
}

TEST(Link, NormalizedLabelMatches) {
  const auto kg = fixture::graph({{"the matrix", "genre", "sci-fi"}});
  const auto hit = link_entity(kg, "The Matrix");
  ASSERT_TRUE(hit);
  EXPECT_EQ(kg.entity(*hit).label, "the matrix");
}

TEST(Link, NoMatchIsAbsent) {
  const auto kg = fixture::graph({{"the matrix", "genre", "sci-fi"}});
  EXPECT_FALSE(link_entity(kg, "Alien"));
}

TEST(Link, AliasTableIsConsulted) {
  const auto kg = fixture::graph({{"the matrix", "genre", "sci-fi"}});
  std::istringstream in("matrix 1999\tthe matrix\n");
  const auto aliases = parse_aliases(in, "aliases");
  const auto hit = link_entity(kg, "Matrix (1999)", &aliases);
  ASSERT_TRUE(hit);
  EXPECT_EQ(kg.entity(*hit).label, "the matrix");
}

TEST(Link, TwoEntitiesSharingNormalizedLabelIsAmbiguous) {
  const auto kg = fixture::graph({{"Inception", "genre", "sci-fi"}, {"inception!", "year", "2010"}});
  EXPECT_THROW(link_entity(kg, "inception"), AmbiguityError);
}

TEST(KHop, ZeroHopsHasNoTriples) {
  const auto kg = fixture::graph({{"a", "r", "b"}});
  const auto sub = extract_k_hop(kg, *kg.find_entity("a"), 0);
  EXPECT_TRUE(sub.triples.empty());
  EXPECT_FALSE(sub.truncated);
  EXPECT_EQ(sub.center, kg.find_entity("a"));
}

TEST(KHop, ChainOneHop) {
  const auto kg = fixture::graph({{"a", "t1", "b"}, {"b", "t2", "c"}});
  const auto sub = extract_k_hop(kg, *kg.find_entity("a"), 1);
  EXPECT_EQ(sub.triples, std::vector<TripleId>{tid(0)});
  const auto two = extract_k_hop(kg, *kg.find_entity("a"), 2);
  EXPECT_EQ(two.triples, (std::vector<TripleId>{tid(0), tid(1)}));
}

TEST(KHop, StarCapKeepsLowestIds) {
  std::vector<fixture::TripleRow> rows;
  for (int i = 0; i < 20; ++i) rows.emplace_back("hub", "spoke", "leaf" + std::to_string(i));
  const auto kg = fixture::graph(rows);
  const auto sub = extract_k_hop(kg, *kg.find_entity("hub"), 1, 5);
  EXPECT_EQ(sub.triples, (std::vector<TripleId>{tid(0), tid(1), tid(2), tid(3), tid(4)}));
  EXPECT_TRUE(sub.truncated);
  EXPECT_FALSE(extract_k_hop(kg, *kg.find_entity("hub"), 1, 20).truncated);
}

TEST(KHop, IncomingEdgesAreTraversed) {
  const auto kg = fixture::graph({{"x", "r", "a"}, {"y", "r", "x"}});
  const auto sub = extract_k_hop(kg, *kg.find_entity("a"), 2);
  EXPECT_EQ(sub.triples, (std::vector<TripleId>{tid(0), tid(1)}));
}

TEST(KHop, UnknownCenterIsLookupError) {
  const auto kg = fixture::graph({{"a", "r", "b"}});
  EXPECT_THROW(extract_k_hop(kg, EntityId{42}, 1), LookupError);
}

TEST(Filter, AllowlistKeepsOnlyListedRelations) {
  const auto kg = fixture::graph({{"m", "genre", "drama"}, {"m", "budget", "high"}, {"m", "genre", "war"}});
  const auto sub = extract_k_hop(kg, *kg.find_entity("m"), 1);
  const RelationSet allow{"genre"};
  const auto out = filter_relations(sub, kg, profile_with({}), &allow);
  EXPECT_TRUE(out.applied);
  EXPECT_EQ(out.subgraph.triples, (std::vector<TripleId>{tid(0), tid(2)}));
}

TEST(Filter, FacetTokenMatchesCaseFolded) {
  const auto kg = fixture::graph({{"m", "genre", "Sci-Fi"}, {"m", "studio", "acme"}});
  const auto sub = extract_k_hop(kg, *kg.find_entity("m"), 1);
  const auto out = filter_relations(sub, kg, profile_with({{"genre", "sci-fi"}}));
  EXPECT_TRUE(out.applied);
  EXPECT_NE(std::find(out.subgraph.triples.begin(), out.subgraph.triples.end(), tid(0)),
            out.subgraph.triples.end());
}

TEST(Filter, NoMatchReturnsInputUnchanged) {
  const auto kg = fixture::graph({{"m", "genre", "drama"}, {"m", "studio", "acme"}});
  const auto sub = extract_k_hop(kg, *kg.find_entity("m"), 1);
  const auto out = filter_relations(sub, kg, profile_with({{"color", "blue"}}));
  EXPECT_FALSE(out.applied);
  EXPECT_EQ(out.subgraph, sub);
}

TEST(Filter, IdempotentForAllowlist) {
  const auto kg = fixture::graph({{"m", "genre", "drama"}, {"m", "budget", "high"}});
  const auto sub = extract_k_hop(kg, *kg.find_entity("m"), 1);
  const RelationSet allow{"budget"};
  const auto once = filter_relations(sub, kg, profile_with({}), &allow);
  const auto twice = filter_relations(once.subgraph, kg, profile_with({}), &allow);
  EXPECT_EQ(once.subgraph, twice.subgraph);
}
