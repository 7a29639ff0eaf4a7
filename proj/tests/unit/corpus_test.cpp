#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "matrag/corpus.hpp"
#include "matrag/error.hpp"

using namespace matrag;

namespace {

std::string user_lines(const std::string& user, int n, std::int64_t t0 = 100) {
  std::string out;
  for (int i = 0; i < n; ++i) {
    out += user + "\ti" + std::to_string(i) + "\t4\t" + std::to_string(t0 + i) + "\n";
  }
  return out;
}

struct Counts {
  std::size_t train = 0, valid = 0, test = 0;
};

Counts per_user(const InteractionStore& s, const SplitAssignment& split, const std::string& user) {
  Counts c;
  for (auto p : s.user_positions(user)) {
    switch (*split.part_of(p)) {
      case SplitPart::train: ++c.train; break;
      case SplitPart::valid: ++c.valid; break;
      case SplitPart::test: ++c.test; break;
    }
  }
  return c;
}

}  // namespace

TEST(Ingest, CountsInteractionsAndUsers) {
  const auto s = fixture::store("u1\ti1\t5\t10\nu1\ti2\t3\t11\nu2\ti1\t4\t12\n");
  EXPECT_EQ(s.size(), 3u);
  EXPECT_EQ(s.user_count(), 2u);
  EXPECT_EQ(s.item_count(), 2u);
}

TEST(Ingest, EmptyFileGivesEmptyStore) {
  fixture::TempDir dir;
  const auto s = ingest_interactions(dir.write("empty.tsv", ""));
  EXPECT_EQ(s.size(), 0u);
  EXPECT_EQ(s.user_count(), 0u);
}

TEST(Ingest, MapsFields) {
  const auto s = fixture::store("u1\ti9\t4.0\t100\tgreat battery\n");
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s.at(0), fixture::interaction("u1", "i9", 4.0, 100, "great battery"));
}

TEST(Ingest, MalformedLineNamesLineAndField) {
  try {
    fixture::store("u1\ti1\t5\t10\nu1\ti2\tfive\t11\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("rating"), std::string::npos);
  }
  EXPECT_THROW(fixture::store("u1\ti1\t5\n"), ParseError);
}

TEST(Ingest, RatingOutOfRangeIsValidationError) {
  EXPECT_THROW(fixture::store("u1\ti1\t6\t10\n"), ValidationError);
  EXPECT_THROW(fixture::store("u1\ti1\t0.5\t10\n"), ValidationError);
}

TEST(Ingest, UnreadableFileIsIoError) {
  EXPECT_THROW(ingest_interactions("/nonexistent/path/x.tsv"), IoError);
}

TEST(Ingest, ImplicitFeedbackIgnoresRating) {
  std::istringstream in("u1\ti1\t\t10\n");
  const auto s = parse_interactions(in, "clicks", {true});
  EXPECT_DOUBLE_EQ(s.at(0).rating, 1.0);
}

TEST(Ingest, RoundTripIsIdentical) {
  const auto s = fixture::store("u1\ti1\t5\t10\tnice one\nu2\ti3\t2.5\t7\nu1\ti2\t1\t10\n");
  std::ostringstream out;
  write_interactions(s, out);
  EXPECT_EQ(fixture::store(out.str()), s);
}

TEST(Split, TenInteractionsGiveEightOneOne) {
  const auto s = fixture::store(user_lines("u", 10));
  const auto split = temporal_split(s, {0.8, 0.1, 0.1});
  const auto c = per_user(s, split, "u");
  EXPECT_EQ(c.train, 8u);
  EXPECT_EQ(c.valid, 1u);
  EXPECT_EQ(c.test, 1u);
}

TEST(Split, ColdUserGoesToTrain) {
  const auto s = fixture::store(user_lines("u", 3));
  const auto split = temporal_split(s, {0.8, 0.1, 0.1});
  const auto c = per_user(s, split, "u");
  EXPECT_EQ(c.train, 3u);
  EXPECT_EQ(c.valid + c.test, 0u);
}

TEST(Split, SevenInteractionsFollowCeilingThenCap) {
  // ceil(7*0.8)=6 train, ceil(7*0.1)=1 valid, nothing left for test
  const auto s = fixture::store(user_lines("u", 7));
  const auto split = temporal_split(s, {0.8, 0.1, 0.1});
  const auto c = per_user(s, split, "u");
  EXPECT_EQ(c.train, 6u);
  EXPECT_EQ(c.valid, 1u);
  EXPECT_EQ(c.test, 0u);
}

TEST(Split, RatiosMustSumToOne) {
  const auto s = fixture::store(user_lines("u", 7));
  EXPECT_THROW(temporal_split(s, {0.8, 0.1, 0.2}), ValidationError);
  EXPECT_THROW(temporal_split(s, {1.1, -0.1, 0.0}), ValidationError);
}

TEST(Split, ManifestRoundTrip) {
  const auto s = fixture::store(user_lines("a", 10) + user_lines("b", 6, 500));
  const auto split = temporal_split(s, {0.8, 0.1, 0.1});
  std::ostringstream out;
  write_split_manifest(split, out);
  std::istringstream in(out.str());
  const auto back = read_split_manifest(in);
  EXPECT_EQ(back.train, split.train);
  EXPECT_EQ(back.valid, split.valid);
  EXPECT_EQ(back.test, split.test);
}

TEST(History, OrderedByTimestamp) {
  const auto s = fixture::store("u\tc\t4\t30\nu\ta\t4\t10\nu\td\t4\t40\nu\tb\t4\t20\n");
  const auto h = user_history(s, "u");
  ASSERT_EQ(h.size(), 4u);
  EXPECT_EQ(h[0].item_id, "a");
  EXPECT_EQ(h[1].item_id, "b");
  EXPECT_EQ(h[2].item_id, "c");
  EXPECT_EQ(h[3].item_id, "d");
}

TEST(History, UnknownUserIsEmpty) {
  const auto s = fixture::store("u\ta\t4\t30\n");
  EXPECT_TRUE(user_history(s, "nobody").empty());
}

TEST(History, TimestampTiesBreakByItem) {
  const auto s = fixture::store("u\tb\t4\t5\nu\ta\t4\t5\n");
  const auto h = user_history(s, "u");
  EXPECT_EQ(h[0].item_id, "a");
  EXPECT_EQ(h[1].item_id, "b");
}

TEST(History, RestrictedToSplitPart) {
  const auto s = fixture::store(user_lines("u", 10));
  const auto split = temporal_split(s, {0.8, 0.1, 0.1});
  const auto test = user_history(s, "u", split, SplitPart::test);
  ASSERT_EQ(test.size(), 1u);
  EXPECT_EQ(test[0].item_id, "i9");
  EXPECT_EQ(restrict_to(s, split, SplitPart::train).size(), 8u);
}
