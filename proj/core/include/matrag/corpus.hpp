#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace matrag {

struct Interaction {
  std::string user_id;
  std::string item_id;
  double rating = 1.0;
  std::int64_t timestamp = 0;
  std::optional<std::string> text;
  // Situational signals (device, session, ...). The line format carries none.
  std::vector<std::pair<std::string, std::string>> context;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

// Index into InteractionStore::interactions().
using Position = std::size_t;

// Immutable after construction; safe for concurrent readers.
class InteractionStore {
 public:
  InteractionStore() = default;
  // Throws ValidationError if any interaction breaks the field invariants.
  explicit InteractionStore(std::vector<Interaction> interactions);

  const std::vector<Interaction>& interactions() const { return interactions_; }
  const Interaction& at(Position p) const { return interactions_.at(p); }
  std::size_t size() const { return interactions_.size(); }
  bool empty() const { return interactions_.empty(); }

  // Positions sorted ascending by (timestamp, item_id, position).
  std::span<const Position> user_positions(std::string_view user_id) const;
  // Positions in file order.
  std::span<const Position> item_positions(std::string_view item_id) const;

  bool has_user(std::string_view user_id) const;
  bool has_item(std::string_view item_id) const;
  std::vector<std::string> users() const;  // sorted
  std::vector<std::string> items() const;  // sorted
  std::size_t user_count() const { return by_user_.size(); }
  std::size_t item_count() const { return by_item_.size(); }
  std::int64_t max_timestamp() const;

  friend bool operator==(const InteractionStore& a, const InteractionStore& b) {
    return a.interactions_ == b.interactions_;
  }

 private:
  std::vector<Interaction> interactions_;
  std::map<std::string, std::vector<Position>, std::less<>> by_user_;
  std::map<std::string, std::vector<Position>, std::less<>> by_item_;
};

struct IngestOptions {
  // Clicks without ratings: the rating field is ignored and set to 1.0.
  bool implicit_feedback = false;
};

// Line format: <user>\t<item>\t<rating>\t<timestamp>[\t<text>]
InteractionStore parse_interactions(std::istream& in, std::string_view source,
                                    const IngestOptions& options = {});
InteractionStore ingest_interactions(const std::filesystem::path& path,
                                     const IngestOptions& options = {});
void write_interactions(const InteractionStore& store, std::ostream& out);

enum class SplitPart { train, valid, test };
std::string_view to_string(SplitPart part);

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;

  friend bool operator==(const SplitRatios&, const SplitRatios&) = default;
};

inline constexpr std::size_t kColdUserThreshold = 5;

struct SplitAssignment {
  std::vector<Position> train;  // each sorted ascending
  std::vector<Position> valid;
  std::vector<Position> test;
  SplitRatios ratios;

  std::optional<SplitPart> part_of(Position p) const;
  const std::vector<Position>& positions(SplitPart part) const;
};

// Per-user temporal cut: the earliest ceil(n*train) interactions go to train,
// the next ceil(n*valid) (capped at what is left) to valid, the rest to test.
// Users with fewer than kColdUserThreshold interactions go wholly to train.
SplitAssignment temporal_split(const InteractionStore& store, const SplitRatios& ratios);

// <position>\t<train|valid|test> in ascending position order.
void write_split_manifest(const SplitAssignment& split, std::ostream& out);
SplitAssignment read_split_manifest(std::istream& in);

// The user's interactions ascending by (timestamp, item_id); empty for an
// unknown user.
std::vector<Interaction> user_history(const InteractionStore& store, std::string_view user_id);
std::vector<Interaction> user_history(const InteractionStore& store, std::string_view user_id,
                                      const SplitAssignment& split, SplitPart part);

// A new store holding only the interactions of one split part, in original
// order.
InteractionStore restrict_to(const InteractionStore& store, const SplitAssignment& split,
                             SplitPart part);

}  // namespace matrag
