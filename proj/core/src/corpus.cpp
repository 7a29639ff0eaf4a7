#include "matrag/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "matrag/error.hpp"
#include "matrag/text.hpp"

namespace matrag {
namespace {

void validate(const Interaction& x, Position p) {
  const auto where = " (interaction " + std::to_string(p) + ")";
  if (x.user_id.empty()) throw ValidationError("empty user_id" + where);
  if (x.item_id.empty()) throw ValidationError("empty item_id" + where);
  if (!(x.rating >= 1.0 && x.rating <= 5.0)) {
    throw ValidationError("rating " + text::format_shortest(x.rating) + " outside [1,5]" + where);
  }
  if (x.timestamp < 0) throw ValidationError("negative timestamp" + where);
}

template <typename Map>
std::span<const Position> lookup(const Map& m, std::string_view key) {
  auto it = m.find(key);
  if (it == m.end()) return {};
  return it->second;
}

}  // namespace

InteractionStore::InteractionStore(std::vector<Interaction> interactions)
    : interactions_(std::move(interactions)) {
  for (Position p = 0; p < interactions_.size(); ++p) {
    const auto& x = interactions_[p];
    validate(x, p);
    by_user_[x.user_id].push_back(p);
    by_item_[x.item_id].push_back(p);
  }
  for (auto& [user, positions] : by_user_) {
    std::sort(positions.begin(), positions.end(), [this](Position a, Position b) {
      const auto& x = interactions_[a];
      const auto& y = interactions_[b];
      if (x.timestamp != y.timestamp) return x.timestamp < y.timestamp;
      if (x.item_id != y.item_id) return x.item_id < y.item_id;
      return a < b;
    });
  }
}

std::span<const Position> InteractionStore::user_positions(std::string_view user_id) const {
  return lookup(by_user_, user_id);
}

std::span<const Position> InteractionStore::item_positions(std::string_view item_id) const {
  return lookup(by_item_, item_id);
}

bool InteractionStore::has_user(std::string_view user_id) const {
  return by_user_.find(user_id) != by_user_.end();
}

bool InteractionStore::has_item(std::string_view item_id) const {
  return by_item_.find(item_id) != by_item_.end();
}

std::vector<std::string> InteractionStore::users() const {
  std::vector<std::string> out;
  out.reserve(by_user_.size());
  for (const auto& [k, v] : by_user_) out.push_back(k);
  return out;
}

std::vector<std::string> InteractionStore::items() const {
  std::vector<std::string> out;
  out.reserve(by_item_.size());
  for (const auto& [k, v] : by_item_) out.push_back(k);
  return out;
}

std::int64_t InteractionStore::max_timestamp() const {
  std::int64_t m = 0;
  for (const auto& x : interactions_) m = std::max(m, x.timestamp);
  return m;
}

InteractionStore parse_interactions(std::istream& in, std::string_view source,
                                    const IngestOptions& options) {
  std::vector<Interaction> rows;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) -> ParseError {
    return ParseError(std::string(source) + ":" + std::to_string(line_no) + ": " + what, line_no);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, '\t');
    if (fields.size() < 4) throw fail("expected at least 4 tab-separated fields, got " +
                                      std::to_string(fields.size()));
    if (fields.size() > 5) throw fail("too many fields (text may not contain tabs)");
    Interaction x;
    x.user_id = std::string(text::trim(fields[0]));
    x.item_id = std::string(text::trim(fields[1]));
    if (x.user_id.empty()) throw fail("field 1 (user) is empty");
    if (x.item_id.empty()) throw fail("field 2 (item) is empty");
    if (options.implicit_feedback) {
      x.rating = 1.0;
    } else {
      auto rating = text::parse_double(fields[2]);
      if (!rating) throw fail("field 3 (rating) is not a number: '" + std::string(fields[2]) + "'");
      if (*rating < 1.0 || *rating > 5.0) {
        throw ValidationError(std::string(source) + ":" + std::to_string(line_no) +
                              ": rating " + std::string(text::trim(fields[2])) +
                              " outside [1,5]");
      }
      x.rating = *rating;
    }
    auto ts = text::parse_int64(fields[3]);
    if (!ts) throw fail("field 4 (timestamp) is not an integer: '" + std::string(fields[3]) + "'");
    if (*ts < 0) throw fail("field 4 (timestamp) is negative");
    x.timestamp = *ts;
    if (fields.size() == 5 && !fields[4].empty()) x.text = std::string(fields[4]);
    rows.push_back(std::move(x));
  }
  return InteractionStore(std::move(rows));
}

InteractionStore ingest_interactions(const std::filesystem::path& path,
                                     const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read interactions file: " + path.string());
  return parse_interactions(in, path.string(), options);
}

void write_interactions(const InteractionStore& store, std::ostream& out) {
  for (const auto& x : store.interactions()) {
    out << x.user_id << '\t' << x.item_id << '\t' << text::format_shortest(x.rating) << '\t'
        << x.timestamp;
    if (x.text && !x.text->empty()) out << '\t' << *x.text;
    out << '\n';
  }
}

std::string_view to_string(SplitPart part) {
  switch (part) {
    case SplitPart::train: return "train";
    case SplitPart::valid: return "valid";
    case SplitPart::test: return "test";
  }
  return "train";
}

std::optional<SplitPart> SplitAssignment::part_of(Position p) const {
  for (auto part : {SplitPart::train, SplitPart::valid, SplitPart::test}) {
    const auto& v = positions(part);
    if (std::binary_search(v.begin(), v.end(), p)) return part;
  }
  return std::nullopt;
}

const std::vector<Position>& SplitAssignment::positions(SplitPart part) const {
  switch (part) {
    case SplitPart::train: return train;
    case SplitPart::valid: return valid;
    case SplitPart::test: return test;
  }
  return train;
}

SplitAssignment temporal_split(const InteractionStore& store, const SplitRatios& ratios) {
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0) {
    throw ValidationError("split ratios must be non-negative");
  }
  if (std::abs(ratios.train + ratios.valid + ratios.test - 1.0) > 1e-9) {
    throw ValidationError("split ratios must sum to 1");
  }
  // The slack keeps 10*0.8 from rounding up to 9 on inexact products.
  auto ceil_share = [](std::size_t n, double r) {
    return static_cast<std::size_t>(std::ceil(static_cast<double>(n) * r - 1e-9));
  };
  SplitAssignment out;
  out.ratios = ratios;
  for (const auto& user : store.users()) {
    const auto positions = store.user_positions(user);
    const std::size_t n = positions.size();
    if (n < kColdUserThreshold) {
      out.train.insert(out.train.end(), positions.begin(), positions.end());
      continue;
    }
    const std::size_t n_train = std::min(n, ceil_share(n, ratios.train));
    const std::size_t n_valid = std::min(n - n_train, ceil_share(n, ratios.valid));
    out.train.insert(out.train.end(), positions.begin(), positions.begin() + n_train);
    out.valid.insert(out.valid.end(), positions.begin() + n_train,
                     positions.begin() + n_train + n_valid);
    out.test.insert(out.test.end(), positions.begin() + n_train + n_valid, positions.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.valid.begin(), out.valid.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

void write_split_manifest(const SplitAssignment& split, std::ostream& out) {
  std::vector<std::pair<Position, SplitPart>> rows;
  for (auto part : {SplitPart::train, SplitPart::valid, SplitPart::test}) {
    for (auto p : split.positions(part)) rows.emplace_back(p, part);
  }
  std::sort(rows.begin(), rows.end());
  for (const auto& [p, part] : rows) out << p << '\t' << to_string(part) << '\n';
}

SplitAssignment read_split_manifest(std::istream& in) {
  SplitAssignment out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    const auto fields = text::split(line, '\t');
    auto pos = fields.size() == 2 ? text::parse_int64(fields[0]) : std::nullopt;
    if (!pos || *pos < 0) throw ParseError("split manifest line " + std::to_string(line_no), line_no);
    const auto label = text::trim(fields[1]);
    auto p = static_cast<Position>(*pos);
    if (label == "train") out.train.push_back(p);
    else if (label == "valid") out.valid.push_back(p);
    else if (label == "test") out.test.push_back(p);
    else throw ParseError("split manifest line " + std::to_string(line_no) + ": unknown part '" +
                          std::string(label) + "'", line_no);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.valid.begin(), out.valid.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<Interaction> user_history(const InteractionStore& store, std::string_view user_id) {
  std::vector<Interaction> out;
  for (auto p : store.user_positions(user_id)) out.push_back(store.at(p));
  return out;
}

std::vector<Interaction> user_history(const InteractionStore& store, std::string_view user_id,
                                      const SplitAssignment& split, SplitPart part) {
  const auto& allowed = split.positions(part);
  std::vector<Interaction> out;
  for (auto p : store.user_positions(user_id)) {
    if (std::binary_search(allowed.begin(), allowed.end(), p)) out.push_back(store.at(p));
  }
  return out;
}

InteractionStore restrict_to(const InteractionStore& store, const SplitAssignment& split,
                             SplitPart part) {
  std::vector<Interaction> rows;
  for (auto p : split.positions(part)) rows.push_back(store.at(p));
  return InteractionStore(std::move(rows));
}

}  // namespace matrag
