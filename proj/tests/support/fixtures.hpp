#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "matrag/agents.hpp"
#include "matrag/corpus.hpp"
#include "matrag/kg.hpp"

namespace fixture {

// Removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = std::filesystem::temp_directory_path() / ("matrag-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& content) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << content;
    return p;
  }

 private:
  std::filesystem::path path_;
};

using TripleRow = std::tuple<std::string, std::string, std::string>;

inline matrag::KnowledgeGraph graph(const std::vector<TripleRow>& rows) {
  std::ostringstream s;
  for (const auto& [h, r, t] : rows) s << h << '\t' << r << '\t' << t << '\n';
  std::istringstream in(s.str());
  return matrag::parse_triples(in, "fixture");
}

inline matrag::InteractionStore store(const std::string& lines) {
  std::istringstream in(lines);
  return matrag::parse_interactions(in, "fixture");
}

inline matrag::Interaction interaction(std::string user, std::string item, double rating,
                                       std::int64_t ts,
                                       std::optional<std::string> review = std::nullopt) {
  matrag::Interaction x;
  x.user_id = std::move(user);
  x.item_id = std::move(item);
  x.rating = rating;
  x.timestamp = ts;
  x.text = std::move(review);
  return x;
}

inline matrag::TripleId tid(std::uint32_t zero_based) { return matrag::TripleId{zero_based}; }

}  // namespace fixture
