#include "matrag/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "matrag/error.hpp"
#include "matrag/random.hpp"

namespace matrag {

namespace {

constexpr std::array<const char*, 10> kGenres = {"sci-fi",  "comedy",      "drama",     "horror",
                                                 "action",  "romance",     "thriller",  "documentary",
                                                 "animation", "fantasy"};
constexpr std::array<const char*, 3> kPrices = {"low", "mid", "high"};
constexpr std::array<const char*, 4> kLiked = {"loved the %s plot", "great %s pacing",
                                               "a %s worth watching twice", "really enjoyed this %s"};
constexpr std::array<const char*, 3> kDisliked = {"did not enjoy this %s", "never liked %s much",
                                                  "not my kind of %s"};

std::string numbered(char prefix, std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%c%0*zu", prefix, width, i);
  return buf;
}

std::string fill(const char* pattern, const std::string& genre) {
  char buf[128];
  std::snprintf(buf, sizeof buf, pattern, genre.c_str());
  return buf;
}

}  // namespace

SyntheticData make_synthetic(const SyntheticSpec& spec) {
  if (spec.genres == 0 || spec.genres > kGenres.size()) {
    throw ValidationError("synthetic genres must be between 1 and 10");
  }
  if (spec.items < spec.genres || spec.studios == 0) {
    throw ValidationError("synthetic catalog is too small");
  }
  if (spec.min_history == 0 || spec.min_history > spec.max_history) {
    throw ValidationError("synthetic history bounds are inconsistent");
  }
  Rng rng(spec.seed);
  SyntheticData data;

  std::vector<std::string> items;
  std::vector<std::size_t> item_genre;
  std::vector<std::vector<std::size_t>> by_genre(spec.genres);
  for (std::size_t i = 0; i < spec.items; ++i) {
    items.push_back(numbered('i', i + 1, 4));
    const std::size_t g = i % spec.genres;
    item_genre.push_back(g);
    by_genre[g].push_back(i);
    const std::string studio = "studio " + std::to_string(rng.below(spec.studios) + 1);
    data.triples.push_back({items.back(), "genre", kGenres[g]});
    data.triples.push_back({items.back(), "studio", studio});
    data.attributes[items.back()].emplace("price", kPrices[rng.below(kPrices.size())]);
  }

  const std::int64_t span = spec.span_days * 86400;
  for (std::size_t u = 0; u < spec.users; ++u) {
    const auto user = numbered('u', u + 1, 4);
    const std::size_t planted = rng.below(spec.genres);
    data.planted[user] = kGenres[planted];
    const std::size_t n =
        spec.min_history + rng.below(spec.max_history - spec.min_history + 1);
    std::vector<std::int64_t> times;
    for (std::size_t k = 0; k < n; ++k) {
      times.push_back(spec.start_time + static_cast<std::int64_t>(rng.below(span)));
    }
    std::sort(times.begin(), times.end());
    std::vector<bool> used(spec.items, false);
    for (std::size_t k = 0; k < n; ++k) {
      const bool liked = rng.unit() < spec.planted_share;
      std::size_t item = 0;
      for (int attempt = 0; attempt < 64; ++attempt) {
        if (liked) {
          const auto& pool = by_genre[planted];
          item = pool[rng.below(pool.size())];
        } else {
          item = rng.below(spec.items);
          if (item_genre[item] == planted) continue;
        }
        if (!used[item]) break;
      }
      used[item] = true;
      Interaction it;
      it.user_id = user;
      it.item_id = items[item];
      it.timestamp = times[k];
      const std::string genre = kGenres[item_genre[item]];
      const bool in_genre = item_genre[item] == planted;
      it.rating = in_genre ? 4.0 + static_cast<double>(rng.below(2))
                           : 1.0 + static_cast<double>(rng.below(3));
      if (rng.unit() < spec.review_share) {
        it.text = in_genre ? fill(kLiked[rng.below(kLiked.size())], genre)
                           : fill(kDisliked[rng.below(kDisliked.size())], genre);
      }
      data.interactions.push_back(std::move(it));
    }
  }
  return data;
}

InteractionStore SyntheticData::store() const { return InteractionStore(interactions); }

KnowledgeGraph SyntheticData::graph() const {
  KnowledgeGraph kg;
  for (const auto& t : triples) kg.add_triple(t.head, t.relation, t.tail);
  return kg;
}

void SyntheticData::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw IoError("cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("interactions.tsv");
    write_interactions(store(), out);
  }
  {
    auto out = open("triples.tsv");
    for (const auto& t : triples) out << t.head << '\t' << t.relation << '\t' << t.tail << '\n';
  }
  {
    auto out = open("attributes.tsv");
    for (const auto& [item, attrs] : attributes) {
      out << item;
      for (const auto& [k, v] : attrs) out << '\t' << k << '=' << v;
      out << '\n';
    }
  }
}

}  // namespace matrag
