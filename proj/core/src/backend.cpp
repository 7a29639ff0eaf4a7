#include "matrag/backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>
#include <unordered_set>

#include <httplib.h>
#include <json.hpp>

#include "matrag/error.hpp"
#include "matrag/prompts.hpp"
#include "matrag/text.hpp"

namespace matrag {

std::string_view to_string(ExplanationMode mode) {
  switch (mode) {
    case ExplanationMode::concise: return "concise";
    case ExplanationMode::detailed: return "detailed";
    case ExplanationMode::comparative: return "comparative";
  }
  return "detailed";
}

ExplanationMode parse_explanation_mode(std::string_view s) {
  if (s == "concise") return ExplanationMode::concise;
  if (s == "detailed") return ExplanationMode::detailed;
  if (s == "comparative") return ExplanationMode::comparative;
  throw ValidationError("unknown explanation mode '" + std::string(s) +
                        "' (expected concise|detailed|comparative)");
}

void BackendDescriptor::validate() const {
  if (kind == BackendKind::http && endpoint.empty()) {
    throw ConfigError("endpoint", "http backend requires an endpoint");
  }
  if (parallelism == 0) throw ConfigError("parallelism", "must be positive");
  if (timeout.count() <= 0) throw ConfigError("timeout_ms", "must be positive");
  if (retries < 0) throw ConfigError("retries", "must be non-negative");
  if (kind == BackendKind::mock && dimension == 0) {
    throw ConfigError("embedding_dim", "must be positive");
  }
}

BackendDescriptor descriptor_from_env(BackendDescriptor base) {
  if (const char* kind = std::getenv("MATRAG_BACKEND")) {
    const std::string_view k(kind);
    if (k == "mock") base.kind = BackendKind::mock;
    else if (k == "http") base.kind = BackendKind::http;
    else throw ConfigError("MATRAG_BACKEND", "expected mock|http, got '" + std::string(k) + "'");
  }
  if (const char* endpoint = std::getenv("MATRAG_ENDPOINT")) base.endpoint = endpoint;
  if (const char* seed = std::getenv("MATRAG_SEED")) {
    auto v = text::parse_int64(seed);
    if (!v || *v < 0) throw ConfigError("MATRAG_SEED", "expected a non-negative integer");
    base.seed = static_cast<std::uint64_t>(*v);
  }
  return base;
}

std::string complete(const Backend& backend, const CompletionRequest& req) {
  if (text::trim(req.prompt).empty()) throw ValidationError("completion prompt is empty");
  return backend.complete(req);
}

bool nli_entails(const Backend& backend, std::string_view claim, std::string_view evidence) {
  if (text::trim(claim).empty()) throw ValidationError("entailment claim is empty");
  return backend.entails(claim, evidence);
}

int judge_coherence(const Backend& backend, std::string_view explanation, ExplanationMode mode) {
  if (text::trim(explanation).empty()) throw ValidationError("explanation is empty");
  return std::clamp(backend.rate_coherence(explanation, mode), 1, 5);
}

int coherence_rubric(std::string_view explanation, ExplanationMode mode) {
  const auto sentences = text::split_sentences(explanation);
  int score = 5;
  std::set<std::string> seen;
  bool repeated = false;
  bool unterminated = false;
  for (const auto& s : sentences) {
    if (!seen.insert(s).second) repeated = true;
    if (!text::ends_with_terminator(s)) unterminated = true;
  }
  if (repeated) --score;
  if (mode == ExplanationMode::detailed && sentences.size() < 2) --score;
  if (unterminated) --score;
  return std::max(score, 1);
}

// --- mock -------------------------------------------------------------------

namespace {

struct LexiconEntry {
  std::string_view key;
  std::string_view value;
};

const std::map<std::string_view, LexiconEntry>& lexicon() {
  static const std::map<std::string_view, LexiconEntry> table = {
      {"sci-fi", {"genre", "sci-fi"}},       {"scifi", {"genre", "sci-fi"}},
      {"science-fiction", {"genre", "sci-fi"}},
      {"comedy", {"genre", "comedy"}},       {"comedies", {"genre", "comedy"}},
      {"funny", {"genre", "comedy"}},        {"drama", {"genre", "drama"}},
      {"dramas", {"genre", "drama"}},        {"horror", {"genre", "horror"}},
      {"scary", {"genre", "horror"}},        {"action", {"genre", "action"}},
      {"romance", {"genre", "romance"}},     {"romantic", {"genre", "romance"}},
      {"thriller", {"genre", "thriller"}},   {"thrillers", {"genre", "thriller"}},
      {"documentary", {"genre", "documentary"}},
      {"documentaries", {"genre", "documentary"}},
      {"animation", {"genre", "animation"}}, {"animated", {"genre", "animation"}},
      {"fantasy", {"genre", "fantasy"}},     {"mystery", {"genre", "mystery"}},
      {"western", {"genre", "western"}},     {"musical", {"genre", "musical"}},
      {"crime", {"genre", "crime"}},         {"adventure", {"genre", "adventure"}},
      {"sony", {"brand", "sony"}},           {"apple", {"brand", "apple"}},
      {"samsung", {"brand", "samsung"}},     {"lg", {"brand", "lg"}},
      {"canon", {"brand", "canon"}},         {"nikon", {"brand", "nikon"}},
      {"bose", {"brand", "bose"}},           {"dell", {"brand", "dell"}},
      {"lenovo", {"brand", "lenovo"}},       {"logitech", {"brand", "logitech"}},
      {"cheap", {"price", "low"}},           {"affordable", {"price", "low"}},
      {"budget", {"price", "low"}},          {"inexpensive", {"price", "low"}},
      {"expensive", {"price", "high"}},      {"premium", {"price", "high"}},
      {"pricey", {"price", "high"}},
  };
  return table;
}

bool is_negation(std::string_view tok) {
  static const std::unordered_set<std::string_view> words = {
      "not", "no", "never", "hate", "hated", "dislike", "disliked", "didn't", "don't",
      "doesn't", "isn't", "wasn't"};
  return words.contains(tok);
}

// Whitespace tokens, case-folded, with leading/trailing punctuation removed so
// "sci-fi," becomes "sci-fi".
std::vector<std::string> lexicon_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (auto& tok : text::whitespace_tokens(s)) {
    std::size_t b = 0;
    std::size_t e = tok.size();
    auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
    while (b < e && !alnum(tok[b])) ++b;
    while (e > b && !alnum(tok[e - 1])) --e;
    if (e > b) out.push_back(tok.substr(b, e - b));
  }
  return out;
}

std::string mock_profile(std::string_view prompt) {
  std::set<std::string> facets;
  for (const auto& line : prompts::section_lines(prompt, "User History")) {
    const auto toks = lexicon_tokens(line);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      auto it = lexicon().find(toks[i]);
      if (it == lexicon().end()) continue;
      bool negated = false;
      for (std::size_t j = i >= 4 ? i - 4 : 0; j < i; ++j) negated |= is_negation(toks[j]);
      if (negated) continue;
      facets.insert(std::string(it->second.key) + "=" + std::string(it->second.value));
    }
  }
  if (facets.empty()) return "none\n";
  std::string out;
  for (const auto& f : facets) out += f + "\n";
  return out;
}

std::string mock_rerank(std::string_view prompt) {
  const auto n = prompts::section_lines(prompt, "Candidates").size();
  std::string out;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i > 1) out += ", ";
    out += std::to_string(i);
  }
  return out.empty() ? "none" : out;
}

// Weighted share of profile facets whose value words all occur in the
// retrieved knowledge, blended with a seeded per-prompt jitter.
std::string mock_preference(std::string_view prompt, std::uint64_t seed) {
  constexpr double kOverlapWeight = 0.75;
  std::unordered_set<std::string> knowledge;
  for (const auto& line : prompts::section_lines(prompt, "Retrieved Knowledge")) {
    for (auto& tok : text::word_tokens(text::strip_tags(line))) knowledge.insert(std::move(tok));
  }
  double matched = 0.0;
  double total = 0.0;
  for (const auto& line : prompts::section_lines(prompt, "User Profile")) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const auto open = line.find(" (", eq);
    const auto value = line.substr(eq + 1, open == std::string::npos ? std::string::npos
                                                                      : open - eq - 1);
    double weight = 1.0;
    if (open != std::string::npos) {
      if (auto w = text::find_number(std::string_view(line).substr(open))) weight = *w;
    }
    if (!(weight > 0.0)) continue;
    total += weight;
    const auto words = text::word_tokens(value);
    const bool hit = !words.empty() && std::all_of(words.begin(), words.end(), [&](const auto& w) {
      return knowledge.contains(w);
    });
    if (hit) matched += weight;
  }
  const double overlap = total > 0.0 ? matched / total : 0.0;
  std::uint64_t state = text::hash64(prompt, seed);
  const double jitter =
      static_cast<double>(text::splitmix64(state) >> 11) * 0x1.0p-53;
  const double value = kOverlapWeight * overlap + (1.0 - kOverlapWeight) * jitter;
  return "preference: " + text::format_fixed(value, 4);
}

// Chain statement with tags and sentence terminators removed.
std::string clean_statement(std::string_view line) {
  if (line.starts_with("- ")) line.remove_prefix(2);
  std::string s = text::strip_tags(line);
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    const bool terminal = (c == '.' || c == '!' || c == '?') &&
                          (i + 1 == s.size() || s[i + 1] == ' ');
    if (!terminal) out.push_back(c);
  }
  while (!out.empty() && (out.back() == ',' || out.back() == ';' || out.back() == ':' ||
                          out.back() == ' ')) {
    out.pop_back();
  }
  return out;
}

std::string capitalized(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string join_tags(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out.push_back(' ');
    out += text::format_tag(id);
  }
  return out;
}

// One sentence per evidence-bearing chain step, so the explanation cites
// exactly the ids the chain carries.
std::string mock_explanation(std::string_view prompt) {
  const auto item = prompts::field(prompt, "Recommended Item").value_or("this item");
  const auto mode = parse_explanation_mode(prompts::field(prompt, "Mode").value_or("detailed"));
  struct Step {
    std::string statement;
    std::vector<std::string> tags;
  };
  std::vector<Step> steps;
  std::vector<std::string> all_tags;
  for (const auto& line : prompts::section_lines(prompt, "Reasoning Chain")) {
    auto tags = text::extract_tags(line);
    if (tags.empty()) continue;
    for (const auto& t : tags) {
      if (std::find(all_tags.begin(), all_tags.end(), t) == all_tags.end()) all_tags.push_back(t);
    }
    steps.push_back({clean_statement(line), std::move(tags)});
  }
  if (steps.empty()) return "No specific evidence is available for " + item + ".";

  if (mode == ExplanationMode::concise) {
    std::string out = item + " is recommended because ";
    for (std::size_t i = 0; i < steps.size(); ++i) {
      if (i > 0) out += "; ";
      out += steps[i].statement;
    }
    return out + " " + join_tags(all_tags) + ".";
  }
  std::string out = item + " is recommended: " + steps.front().statement + " " +
                    join_tags(steps.front().tags) + ".";
  for (std::size_t i = 1; i < steps.size(); ++i) {
    out += " " + capitalized(steps[i].statement) + " " + join_tags(steps[i].tags) + ".";
  }
  if (mode == ExplanationMode::comparative) {
    const auto alt = prompts::field(prompt, "Alternative Item").value_or("the alternative");
    out += " Compared with " + alt + ", " + item +
           " is backed by more direct evidence from your history and the knowledge graph " +
           join_tags(all_tags) + ".";
  }
  return out;
}

std::string mock_coherence(std::string_view prompt) {
  const auto mode = parse_explanation_mode(prompts::field(prompt, "Mode").value_or("detailed"));
  const auto body = prompts::section_tail(prompt, "Explanation");
  if (body.empty()) return "score: 1";
  return "score: " + std::to_string(coherence_rubric(body, mode));
}

std::string mock_claims(std::string_view prompt) {
  std::string out;
  for (const auto& s : text::split_sentences(prompts::section_tail(prompt, "Explanation"))) {
    out += s + "\n";
  }
  return out;
}

}  // namespace

MockBackend::MockBackend(std::uint64_t seed, std::size_t dimension, std::size_t parallelism)
    : seed_(seed), dimension_(dimension), parallelism_(std::max<std::size_t>(1, parallelism)) {
  if (dimension_ == 0) throw ValidationError("mock embedding dimension must be positive");
}

std::string MockBackend::complete(const CompletionRequest& req) const {
  std::string reply;
  switch (prompts::classify(req.prompt)) {
    case prompts::Kind::user_modeling: reply = mock_profile(req.prompt); break;
    case prompts::Kind::item_rerank: reply = mock_rerank(req.prompt); break;
    case prompts::Kind::preference_score: reply = mock_preference(req.prompt, seed_ ^ req.seed); break;
    case prompts::Kind::explanation: reply = mock_explanation(req.prompt); break;
    case prompts::Kind::coherence: reply = mock_coherence(req.prompt); break;
    case prompts::Kind::claims: reply = mock_claims(req.prompt); break;
    case prompts::Kind::unknown: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "ack %016llx",
                    static_cast<unsigned long long>(text::hash64(req.prompt, seed_ ^ req.seed)));
      reply = buf;
      break;
    }
  }
  if (req.max_length > 0 && reply.size() > req.max_length) reply.resize(req.max_length);
  return reply;
}

Vector MockBackend::embed(std::string_view s) const {
  // Bag of hashed tokens: texts sharing words land close together.
  auto toks = lexicon_tokens(s);
  if (toks.empty()) toks.emplace_back(s);
  std::vector<double> v(dimension_, 0.0);
  for (const auto& tok : toks) {
    std::uint64_t state = text::hash64(tok, seed_);
    for (auto& c : v) c += static_cast<double>(text::splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;
  }
  double sq = 0.0;
  for (double c : v) sq += c * c;
  const double norm = std::sqrt(sq);
  if (norm == 0.0) {
    v.assign(dimension_, 0.0);
    v[0] = 1.0;
  } else {
    for (auto& c : v) c /= norm;
  }
  return Vector(std::move(v));
}

bool MockBackend::entails(std::string_view claim, std::string_view evidence) const {
  const auto tags = text::extract_tags(claim);
  if (tags.empty()) return false;
  return std::all_of(tags.begin(), tags.end(), [&](const std::string& id) {
    return evidence.find(text::format_tag(id)) != std::string_view::npos;
  });
}

int MockBackend::rate_coherence(std::string_view explanation, ExplanationMode mode) const {
  return coherence_rubric(explanation, mode);
}

// --- http -------------------------------------------------------------------

HttpBackend::HttpBackend(BackendDescriptor descriptor) : descriptor_(std::move(descriptor)) {
  descriptor_.validate();
  const auto& ep = descriptor_.endpoint;
  const auto scheme = ep.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("endpoint", "expected scheme://host[:port][/path], got '" + ep + "'");
  }
  const auto slash = ep.find('/', scheme + 3);
  origin_ = ep.substr(0, slash);
  base_path_ = slash == std::string::npos ? "" : ep.substr(slash);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

std::string HttpBackend::post(const std::string& path, const std::string& body) const {
  const auto url = origin_ + base_path_ + path;
  std::string last_error;
  bool timed_out = false;
  for (int attempt = 0; attempt <= descriptor_.retries; ++attempt) {
    httplib::Client client(origin_);
    client.set_connection_timeout(descriptor_.timeout);
    client.set_read_timeout(descriptor_.timeout);
    client.set_write_timeout(descriptor_.timeout);
    auto res = client.Post(base_path_ + path, body, "application/json");
    if (!res) {
      const auto err = res.error();
      // With a read timeout set, a Read failure is how httplib reports it.
      timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      last_error = "backend request to " + url + " failed: " + httplib::to_string(err);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw BackendError("backend request to " + url + " returned status " +
                             std::to_string(res->status),
                         res->status);
    }
    return res->body;
  }
  if (timed_out) throw TimeoutError(last_error + " (timeout)");
  throw BackendError(last_error);
}

namespace {

nlohmann::json parse_reply(const std::string& body, const char* what) {
  try {
    return nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("malformed ") + what + " reply: " + e.what());
  }
}

}  // namespace

std::string HttpBackend::complete(const CompletionRequest& req) const {
  nlohmann::json body = {{"prompt", req.prompt},
                         {"seed", req.seed},
                         {"max_length", req.max_length},
                         {"temperature", req.temperature}};
  if (!descriptor_.model.empty()) body["model"] = descriptor_.model;
  const auto reply = parse_reply(post("/complete", body.dump()), "completion");
  if (!reply.contains("text") || !reply["text"].is_string()) {
    throw BackendError("completion reply lacks a string 'text' field");
  }
  return reply["text"].get<std::string>();
}

Vector HttpBackend::embed(std::string_view s) const {
  nlohmann::json body = {{"text", std::string(s)}};
  const auto reply = parse_reply(post("/embed", body.dump()), "embedding");
  if (!reply.contains("embedding") || !reply["embedding"].is_array()) {
    throw BackendError("embedding reply lacks an 'embedding' array");
  }
  try {
    return Vector(reply["embedding"].get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("embedding reply is not numeric: ") + e.what());
  } catch (const ValidationError& e) {
    throw BackendError(std::string("embedding reply rejected: ") + e.what());
  }
}

bool HttpBackend::entails(std::string_view claim, std::string_view evidence) const {
  nlohmann::json body = {{"premise", std::string(evidence)}, {"hypothesis", std::string(claim)}};
  const auto reply = parse_reply(post("/entail", body.dump()), "entailment");
  if (!reply.contains("entailed") || !reply["entailed"].is_boolean()) {
    throw BackendError("entailment reply lacks a boolean 'entailed' field");
  }
  return reply["entailed"].get<bool>();
}

int HttpBackend::rate_coherence(std::string_view explanation, ExplanationMode mode) const {
  CompletionRequest req;
  req.prompt = prompts::coherence(explanation, mode);
  req.seed = descriptor_.seed;
  const auto reply = complete(req);
  const auto score = text::find_number(reply);
  if (!score) throw BackendError("unparseable coherence score: '" + reply + "'");
  return static_cast<int>(std::clamp(std::lround(*score), 1L, 5L));
}

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor) {
  descriptor.validate();
  if (descriptor.kind == BackendKind::http) return std::make_unique<HttpBackend>(descriptor);
  return std::make_unique<MockBackend>(descriptor.seed, descriptor.dimension,
                                       descriptor.parallelism);
}

}  // namespace matrag
