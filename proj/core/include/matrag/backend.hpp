#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "matrag/vector.hpp"

namespace matrag {

enum class ExplanationMode { concise, detailed, comparative };
std::string_view to_string(ExplanationMode mode);
// Throws ValidationError for anything but concise|detailed|comparative.
ExplanationMode parse_explanation_mode(std::string_view s);

struct CompletionRequest {
  std::string prompt;
  std::uint64_t seed = 0;
  // Character budget for the reply; 0 means unbounded.
  std::size_t max_length = 4096;
  double temperature = 0.0;  // ignored by the mock
};

enum class BackendKind { mock, http };

struct BackendDescriptor {
  BackendKind kind = BackendKind::mock;
  std::string endpoint;  // required for http, e.g. "http://127.0.0.1:8080"
  std::string model;
  std::size_t parallelism = 4;
  std::chrono::milliseconds timeout{30000};
  int retries = 1;
  std::uint64_t seed = 0;
  std::size_t dimension = 64;  // mock embedding width

  // Throws ConfigError naming the offending field.
  void validate() const;

  friend bool operator==(const BackendDescriptor&, const BackendDescriptor&) = default;
};

// Overlays MATRAG_BACKEND, MATRAG_ENDPOINT and MATRAG_SEED onto `base`.
BackendDescriptor descriptor_from_env(BackendDescriptor base = {});

// Every model call in the system goes through this interface. Implementations
// are shareable across threads up to parallelism_limit() concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::string complete(const CompletionRequest& req) const = 0;
  virtual Vector embed(std::string_view text) const = 0;
  virtual bool entails(std::string_view claim, std::string_view evidence) const = 0;
  // Raw judge rating; callers clamp to [1,5].
  virtual int rate_coherence(std::string_view explanation, ExplanationMode mode) const = 0;

  virtual std::size_t parallelism_limit() const = 0;
  virtual std::string_view name() const = 0;
};

// Validating front doors used by the agents.
std::string complete(const Backend& backend, const CompletionRequest& req);
bool nli_entails(const Backend& backend, std::string_view claim, std::string_view evidence);
int judge_coherence(const Backend& backend, std::string_view explanation,
                    ExplanationMode mode = ExplanationMode::detailed);

// Coherence rubric applied by the mock judge: start at 5; -1 for a verbatim
// repeated sentence; -1 for fewer than two sentences in detailed mode; -1 if
// any sentence lacks terminal punctuation; floor 1.
int coherence_rubric(std::string_view explanation, ExplanationMode mode);

// Deterministic offline backend. Every call is a pure function of its
// arguments and the seed, so pipeline runs are byte-reproducible.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::uint64_t seed = 0, std::size_t dimension = 64,
                       std::size_t parallelism = 8);

  std::string complete(const CompletionRequest& req) const override;
  Vector embed(std::string_view text) const override;
  // True iff the claim carries at least one [E:id] tag and every such tag also
  // appears in the evidence.
  bool entails(std::string_view claim, std::string_view evidence) const override;
  int rate_coherence(std::string_view explanation, ExplanationMode mode) const override;

  std::size_t parallelism_limit() const override { return parallelism_; }
  std::string_view name() const override { return "mock"; }
  std::uint64_t seed() const { return seed_; }
  std::size_t dimension() const { return dimension_; }

 private:
  std::uint64_t seed_;
  std::size_t dimension_;
  std::size_t parallelism_;
};

// JSON over HTTP:
//   POST <endpoint>/complete  {prompt, seed, max_length, temperature} -> {text}
//   POST <endpoint>/entail    {premise, hypothesis}                   -> {entailed}
//   POST <endpoint>/embed     {text}                                  -> {embedding}
// Coherence is judged through /complete with the coherence prompt.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendDescriptor descriptor);

  std::string complete(const CompletionRequest& req) const override;
  Vector embed(std::string_view text) const override;
  bool entails(std::string_view claim, std::string_view evidence) const override;
  int rate_coherence(std::string_view explanation, ExplanationMode mode) const override;

  std::size_t parallelism_limit() const override { return descriptor_.parallelism; }
  std::string_view name() const override { return "http"; }

 private:
  std::string post(const std::string& path, const std::string& body) const;

  BackendDescriptor descriptor_;
  std::string origin_;     // scheme://host:port
  std::string base_path_;  // path prefix, no trailing slash
};

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor);

}  // namespace matrag
