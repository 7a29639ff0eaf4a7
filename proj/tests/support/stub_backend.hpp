#pragma once

#include <functional>
#include <string>

#include "matrag/backend.hpp"
#include "matrag/error.hpp"

namespace fixture {

// Mock behavior with individually replaceable calls.
class ScriptedBackend final : public matrag::Backend {
 public:
  std::function<std::string(const matrag::CompletionRequest&)> on_complete;
  std::function<bool(std::string_view, std::string_view)> on_entails;
  std::function<int(std::string_view)> on_coherence;
  bool fail_embed = false;

  std::string complete(const matrag::CompletionRequest& req) const override {
    return on_complete ? on_complete(req) : mock_.complete(req);
  }
  matrag::Vector embed(std::string_view text) const override {
    if (fail_embed) throw matrag::BackendError("embedding service down");
    return mock_.embed(text);
  }
  bool entails(std::string_view claim, std::string_view evidence) const override {
    return on_entails ? on_entails(claim, evidence) : mock_.entails(claim, evidence);
  }
  int rate_coherence(std::string_view explanation, matrag::ExplanationMode mode) const override {
    return on_coherence ? on_coherence(explanation) : mock_.rate_coherence(explanation, mode);
  }
  std::size_t parallelism_limit() const override { return 1; }
  std::string_view name() const override { return "scripted"; }

 private:
  matrag::MockBackend mock_{0};
};

inline auto always_fail(const char* what = "backend unavailable") {
  return [what](const matrag::CompletionRequest&) -> std::string {
    throw matrag::BackendError(what);
  };
}

}  // namespace fixture
