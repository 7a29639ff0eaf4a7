#include <gtest/gtest.h>

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "matrag/backend.hpp"
#include "matrag/error.hpp"
#include "matrag/prompts.hpp"

using namespace matrag;
using namespace std::chrono_literals;

TEST(Mock, CompletionIsDeterministic) {
  MockBackend a(42), b(42);
  CompletionRequest req{prompts::user_modeling(std::vector<std::string>{"funny and cheap"}), 3};
  EXPECT_EQ(complete(a, req), complete(b, req));
  CompletionRequest other{"free-form prompt", 3};
  EXPECT_EQ(complete(a, other), complete(b, other));
}

TEST(Mock, ProfilePromptYieldsLexiconFacet) {
  MockBackend mock;
  const auto reply =
      complete(mock, {prompts::user_modeling(std::vector<std::string>{"loved the sci-fi plot"})});
  EXPECT_NE(reply.find("genre=sci-fi"), std::string::npos) << reply;
}

TEST(Mock, NegatedTermsAreSkipped) {
  MockBackend mock;
  const auto reply = complete(
      mock, {prompts::user_modeling(std::vector<std::string>{"not a fan of horror at all"})});
  EXPECT_EQ(reply.find("horror"), std::string::npos) << reply;
}

TEST(Mock, EmptyPromptRejected) {
  MockBackend mock;
  EXPECT_THROW(complete(mock, {"  "}), ValidationError);
}

TEST(Mock, MaxLengthTruncates) {
  MockBackend mock;
  CompletionRequest req{"anything at all", 0, 5};
  EXPECT_EQ(complete(mock, req).size(), 5u);
}

TEST(Mock, EntailmentTagRule) {
  MockBackend mock;
  EXPECT_TRUE(nli_entails(mock, "it is sci-fi [E:t3]", "x [E:t3] y"));
  EXPECT_FALSE(nli_entails(mock, "it is sci-fi", "x [E:t3] y"));
  EXPECT_FALSE(nli_entails(mock, "[E:t1][E:t9]", "only [E:t1]"));
  EXPECT_THROW(nli_entails(mock, "", "x"), ValidationError);
}

TEST(Mock, EntailmentMonotoneInEvidence) {
  MockBackend mock;
  const std::string claim = "a [E:t1] b [E:h2]";
  std::string evidence = "[E:t1] [E:h2]";
  ASSERT_TRUE(nli_entails(mock, claim, evidence));
  for (const char* extra : {" [E:t5]", " more words", " [E:h9]."}) {
    evidence += extra;
    EXPECT_TRUE(nli_entails(mock, claim, evidence));
  }
}

TEST(Mock, CoherenceRubric) {
  MockBackend mock;
  EXPECT_EQ(judge_coherence(mock, "It fits your taste. It is popular."), 5);
  EXPECT_EQ(judge_coherence(mock, "It fits your taste. It fits your taste."), 4);
  EXPECT_EQ(judge_coherence(mock, "It fits your taste"), 3);
  EXPECT_EQ(judge_coherence(mock, "Just one.", ExplanationMode::concise), 5);
  EXPECT_THROW(judge_coherence(mock, ""), ValidationError);
}

TEST(Mock, EmbeddingsAreUnitLength) {
  MockBackend mock(1, 16);
  const auto v = mock.embed("abc");
  EXPECT_EQ(v.dimension(), 16u);
  EXPECT_NEAR(v.norm(), 1.0, 1e-12);
}

TEST(Descriptor, HttpNeedsEndpoint) {
  BackendDescriptor d;
  d.kind = BackendKind::http;
  try {
    d.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "endpoint");
  }
}

TEST(Descriptor, EnvironmentOverlay) {
  ::setenv("MATRAG_BACKEND", "http", 1);
  ::setenv("MATRAG_ENDPOINT", "http://127.0.0.1:9", 1);
  ::setenv("MATRAG_SEED", "77", 1);
  const auto d = descriptor_from_env();
  ::unsetenv("MATRAG_BACKEND");
  ::unsetenv("MATRAG_ENDPOINT");
  ::unsetenv("MATRAG_SEED");
  EXPECT_EQ(d.kind, BackendKind::http);
  EXPECT_EQ(d.endpoint, "http://127.0.0.1:9");
  EXPECT_EQ(d.seed, 77u);
}

namespace {

class LocalServer {
 public:
  LocalServer() {
    using nlohmann::json;
    svr_.Post("/v1/complete", [this](const httplib::Request& req, httplib::Response& res) {
      ++calls_;
      const auto body = json::parse(req.body);
      const auto prompt = body.at("prompt").get<std::string>();
      std::string text = "echo: " + prompt.substr(0, 10);
      if (prompts::classify(prompt) == prompts::Kind::coherence) text = "score: 7";
      res.set_content(json{{"text", text}}.dump(), "application/json");
    });
    svr_.Post("/v1/entail", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      const bool ok = body.at("premise").get<std::string>().find("yes") != std::string::npos;
      res.set_content(nlohmann::json{{"entailed", ok}}.dump(), "application/json");
    });
    svr_.Post("/v1/embed", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"embedding": [0.5, 0.25, 1.0]})", "application/json");
    });
    svr_.Post("/bad/complete", [](const httplib::Request&, httplib::Response& res) {
      res.status = 503;
      res.set_content("down", "text/plain");
    });
    svr_.Post("/garbled/complete", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("not json", "text/plain");
    });
    svr_.Post("/slow/complete", [](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(600ms);
      res.set_content(R"({"text": "late"})", "application/json");
    });
    port_ = svr_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { svr_.listen_after_bind(); });
    svr_.wait_until_ready();
  }
  ~LocalServer() {
    svr_.stop();
    thread_.join();
  }

  BackendDescriptor descriptor(const std::string& path) const {
    BackendDescriptor d;
    d.kind = BackendKind::http;
    d.endpoint = "http://127.0.0.1:" + std::to_string(port_) + path;
    d.timeout = 2000ms;
    d.retries = 0;
    return d;
  }
  int calls() const { return calls_; }

 private:
  httplib::Server svr_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> calls_{0};
};

}  // namespace

TEST(Http, RoundTripsEveryEndpoint) {
  LocalServer server;
  HttpBackend http(server.descriptor("/v1"));
  EXPECT_EQ(complete(http, {"hello there world"}), "echo: hello ther");
  EXPECT_TRUE(nli_entails(http, "claim", "yes it is"));
  EXPECT_FALSE(nli_entails(http, "claim", "no"));
  const auto v = http.embed("anything");
  EXPECT_EQ(v, Vector({0.5, 0.25, 1.0}));
}

TEST(Http, CoherenceReplyIsClamped) {
  LocalServer server;
  HttpBackend http(server.descriptor("/v1"));
  EXPECT_EQ(judge_coherence(http, "One. Two."), 5);
}

TEST(Http, ErrorStatusCarriesCode) {
  LocalServer server;
  HttpBackend http(server.descriptor("/bad"));
  try {
    complete(http, {"x"});
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_EQ(e.status(), 503);
  }
}

TEST(Http, MalformedReplyIsBackendError) {
  LocalServer server;
  HttpBackend http(server.descriptor("/garbled"));
  EXPECT_THROW(complete(http, {"x"}), BackendError);
}

TEST(Http, SlowServerTimesOut) {
  LocalServer server;
  auto d = server.descriptor("/slow");
  d.timeout = 150ms;
  HttpBackend http(d);
  EXPECT_THROW(complete(http, {"x"}), TimeoutError);
}

TEST(Http, RetriesOnceOnTransportFailure) {
  BackendDescriptor d;
  d.kind = BackendKind::http;
  d.endpoint = "http://127.0.0.1:1";
  d.timeout = 200ms;
  d.retries = 1;
  HttpBackend http(d);
  EXPECT_THROW(complete(http, {"x"}), BackendError);
}

TEST(Http, UnreachableEndpointIsBackendError) {
  BackendDescriptor d;
  d.kind = BackendKind::http;
  d.endpoint = "http://127.0.0.1:1";
  d.timeout = 500ms;
  d.retries = 0;
  const auto backend = make_backend(d);
  EXPECT_THROW(complete(*backend, {"x"}), BackendError);
  EXPECT_THROW(backend->embed("x"), BackendError);
}
