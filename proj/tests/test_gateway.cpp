#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "scr/gateway.hpp"
#include "scr/prompts.hpp"
#include "scr/rng.hpp"

using namespace scr;
using namespace scr::gateway;
using nlohmann::json;

namespace {

// loopback chat endpoint that fails a scripted number of times first
class FlakyServer {
 public:
  FlakyServer(int failures_before_success, int failure_status)
      : failures_(failures_before_success), status_(failure_status) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      ++hits_;
      if (hits_ <= failures_) {
        res.status = status_;
        res.set_content("try later", "text/plain");
        return;
      }
      json body = json::parse(req.body);
      std::string user = body.at("messages").back().at("content").get<std::string>();
      json reply = {{"choices",
                     json::array({{{"index", 0},
                                   {"message", {{"role", "assistant"},
                                                {"content", "echo: " + user}}}}})}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FlakyServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }
  int hits() const { return hits_.load(); }

 private:
  httplib::Server server_;
  std::thread thread_;
  std::atomic<int> hits_{0};
  int failures_;
  int status_;
  int port_;
};

GatewayConfig fast_config(Mode mode, const std::string& endpoint,
                          const std::filesystem::path& cache = {}) {
  GatewayConfig cfg;
  cfg.mode = mode;
  cfg.endpoint = endpoint;
  cfg.cache_dir = cache;
  cfg.backoff_base = std::chrono::milliseconds(1);
  cfg.backoff_cap = std::chrono::milliseconds(4);
  cfg.timeout = std::chrono::milliseconds(5000);
  return cfg;
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

CompletionRequest sample_request() {
  return {"gpt-4.1", "system text", "user text", 0.0, 256};
}

}  // namespace

TEST_SUITE_BEGIN("gateway");

TEST_CASE("prompt rendering substitutes placeholders verbatim") {
  prompts::PromptLibrary lib;
  auto [judge_system, judge_user] = prompts::render(
      lib.get("judge"), {{"question", "Q?"}, {"answer1", "A"}, {"answer2", "B"}});
  CHECK(judge_system.empty());
  CHECK(judge_user.find("Do these answers contain the same information?") != std::string::npos);
  CHECK(judge_user.find("Answer 1: A") != std::string::npos);
  CHECK(judge_user.find("Answer only 'YES' or 'NO'.") != std::string::npos);

  auto [zs_system, zs_user] =
      prompts::render(lib.get("zero_shot"), {{"TEXT A", "aaa"}, {"TEXT B", "bbb"}});
  CHECK(zs_user.find("1. EQUIVALENCE – Both texts express") != std::string::npos);
  CHECK(zs_user.find("2. INCLUSION") != std::string::npos);
  CHECK(zs_user.find("3. SEMANTIC OVERLAP") != std::string::npos);
  CHECK(zs_user.find("aaa") != std::string::npos);

  CHECK_THROWS_WITH_AS(prompts::render_text("before {X} after", {}),
                       doctest::Contains("'X'"), prompts::MissingBindingError);

  // substituted values are not rescanned
  CHECK(prompts::render_text("{a}", {{"a", "{b}"}}) == "{b}");
  // a lone brace is literal text
  CHECK(prompts::render_text("open { brace", {}) == "open { brace");

  CHECK(prompts::placeholders("{a} x {b c}") == std::vector<std::string>{"a", "b c"});
  CHECK(prompts::placeholders(lib.get("judge").user_text) ==
        std::vector<std::string>{"question", "answer1", "answer2"});
}

TEST_CASE("qa system prompt ships verbatim") {
  prompts::PromptLibrary lib;
  CHECK(lib.get("qa").system_text ==
        "You are a precise question-answering assistant. Answer questions based solely on the "
        "context provided. Provide direct, specific answers.");
  CHECK(lib.version() == "1");
}

TEST_CASE("built-in prompts match the shipped data files") {
  auto dir = std::filesystem::path(SCR_SOURCE_DIR) / "data" / "prompts";
  prompts::PromptLibrary built_in;
  prompts::PromptLibrary from_files = prompts::PromptLibrary::load(dir);
  for (const auto& id : built_in.ids()) {
    CHECK(built_in.get(id).user_text == from_files.get(id).user_text);
    CHECK(built_in.get(id).system_text == from_files.get(id).system_text);
  }
  CHECK(from_files.version() == built_in.version());
}

TEST_CASE("request hash is content addressing") {
  auto base = sample_request();
  CHECK(request_hash(base) == request_hash(sample_request()));

  // differing any field changes the hash
  SplitMix64 rng(5);
  for (int iter = 0; iter < 100; ++iter) {
    auto other = sample_request();
    switch (rng.bounded(5)) {
      case 0: other.model_id += "x"; break;
      case 1: other.system_text += " "; break;
      case 2: other.user_text = "user text" + std::to_string(rng.bounded(1000) + 1); break;
      case 3: other.temperature = 0.25 + rng.next_double(); break;
      case 4: other.max_tokens += static_cast<int>(rng.bounded(100)) + 1; break;
    }
    CHECK(request_hash(other) != request_hash(base));
  }

  // field contents cannot bleed into each other
  CompletionRequest a{"m", "sys", "tem_user", 0.0, 1};
  CompletionRequest b{"m", "system_", "user", 0.0, 1};
  CHECK(request_hash(a) != request_hash(b));
}

TEST_CASE("transcript store persists and reloads") {
  auto dir = fresh_dir("scr_store_test");
  auto request = sample_request();
  {
    TranscriptStore store(dir);
    CHECK(store.size() == 0);
    CHECK(!store.lookup(request_hash(request)).has_value());
    store.append({request_hash(request), request, "stored answer", "1970-01-01T00:00:00Z"});
    CHECK(store.lookup(request_hash(request)).value() == "stored answer");
    // duplicate appends are ignored
    store.append({request_hash(request), request, "other", "1970-01-01T00:00:00Z"});
    CHECK(store.size() == 1);
  }
  TranscriptStore reloaded(dir);
  CHECK(reloaded.size() == 1);
  CHECK(reloaded.lookup(request_hash(request)).value() == "stored answer");
}

TEST_CASE("replay mode returns stored responses and misses loudly") {
  auto dir = fresh_dir("scr_replay_test");
  auto request = sample_request();
  {
    TranscriptStore store(dir);
    store.append({request_hash(request), request, "YES", "1970-01-01T00:00:00Z"});
  }
  LlmGateway gw(fast_config(Mode::Replay, "", dir));
  CHECK(gw.complete(request) == "YES");
  CHECK(gw.complete(request) == "YES");  // deterministic

  auto unseen = sample_request();
  unseen.user_text = "never recorded";
  CHECK_THROWS_AS(gw.complete(unseen), ReplayMissError);
}

TEST_CASE("record mode makes one network call for identical requests") {
  FlakyServer server(0, 0);
  auto dir = fresh_dir("scr_record_test");
  LlmGateway gw(fast_config(Mode::Record, server.endpoint(), dir));
  auto request = sample_request();
  std::string first = gw.complete(request);
  std::string second = gw.complete(request);
  CHECK(first == second);
  CHECK(server.hits() == 1);  // second call is a cache hit
  CHECK(gw.store()->size() == 1);

  // a separate replay gateway sees the persisted record
  LlmGateway replay(fast_config(Mode::Replay, "", dir));
  CHECK(replay.complete(request) == first);
}

TEST_CASE("live mode retries transient failures") {
  FlakyServer server(2, 500);
  LlmGateway gw(fast_config(Mode::Live, server.endpoint()));
  CHECK(gw.complete(sample_request()) == "echo: user text");
  CHECK(server.hits() == 3);
}

TEST_CASE("rate limiting surfaces after the retry budget") {
  FlakyServer server(100, 429);
  auto cfg = fast_config(Mode::Live, server.endpoint());
  cfg.max_attempts = 3;
  LlmGateway gw(cfg);
  CHECK_THROWS_AS(gw.complete(sample_request()), RateLimitError);
  CHECK(server.hits() == 3);
}

TEST_CASE("non-retryable statuses fail immediately") {
  FlakyServer server(100, 400);
  LlmGateway gw(fast_config(Mode::Live, server.endpoint()));
  CHECK_THROWS_AS(gw.complete(sample_request()), TransportError);
  CHECK(server.hits() == 1);
}

TEST_CASE("record and replay modes require a cache directory") {
  CHECK_THROWS_AS(LlmGateway(fast_config(Mode::Replay, "")), ConfigError);
}

TEST_CASE("mode strings round-trip") {
  for (Mode mode : {Mode::Live, Mode::Record, Mode::Replay}) {
    CHECK(mode_from_string(to_string(mode)) == mode);
  }
  CHECK_THROWS_AS(mode_from_string("offline"), ConfigError);
}

TEST_SUITE_END();
