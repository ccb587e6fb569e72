#include <atomic>
#include <functional>
#include <thread>

#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace judgeprobe;
using testutil::cond;
using testutil::make_item;

namespace {

// Local OpenAI-shaped completion server for transport tests.
struct TestServer {
  httplib::Server svr;
  std::thread thread;
  int port = 0;
  std::atomic<int> hits{0};

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  explicit TestServer(Handler handler = {}) {
    if (!handler) handler = echo_verdict;
    svr.Post("/v1/chat/completions",
             [this, handler](const httplib::Request& req, httplib::Response& res) {
               hits.fetch_add(1);
               handler(req, res);
             });
    port = svr.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { svr.listen_after_bind(); });
    svr.wait_until_ready();
  }

  ~TestServer() {
    svr.stop();
    thread.join();
  }

  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  }

  static void echo_verdict(const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    std::string prompt = body["messages"][0]["content"].get<std::string>();
    nlohmann::json verdict{{"selected response", 1},
                           {"reason", "echo " + stable_hash_hex(prompt)}};
    nlohmann::json completion{
        {"choices",
         nlohmann::json::array(
             {nlohmann::json{{"message", nlohmann::json{{"role", "assistant"},
                                                        {"content", verdict.dump()}}}}})},
        {"system_fingerprint", "fp_test"},
    };
    res.set_content(completion.dump(), "application/json");
  }
};

JudgeConfig http_judge(const std::string& endpoint, int max_retries = 1) {
  JudgeConfig cfg;
  cfg.judge_id = "httpj";
  cfg.kind = JudgeKind::HttpChat;
  cfg.endpoint = endpoint;
  cfg.model_name = "test-model";
  cfg.max_retries = max_retries;
  cfg.backoff = std::chrono::milliseconds(5);
  cfg.timeout = std::chrono::milliseconds(2000);
  cfg.parallelism = 2;
  return cfg;
}

struct EnvKey {
  std::string var;
  explicit EnvKey(const std::string& judge_id) : var(api_key_env_var(judge_id)) {
    ::setenv(var.c_str(), "test-key", 1);
  }
  ~EnvKey() { ::unsetenv(var.c_str()); }
};

SimJudgeParams basic_params(double gap, std::map<CueLabel, double> bias = {},
                            double ack = 0.0, std::uint64_t seed = 0) {
  SimJudgeParams p;
  for (int i = 0; i < 32; ++i) p.quality_gap["item-" + std::to_string(i)] = gap;
  p.bias = std::move(bias);
  p.ack_probability = ack;
  p.rng_seed = seed;
  return p;
}

}  // namespace

TEST_CASE("sim_decide follows the utility model") {
  // zero gaps, bias(New)=+1: selection tracks the New label
  auto params = basic_params(0.0, {{CueLabel::New, 1.0}});
  auto v1 = parse_verdict(sim_decide(params, "item-0",
                                     cond(FamilyId::Temporal, CueLabel::New, CueLabel::Old)));
  auto v2 = parse_verdict(sim_decide(params, "item-0",
                                     cond(FamilyId::Temporal, CueLabel::Old, CueLabel::New)));
  CHECK(v1.selected == 1);
  CHECK(v2.selected == 2);

  // cue-invariant judge: positive gap wins under both directions
  auto neutral = basic_params(0.5);
  auto w1 = parse_verdict(sim_decide(neutral, "item-0",
                                     cond(FamilyId::Temporal, CueLabel::New, CueLabel::Old)));
  auto w2 = parse_verdict(sim_decide(neutral, "item-0",
                                     cond(FamilyId::Temporal, CueLabel::Old, CueLabel::New)));
  CHECK(w1.selected == 1);
  CHECK(w2.selected == 1);

  // ties go to response 1
  auto tie = basic_params(0.0);
  CHECK(parse_verdict(sim_decide(tie, "item-0", std::nullopt)).selected == 1);
}

TEST_CASE("sim_decide acknowledgment embeds the cue fragment") {
  auto always = basic_params(0.0, {{CueLabel::New, 1.0}}, 1.0);
  std::string raw =
      sim_decide(always, "item-3", cond(FamilyId::Temporal, CueLabel::New, CueLabel::Old));
  auto v = parse_verdict(raw);
  REQUIRE(v.parse_status == ParseStatus::Clean);
  CHECK(v.reason.find("written recently (in 2025)") != std::string::npos);
  CHECK(detect_ack(v.reason, FamilyId::Temporal).first);

  auto never = basic_params(0.0, {{CueLabel::New, 1.0}}, 0.0);
  auto quiet = parse_verdict(
      sim_decide(never, "item-3", cond(FamilyId::Temporal, CueLabel::New, CueLabel::Old)));
  CHECK_FALSE(detect_ack(quiet.reason, FamilyId::Temporal).first);
}

TEST_CASE("sim_decide rejects unknown items") {
  auto params = basic_params(0.0);
  try {
    sim_decide(params, "no-such-item", std::nullopt);
    FAIL("expected UnknownItem");
  } catch (const JudgeError& e) {
    CHECK(e.kind == JudgeError::Kind::UnknownItem);
  }
}

TEST_CASE("sim output is always parseable JSON in the strict schema") {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 1000; ++i) {
    SimJudgeParams params;
    std::string id = "item-" + std::to_string(i % 32);
    params.quality_gap[id] = (uniform01(rng) - 0.5) * 4.0;
    FamilyId f = kAllFamilies[bounded_uint(rng, kAllFamilies.size())];
    auto labels = family_labels(f);
    std::size_t a = bounded_uint(rng, labels.size());
    std::size_t b = (a + 1 + bounded_uint(rng, labels.size() - 1)) % labels.size();
    params.bias[labels[a]] = (uniform01(rng) - 0.5) * 2.0;
    params.ack_probability = uniform01(rng);
    params.rng_seed = rng();
    std::optional<CueCondition> condition;
    if (bounded_uint(rng, 5)) condition = cond(f, labels[a], labels[b]);
    auto v = parse_verdict(sim_decide(params, id, condition));
    CHECK(v.parse_status == ParseStatus::Clean);
    CHECK((v.selected == 1 || v.selected == 2));
    CHECK_FALSE(v.reason.empty());
  }
}

TEST_CASE("http query caches and replays byte-identically") {
  TestServer server;
  EnvKey key("httpj");
  auto store = std::make_shared<ExchangeStore>();
  JudgeClient client(http_judge(server.endpoint()), store, /*frozen_time=*/true);

  auto prompt = build_prompt(make_item("item-0"), std::nullopt);
  auto first = client.query(prompt);
  CHECK_FALSE(first.from_cache);
  CHECK(server.hits.load() == 1);
  CHECK(first.exchange.fingerprint == std::optional<std::string>("fp_test"));
  CHECK(first.exchange.prompt_hash == prompt.prompt_hash);

  auto second = client.query(prompt);
  CHECK(second.from_cache);
  CHECK(server.hits.load() == 1);  // zero additional network calls
  CHECK(ExchangeStore::exchange_to_json(second.exchange).dump() ==
        ExchangeStore::exchange_to_json(first.exchange).dump());
}

TEST_CASE("cache survives process restarts via the jsonl store") {
  TestServer server;
  EnvKey key("httpj");
  testutil::TempDir dir;
  auto store_path = dir.path / "exchanges.jsonl";
  auto prompt = build_prompt(make_item("item-0"), std::nullopt);

  {
    auto store = std::make_shared<ExchangeStore>(store_path);
    JudgeClient client(http_judge(server.endpoint()), store, true);
    client.query(prompt);
  }
  CHECK(server.hits.load() == 1);
  {
    auto store = std::make_shared<ExchangeStore>(store_path);  // reload from disk
    JudgeClient client(http_judge(server.endpoint()), store, true);
    auto hit = client.query(prompt);
    CHECK(hit.from_cache);
  }
  CHECK(server.hits.load() == 1);
}

TEST_CASE("changing a decoding knob invalidates the cache entry") {
  TestServer server;
  EnvKey key("httpj");
  auto store = std::make_shared<ExchangeStore>();
  auto prompt = build_prompt(make_item("item-0"), std::nullopt);

  JudgeClient a(http_judge(server.endpoint()), store, true);
  a.query(prompt);
  CHECK(server.hits.load() == 1);

  auto cfg = http_judge(server.endpoint());
  cfg.temperature = 0.7;
  JudgeClient b(cfg, store, true);
  b.query(prompt);
  CHECK(server.hits.load() == 2);
}

TEST_CASE("unreachable endpoint raises NetworkError after retries") {
  EnvKey key("httpj");
  auto cfg = http_judge("http://127.0.0.1:1/v1/chat/completions", /*max_retries=*/2);
  cfg.timeout = std::chrono::milliseconds(200);
  JudgeClient client(cfg, nullptr);
  auto prompt = build_prompt(make_item("item-0"), std::nullopt);
  try {
    client.query(prompt);
    FAIL("expected NetworkError");
  } catch (const JudgeError& e) {
    CHECK(e.kind == JudgeError::Kind::NetworkError);
  }
}

TEST_CASE("missing API key raises AuthMissing") {
  TestServer server;
  ::unsetenv(api_key_env_var("httpj").c_str());
  JudgeClient client(http_judge(server.endpoint()), nullptr);
  auto prompt = build_prompt(make_item("item-0"), std::nullopt);
  try {
    client.query(prompt);
    FAIL("expected AuthMissing");
  } catch (const JudgeError& e) {
    CHECK(e.kind == JudgeError::Kind::AuthMissing);
    CHECK(std::string(e.what()).find("JUDGEPROBE_API_KEY_HTTPJ") != std::string::npos);
  }
  CHECK(server.hits.load() == 0);
}

TEST_CASE("rate limiting is retried and succeeds") {
  std::atomic<int> calls{0};
  TestServer server([&calls](const httplib::Request& req, httplib::Response& res) {
    if (calls.fetch_add(1) == 0) {
      res.status = 429;
      res.set_header("Retry-After", "0");
      res.set_content("slow down", "text/plain");
      return;
    }
    TestServer::echo_verdict(req, res);
  });
  EnvKey key("httpj");
  JudgeClient client(http_judge(server.endpoint(), 2), nullptr);
  auto prompt = build_prompt(make_item("item-0"), std::nullopt);
  auto result = client.query(prompt);
  CHECK(result.exchange.attempt_count == 2);
  CHECK(parse_verdict(result.exchange.response_text).selected == 1);
}

TEST_CASE("slow endpoint raises Timeout") {
  TestServer server([](const httplib::Request& req, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(500));
    TestServer::echo_verdict(req, res);
  });
  EnvKey key("httpj");
  auto cfg = http_judge(server.endpoint(), /*max_retries=*/0);
  cfg.timeout = std::chrono::milliseconds(50);
  JudgeClient client(cfg, nullptr);
  auto prompt = build_prompt(make_item("item-0"), std::nullopt);
  try {
    client.query(prompt);
    FAIL("expected Timeout");
  } catch (const JudgeError& e) {
    CHECK(e.kind == JudgeError::Kind::Timeout);
  }
}

TEST_CASE("run_trials yields condition-major records, one per (item, condition)") {
  auto store = std::make_shared<ExchangeStore>();
  JudgeConfig cfg;
  cfg.judge_id = "sim";
  cfg.parallelism = 1;
  JudgeClient client(cfg, store, true);
  client.set_sim_params(basic_params(0.25));

  std::vector<ComparisonItem> items;
  for (int i = 0; i < 4; ++i) items.push_back(make_item("item-" + std::to_string(i)));
  auto [ab, ba] = swap_conditions(FamilyId::Temporal, CueLabel::New, CueLabel::Old);
  std::vector<std::optional<CueCondition>> conditions = {ab, ba};

  auto records = run_trials(client, items, conditions);
  REQUIRE(records.size() == 8);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(records[i].item_id == "item-" + std::to_string(i));
    CHECK(records[i].condition == ab);
    CHECK(records[i + 4].condition == ba);
    CHECK(records[i].status == "ok");
    CHECK(records[i].verdict.parse_status == ParseStatus::Clean);
  }
  CHECK(store->size() == 8);  // every exchange persisted
}

TEST_CASE("run_trials output is independent of parallelism") {
  std::vector<ComparisonItem> items;
  for (int i = 0; i < 16; ++i) items.push_back(make_item("item-" + std::to_string(i)));
  auto [ab, ba] = swap_conditions(FamilyId::Education, CueLabel::Educated, CueLabel::Uneducated);
  std::vector<std::optional<CueCondition>> conditions = {std::nullopt, ab, ba};

  auto run_with = [&](int workers) {
    JudgeConfig cfg;
    cfg.judge_id = "sim";
    cfg.parallelism = workers;
    JudgeClient client(cfg, std::make_shared<ExchangeStore>(), true);
    client.set_sim_params(basic_params(0.1, {{CueLabel::Educated, 0.4}}, 0.5, 7));
    return run_trials(client, items, conditions);
  };
  auto serial = run_with(1);
  auto parallel = run_with(8);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i] == parallel[i]);
}

TEST_CASE("run_trials records per-trial errors without aborting the batch") {
  TestServer server([](const httplib::Request& req, httplib::Response& res) {
    if (req.body.find("poison") != std::string::npos) {
      res.status = 500;
      res.set_content("boom", "text/plain");
      return;
    }
    TestServer::echo_verdict(req, res);
  });
  EnvKey key("httpj");
  auto cfg = http_judge(server.endpoint(), /*max_retries=*/0);
  JudgeClient client(cfg, std::make_shared<ExchangeStore>(), true);

  std::vector<ComparisonItem> items = {
      make_item("a", "q", "fine answer", "other answer"),
      make_item("b", "q", "poison answer", "other answer"),
      make_item("c", "q", "fine answer two", "other answer"),
  };
  std::vector<std::optional<CueCondition>> conditions = {std::nullopt};
  auto records = run_trials(client, items, conditions);
  REQUIRE(records.size() == 3);
  CHECK(records[0].status == "ok");
  CHECK(records[1].status == "NetworkError");
  CHECK(records[1].verdict.parse_status == ParseStatus::Failed);
  CHECK(records[2].status == "ok");
}

TEST_CASE("simulated run_trials is a pure function of its inputs") {
  std::vector<ComparisonItem> items;
  for (int i = 0; i < 8; ++i) items.push_back(make_item("item-" + std::to_string(i)));
  auto [ab, ba] = swap_conditions(FamilyId::Gender, CueLabel::Male, CueLabel::Female);
  std::vector<std::optional<CueCondition>> conditions = {ab, ba};

  auto run_once = [&] {
    JudgeConfig cfg;
    cfg.judge_id = "sim";
    cfg.parallelism = 3;
    JudgeClient client(cfg, std::make_shared<ExchangeStore>(), true);
    client.set_sim_params(basic_params(-0.2, {{CueLabel::Male, 0.1}}, 0.3, 99));
    return run_trials(client, items, conditions);
  };
  CHECK(run_once() == run_once());
}
