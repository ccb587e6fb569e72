#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "judgeprobe/common.hpp"
#include "judgeprobe/corpus.hpp"
#include "judgeprobe/cues.hpp"
#include "judgeprobe/prompting.hpp"
#include "judgeprobe/trial.hpp"
#include "judgeprobe/verdict_parser.hpp"

namespace judgeprobe {

class JudgeError : public Error {
 public:
  enum class Kind { NetworkError, Timeout, RateLimited, AuthMissing, UnknownItem, BadConfig };
  Kind kind;
  std::optional<std::chrono::milliseconds> retry_after;
  JudgeError(Kind k, std::string msg,
             std::optional<std::chrono::milliseconds> retry_after_ = std::nullopt)
      : Error(std::move(msg)), kind(k), retry_after(retry_after_) {}
};

inline std::string_view judge_error_name(JudgeError::Kind k) {
  switch (k) {
    case JudgeError::Kind::NetworkError: return "NetworkError";
    case JudgeError::Kind::Timeout: return "Timeout";
    case JudgeError::Kind::RateLimited: return "RateLimited";
    case JudgeError::Kind::AuthMissing: return "AuthMissing";
    case JudgeError::Kind::UnknownItem: return "UnknownItem";
    case JudgeError::Kind::BadConfig: return "BadConfig";
  }
  return "?";
}

enum class JudgeKind { HttpChat, Simulated };

// Decoding defaults follow the audit protocol: greedy decoding with a fixed
// seed and identical stop criteria across every condition of one run.
struct JudgeConfig {
  std::string judge_id;
  JudgeKind kind = JudgeKind::Simulated;
  std::string endpoint;  // http_chat only, e.g. http://host:8080/v1/chat/completions
  std::string model_name;
  double temperature = 0.0;
  double top_p = 1.0;
  std::uint64_t seed = 0;
  std::vector<std::string> stop;
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  int parallelism = 4;
  std::chrono::milliseconds backoff{250};
  std::string params_path;  // simulated only
};

// One raw request/response pair, exactly as sent and received.
struct RawExchange {
  std::string prompt_hash;
  std::string judge_id;
  std::string request_payload;  // canonical bytes
  std::string response_text;
  std::int64_t latency_ms = 0;
  int attempt_count = 1;
  std::string timestamp;
  std::optional<std::string> fingerprint;  // seed echo, when the endpoint provides one

  bool operator==(const RawExchange&) const = default;
};

// The OpenAI-compatible chat-completions body. nlohmann::json orders keys,
// so the dump is canonical: any change to a decoding knob changes the bytes
// and with them the cache key.
inline std::string canonical_request_payload(const JudgeConfig& cfg,
                                             const std::string& prompt_text) {
  nlohmann::json body{
      {"model", cfg.model_name},
      {"messages",
       nlohmann::json::array({nlohmann::json{{"role", "user"}, {"content", prompt_text}}})},
      {"temperature", cfg.temperature},
      {"top_p", cfg.top_p},
      {"seed", cfg.seed},
  };
  if (!cfg.stop.empty()) body["stop"] = cfg.stop;
  return body.dump();
}

inline std::string cache_key(const std::string& judge_id, const std::string& payload) {
  std::uint64_t h = stable_hash64(judge_id);
  h = stable_hash64("\x1f", h);
  h = stable_hash64(payload, h);
  return to_hex(h);
}

// ---------------- raw-exchange store ----------------

// Append-only JSONL cache of raw exchanges, keyed by judge + canonical
// payload. Reopening the file rebuilds the in-memory index, which is what
// makes warm reruns hit without any network traffic.
class ExchangeStore {
 public:
  ExchangeStore() = default;  // memory-only

  explicit ExchangeStore(std::filesystem::path file) : path_(std::move(file)) {
    std::ifstream in(path_, std::ios::binary);
    if (in) {
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("key")) {
          throw Error(path_.string() + ":" + std::to_string(lineno) +
                      ": corrupt exchange record");
        }
        entries_[j["key"].get<std::string>()] = exchange_from_json(j);
      }
    }
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw Error("cannot open exchange store for append: " + path_.string());
  }

  std::optional<RawExchange> find(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  // Inserts unless the key is already present. Single writer: appends are
  // serialized, and readers never observe a partially written record.
  bool put(const std::string& key, const RawExchange& ex) {
    std::lock_guard lock(mutex_);
    if (!entries_.emplace(key, ex).second) return false;
    if (out_.is_open()) {
      nlohmann::json j = exchange_to_json(ex);
      j["key"] = key;
      out_ << j.dump() << '\n';
      out_.flush();
    }
    return true;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

  static nlohmann::json exchange_to_json(const RawExchange& ex) {
    nlohmann::json j{
        {"prompt_hash", ex.prompt_hash},
        {"judge_id", ex.judge_id},
        {"request_payload", ex.request_payload},
        {"response_text", ex.response_text},
        {"latency_ms", ex.latency_ms},
        {"attempt_count", ex.attempt_count},
        {"timestamp", ex.timestamp},
    };
    j["fingerprint"] = ex.fingerprint ? nlohmann::json(*ex.fingerprint) : nlohmann::json(nullptr);
    return j;
  }

  static RawExchange exchange_from_json(const nlohmann::json& j) {
    RawExchange ex;
    ex.prompt_hash = j.at("prompt_hash").get<std::string>();
    ex.judge_id = j.at("judge_id").get<std::string>();
    ex.request_payload = j.at("request_payload").get<std::string>();
    ex.response_text = j.at("response_text").get<std::string>();
    ex.latency_ms = j.at("latency_ms").get<std::int64_t>();
    ex.attempt_count = j.at("attempt_count").get<int>();
    ex.timestamp = j.at("timestamp").get<std::string>();
    if (j.contains("fingerprint") && !j["fingerprint"].is_null()) {
      ex.fingerprint = j["fingerprint"].get<std::string>();
    }
    return ex;
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, RawExchange> entries_;
};

// ---------------- simulated judge ----------------

// Parametric oracle judge: a latent per-item quality gap plus an additive
// utility for whichever cue label is attached to each response. Its bias
// and acknowledgment rate are known exactly, which is what lets the metric
// pipeline be validated end to end.
struct SimJudgeParams {
  std::map<std::string, double> quality_gap;  // item_id -> q1 - q2
  std::map<CueLabel, double> bias;            // additive utility per attached label
  double ack_probability = 0.0;
  std::uint64_t rng_seed = 0;
};

// Deterministic verdict text for one (item, condition) query:
//   u1 = quality_gap(item) + bias(label_r1),  u2 = bias(label_r2)
// (cue-free: bias terms 0); response 1 wins ties. With probability
// ack_probability (coin seeded by rng_seed ^ hash(item_id), so the same
// item acks in both swap directions) the reason embeds the cue fragment of
// the chosen response's label, which the default lexicons all detect.
inline std::string sim_decide(const SimJudgeParams& params, const std::string& item_id,
                              const std::optional<CueCondition>& condition) {
  auto gap = params.quality_gap.find(item_id);
  if (gap == params.quality_gap.end()) {
    throw JudgeError(JudgeError::Kind::UnknownItem,
                     "simulated judge has no quality gap for item " + item_id);
  }
  auto bias_of = [&params](CueLabel l) {
    auto it = params.bias.find(l);
    return it == params.bias.end() ? 0.0 : it->second;
  };
  double u1 = gap->second;
  double u2 = 0.0;
  if (condition) {
    u1 += bias_of(condition->label_r1);
    u2 += bias_of(condition->label_r2);
  }
  int selected = u1 >= u2 ? 1 : 2;

  std::string reason = "The selected response is clearer and more complete.";
  if (condition) {
    std::mt19937_64 coin(params.rng_seed ^ stable_hash64(item_id));
    if (uniform01(coin) < params.ack_probability) {
      CueLabel chosen = selected == 1 ? condition->label_r1 : condition->label_r2;
      reason += " It also appears to have been " + label_phrase(chosen) + ".";
    }
  }
  nlohmann::json out{{"selected response", selected}, {"reason", reason}};
  return out.dump();
}

// ---------------- transports ----------------

struct ChatOutcome {
  std::string content;
  int attempts = 1;
  std::optional<std::string> fingerprint;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual ChatOutcome complete(const JudgeConfig& cfg, const RenderedPrompt& prompt,
                               const std::string& payload) = 0;
};

class SimChatTransport final : public ChatTransport {
 public:
  explicit SimChatTransport(SimJudgeParams params) : params_(std::move(params)) {}

  ChatOutcome complete(const JudgeConfig&, const RenderedPrompt& prompt,
                       const std::string&) override {
    return {sim_decide(params_, prompt.item_id, prompt.condition), 1, std::nullopt};
  }

  const SimJudgeParams& params() const { return params_; }

 private:
  SimJudgeParams params_;
};

inline std::string api_key_env_var(const std::string& judge_id) {
  std::string var = "JUDGEPROBE_API_KEY_";
  for (char c : judge_id) {
    unsigned char u = static_cast<unsigned char>(c);
    var += std::isalnum(u) ? static_cast<char>(std::toupper(u)) : '_';
  }
  return var;
}

class HttpChatTransport final : public ChatTransport {
 public:
  ChatOutcome complete(const JudgeConfig& cfg, const RenderedPrompt&,
                       const std::string& payload) override {
    auto [base, path] = split_endpoint(cfg.endpoint);

    std::string env_var = api_key_env_var(cfg.judge_id);
    const char* key = std::getenv(env_var.c_str());
    if (!key || !*key) {
      throw JudgeError(JudgeError::Kind::AuthMissing,
                       "API key env var " + env_var + " is not set");
    }

    httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

    int attempts = 0;
    JudgeError last(JudgeError::Kind::NetworkError, "no attempt made");
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
      if (attempt > 0) {
        auto wait = cfg.backoff * (1 << (attempt - 1));
        if (last.kind == JudgeError::Kind::RateLimited && last.retry_after &&
            *last.retry_after > wait) {
          wait = *last.retry_after;
        }
        std::this_thread::sleep_for(wait);
      }
      ++attempts;
      httplib::Client cli(base);
      cli.set_connection_timeout(cfg.timeout);
      cli.set_read_timeout(cfg.timeout);
      cli.set_write_timeout(cfg.timeout);

      auto res = cli.Post(path, headers, payload, "application/json");
      if (!res) {
        bool timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                         res.error() == httplib::Error::Read || res.error() == httplib::Error::Write;
        last = JudgeError(timed_out ? JudgeError::Kind::Timeout : JudgeError::Kind::NetworkError,
                          "transport failure talking to " + cfg.endpoint + ": " +
                              httplib::to_string(res.error()));
        continue;
      }
      if (res->status == 200) {
        return parse_completion(res->body, attempts, cfg);
      }
      if (res->status == 429) {
        std::optional<std::chrono::milliseconds> retry_after;
        if (res->has_header("Retry-After")) {
          retry_after = std::chrono::milliseconds(
              static_cast<long long>(std::atof(res->get_header_value("Retry-After").c_str()) *
                                     1000.0));
        }
        last = JudgeError(JudgeError::Kind::RateLimited,
                          "rate limited by " + cfg.endpoint, retry_after);
        continue;
      }
      if (res->status >= 500 || res->status == 408) {
        last = JudgeError(JudgeError::Kind::NetworkError,
                          "HTTP " + std::to_string(res->status) + " from " + cfg.endpoint);
        continue;
      }
      // Other 4xx: not transient, fail immediately.
      throw JudgeError(JudgeError::Kind::NetworkError,
                       "HTTP " + std::to_string(res->status) + " from " + cfg.endpoint + ": " +
                           res->body);
    }
    throw last;
  }

 private:
  static std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
      throw JudgeError(JudgeError::Kind::BadConfig, "endpoint must be a URL: " + endpoint);
    }
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
  }

  static ChatOutcome parse_completion(const std::string& body, int attempts,
                                      const JudgeConfig& cfg) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() ||
        j["choices"].empty() || !j["choices"][0].contains("message") ||
        !j["choices"][0]["message"].contains("content")) {
      throw JudgeError(JudgeError::Kind::NetworkError,
                       "malformed completion body from " + cfg.endpoint);
    }
    ChatOutcome out;
    out.content = j["choices"][0]["message"]["content"].get<std::string>();
    out.attempts = attempts;
    if (j.contains("system_fingerprint") && j["system_fingerprint"].is_string()) {
      out.fingerprint = j["system_fingerprint"].get<std::string>();
    }
    return out;
  }
};

// ---------------- client ----------------

struct QueryResult {
  RawExchange exchange;
  std::string key;
  bool from_cache = false;
};

class JudgeClient {
 public:
  JudgeClient(JudgeConfig cfg, std::shared_ptr<ExchangeStore> store,
              bool frozen_time = false)
      : cfg_(std::move(cfg)), store_(std::move(store)), frozen_time_(frozen_time) {
    if (cfg_.kind == JudgeKind::HttpChat) {
      transport_ = std::make_shared<HttpChatTransport>();
    }
  }

  const JudgeConfig& config() const { return cfg_; }

  void set_sim_params(SimJudgeParams params) {
    transport_ = std::make_shared<SimChatTransport>(std::move(params));
  }

  void set_transport(std::shared_ptr<ChatTransport> t) { transport_ = std::move(t); }

  // Cache-first query. On a hit the stored exchange is returned unchanged
  // and no transport call happens; on a miss the exchange is persisted
  // before returning (unless persist=false, used by run_trials to commit
  // batches in deterministic order).
  QueryResult query(const RenderedPrompt& prompt, bool persist = true) {
    if (!transport_) {
      throw JudgeError(JudgeError::Kind::BadConfig,
                       "judge " + cfg_.judge_id + " has no transport (missing sim params?)");
    }
    std::string payload = canonical_request_payload(cfg_, prompt.text);
    std::string key = cache_key(cfg_.judge_id, payload);
    if (store_) {
      if (auto hit = store_->find(key)) return {*hit, key, true};
    }
    auto start = std::chrono::steady_clock::now();
    ChatOutcome outcome = transport_->complete(cfg_, prompt, payload);
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);

    RawExchange ex;
    ex.prompt_hash = prompt.prompt_hash;
    ex.judge_id = cfg_.judge_id;
    ex.request_payload = std::move(payload);
    ex.response_text = std::move(outcome.content);
    ex.latency_ms = frozen_time_ ? 0 : elapsed.count();
    ex.attempt_count = outcome.attempts;
    ex.timestamp = frozen_time_ ? kFrozenTimestamp : iso_utc_now();
    ex.fingerprint = outcome.fingerprint;
    if (persist && store_) store_->put(key, ex);
    return {std::move(ex), std::move(key), false};
  }

  ExchangeStore* store() { return store_.get(); }

 private:
  JudgeConfig cfg_;
  std::shared_ptr<ExchangeStore> store_;
  std::shared_ptr<ChatTransport> transport_;
  bool frozen_time_ = false;
};

// ---------------- trial runner ----------------

struct TrialRunOptions {
  CuePlacement placement = CuePlacement::AfterBoth;
  const CueTemplateTable* cue_table = nullptr;
  const AckLexiconSet* lexicons = nullptr;  // null -> defaults
};

// Runs one query per (condition, item), condition-major, with up to
// config.parallelism concurrent requests. Output order and content do not
// depend on the parallelism level; every fresh exchange is persisted (in
// trial order) before the call returns; a failed trial becomes a record
// with an error status instead of sinking the batch.
inline std::vector<TrialRecord> run_trials(
    JudgeClient& client, const std::vector<ComparisonItem>& items,
    const std::vector<std::optional<CueCondition>>& conditions,
    const TrialRunOptions& opts = {}) {
  const AckLexiconSet& lexicons = opts.lexicons ? *opts.lexicons : default_lexicons();
  PromptOptions prompt_opts;
  prompt_opts.placement = opts.placement;
  prompt_opts.cue_table = opts.cue_table;

  const std::size_t total = conditions.size() * items.size();
  std::vector<TrialRecord> records(total);
  std::vector<std::optional<QueryResult>> results(total);

  auto run_one = [&](std::size_t flat) {
    const auto& condition = conditions[flat / items.size()];
    const auto& item = items[flat % items.size()];
    TrialRecord rec;
    rec.item_id = item.item_id;
    rec.judge_id = client.config().judge_id;
    rec.dataset_tag = item.dataset_tag;
    rec.condition = condition;
    RenderedPrompt prompt = build_prompt(item, condition, prompt_opts);
    rec.prompt_hash = prompt.prompt_hash;
    try {
      QueryResult qr = client.query(prompt, /*persist=*/false);
      rec.verdict = parse_verdict(qr.exchange.response_text);
      if (condition && rec.verdict.parse_status != ParseStatus::Failed) {
        auto [acked, spans] = detect_ack(rec.verdict.reason, condition->family, lexicons);
        rec.acknowledged = acked;
        rec.matched_spans = std::move(spans);
      }
      results[flat] = std::move(qr);
    } catch (const JudgeError& e) {
      rec.status = std::string(judge_error_name(e.kind));
      rec.verdict = Verdict{};  // failed
    }
    records[flat] = std::move(rec);
  };

  int workers = std::max(1, client.config().parallelism);
  if (workers == 1 || total <= 1) {
    for (std::size_t i = 0; i < total; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < total; i = next.fetch_add(1)) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }

  if (client.store()) {
    for (std::size_t i = 0; i < total; ++i) {
      if (results[i] && !results[i]->from_cache) {
        client.store()->put(results[i]->key, results[i]->exchange);
      }
    }
  }
  return records;
}

}  // namespace judgeprobe
