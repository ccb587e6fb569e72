#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "judgeprobe/common.hpp"
#include "judgeprobe/corpus.hpp"
#include "judgeprobe/cues.hpp"
#include "judgeprobe/judge_client.hpp"
#include "judgeprobe/metrics.hpp"
#include "judgeprobe/prompting.hpp"

namespace judgeprobe {

class ConfigError : public Error {
 public:
  enum class Kind { Invalid, ParamsInvalid };
  Kind kind;
  ConfigError(Kind k, std::string msg) : Error(std::move(msg)), kind(k) {}
};

struct CorpusSource {
  std::filesystem::path path;
  CorpusFormat format = CorpusFormat::Jsonl;
  std::string dataset_tag;
  ContentType content_type = ContentType::Response;
};

// Declarative description of one audit. Fully serializable: a persisted
// config plus the cached exchanges reproduces the report exactly.
struct RunConfig {
  std::string run_id = "run";
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  std::size_t subsample_n = 100;
  bool frozen_time = false;
  std::vector<CorpusSource> corpora;
  std::vector<FamilyId> families{kAllFamilies.begin(), kAllFamilies.end()};
  bool include_expert = false;
  // Optional explicit Source contrasts; empty -> label_pairs(Source, include_expert).
  std::vector<std::pair<CueLabel, CueLabel>> source_pairs;
  CuePlacement cue_placement = CuePlacement::AfterBoth;
  bool include_baseline = false;
  double max_rel_length_diff = 0.20;
  std::vector<JudgeConfig> judges;
  std::optional<std::filesystem::path> lexicon_path;
  std::optional<std::filesystem::path> cue_template_path;
  BootstrapOptions bootstrap;
};

// ---------------- JSON <-> config ----------------

inline nlohmann::json judge_to_json(const JudgeConfig& j) {
  nlohmann::json out{
      {"judge_id", j.judge_id},
      {"kind", j.kind == JudgeKind::HttpChat ? "http_chat" : "simulated"},
      {"model_name", j.model_name},
      {"temperature", j.temperature},
      {"top_p", j.top_p},
      {"seed", j.seed},
      {"stop", j.stop},
      {"timeout_ms", j.timeout.count()},
      {"max_retries", j.max_retries},
      {"parallelism", j.parallelism},
      {"backoff_ms", j.backoff.count()},
  };
  if (!j.endpoint.empty()) out["endpoint"] = j.endpoint;
  if (!j.params_path.empty()) out["params_path"] = j.params_path;
  return out;
}

inline JudgeConfig judge_from_json(const nlohmann::json& j) {
  auto fail = [](const std::string& msg) -> void {
    throw ConfigError(ConfigError::Kind::Invalid, "judge config: " + msg);
  };
  if (!j.is_object()) fail("must be an object");
  JudgeConfig cfg;
  if (!j.contains("judge_id") || !j["judge_id"].is_string()) fail("missing judge_id");
  cfg.judge_id = j["judge_id"].get<std::string>();
  std::string kind = j.value("kind", "simulated");
  if (kind == "http_chat") {
    cfg.kind = JudgeKind::HttpChat;
  } else if (kind == "simulated") {
    cfg.kind = JudgeKind::Simulated;
  } else {
    fail("unknown kind '" + kind + "'");
  }
  cfg.endpoint = j.value("endpoint", std::string{});
  if (cfg.kind == JudgeKind::HttpChat && cfg.endpoint.empty()) {
    fail("http_chat judge " + cfg.judge_id + " needs an endpoint");
  }
  cfg.model_name = j.value("model_name", cfg.judge_id);
  cfg.temperature = j.value("temperature", 0.0);
  cfg.top_p = j.value("top_p", 1.0);
  cfg.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("stop")) cfg.stop = j["stop"].get<std::vector<std::string>>();
  cfg.timeout = std::chrono::milliseconds(j.value("timeout_ms", std::int64_t{30000}));
  cfg.max_retries = j.value("max_retries", 3);
  cfg.parallelism = j.value("parallelism", 4);
  cfg.backoff = std::chrono::milliseconds(j.value("backoff_ms", std::int64_t{250}));
  cfg.params_path = j.value("params_path", std::string{});
  return cfg;
}

inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json corpora = nlohmann::json::array();
  for (const auto& c : cfg.corpora) {
    corpora.push_back({
        {"path", c.path.string()},
        {"format", c.format == CorpusFormat::Csv ? "csv" : "jsonl"},
        {"dataset_tag", c.dataset_tag},
        {"content_type", c.content_type == ContentType::Story ? "story" : "response"},
    });
  }
  nlohmann::json families = nlohmann::json::array();
  for (FamilyId f : cfg.families) families.push_back(std::string(family_name(f)));
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [a, b] : cfg.source_pairs) {
    pairs.push_back({std::string(label_name(a)), std::string(label_name(b))});
  }
  nlohmann::json judges = nlohmann::json::array();
  for (const auto& judge : cfg.judges) judges.push_back(judge_to_json(judge));
  nlohmann::json out{
      {"run_id", cfg.run_id},
      {"out_dir", cfg.out_dir.string()},
      {"seed", cfg.seed},
      {"subsample_n", cfg.subsample_n},
      {"frozen_time", cfg.frozen_time},
      {"corpora", corpora},
      {"families", families},
      {"include_expert", cfg.include_expert},
      {"source_pairs", pairs},
      {"cue_placement", std::string(cue_placement_name(cfg.cue_placement))},
      {"include_baseline", cfg.include_baseline},
      {"max_rel_length_diff", cfg.max_rel_length_diff},
      {"judges", judges},
      {"bootstrap", {{"resamples", cfg.bootstrap.resamples}, {"level", cfg.bootstrap.level}}},
  };
  if (cfg.lexicon_path) out["lexicon_path"] = cfg.lexicon_path->string();
  if (cfg.cue_template_path) out["cue_template_path"] = cfg.cue_template_path->string();
  return out;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ConfigError(ConfigError::Kind::Invalid, "run config must be a JSON object");
  }
  RunConfig cfg;
  cfg.run_id = j.value("run_id", cfg.run_id);
  cfg.out_dir = j.value("out_dir", cfg.out_dir.string());
  cfg.seed = j.value("seed", cfg.seed);
  cfg.subsample_n = j.value("subsample_n", cfg.subsample_n);
  cfg.frozen_time = j.value("frozen_time", cfg.frozen_time);
  if (j.contains("corpora")) {
    cfg.corpora.clear();
    for (const auto& c : j["corpora"]) {
      CorpusSource src;
      if (!c.contains("path")) {
        throw ConfigError(ConfigError::Kind::Invalid, "corpus entry missing path");
      }
      src.path = c["path"].get<std::string>();
      src.format = parse_corpus_format(c.value("format", "jsonl"));
      src.dataset_tag = c.value("dataset_tag", src.path.stem().string());
      src.content_type =
          to_lower(c.value("content_type", "response")) == "story" ? ContentType::Story
                                                                   : ContentType::Response;
      cfg.corpora.push_back(std::move(src));
    }
  }
  if (j.contains("families")) {
    cfg.families.clear();
    for (const auto& f : j["families"]) cfg.families.push_back(parse_family(f.get<std::string>()));
  }
  cfg.include_expert = j.value("include_expert", cfg.include_expert);
  if (j.contains("source_pairs")) {
    for (const auto& p : j["source_pairs"]) {
      if (!p.is_array() || p.size() != 2) {
        throw ConfigError(ConfigError::Kind::Invalid, "source_pairs entries must be [a, b]");
      }
      cfg.source_pairs.push_back(
          {parse_label(p[0].get<std::string>()), parse_label(p[1].get<std::string>())});
    }
  }
  if (j.contains("cue_placement")) {
    cfg.cue_placement = parse_cue_placement(j["cue_placement"].get<std::string>());
  }
  cfg.include_baseline = j.value("include_baseline", cfg.include_baseline);
  cfg.max_rel_length_diff = j.value("max_rel_length_diff", cfg.max_rel_length_diff);
  if (cfg.max_rel_length_diff <= 0.0 || cfg.max_rel_length_diff > 1.0) {
    throw ConfigError(ConfigError::Kind::Invalid, "max_rel_length_diff must be in (0, 1]");
  }
  if (j.contains("judges")) {
    for (const auto& judge : j["judges"]) cfg.judges.push_back(judge_from_json(judge));
  }
  if (j.contains("lexicon_path")) cfg.lexicon_path = j["lexicon_path"].get<std::string>();
  if (j.contains("cue_template_path")) {
    cfg.cue_template_path = j["cue_template_path"].get<std::string>();
  }
  if (j.contains("bootstrap")) {
    cfg.bootstrap.resamples = j["bootstrap"].value("resamples", cfg.bootstrap.resamples);
    cfg.bootstrap.level = j["bootstrap"].value("level", cfg.bootstrap.level);
  }
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(ConfigError::Kind::Invalid, "cannot open config file: " + path.string());
  }
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ConfigError(ConfigError::Kind::Invalid, "config is not valid JSON: " + path.string());
  }
  return run_config_from_json(j);
}

// ---------------- simulated-judge parameters ----------------

// JSON shape: {rng_seed, ack_probability, bias: {label: weight},
// quality_gap: {item_id: gap}, gap_distribution: {kind, half_width|stddev,
// seed}}. quality_gap entries win over the distribution; the distribution
// fills gaps for items not listed, hashed per item id so values do not
// depend on item order.
struct GapDistribution {
  std::string kind = "uniform";  // uniform | normal
  double scale = 1.0;            // half-width (uniform) or stddev (normal)
  std::uint64_t seed = 0;
};

struct SimParamsSpec {
  SimJudgeParams params;
  std::optional<GapDistribution> gap_distribution;
};

inline SimParamsSpec sim_params_from_json(const nlohmann::json& j) {
  auto fail = [](const std::string& msg) -> void {
    throw ConfigError(ConfigError::Kind::ParamsInvalid, "sim params: " + msg);
  };
  if (!j.is_object()) fail("must be a JSON object");
  SimParamsSpec spec;
  spec.params.rng_seed = j.value("rng_seed", std::uint64_t{0});
  spec.params.ack_probability = j.value("ack_probability", 0.0);
  if (spec.params.ack_probability < 0.0 || spec.params.ack_probability > 1.0) {
    fail("ack_probability must be in [0, 1]");
  }
  if (j.contains("bias")) {
    if (!j["bias"].is_object()) fail("bias must be an object of label -> weight");
    for (const auto& [label, weight] : j["bias"].items()) {
      if (!weight.is_number()) fail("bias weight for " + label + " must be a number");
      spec.params.bias[parse_label(label)] = weight.get<double>();
    }
  }
  if (j.contains("quality_gap")) {
    if (!j["quality_gap"].is_object()) fail("quality_gap must be an object of item_id -> gap");
    for (const auto& [id, gap] : j["quality_gap"].items()) {
      if (!gap.is_number()) fail("quality gap for " + id + " must be a number");
      spec.params.quality_gap[id] = gap.get<double>();
    }
  }
  if (j.contains("gap_distribution")) {
    const auto& d = j["gap_distribution"];
    GapDistribution dist;
    dist.kind = d.value("kind", "uniform");
    if (dist.kind != "uniform" && dist.kind != "normal") {
      fail("gap_distribution.kind must be uniform or normal");
    }
    dist.scale = dist.kind == "uniform" ? d.value("half_width", 1.0) : d.value("stddev", 1.0);
    if (dist.scale <= 0.0) fail("gap_distribution scale must be positive");
    dist.seed = d.value("seed", std::uint64_t{0});
    spec.gap_distribution = dist;
  }
  return spec;
}

inline SimParamsSpec load_sim_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(ConfigError::Kind::ParamsInvalid,
                      "cannot open sim params file: " + path.string());
  }
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ConfigError(ConfigError::Kind::ParamsInvalid,
                      "sim params file is not valid JSON: " + path.string());
  }
  return sim_params_from_json(j);
}

// Symmetric seeded draw for one item. Uniform: U(-scale, +scale); normal:
// N(0, scale^2) via Box-Muller on two deterministic uniforms.
inline double draw_gap(const GapDistribution& dist, const std::string& item_id) {
  std::mt19937_64 rng(dist.seed ^ stable_hash64(item_id));
  if (dist.kind == "normal") {
    double u1 = uniform01(rng);
    double u2 = uniform01(rng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return dist.scale * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }
  return dist.scale * (2.0 * uniform01(rng) - 1.0);
}

// Materializes a full per-item gap map for the given items: explicit
// entries win, the distribution covers the rest, items still missing fail
// later as UnknownItem.
inline SimJudgeParams resolve_sim_params(const SimParamsSpec& spec,
                                         const std::vector<ComparisonItem>& items) {
  SimJudgeParams params = spec.params;
  if (spec.gap_distribution) {
    for (const auto& item : items) {
      if (!params.quality_gap.count(item.item_id)) {
        params.quality_gap[item.item_id] = draw_gap(*spec.gap_distribution, item.item_id);
      }
    }
  }
  return params;
}

}  // namespace judgeprobe
