#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "judgeprobe/acknowledgment.hpp"
#include "judgeprobe/common.hpp"
#include "judgeprobe/cues.hpp"
#include "judgeprobe/verdict_parser.hpp"

namespace judgeprobe {

class TrialStoreError : public Error {
 public:
  enum class Kind { Io, RecordsCorrupt };
  Kind kind;
  std::size_t line = 0;
  TrialStoreError(Kind k, std::string msg, std::size_t line_ = 0)
      : Error(std::move(msg)), kind(k), line(line_) {}
};

// One judge query for one (item, condition) pair. status is "ok" or the
// error kind that sank the trial; a sunk trial never aborts a batch.
struct TrialRecord {
  std::string item_id;
  std::string judge_id;
  std::string dataset_tag;
  std::optional<CueCondition> condition;  // nullopt = cue-free baseline
  std::string prompt_hash;
  std::string status = "ok";
  Verdict verdict;
  bool acknowledged = false;
  std::vector<AckMatch> matched_spans;

  bool operator==(const TrialRecord&) const = default;
};

inline bool trial_valid(const TrialRecord& r) {
  return r.status == "ok" && r.verdict.parse_status != ParseStatus::Failed;
}

inline nlohmann::json trial_to_json(const TrialRecord& r) {
  nlohmann::json j{
      {"item_id", r.item_id},
      {"judge_id", r.judge_id},
      {"dataset_tag", r.dataset_tag},
      {"prompt_hash", r.prompt_hash},
      {"status", r.status},
      {"acknowledged", r.acknowledged},
  };
  if (r.condition) {
    j["family"] = std::string(family_name(r.condition->family));
    j["label_r1"] = std::string(label_name(r.condition->label_r1));
    j["label_r2"] = std::string(label_name(r.condition->label_r2));
  } else {
    j["family"] = nullptr;
  }
  nlohmann::json v{
      {"selected", r.verdict.selected},
      {"reason", r.verdict.reason},
      {"parse_status", std::string(parse_status_name(r.verdict.parse_status))},
  };
  v["repair_note"] = r.verdict.repair_note ? nlohmann::json(*r.verdict.repair_note)
                                           : nlohmann::json(nullptr);
  j["verdict"] = v;
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& m : r.matched_spans) {
    spans.push_back({{"pattern", m.pattern}, {"begin", m.begin}, {"end", m.end}});
  }
  j["matched_spans"] = spans;
  return j;
}

inline TrialRecord trial_from_json(const nlohmann::json& j) {
  TrialRecord r;
  r.item_id = j.at("item_id").get<std::string>();
  r.judge_id = j.at("judge_id").get<std::string>();
  r.dataset_tag = j.at("dataset_tag").get<std::string>();
  r.prompt_hash = j.at("prompt_hash").get<std::string>();
  r.status = j.at("status").get<std::string>();
  r.acknowledged = j.at("acknowledged").get<bool>();
  if (j.contains("family") && !j["family"].is_null()) {
    CueCondition c;
    c.family = parse_family(j.at("family").get<std::string>());
    c.label_r1 = parse_label(j.at("label_r1").get<std::string>());
    c.label_r2 = parse_label(j.at("label_r2").get<std::string>());
    r.condition = c;
  }
  const auto& v = j.at("verdict");
  r.verdict.selected = v.at("selected").get<int>();
  r.verdict.reason = v.at("reason").get<std::string>();
  std::string ps = v.at("parse_status").get<std::string>();
  r.verdict.parse_status = ps == "clean"      ? ParseStatus::Clean
                           : ps == "repaired" ? ParseStatus::Repaired
                                              : ParseStatus::Failed;
  if (v.contains("repair_note") && !v["repair_note"].is_null()) {
    r.verdict.repair_note = v["repair_note"].get<std::string>();
  }
  for (const auto& m : j.at("matched_spans")) {
    r.matched_spans.push_back({m.at("pattern").get<std::string>(),
                               m.at("begin").get<std::size_t>(),
                               m.at("end").get<std::size_t>()});
  }
  return r;
}

inline void save_trials(const std::vector<TrialRecord>& records,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw TrialStoreError(TrialStoreError::Kind::Io,
                          "cannot write trial records: " + path.string());
  }
  for (const auto& r : records) out << trial_to_json(r).dump() << '\n';
}

inline std::vector<TrialRecord> load_trials(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw TrialStoreError(TrialStoreError::Kind::Io,
                          "cannot open trial records: " + path.string());
  }
  std::vector<TrialRecord> records;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw TrialStoreError(TrialStoreError::Kind::RecordsCorrupt,
                            path.string() + ":" + std::to_string(lineno) +
                                ": corrupt trial record",
                            lineno);
    }
    try {
      records.push_back(trial_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw TrialStoreError(TrialStoreError::Kind::RecordsCorrupt,
                            path.string() + ":" + std::to_string(lineno) + ": " + e.what(),
                            lineno);
    }
  }
  return records;
}

}  // namespace judgeprobe
