#pragma once

// Fixture builders that encode published result cells as synthetic trial
// records, so table emission is exercised through the real metric path.

#include <string>
#include <vector>

#include "judgeprobe/judgeprobe.hpp"

namespace fixtures {

using namespace judgeprobe;

// One direction with n trials, sel1 of them selecting response 1 and acked
// of them acknowledging the cue.
inline std::vector<TrialRecord> direction(const std::string& dataset, const std::string& judge,
                                          const CueCondition& condition, std::size_t n,
                                          std::size_t sel1, std::size_t acked) {
  std::vector<TrialRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    TrialRecord r;
    r.item_id = "item-" + std::to_string(i);
    r.judge_id = judge;
    r.dataset_tag = dataset;
    r.condition = condition;
    r.prompt_hash = stable_hash_hex(dataset + judge + r.item_id);
    r.status = "ok";
    r.verdict.selected = i < sel1 ? 1 : 2;
    r.verdict.reason = "fixture";
    r.verdict.parse_status = ParseStatus::Clean;
    r.acknowledged = i < acked;
    out.push_back(std::move(r));
  }
  return out;
}

// Cell whose vsr_signed lands on `vsr_pp` percentage points and car_avg on
// `car_pct` percent, using 200 trials per direction (which makes every
// integer VSR and every quarter-percent CAR representable exactly).
inline CellReport encoded_cell(const std::string& dataset, const std::string& judge,
                               FamilyId family, CueLabel a, CueLabel b, double vsr_pp,
                               double car_pct) {
  const std::size_t n = 200;
  auto sel1_ab = static_cast<std::size_t>(100.0 + vsr_pp);
  auto sel1_ba = static_cast<std::size_t>(100.0 - vsr_pp);
  auto acked = static_cast<std::size_t>(car_pct * 2.0);
  auto [ab, ba] = swap_conditions(family, a, b);
  BootstrapOptions bs;
  bs.resamples = 50;
  bs.seed = stable_hash64(dataset + judge);
  return build_cell(direction(dataset, judge, ab, n, sel1_ab, acked),
                    direction(dataset, judge, ba, n, sel1_ba, acked), dataset, judge, family, a,
                    b, "ack-lexicon-v1", bs);
}

struct PublishedRow {
  const char* dataset;
  const char* judge;
  double vsr;
  double car;
};

// Temporal recency results (New vs Old).
inline AuditReport temporal_report() {
  static const PublishedRow rows[] = {
      {"ELI5", "GPT-4o", 30, 0},        {"ELI5", "Gemini-2.0-Flash", 13, 0},
      {"ELI5", "Gemma-3-27B-IT", 37, 46}, {"ELI5", "Qwen3-235B-A22B-Instruct", 32, 57},
      {"ELI5", "Claude-3-Haiku", 37, 0},  {"ELI5", "Llama3-3-70B-Instruct", 37, 0},
      {"LitBench", "GPT-4o", 16, 0},      {"LitBench", "Gemini-2.0-Flash", 9, 1},
      {"LitBench", "Gemma-3-27B-IT", 31, 0},
      {"LitBench", "Qwen3-235B-A22B-Instruct", 29, 5},
      {"LitBench", "Claude-3-Haiku", 71, 0},
      {"LitBench", "Llama3-3-70B-Instruct", 14, 0},
  };
  AuditReport report;
  report.run.run_id = "fixture-temporal";
  report.generated_at = kFrozenTimestamp;
  for (const auto& row : rows) {
    report.cells.push_back(encoded_cell(row.dataset, row.judge, FamilyId::Temporal, CueLabel::New,
                                        CueLabel::Old, row.vsr, row.car));
  }
  return report;
}

// Author-age results (Old vs Young author); CAR column carries a half point.
inline AuditReport age_report() {
  static const PublishedRow rows[] = {
      {"ELI5", "GPT-4o", 12, 0.0},        {"ELI5", "Gemini-2.0-Flash", 9, 0.0},
      {"ELI5", "Gemma-3-27B-IT", 13, 8.0}, {"ELI5", "Qwen3-235B-A22B-Instruct", 17, 0.0},
      {"ELI5", "Claude-3-Haiku", 21, 0.0}, {"ELI5", "Llama3-3-70B-Instruct", 7, 7.5},
      {"LitBench", "GPT-4o", 8, 0.0},      {"LitBench", "Gemini-2.0-Flash", 7, 0.0},
      {"LitBench", "Gemma-3-27B-IT", 31, 0.0},
      {"LitBench", "Qwen3-235B-A22B-Instruct", 20, 0.0},
      {"LitBench", "Claude-3-Haiku", 29, 0.0},
      {"LitBench", "Llama3-3-70B-Instruct", 15, 0.0},
  };
  AuditReport report;
  report.run.run_id = "fixture-age";
  report.generated_at = kFrozenTimestamp;
  for (const auto& row : rows) {
    report.cells.push_back(encoded_cell(row.dataset, row.judge, FamilyId::Age,
                                        CueLabel::OldAuthor, CueLabel::YoungAuthor, row.vsr,
                                        row.car));
  }
  return report;
}

// Source provenance contrasts for the two flagship judges.
inline AuditReport source_report() {
  struct SourceRow {
    const char* dataset;
    const char* judge;
    double human_unknown, human_llm, llm_unknown, car;
  };
  static const SourceRow rows[] = {
      {"ELI5", "GPT-4o", 7, 6, 4, 0},
      {"ELI5", "Gemini-2.0-Flash", 7, 6, 3, 0},
      {"LitBench", "GPT-4o", 14, 16, 4, 0},
      {"LitBench", "Gemini-2.0-Flash", 6, 7, 2, 0},
  };
  AuditReport report;
  report.run.run_id = "fixture-source";
  report.generated_at = kFrozenTimestamp;
  for (const auto& row : rows) {
    report.cells.push_back(encoded_cell(row.dataset, row.judge, FamilyId::Source, CueLabel::Human,
                                        CueLabel::Unknown, row.human_unknown, row.car));
    report.cells.push_back(encoded_cell(row.dataset, row.judge, FamilyId::Source, CueLabel::Human,
                                        CueLabel::Llm, row.human_llm, row.car));
    report.cells.push_back(encoded_cell(row.dataset, row.judge, FamilyId::Source, CueLabel::Llm,
                                        CueLabel::Unknown, row.llm_unknown, row.car));
  }
  return report;
}

inline constexpr const char* kTemporalMarkdown =
    "| Dataset | Judge Model | VSR (%) | Average CAR (%) |\n"
    "| --- | --- | --- | --- |\n"
    "| ELI5 | Claude-3-Haiku | 37 | 0 |\n"
    "| ELI5 | GPT-4o | 30 | 0 |\n"
    "| ELI5 | Gemini-2.0-Flash | 13 | 0 |\n"
    "| ELI5 | Gemma-3-27B-IT | 37 | 46 |\n"
    "| ELI5 | Llama3-3-70B-Instruct | 37 | 0 |\n"
    "| ELI5 | Qwen3-235B-A22B-Instruct | 32 | 57 |\n"
    "| LitBench | Claude-3-Haiku | 71 | 0 |\n"
    "| LitBench | GPT-4o | 16 | 0 |\n"
    "| LitBench | Gemini-2.0-Flash | 9 | 1 |\n"
    "| LitBench | Gemma-3-27B-IT | 31 | 0 |\n"
    "| LitBench | Llama3-3-70B-Instruct | 14 | 0 |\n"
    "| LitBench | Qwen3-235B-A22B-Instruct | 29 | 5 |\n";

inline constexpr const char* kAgeMarkdown =
    "| Dataset | Judge Model | VSR (%) | Average CAR (%) |\n"
    "| --- | --- | --- | --- |\n"
    "| ELI5 | Claude-3-Haiku | 21 | 0.0 |\n"
    "| ELI5 | GPT-4o | 12 | 0.0 |\n"
    "| ELI5 | Gemini-2.0-Flash | 9 | 0.0 |\n"
    "| ELI5 | Gemma-3-27B-IT | 13 | 8.0 |\n"
    "| ELI5 | Llama3-3-70B-Instruct | 7 | 7.5 |\n"
    "| ELI5 | Qwen3-235B-A22B-Instruct | 17 | 0.0 |\n"
    "| LitBench | Claude-3-Haiku | 29 | 0.0 |\n"
    "| LitBench | GPT-4o | 8 | 0.0 |\n"
    "| LitBench | Gemini-2.0-Flash | 7 | 0.0 |\n"
    "| LitBench | Gemma-3-27B-IT | 31 | 0.0 |\n"
    "| LitBench | Llama3-3-70B-Instruct | 15 | 0.0 |\n"
    "| LitBench | Qwen3-235B-A22B-Instruct | 20 | 0.0 |\n";

inline constexpr const char* kSourceMarkdown =
    "| Dataset | Judge Model | VSR (%) HUMAN-UNKNOWN | VSR (%) HUMAN-LLM | VSR (%) LLM-UNKNOWN | "
    "Average CAR (%) |\n"
    "| --- | --- | --- | --- | --- | --- |\n"
    "| ELI5 | GPT-4o | 7 | 6 | 4 | 0 |\n"
    "| ELI5 | Gemini-2.0-Flash | 7 | 6 | 3 | 0 |\n"
    "| LitBench | GPT-4o | 14 | 16 | 4 | 0 |\n"
    "| LitBench | Gemini-2.0-Flash | 6 | 7 | 2 | 0 |\n";

}  // namespace fixtures
