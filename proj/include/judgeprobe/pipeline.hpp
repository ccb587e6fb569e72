#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "judgeprobe/acknowledgment.hpp"
#include "judgeprobe/common.hpp"
#include "judgeprobe/config.hpp"
#include "judgeprobe/corpus.hpp"
#include "judgeprobe/cues.hpp"
#include "judgeprobe/judge_client.hpp"
#include "judgeprobe/metrics.hpp"
#include "judgeprobe/prompting.hpp"
#include "judgeprobe/report.hpp"
#include "judgeprobe/trial.hpp"
#include "judgeprobe/verdict_parser.hpp"

namespace judgeprobe {

// ---------------- condition generation ----------------

inline std::vector<std::pair<CueLabel, CueLabel>> pairs_for_family(const RunConfig& cfg,
                                                                   FamilyId family) {
  if (family == FamilyId::Source && !cfg.source_pairs.empty()) return cfg.source_pairs;
  return label_pairs(family, cfg.include_expert);
}

// All conditions of one audit, in the order trials run: optional cue-free
// baseline first, then per family (config order) per label pair the two
// complementary swap conditions.
inline std::vector<std::optional<CueCondition>> generate_conditions(const RunConfig& cfg) {
  std::vector<std::optional<CueCondition>> conditions;
  if (cfg.include_baseline) conditions.push_back(std::nullopt);
  for (FamilyId family : cfg.families) {
    for (const auto& [a, b] : pairs_for_family(cfg, family)) {
      auto [ab, ba] = swap_conditions(family, a, b);
      conditions.push_back(ab);
      conditions.push_back(ba);
    }
  }
  return conditions;
}

// ---------------- corpus preparation ----------------

struct PreparedCorpus {
  CorpusSource source;
  std::vector<ComparisonItem> items;  // loaded -> length-balanced -> subsampled
};

inline std::vector<PreparedCorpus> prepare_corpora(const RunConfig& cfg) {
  if (cfg.corpora.empty()) {
    throw ConfigError(ConfigError::Kind::Invalid, "config lists no corpora");
  }
  std::vector<PreparedCorpus> prepared;
  for (const auto& src : cfg.corpora) {
    if (!std::filesystem::exists(src.path)) {
      throw ConfigError(ConfigError::Kind::Invalid,
                        "corpus file does not exist: " + src.path.string());
    }
    auto items = load_corpus(src.path, src.format, src.dataset_tag, src.content_type);
    items = filter_length_balanced(items, cfg.max_rel_length_diff);
    if (cfg.subsample_n > items.size()) {
      throw CorpusError(CorpusError::Kind::SampleTooLarge,
                        "subsample_n=" + std::to_string(cfg.subsample_n) + " exceeds " +
                            std::to_string(items.size()) + " balanced items in " +
                            src.path.string());
    }
    items = subsample(items, cfg.subsample_n, cfg.seed);
    prepared.push_back({src, std::move(items)});
  }
  return prepared;
}

// ---------------- scoring ----------------

namespace detail {

// Canonical orientation of a label pair: the enumeration order of
// label_pairs (so positive shifts always favor the attested first label),
// falling back to enum order for custom pairs.
inline std::pair<CueLabel, CueLabel> canonical_pair(FamilyId family, CueLabel x, CueLabel y) {
  for (const auto& p : label_pairs(family, /*include_expert=*/true)) {
    if ((p.first == x && p.second == y) || (p.first == y && p.second == x)) return p;
  }
  return x < y ? std::pair{x, y} : std::pair{y, x};
}

inline int pair_index(FamilyId family, const std::pair<CueLabel, CueLabel>& pair) {
  auto pairs = label_pairs(family, /*include_expert=*/true);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i] == pair) return static_cast<int>(i);
  }
  return 99;
}

inline int family_index(FamilyId f) {
  for (std::size_t i = 0; i < kAllFamilies.size(); ++i) {
    if (kAllFamilies[i] == f) return static_cast<int>(i);
  }
  return 99;
}

}  // namespace detail

struct ScoreStats {
  std::size_t n_trials = 0;
  std::size_t n_failed = 0;   // errored or unparseable trials
  std::size_t n_skipped_cells = 0;  // cells with an empty direction
};

// Recomputes every metric from trial records. Acknowledgment flags are
// re-derived from the stored reasons with the given lexicons, so scoring
// after a lexicon update picks up the new patterns; with unchanged inputs
// the report reproduces the original run byte for byte.
inline AuditReport score_trials(const std::vector<TrialRecord>& trials,
                                const AckLexiconSet& lexicons, RunMeta meta,
                                const BootstrapOptions& bootstrap_base,
                                ScoreStats* stats = nullptr) {
  struct Group {
    std::string dataset;
    std::string judge;
    FamilyId family = FamilyId::Temporal;
    CueLabel a = CueLabel::New;
    CueLabel b = CueLabel::Old;
    std::vector<TrialRecord> dir_ab;
    std::vector<TrialRecord> dir_ba;
  };
  std::map<std::string, Group> groups;
  ScoreStats local;

  for (const TrialRecord& original : trials) {
    ++local.n_trials;
    TrialRecord r = original;
    if (r.condition && trial_valid(r)) {
      auto [acked, spans] = detect_ack(r.verdict.reason, r.condition->family, lexicons);
      r.acknowledged = acked;
      r.matched_spans = std::move(spans);
    }
    if (!trial_valid(r)) ++local.n_failed;
    if (!r.condition) continue;  // baseline trials carry no cell

    auto [a, b] = detail::canonical_pair(r.condition->family, r.condition->label_r1,
                                         r.condition->label_r2);
    char key[160];
    std::snprintf(key, sizeof(key), "%s\x1f%s\x1f%02d\x1f%02d", r.dataset_tag.c_str(),
                  r.judge_id.c_str(), detail::family_index(r.condition->family),
                  detail::pair_index(r.condition->family, {a, b}));
    Group& g = groups[key];
    g.dataset = r.dataset_tag;
    g.judge = r.judge_id;
    g.family = r.condition->family;
    g.a = a;
    g.b = b;
    if (r.condition->label_r1 == a) {
      g.dir_ab.push_back(std::move(r));
    } else {
      g.dir_ba.push_back(std::move(r));
    }
  }

  AuditReport report;
  meta.lexicon_version = lexicons.version;
  report.run = std::move(meta);
  report.generated_at = report.run.frozen_time ? kFrozenTimestamp : iso_utc_now();
  for (auto& [key, g] : groups) {
    BootstrapOptions bs = bootstrap_base;
    bs.seed = bootstrap_base.seed ^ stable_hash64(key);
    try {
      report.cells.push_back(build_cell(g.dir_ab, g.dir_ba, g.dataset, g.judge, g.family, g.a,
                                        g.b, lexicons.version, bs));
    } catch (const MetricsError&) {
      ++local.n_skipped_cells;  // a direction had no valid records
    }
  }
  if (stats) *stats = local;
  return report;
}

// ---------------- analytic expectations for the simulated judge ----------------

struct ExpectedCell {
  std::string dataset_tag;
  FamilyId family = FamilyId::Temporal;
  CueLabel label_a = CueLabel::New;
  CueLabel label_b = CueLabel::Old;
  double expected_vsr_signed = 0.0;
  double expected_vsr_flip = 0.0;
};

// Brute-force enumeration of the simulated judge's utility rule over the
// prepared items: independent of the query/parse/metric path, so it serves
// as the oracle the measured numbers are checked against.
inline std::vector<ExpectedCell> expected_sim_cells(const std::vector<PreparedCorpus>& corpora,
                                                    const RunConfig& cfg,
                                                    const SimJudgeParams& params) {
  auto bias_of = [&params](CueLabel l) {
    auto it = params.bias.find(l);
    return it == params.bias.end() ? 0.0 : it->second;
  };
  std::vector<ExpectedCell> out;
  for (const auto& corpus : corpora) {
    for (FamilyId family : cfg.families) {
      for (const auto& [a, b] : pairs_for_family(cfg, family)) {
        std::size_t sel1_ab = 0, sel1_ba = 0, flips = 0, n = 0;
        for (const auto& item : corpus.items) {
          auto gap_it = params.quality_gap.find(item.item_id);
          if (gap_it == params.quality_gap.end()) continue;
          double gap = gap_it->second;
          bool ab = gap + bias_of(a) >= bias_of(b);
          bool ba = gap + bias_of(b) >= bias_of(a);
          ++n;
          if (ab) ++sel1_ab;
          if (ba) ++sel1_ba;
          if (ab != ba) ++flips;
        }
        if (n == 0) continue;
        ExpectedCell cell;
        cell.dataset_tag = corpus.source.dataset_tag;
        cell.family = family;
        cell.label_a = a;
        cell.label_b = b;
        cell.expected_vsr_signed =
            100.0 * (static_cast<double>(sel1_ab) - static_cast<double>(sel1_ba)) /
            static_cast<double>(n);
        cell.expected_vsr_flip = 100.0 * static_cast<double>(flips) / static_cast<double>(n);
        out.push_back(std::move(cell));
      }
    }
  }
  return out;
}

inline nlohmann::json expected_cells_to_json(const std::vector<ExpectedCell>& cells) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : cells) {
    arr.push_back({
        {"dataset_tag", c.dataset_tag},
        {"family", std::string(family_name(c.family))},
        {"label_a", std::string(label_name(c.label_a))},
        {"label_b", std::string(label_name(c.label_b))},
        {"expected_vsr_signed", c.expected_vsr_signed},
        {"expected_vsr_flip", c.expected_vsr_flip},
    });
  }
  return arr;
}

// ---------------- audit execution ----------------

struct AuditOutcome {
  AuditReport report;
  std::vector<TrialRecord> trials;
  std::size_t n_failed = 0;
  std::filesystem::path run_dir;
};

inline RunMeta make_run_meta(const RunConfig& cfg, const AckLexiconSet& lexicons,
                             const CueTemplateTable& cue_table) {
  RunMeta meta;
  meta.run_id = cfg.run_id;
  meta.seed = cfg.seed;
  meta.subsample_n = cfg.subsample_n;
  meta.frozen_time = cfg.frozen_time;
  meta.lexicon_version = lexicons.version;
  meta.prompt_template_version = kPromptTemplateVersion;
  meta.cue_template_version = cue_table.version;
  meta.cue_placement = std::string(cue_placement_name(cfg.cue_placement));
  meta.judges = nlohmann::json::array();
  for (const auto& j : cfg.judges) meta.judges.push_back(judge_to_json(j));
  for (const auto& c : cfg.corpora) {
    meta.corpora.push_back({
        {"path", c.path.string()},
        {"format", c.format == CorpusFormat::Csv ? "csv" : "jsonl"},
        {"dataset_tag", c.dataset_tag},
        {"content_type", c.content_type == ContentType::Story ? "story" : "response"},
    });
  }
  return meta;
}

// Full audit: ingest -> conditions -> trials -> metrics -> report files.
// With sim_override set, the configured judges are replaced by a single
// simulated judge driven by those parameters (the cmd_simulate path).
inline AuditOutcome run_audit(const RunConfig& cfg,
                              const std::optional<SimParamsSpec>& sim_override = std::nullopt) {
  RunConfig effective = cfg;
  if (sim_override) {
    JudgeConfig sim;
    sim.judge_id = "sim";
    sim.kind = JudgeKind::Simulated;
    sim.model_name = "sim-judge";
    effective.judges = {sim};
  }
  if (effective.judges.empty()) {
    throw ConfigError(ConfigError::Kind::Invalid, "config lists no judges");
  }

  auto prepared = prepare_corpora(effective);
  auto conditions = generate_conditions(effective);

  const AckLexiconSet lexicons =
      effective.lexicon_path ? load_lexicons(*effective.lexicon_path) : default_lexicons();
  const CueTemplateTable cue_table = effective.cue_template_path
                                         ? load_cue_templates(*effective.cue_template_path)
                                         : default_cue_templates();

  std::filesystem::path run_dir = effective.out_dir / effective.run_id;
  std::filesystem::create_directories(run_dir);
  auto store = std::make_shared<ExchangeStore>(run_dir / "exchanges.jsonl");

  std::vector<ComparisonItem> all_items;
  for (const auto& corpus : prepared) {
    all_items.insert(all_items.end(), corpus.items.begin(), corpus.items.end());
  }

  TrialRunOptions trial_opts;
  trial_opts.placement = effective.cue_placement;
  trial_opts.cue_table = &cue_table;
  trial_opts.lexicons = &lexicons;

  std::vector<TrialRecord> trials;
  for (const auto& judge_cfg : effective.judges) {
    JudgeClient client(judge_cfg, store, effective.frozen_time);
    if (judge_cfg.kind == JudgeKind::Simulated) {
      SimParamsSpec spec;
      if (sim_override) {
        spec = *sim_override;
      } else if (!judge_cfg.params_path.empty()) {
        spec = load_sim_params(judge_cfg.params_path);
      } else {
        throw ConfigError(ConfigError::Kind::ParamsInvalid,
                          "simulated judge " + judge_cfg.judge_id + " needs params_path");
      }
      client.set_sim_params(resolve_sim_params(spec, all_items));
    }
    for (const auto& corpus : prepared) {
      auto records = run_trials(client, corpus.items, conditions, trial_opts);
      trials.insert(trials.end(), std::make_move_iterator(records.begin()),
                    std::make_move_iterator(records.end()));
    }
  }
  save_trials(trials, run_dir / "trials.jsonl");

  BootstrapOptions bootstrap = effective.bootstrap;
  bootstrap.seed = effective.seed;
  ScoreStats stats;
  AuditReport report = score_trials(trials, lexicons, make_run_meta(effective, lexicons, cue_table),
                                    bootstrap, &stats);
  write_report_files(report, run_dir);
  {
    std::ofstream out(run_dir / "effective_config.json", std::ios::binary);
    out << run_config_to_json(effective).dump(2) << '\n';
  }

  AuditOutcome outcome;
  outcome.report = std::move(report);
  outcome.trials = std::move(trials);
  outcome.n_failed = stats.n_failed;
  outcome.run_dir = run_dir;
  return outcome;
}

// ---------------- command entry points ----------------
// Exit codes: 0 clean, 1 fatal, 2 completed with partial failure.

inline int cmd_run(const RunConfig& cfg, std::ostream& log, std::ostream& err) {
  try {
    AuditOutcome outcome = run_audit(cfg);
    log << "run " << cfg.run_id << ": " << outcome.trials.size() << " trials, "
        << outcome.n_failed << " failed, " << outcome.report.cells.size() << " cells -> "
        << outcome.run_dir.string() << "\n";
    if (outcome.n_failed > 0) {
      std::map<std::string, std::size_t> by_judge;
      for (const auto& t : outcome.trials) {
        if (!trial_valid(t)) ++by_judge[t.judge_id];
      }
      for (const auto& [judge, n] : by_judge) {
        err << "judge " << judge << ": " << n << " failed trials\n";
      }
      return 2;
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_score(const std::filesystem::path& records_path, const RunConfig& cfg,
                     std::ostream& log, std::ostream& err) {
  try {
    auto trials = load_trials(records_path);
    const AckLexiconSet lexicons =
        cfg.lexicon_path ? load_lexicons(*cfg.lexicon_path) : default_lexicons();
    const CueTemplateTable cue_table =
        cfg.cue_template_path ? load_cue_templates(*cfg.cue_template_path)
                              : default_cue_templates();
    BootstrapOptions bootstrap = cfg.bootstrap;
    bootstrap.seed = cfg.seed;
    ScoreStats stats;
    AuditReport report =
        score_trials(trials, lexicons, make_run_meta(cfg, lexicons, cue_table), bootstrap, &stats);
    std::filesystem::path run_dir = cfg.out_dir / cfg.run_id;
    write_report_files(report, run_dir);
    log << "score: " << stats.n_trials << " trials, " << stats.n_failed << " failed, "
        << report.cells.size() << " cells -> " << run_dir.string() << "\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_simulate(const std::filesystem::path& params_path, const RunConfig& cfg,
                        std::ostream& log, std::ostream& err) {
  try {
    SimParamsSpec spec = load_sim_params(params_path);
    auto prepared = prepare_corpora(cfg);
    std::vector<ComparisonItem> all_items;
    for (const auto& corpus : prepared) {
      all_items.insert(all_items.end(), corpus.items.begin(), corpus.items.end());
    }
    SimJudgeParams resolved = resolve_sim_params(spec, all_items);
    auto expected = expected_sim_cells(prepared, cfg, resolved);
    for (const auto& c : expected) {
      char line[256];
      std::snprintf(line, sizeof(line), "expected vsr_signed %s %s %s-%s: %.4f (flip %.4f)",
                    c.dataset_tag.c_str(), std::string(family_name(c.family)).c_str(),
                    std::string(label_name(c.label_a)).c_str(),
                    std::string(label_name(c.label_b)).c_str(), c.expected_vsr_signed,
                    c.expected_vsr_flip);
      log << line << "\n";
    }

    SimParamsSpec resolved_spec;
    resolved_spec.params = resolved;
    AuditOutcome outcome = run_audit(cfg, resolved_spec);
    {
      std::ofstream out(outcome.run_dir / "expected.json", std::ios::binary);
      out << expected_cells_to_json(expected).dump(2) << '\n';
    }
    log << "simulate " << cfg.run_id << ": " << outcome.trials.size() << " trials, "
        << outcome.n_failed << " failed -> " << outcome.run_dir.string() << "\n";
    return outcome.n_failed > 0 ? 2 : 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int cmd_report(const std::filesystem::path& report_path, TableFormat format,
                      const std::optional<std::filesystem::path>& out_dir, std::ostream& log,
                      std::ostream& err) {
  try {
    AuditReport report = load_report(report_path);
    if (out_dir) {
      write_report_files(report, *out_dir);
      log << "report files -> " << out_dir->string() << "\n";
      return 0;
    }
    std::set<FamilyId> families;
    for (const auto& c : report.cells) families.insert(c.family);
    for (FamilyId f : families) {
      log << "## " << family_name(f) << "\n";
      if (f == FamilyId::Source) {
        log << emit_multipair_table(report, f, format) << "\n";
      } else {
        log << emit_table(report, f, format) << "\n";
      }
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace judgeprobe
