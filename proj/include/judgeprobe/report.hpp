#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "judgeprobe/common.hpp"
#include "judgeprobe/cues.hpp"
#include "judgeprobe/metrics.hpp"

namespace judgeprobe {

class ReportError : public Error {
 public:
  enum class Kind { NoCells, MixedPairs, Io, BadReport };
  Kind kind;
  ReportError(Kind k, std::string msg) : Error(std::move(msg)), kind(k) {}
};

enum class TableFormat { Markdown, Csv, Json };

inline TableFormat parse_table_format(std::string_view s) {
  std::string n = to_lower(s);
  if (n == "markdown" || n == "md") return TableFormat::Markdown;
  if (n == "csv") return TableFormat::Csv;
  if (n == "json") return TableFormat::Json;
  throw ReportError(ReportError::Kind::BadReport, "unknown table format: " + std::string(s));
}

// Run metadata sufficient to replay the audit from cached exchanges.
struct RunMeta {
  std::string run_id;
  std::uint64_t seed = 0;
  std::size_t subsample_n = 0;
  bool frozen_time = false;
  std::string lexicon_version;
  std::string prompt_template_version;
  std::string cue_template_version;
  std::string cue_placement;
  nlohmann::json judges = nlohmann::json::array();   // sanitized judge configs
  nlohmann::json corpora = nlohmann::json::array();  // corpus sources

  bool operator==(const RunMeta&) const = default;
};

struct AuditReport {
  RunMeta run;
  std::string generated_at;
  std::vector<CellReport> cells;

  bool operator==(const AuditReport&) const = default;
};

// ---------------- serialization ----------------

inline nlohmann::json cell_to_json(const CellReport& c) {
  return nlohmann::json{
      {"dataset_tag", c.dataset_tag},
      {"judge_id", c.judge_id},
      {"family", std::string(family_name(c.family))},
      {"label_a", std::string(label_name(c.label_a))},
      {"label_b", std::string(label_name(c.label_b))},
      {"n_valid_ab", c.n_valid_ab},
      {"n_valid_ba", c.n_valid_ba},
      {"n_paired", c.n_paired},
      {"rate_ab", c.rate_ab},
      {"rate_ba", c.rate_ba},
      {"vsr_signed", c.vsr_signed},
      {"vsr_flip", c.vsr_flip},
      {"car_avg", c.car_avg},
      {"failure_rate", c.failure_rate},
      {"ci_low", c.ci_low},
      {"ci_high", c.ci_high},
      {"lexicon_version", c.lexicon_version},
  };
}

inline CellReport cell_from_json(const nlohmann::json& j) {
  CellReport c;
  c.dataset_tag = j.at("dataset_tag").get<std::string>();
  c.judge_id = j.at("judge_id").get<std::string>();
  c.family = parse_family(j.at("family").get<std::string>());
  c.label_a = parse_label(j.at("label_a").get<std::string>());
  c.label_b = parse_label(j.at("label_b").get<std::string>());
  c.n_valid_ab = j.at("n_valid_ab").get<std::size_t>();
  c.n_valid_ba = j.at("n_valid_ba").get<std::size_t>();
  c.n_paired = j.at("n_paired").get<std::size_t>();
  c.rate_ab = j.at("rate_ab").get<double>();
  c.rate_ba = j.at("rate_ba").get<double>();
  c.vsr_signed = j.at("vsr_signed").get<double>();
  c.vsr_flip = j.at("vsr_flip").get<double>();
  c.car_avg = j.at("car_avg").get<double>();
  c.failure_rate = j.at("failure_rate").get<double>();
  c.ci_low = j.at("ci_low").get<double>();
  c.ci_high = j.at("ci_high").get<double>();
  c.lexicon_version = j.at("lexicon_version").get<std::string>();
  return c;
}

inline nlohmann::json report_to_json(const AuditReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) cells.push_back(cell_to_json(c));
  return nlohmann::json{
      {"run",
       {
           {"run_id", r.run.run_id},
           {"seed", r.run.seed},
           {"subsample_n", r.run.subsample_n},
           {"frozen_time", r.run.frozen_time},
           {"lexicon_version", r.run.lexicon_version},
           {"prompt_template_version", r.run.prompt_template_version},
           {"cue_template_version", r.run.cue_template_version},
           {"cue_placement", r.run.cue_placement},
           {"judges", r.run.judges},
           {"corpora", r.run.corpora},
       }},
      {"generated_at", r.generated_at},
      {"cells", cells},
  };
}

inline AuditReport report_from_json(const nlohmann::json& j) {
  AuditReport r;
  const auto& run = j.at("run");
  r.run.run_id = run.at("run_id").get<std::string>();
  r.run.seed = run.at("seed").get<std::uint64_t>();
  r.run.subsample_n = run.at("subsample_n").get<std::size_t>();
  r.run.frozen_time = run.at("frozen_time").get<bool>();
  r.run.lexicon_version = run.at("lexicon_version").get<std::string>();
  r.run.prompt_template_version = run.at("prompt_template_version").get<std::string>();
  r.run.cue_template_version = run.at("cue_template_version").get<std::string>();
  r.run.cue_placement = run.at("cue_placement").get<std::string>();
  r.run.judges = run.at("judges");
  r.run.corpora = run.at("corpora");
  r.generated_at = j.at("generated_at").get<std::string>();
  for (const auto& c : j.at("cells")) r.cells.push_back(cell_from_json(c));
  return r;
}

inline void save_report(const AuditReport& r, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ReportError(ReportError::Kind::Io, "cannot write report: " + path.string());
  out << report_to_json(r).dump(2) << '\n';
}

inline AuditReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReportError(ReportError::Kind::Io, "cannot open report: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ReportError(ReportError::Kind::BadReport, "report is not valid JSON: " + path.string());
  }
  return report_from_json(j);
}

// ---------------- number formatting ----------------

namespace detail {

// Round half away from zero to one decimal, as a scaled integer (tenths).
inline long long scaled_tenths(double v) { return std::llround(v * 10.0); }

inline std::string format_tenths(long long tenths, bool one_decimal) {
  if (!one_decimal) return std::to_string(tenths / 10);
  std::string out = tenths < 0 ? "-" : "";
  long long a = std::llabs(tenths);
  out += std::to_string(a / 10);
  out += '.';
  out += std::to_string(a % 10);
  return out;
}

// A column prints integers unless any of its values is non-integral after
// rounding, in which case every value gets one decimal.
inline std::vector<std::string> format_column(const std::vector<double>& values) {
  std::vector<long long> scaled;
  scaled.reserve(values.size());
  bool one_decimal = false;
  for (double v : values) {
    long long s = scaled_tenths(v);
    if (s % 10 != 0) one_decimal = true;
    scaled.push_back(s);
  }
  std::vector<std::string> out;
  out.reserve(values.size());
  for (long long s : scaled) out.push_back(format_tenths(s, one_decimal));
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

inline std::string render_rows(const std::vector<std::string>& header,
                               const std::vector<std::vector<std::string>>& rows,
                               TableFormat format) {
  std::string out;
  if (format == TableFormat::Markdown) {
    out += "|";
    for (const auto& h : header) out += " " + h + " |";
    out += "\n|";
    for (std::size_t i = 0; i < header.size(); ++i) out += " --- |";
    out += "\n";
    for (const auto& row : rows) {
      out += "|";
      for (const auto& cell : row) out += " " + cell + " |";
      out += "\n";
    }
  } else {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out += ",";
      out += csv_field(header[i]);
    }
    out += "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out += ",";
        out += csv_field(row[i]);
      }
      out += "\n";
    }
  }
  return out;
}

inline std::string pair_header(CueLabel a, CueLabel b) {
  std::string out;
  for (char c : label_name(a)) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  out += '-';
  for (char c : label_name(b)) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace detail

// ---------------- table emitters ----------------

// Paper-layout table for one family: Dataset | Judge Model | VSR (%) |
// Average CAR (%), rows sorted by (dataset, judge). The selected cells must
// share a single label pair; pass `pair` to pick one when the report holds
// several (multi-pair families belong to emit_multipair_table).
inline std::string emit_table(const AuditReport& report, FamilyId family, TableFormat format,
                              std::optional<std::pair<CueLabel, CueLabel>> pair = std::nullopt) {
  std::vector<const CellReport*> cells;
  for (const auto& c : report.cells) {
    if (c.family != family) continue;
    if (pair && !(c.label_a == pair->first && c.label_b == pair->second)) continue;
    cells.push_back(&c);
  }
  if (cells.empty()) {
    throw ReportError(ReportError::Kind::NoCells,
                      "no cells for family " + std::string(family_name(family)));
  }
  std::set<std::pair<CueLabel, CueLabel>> pairs;
  for (const auto* c : cells) pairs.insert({c->label_a, c->label_b});
  if (pairs.size() > 1) {
    throw ReportError(ReportError::Kind::MixedPairs,
                      "family " + std::string(family_name(family)) +
                          " has several label pairs; pass one or use emit_multipair_table");
  }
  std::sort(cells.begin(), cells.end(), [](const CellReport* x, const CellReport* y) {
    return std::tie(x->dataset_tag, x->judge_id) < std::tie(y->dataset_tag, y->judge_id);
  });

  if (format == TableFormat::Json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto* c : cells) arr.push_back(cell_to_json(*c));
    return arr.dump(2) + "\n";
  }

  std::vector<double> vsr, car;
  for (const auto* c : cells) {
    vsr.push_back(c->vsr_signed);
    car.push_back(c->car_avg);
  }
  auto vsr_s = detail::format_column(vsr);
  auto car_s = detail::format_column(car);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    rows.push_back({cells[i]->dataset_tag, cells[i]->judge_id, vsr_s[i], car_s[i]});
  }
  return detail::render_rows({"Dataset", "Judge Model", "VSR (%)", "Average CAR (%)"}, rows,
                             format);
}

// Appendix-layout Source table: one VSR column per provenance contrast plus
// a single CAR column averaged over directions and contrasts.
inline std::string emit_multipair_table(const AuditReport& report,
                                        FamilyId family = FamilyId::Source,
                                        TableFormat format = TableFormat::Markdown) {
  if (family != FamilyId::Source) {
    throw ReportError(ReportError::Kind::NoCells,
                      "multipair table only applies to the Source family");
  }
  std::vector<const CellReport*> cells;
  for (const auto& c : report.cells) {
    if (c.family == FamilyId::Source) cells.push_back(&c);
  }
  if (cells.empty()) {
    throw ReportError(ReportError::Kind::NoCells, "no cells for family Source");
  }

  // Pair columns in the canonical contrast order, restricted to what the
  // report actually contains.
  std::vector<std::pair<CueLabel, CueLabel>> columns;
  for (auto p : label_pairs(FamilyId::Source, /*include_expert=*/true)) {
    for (const auto* c : cells) {
      if (c->label_a == p.first && c->label_b == p.second) {
        columns.push_back(p);
        break;
      }
    }
  }

  std::vector<std::pair<std::string, std::string>> groups;  // (dataset, judge)
  for (const auto* c : cells) {
    std::pair<std::string, std::string> g{c->dataset_tag, c->judge_id};
    if (std::find(groups.begin(), groups.end(), g) == groups.end()) groups.push_back(g);
  }
  std::sort(groups.begin(), groups.end());

  auto find_cell = [&cells](const std::pair<std::string, std::string>& g,
                            std::pair<CueLabel, CueLabel> p) -> const CellReport* {
    for (const auto* c : cells) {
      if (c->dataset_tag == g.first && c->judge_id == g.second && c->label_a == p.first &&
          c->label_b == p.second) {
        return c;
      }
    }
    return nullptr;
  };

  if (format == TableFormat::Json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto* c : cells) arr.push_back(cell_to_json(*c));
    return arr.dump(2) + "\n";
  }

  // Column-wise formatting: each VSR column and the CAR column decide
  // integer vs one-decimal rendering independently.
  std::vector<std::vector<std::string>> formatted_vsr(columns.size());
  for (std::size_t p = 0; p < columns.size(); ++p) {
    std::vector<double> col;
    for (const auto& g : groups) {
      const CellReport* c = find_cell(g, columns[p]);
      col.push_back(c ? c->vsr_signed : 0.0);
    }
    formatted_vsr[p] = detail::format_column(col);
    for (std::size_t r = 0; r < groups.size(); ++r) {
      if (!find_cell(groups[r], columns[p])) formatted_vsr[p][r] = "";
    }
  }
  std::vector<double> car;
  for (const auto& g : groups) {
    double sum = 0.0;
    int n = 0;
    for (const auto& p : columns) {
      if (const CellReport* c = find_cell(g, p)) {
        sum += c->car_avg;
        ++n;
      }
    }
    car.push_back(n ? sum / n : 0.0);
  }
  auto car_s = detail::format_column(car);

  std::vector<std::string> header = {"Dataset", "Judge Model"};
  for (const auto& p : columns) {
    header.push_back("VSR (%) " + detail::pair_header(p.first, p.second));
  }
  header.push_back("Average CAR (%)");

  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 0; r < groups.size(); ++r) {
    std::vector<std::string> row = {groups[r].first, groups[r].second};
    for (std::size_t p = 0; p < columns.size(); ++p) row.push_back(formatted_vsr[p][r]);
    row.push_back(car_s[r]);
    rows.push_back(std::move(row));
  }
  return detail::render_rows(header, rows, format);
}

// Writes <family>.md/.csv/.json for every family present plus report.json.
// Source gets the multipair layout for the text formats.
inline void write_report_files(const AuditReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::set<FamilyId> families;
  for (const auto& c : report.cells) families.insert(c.family);
  for (FamilyId f : families) {
    std::string base = to_lower(family_name(f));
    auto write = [&dir](const std::string& name, const std::string& text) {
      std::ofstream out(dir / name, std::ios::binary);
      if (!out) throw ReportError(ReportError::Kind::Io, "cannot write table: " + name);
      out << text;
    };
    if (f == FamilyId::Source) {
      write(base + ".md", emit_multipair_table(report, f, TableFormat::Markdown));
      write(base + ".csv", emit_multipair_table(report, f, TableFormat::Csv));
      write(base + ".json", emit_multipair_table(report, f, TableFormat::Json));
    } else {
      write(base + ".md", emit_table(report, f, TableFormat::Markdown));
      write(base + ".csv", emit_table(report, f, TableFormat::Csv));
      write(base + ".json", emit_table(report, f, TableFormat::Json));
    }
  }
  save_report(report, dir / "report.json");
}

}  // namespace judgeprobe
