#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "judgeprobe/common.hpp"
#include "judgeprobe/cues.hpp"

namespace judgeprobe {

class CorpusError : public Error {
 public:
  enum class Kind { Io, BadRecord, MissingField, DuplicateId, EmptyResponse, SampleTooLarge };
  Kind kind;
  CorpusError(Kind k, std::string msg) : Error(std::move(msg)), kind(k) {}
};

enum class CorpusFormat { Jsonl, Csv };

inline CorpusFormat parse_corpus_format(std::string_view s) {
  std::string n = to_lower(s);
  if (n == "jsonl") return CorpusFormat::Jsonl;
  if (n == "csv") return CorpusFormat::Csv;
  throw CorpusError(CorpusError::Kind::BadRecord, "unknown corpus format: " + std::string(s));
}

// One task input plus two candidate responses; the atomic unit of judgment.
struct ComparisonItem {
  std::string item_id;
  std::string task_input;
  std::string response_1;
  std::string response_2;
  ContentType content_type = ContentType::Response;
  std::string dataset_tag;

  bool operator==(const ComparisonItem&) const = default;
};

namespace detail {

// Id for records that do not carry one: stable hash of the content triple.
inline std::string derived_item_id(const std::string& task_input, const std::string& r1,
                                   const std::string& r2) {
  std::uint64_t h = stable_hash64(task_input);
  h = stable_hash64(r1, h ^ 0x9e3779b97f4a7c15ull);
  h = stable_hash64(r2, h ^ 0x9e3779b97f4a7c15ull);
  return to_hex(h);
}

inline void validate_and_append(std::vector<ComparisonItem>& items,
                                std::unordered_set<std::string>& seen, ComparisonItem item) {
  if (trim(item.response_1).empty() || trim(item.response_2).empty()) {
    throw CorpusError(CorpusError::Kind::EmptyResponse,
                      "empty response in item " + item.item_id);
  }
  if (!seen.insert(item.item_id).second) {
    throw CorpusError(CorpusError::Kind::DuplicateId, "duplicate item_id: " + item.item_id);
  }
  items.push_back(std::move(item));
}

// Minimal RFC-4180 reader: quoted fields, doubled quotes, CRLF or LF rows.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };
  while (i < text.size()) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
        } else {
          quoted = false;
          ++i;
        }
      } else {
        field += c;
        ++i;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
      ++i;
    } else if (c == ',') {
      end_field();
      ++i;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_row();
      i += 2;
    } else if (c == '\n') {
      end_row();
      ++i;
    } else {
      field += c;
      ++i;
    }
  }
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

}  // namespace detail

// Loads a pairwise corpus. JSONL records need task_input, response_1 and
// response_2; id is optional (derived from a stable content hash when
// absent). content_type / dataset_tag default from the arguments but a
// record may override them, so save/load round-trips preserve every field.
inline std::vector<ComparisonItem> load_corpus(const std::filesystem::path& path,
                                               CorpusFormat format,
                                               std::string dataset_tag = "",
                                               ContentType content_type = ContentType::Response) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CorpusError(CorpusError::Kind::Io, "cannot open corpus file: " + path.string());
  }
  if (dataset_tag.empty()) dataset_tag = path.stem().string();

  std::vector<ComparisonItem> items;
  std::unordered_set<std::string> seen;

  if (format == CorpusFormat::Jsonl) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        throw CorpusError(CorpusError::Kind::BadRecord,
                          path.string() + ":" + std::to_string(lineno) + ": not a JSON object");
      }
      auto field = [&](const char* name) -> std::string {
        if (!j.contains(name) || !j[name].is_string()) {
          throw CorpusError(CorpusError::Kind::MissingField,
                            path.string() + ": record " + std::to_string(lineno) +
                                " missing field '" + name + "'");
        }
        return j[name].get<std::string>();
      };
      ComparisonItem item;
      item.task_input = field("task_input");
      item.response_1 = field("response_1");
      item.response_2 = field("response_2");
      if (j.contains("id") && j["id"].is_string() && !j["id"].get<std::string>().empty()) {
        item.item_id = j["id"].get<std::string>();
      } else {
        item.item_id = detail::derived_item_id(item.task_input, item.response_1, item.response_2);
      }
      item.content_type = content_type;
      if (j.contains("content_type") && j["content_type"].is_string()) {
        item.content_type =
            to_lower(j["content_type"].get<std::string>()) == "story" ? ContentType::Story
                                                                      : ContentType::Response;
      }
      item.dataset_tag =
          j.contains("dataset_tag") && j["dataset_tag"].is_string()
              ? j["dataset_tag"].get<std::string>()
              : dataset_tag;
      detail::validate_and_append(items, seen, std::move(item));
    }
  } else {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto rows = detail::parse_csv(text);
    if (rows.empty()) return items;
    const auto& header = rows.front();
    auto col = [&](const std::string& name) -> std::size_t {
      auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) {
        throw CorpusError(CorpusError::Kind::MissingField,
                          path.string() + ": CSV header missing required column '" + name + "'");
      }
      return static_cast<std::size_t>(it - header.begin());
    };
    std::size_t c_id = col("id"), c_q = col("task_input"), c_r1 = col("response_1"),
                c_r2 = col("response_2");
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      auto cell = [&](std::size_t c, const char* name) -> std::string {
        if (c >= row.size()) {
          throw CorpusError(CorpusError::Kind::MissingField,
                            path.string() + ": record " + std::to_string(r) + " missing field '" +
                                name + "'");
        }
        return row[c];
      };
      ComparisonItem item;
      item.task_input = cell(c_q, "task_input");
      item.response_1 = cell(c_r1, "response_1");
      item.response_2 = cell(c_r2, "response_2");
      std::string id = c_id < row.size() ? row[c_id] : "";
      item.item_id = id.empty() ? detail::derived_item_id(item.task_input, item.response_1,
                                                          item.response_2)
                                : id;
      item.content_type = content_type;
      item.dataset_tag = dataset_tag;
      detail::validate_and_append(items, seen, std::move(item));
    }
  }
  return items;
}

inline void save_corpus(const std::vector<ComparisonItem>& items,
                        const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw CorpusError(CorpusError::Kind::Io, "cannot write corpus file: " + path.string());
  }
  for (const auto& item : items) {
    nlohmann::json j{
        {"id", item.item_id},
        {"task_input", item.task_input},
        {"response_1", item.response_1},
        {"response_2", item.response_2},
        {"content_type", item.content_type == ContentType::Story ? "story" : "response"},
        {"dataset_tag", item.dataset_tag},
    };
    out << j.dump() << '\n';
  }
}

// Keeps items whose responses are balanced by approximate length:
// |len1 - len2| / max(len1, len2) <= max_rel_diff, lengths in whitespace
// tokens. Symmetric in the two responses; order preserved; idempotent.
inline std::vector<ComparisonItem> filter_length_balanced(const std::vector<ComparisonItem>& items,
                                                          double max_rel_diff = 0.20) {
  std::vector<ComparisonItem> kept;
  kept.reserve(items.size());
  for (const auto& item : items) {
    double len1 = static_cast<double>(token_count(item.response_1));
    double len2 = static_cast<double>(token_count(item.response_2));
    double longer = std::max(len1, len2);
    if (longer == 0.0) continue;  // unreachable after load validation
    double rel = std::abs(len1 - len2) / longer;
    if (rel <= max_rel_diff) kept.push_back(item);
  }
  return kept;
}

// Seeded uniform draw of n items without replacement. The draw is the first
// n steps of a Fisher-Yates permutation, so for a fixed seed the result for
// n is a prefix of the result for n+1, and identical inputs give identical
// output on every platform.
inline std::vector<ComparisonItem> subsample(const std::vector<ComparisonItem>& items,
                                             std::size_t n, std::uint64_t seed) {
  if (n > items.size()) {
    throw CorpusError(CorpusError::Kind::SampleTooLarge,
                      "subsample: requested " + std::to_string(n) + " of " +
                          std::to_string(items.size()) + " items");
  }
  std::vector<std::size_t> idx(items.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(bounded_uint(rng, idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  std::vector<ComparisonItem> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(items[idx[i]]);
  return out;
}

}  // namespace judgeprobe
