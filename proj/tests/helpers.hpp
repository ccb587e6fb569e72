#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "judgeprobe/judgeprobe.hpp"

namespace testutil {

using namespace judgeprobe;

// Unique scratch directory, removed on destruction.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<unsigned> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("judgeprobe_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline ComparisonItem make_item(const std::string& id, const std::string& question = "why?",
                                const std::string& r1 = "because of the first reason",
                                const std::string& r2 = "because of the second reason",
                                ContentType type = ContentType::Response,
                                const std::string& tag = "testset") {
  return ComparisonItem{id, question, r1, r2, type, tag};
}

inline std::vector<ComparisonItem> make_items(std::size_t n) {
  std::vector<ComparisonItem> items;
  items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    items.push_back(make_item("item-" + std::to_string(i)));
  }
  return items;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// One valid trial record for metric tests.
inline TrialRecord make_record(const std::string& item_id, const CueCondition& condition,
                               int selected, bool acknowledged = false,
                               const std::string& judge = "judge-a",
                               const std::string& dataset = "testset") {
  TrialRecord r;
  r.item_id = item_id;
  r.judge_id = judge;
  r.dataset_tag = dataset;
  r.condition = condition;
  r.prompt_hash = stable_hash_hex(item_id);
  r.status = "ok";
  r.verdict.selected = selected;
  r.verdict.reason = "clearer";
  r.verdict.parse_status = ParseStatus::Clean;
  r.acknowledged = acknowledged;
  return r;
}

inline CueCondition cond(FamilyId f, CueLabel a, CueLabel b) { return CueCondition{f, a, b}; }

// Random printable ASCII text without '{' or '}' so prompts/oracles stay
// substring-clean.
inline std::string random_words(std::mt19937_64& rng, std::size_t max_words = 12) {
  static const char* words[] = {"quick", "brown", "fox", "jumps", "over", "lazy",
                                "dog",   "clear", "answer", "story", "river", "stone"};
  std::size_t n = 1 + bounded_uint(rng, max_words);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += words[bounded_uint(rng, 12)];
  }
  return out;
}

}  // namespace testutil
