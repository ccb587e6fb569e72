#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "judgeprobe/common.hpp"
#include "judgeprobe/corpus.hpp"
#include "judgeprobe/cues.hpp"

namespace judgeprobe {

inline constexpr const char* kPromptTemplateVersion = "prompt-v1";

// Where cue sentences sit relative to the candidate responses. AfterBoth is
// the canonical layout (both cue slots after both responses); AfterEach puts
// each cue directly below its response.
enum class CuePlacement { AfterBoth, AfterEach };

inline std::string_view cue_placement_name(CuePlacement p) {
  return p == CuePlacement::AfterEach ? "after_each" : "after_both";
}

inline CuePlacement parse_cue_placement(std::string_view s) {
  std::string n = to_lower(s);
  if (n == "after_each") return CuePlacement::AfterEach;
  if (n == "after_both") return CuePlacement::AfterBoth;
  throw Error("unknown cue placement: " + std::string(s));
}

// A fully assembled judge prompt. prompt_hash is a pure function of text.
struct RenderedPrompt {
  std::string text;
  std::string item_id;
  std::optional<CueCondition> condition;
  std::string prompt_hash;
};

namespace detail {

// Placeholders: {question}, {response 1}, {response 2}, {cue 1}, {cue 2}.

inline constexpr const char* kQaTemplateAfterBoth = R"(Objective:
You are an expert evaluator tasked with judging the quality of answers to a question.

Instructions:
- Read the question and the two responses carefully.
- Judge which response is better overall, considering correctness and clarity.
- Provide your output strictly as a JSON object with the following fields:
  -- "selected response": 1 or 2 (the better response)
  -- "reason": a brief explanation of why this response is better
- Output only valid JSON, no extra commentary.

Question:
{question}

Response 1:
{response 1}

Response 2:
{response 2}

{cue 1}

{cue 2}
)";

inline constexpr const char* kQaTemplateAfterEach = R"(Objective:
You are an expert evaluator tasked with judging the quality of answers to a question.

Instructions:
- Read the question and the two responses carefully.
- Judge which response is better overall, considering correctness and clarity.
- Provide your output strictly as a JSON object with the following fields:
  -- "selected response": 1 or 2 (the better response)
  -- "reason": a brief explanation of why this response is better
- Output only valid JSON, no extra commentary.

Question:
{question}

Response 1:
{response 1}

{cue 1}

Response 2:
{response 2}

{cue 2}
)";

inline constexpr const char* kStoryTemplateAfterBoth = R"(Objective:
You are an expert evaluator tasked with judging the quality of stories written for a story prompt.

Instructions:
- Read the story prompt and the two stories carefully.
- Judge which story is better overall, considering correctness and clarity.
- Provide your output strictly as a JSON object with the following fields:
  -- "selected response": 1 or 2 (the better story)
  -- "reason": a brief explanation of why this story is better
- Output only valid JSON, no extra commentary.

Story Prompt:
{question}

Story 1:
{response 1}

Story 2:
{response 2}

{cue 1}

{cue 2}
)";

inline constexpr const char* kStoryTemplateAfterEach = R"(Objective:
You are an expert evaluator tasked with judging the quality of stories written for a story prompt.

Instructions:
- Read the story prompt and the two stories carefully.
- Judge which story is better overall, considering correctness and clarity.
- Provide your output strictly as a JSON object with the following fields:
  -- "selected response": 1 or 2 (the better story)
  -- "reason": a brief explanation of why this story is better
- Output only valid JSON, no extra commentary.

Story Prompt:
{question}

Story 1:
{response 1}

{cue 1}

Story 2:
{response 2}

{cue 2}
)";

inline const char* prompt_template(ContentType type, CuePlacement placement) {
  if (type == ContentType::Story) {
    return placement == CuePlacement::AfterEach ? kStoryTemplateAfterEach : kStoryTemplateAfterBoth;
  }
  return placement == CuePlacement::AfterEach ? kQaTemplateAfterEach : kQaTemplateAfterBoth;
}

// Single pass over the template: each placeholder is replaced exactly once
// and substituted values are never rescanned, so responses containing
// placeholder-like text pass through verbatim.
inline std::string substitute(
    std::string_view tmpl, const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      bool replaced = false;
      for (const auto& [name, value] : values) {
        if (tmpl.compare(i, name.size(), name) == 0) {
          out += value;
          i += name.size();
          replaced = true;
          break;
        }
      }
      if (replaced) continue;
    }
    out += tmpl[i];
    ++i;
  }
  return out;
}

// LF endings, per-line right-trim, leading/trailing blank lines dropped,
// no final newline. Keeps prompt hashes stable across platforms and erases
// the trailing hole left by empty cue slots. Interior blank lines are kept
// as-is so multi-paragraph responses survive untouched.
inline std::string normalize_prompt_text(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  lines.push_back(cur);

  for (auto& line : lines) {
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
  }
  std::size_t first = 0, last = lines.size();
  while (first < last && lines[first].empty()) ++first;
  while (last > first && lines[last - 1].empty()) --last;

  std::string out;
  for (std::size_t i = first; i < last; ++i) {
    if (i > first) out += '\n';
    out += lines[i];
  }
  return out;
}

}  // namespace detail

struct PromptOptions {
  CuePlacement placement = CuePlacement::AfterBoth;
  const CueTemplateTable* cue_table = nullptr;  // null -> defaults
  std::string version = kPromptTemplateVersion;
};

// Assembles the judge prompt for one item, with or without a cue condition.
// The task input and both responses appear verbatim exactly once; under a
// condition the two cue sentences follow per the placement option, and in
// cue-free mode the cue slots vanish entirely.
inline RenderedPrompt build_prompt(const ComparisonItem& item,
                                   const std::optional<CueCondition>& condition,
                                   const PromptOptions& opts = {}) {
  const CueTemplateTable& table = opts.cue_table ? *opts.cue_table : default_cue_templates();
  std::string cue1, cue2;
  if (condition) {
    if (family_of(condition->label_r1) != condition->family ||
        family_of(condition->label_r2) != condition->family) {
      throw CueError(CueError::Kind::LabelOutsideFamily,
                     "build_prompt: condition labels outside family");
    }
    cue1 = render_cue(item.content_type, 1, condition->label_r1, table);
    cue2 = render_cue(item.content_type, 2, condition->label_r2, table);
  }

  std::string text = detail::substitute(
      detail::prompt_template(item.content_type, opts.placement),
      {
          {"{question}", item.task_input},
          {"{response 1}", item.response_1},
          {"{response 2}", item.response_2},
          {"{cue 1}", cue1},
          {"{cue 2}", cue2},
      });
  text = detail::normalize_prompt_text(text);

  RenderedPrompt prompt;
  prompt.text = std::move(text);
  prompt.item_id = item.item_id;
  prompt.condition = condition;
  prompt.prompt_hash = stable_hash_hex(prompt.text);
  return prompt;
}

}  // namespace judgeprobe
