#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "judgeprobe/common.hpp"

namespace judgeprobe {

enum class ParseStatus { Clean, Repaired, Failed };

inline std::string_view parse_status_name(ParseStatus s) {
  switch (s) {
    case ParseStatus::Clean: return "clean";
    case ParseStatus::Repaired: return "repaired";
    case ParseStatus::Failed: return "failed";
  }
  return "?";
}

// Parsed judge output. reason is preserved verbatim (after JSON string
// decoding) so downstream acknowledgment matching sees exactly what the
// judge wrote. selected is meaningful only when parse_status != Failed.
struct Verdict {
  int selected = 0;  // 1 or 2
  std::string reason;
  ParseStatus parse_status = ParseStatus::Failed;
  std::optional<std::string> repair_note;

  bool operator==(const Verdict&) const = default;
};

// The canonical serialization of a verdict; re-parsing it yields an equal
// clean verdict.
inline std::string canonical_verdict_json(const Verdict& v) {
  nlohmann::json j{{"selected response", v.selected}, {"reason", v.reason}};
  return j.dump();
}

namespace detail {

inline constexpr const char* kSelectedKey = "selected response";
inline constexpr const char* kReasonKey = "reason";

// R1: drop ```-fence lines (with or without a language tag).
inline std::optional<std::string> strip_code_fences(const std::string& text) {
  std::string t = trim(text);
  if (t.rfind("```", 0) != 0) return std::nullopt;
  std::size_t first_nl = t.find('\n');
  if (first_nl == std::string::npos) return std::nullopt;
  std::string body = t.substr(first_nl + 1);
  std::size_t closing = body.rfind("```");
  if (closing == std::string::npos) return std::nullopt;
  return trim(body.substr(0, closing));
}

// R2: first balanced {...} substring (string-literal aware) that parses as
// a JSON object, scanning left to right.
inline std::optional<std::string> extract_balanced_object(const std::string& text) {
  for (std::size_t start = 0; start < text.size(); ++start) {
    if (text[start] != '{') continue;
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (c == '\\') {
          ++i;
        } else if (c == '"') {
          in_string = false;
        }
      } else if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        --depth;
        if (depth == 0) {
          std::string candidate = text.substr(start, i - start + 1);
          nlohmann::json j = nlohmann::json::parse(candidate, nullptr, false);
          if (!j.is_discarded() && j.is_object()) return candidate;
          break;  // try the next '{'
        }
      }
    }
  }
  return std::nullopt;
}

inline std::optional<int> selected_from(const nlohmann::json& v, bool& used_r4) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (d == static_cast<double>(static_cast<int>(d))) return static_cast<int>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    const std::string& s = v.get_ref<const std::string&>();
    if (s == "1" || s == "2") {
      used_r4 = true;
      return s == "1" ? 1 : 2;
    }
  }
  return std::nullopt;
}

}  // namespace detail

// Total parser for raw judge text. The clean path requires a single
// top-level JSON object with exactly the keys "selected response" and
// "reason". The repair path applies, in order and each noted in
// repair_note: R1 strip code fences, R2 extract the first balanced {...}
// substring, R3 accept the key aliases selected_response / selection /
// choice, R4 accept selected given as the string "1" or "2". Objects that
// carry extra keys besides the required two are accepted as repaired
// (note "extra-keys"). Anything else fails; no input throws.
inline Verdict parse_verdict(const std::string& raw_text) {
  using nlohmann::json;

  Verdict failed;
  failed.parse_status = ParseStatus::Failed;

  std::vector<std::string> notes;
  std::string text = trim(raw_text);

  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    if (auto unfenced = detail::strip_code_fences(text)) {
      text = *unfenced;
      notes.push_back("R1");
      j = json::parse(text, nullptr, false);
    }
  }
  if (j.is_discarded() || !j.is_object()) {
    if (auto extracted = detail::extract_balanced_object(text)) {
      notes.push_back("R2");
      j = json::parse(*extracted, nullptr, false);
    }
  }
  if (j.is_discarded() || !j.is_object()) return failed;

  const json* selected_value = nullptr;
  bool aliased_key = false;
  if (j.contains(detail::kSelectedKey)) {
    selected_value = &j[detail::kSelectedKey];
  } else {
    for (const char* alias : {"selected_response", "selection", "choice"}) {
      if (j.contains(alias)) {
        selected_value = &j[alias];
        aliased_key = true;
        break;
      }
    }
  }
  if (!selected_value) return failed;
  if (aliased_key) notes.push_back("R3");

  bool used_r4 = false;
  std::optional<int> selected = detail::selected_from(*selected_value, used_r4);
  if (used_r4) notes.push_back("R4");
  if (!selected || (*selected != 1 && *selected != 2)) return failed;

  if (!j.contains(detail::kReasonKey) || !j[detail::kReasonKey].is_string()) return failed;

  if (j.size() != 2) notes.push_back("extra-keys");

  Verdict v;
  v.selected = *selected;
  v.reason = j[detail::kReasonKey].get<std::string>();
  if (notes.empty()) {
    v.parse_status = ParseStatus::Clean;
  } else {
    v.parse_status = ParseStatus::Repaired;
    std::string note;
    for (std::size_t i = 0; i < notes.size(); ++i) {
      if (i) note += "+";
      note += notes[i];
    }
    v.repair_note = note;
  }
  return v;
}

}  // namespace judgeprobe
