#pragma once

#include <cctype>
#include <cstdint>
#include <ctime>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace judgeprobe {

// Base for all harness errors; module-specific subclasses carry a kind enum.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------- stable hashing ----------------

// FNV-1a 64-bit. Used everywhere a platform-stable content hash is needed
// (item ids, prompt hashes, cache keys). std::hash is not stable across
// implementations, so it is never used for persisted values.
inline std::uint64_t stable_hash64(std::string_view s,
                                   std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline std::string stable_hash_hex(std::string_view s) { return to_hex(stable_hash64(s)); }

// ---------------- deterministic randomness ----------------

// mt19937_64 output is fully specified by the standard; the helpers below
// avoid std::uniform_*_distribution, whose results vary across library
// implementations.

inline std::uint64_t bounded_uint(std::mt19937_64& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(
      (static_cast<__uint128_t>(rng()) * static_cast<__uint128_t>(n)) >> 64);
}

// Uniform in [0, 1).
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// ---------------- small string utilities ----------------

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Whitespace-delimited token count (the length measure for balance filtering).
inline std::size_t token_count(std::string_view s) {
  std::size_t n = 0;
  bool in_tok = false;
  for (char c : s) {
    if (is_space(c)) {
      in_tok = false;
    } else if (!in_tok) {
      in_tok = true;
      ++n;
    }
  }
  return n;
}

inline constexpr const char* kFrozenTimestamp = "1970-01-01T00:00:00Z";

inline std::string iso_utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
#if defined(_WIN32)
  gmtime_s(&tm, &t);
#else
  gmtime_r(&t, &tm);
#endif
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

}  // namespace judgeprobe
