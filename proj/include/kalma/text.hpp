#pragma once

// Small string helpers shared by the store, the parser and the judges.
// Case folding is ASCII-only; bytes >= 0x80 pass through untouched so UTF-8
// names survive normalization byte-for-byte.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

namespace kalma::text {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline bool is_word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') ||
         (u >= 'A' && u <= 'Z') || u >= 0x80 || c == '_';
}

inline char fold(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

inline std::string_view trim_view(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

inline std::string trim(std::string_view s) { return std::string(trim_view(s)); }

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = fold(c);
  return out;
}

// Trims and collapses every internal whitespace run into one space.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : trim_view(s)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

// Name-index key: case-folded, whitespace-collapsed.
inline std::string normalize_name(std::string_view s) {
  return to_lower(collapse_whitespace(s));
}

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (fold(a[i]) != fold(b[i])) return false;
  }
  return true;
}

inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> parts;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) parts.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return parts;
}

// Lower-cased alphanumeric tokens.
inline std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && !is_word_char(s[i])) ++i;
    size_t j = i;
    while (j < s.size() && is_word_char(s[j])) ++j;
    if (j > i) out.push_back(to_lower(s.substr(i, j - i)));
    i = j;
  }
  return out;
}

// Case-insensitive search for `needle` in `haystack` where the match must not
// be glued to a word character on either side.
inline bool contains_at_word_boundary(std::string_view haystack,
                                      std::string_view needle) {
  if (needle.empty() || needle.size() > haystack.size()) return false;
  for (size_t pos = 0; pos + needle.size() <= haystack.size(); ++pos) {
    bool match = true;
    for (size_t k = 0; k < needle.size(); ++k) {
      if (fold(haystack[pos + k]) != fold(needle[k])) {
        match = false;
        break;
      }
    }
    if (!match) continue;
    bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]) ||
                   !is_word_char(needle.front());
    size_t end = pos + needle.size();
    bool right_ok = end == haystack.size() || !is_word_char(haystack[end]) ||
                    !is_word_char(needle.back());
    if (left_ok && right_ok) return true;
  }
  return false;
}

inline uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Half-up rounding to one decimal, the display precision of every report.
// The epsilon absorbs binary representation error such as 39.45 being stored
// as 39.4499999....
inline double round1(double v) {
  return std::floor(v * 10.0 + 0.5 + 1e-9) / 10.0;
}

inline std::string format1(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f", round1(v));
  return buf;
}

}  // namespace kalma::text
