#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dse2qa::text {

inline constexpr std::string_view kEnt1 = "[Ent1]";
inline constexpr std::string_view kEnt2 = "[Ent2]";

inline bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

// ASCII lowercase; bytes >= 0x80 are passed through untouched so UTF-8 stays valid.
inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == delim) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

// Word tokens used for keyword matching: maximal runs of letters, digits,
// apostrophes and hyphens, lowercased. Punctuation is dropped.
inline std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (is_alnum(c) || c == '\'' || c == '-' || static_cast<unsigned char>(c) >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

// Model tokenizer. "[Ent1]"/"[Ent2]" stay atomic and keep their case; other
// words are lowercased alphanumeric runs that may contain single inner '.',
// '\'' or '-' (so "U.S." -> "u.s", "covid-19" stays whole). Every other
// non-space byte becomes its own token.
inline std::vector<std::string> model_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    char c = s[i];
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (s.substr(i, kEnt1.size()) == kEnt1) {
      out.emplace_back(kEnt1);
      i += kEnt1.size();
      continue;
    }
    if (s.substr(i, kEnt2.size()) == kEnt2) {
      out.emplace_back(kEnt2);
      i += kEnt2.size();
      continue;
    }
    auto wordish = [](char ch) {
      return is_alnum(ch) || static_cast<unsigned char>(ch) >= 0x80;
    };
    if (wordish(c)) {
      std::string tok;
      while (i < n) {
        if (wordish(s[i])) {
          tok.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
          ++i;
        } else if ((s[i] == '.' || s[i] == '\'' || s[i] == '-') && i + 1 < n &&
                   wordish(s[i + 1])) {
          tok.push_back(s[i]);
          ++i;
        } else {
          break;
        }
      }
      out.push_back(std::move(tok));
      continue;
    }
    out.emplace_back(1, c);
    ++i;
  }
  return out;
}

inline bool icontains(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                        [](char a, char b) {
                          return std::tolower(static_cast<unsigned char>(a)) ==
                                 std::tolower(static_cast<unsigned char>(b));
                        });
  return it != haystack.end();
}

// 64-bit FNV-1a. Stable across platforms; used for config hashes.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace dse2qa::text
