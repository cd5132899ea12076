#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dse2qa/errors.hpp"
#include "dse2qa/text.hpp"

namespace dse2qa::models {

// Word-level vocabulary over text::model_tokens. Ids 0..5 are reserved.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kEnt1 = 4;
  static constexpr int kEnt2 = 5;

  Vocabulary() {
    for (auto s : {"[PAD]", "[UNK]", "[CLS]", "[SEP]"}) add(s);
    add(std::string(text::kEnt1));
    add(std::string(text::kEnt2));
  }

  // Most frequent tokens first (ties alphabetical) until `max_size` entries
  // including the reserved ones.
  static Vocabulary build(const std::vector<std::string>& texts, std::size_t max_size) {
    std::map<std::string, std::size_t> freq;
    for (const auto& t : texts) {
      for (auto& tok : text::model_tokens(t)) ++freq[tok];
    }
    std::vector<std::pair<std::string, std::size_t>> v(freq.begin(), freq.end());
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    Vocabulary vocab;
    for (const auto& [tok, n] : v) {
      if (vocab.size() >= max_size) break;
      if (!vocab.contains(tok)) vocab.add(tok);
    }
    return vocab;
  }

  int id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  std::size_t size() const { return tokens_.size(); }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }

  std::vector<int> encode(std::string_view s) const {
    std::vector<int> out;
    for (const auto& tok : text::model_tokens(s)) out.push_back(id(tok));
    return out;
  }

  // Known token ids only (unknown tokens dropped).
  std::vector<int> encode_known(std::string_view s) const {
    std::vector<int> out;
    for (const auto& tok : text::model_tokens(s)) {
      const int i = id(tok);
      if (i != kUnk) out.push_back(i);
    }
    return out;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write vocabulary: " + path);
    for (const auto& t : tokens_) out << t << "\n";
  }

  static Vocabulary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open vocabulary: " + path);
    Vocabulary v;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      if (n++ < v.size()) {
        if (line != v.token(static_cast<int>(n - 1))) throw InputError("vocabulary reserved tokens mismatch in " + path);
        continue;
      }
      v.add(line);
    }
    return v;
  }

 private:
  void add(const std::string& tok) {
    index_.emplace(tok, static_cast<int>(tokens_.size()));
    tokens_.push_back(tok);
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace dse2qa::models
