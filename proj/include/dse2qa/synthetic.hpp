#pragma once

// Linearly separable toy corpus: the verb phrase between [Ent1] and [Ent2]
// alone decides the label. Used for smoke tests and learnability checks.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dse2qa/core.hpp"
#include "dse2qa/models/model.hpp"
#include "dse2qa/random.hpp"

namespace dse2qa::synthetic {

inline constexpr std::array<std::array<std::string_view, 5>, kNumLabels> kCues = {{
    {"met", "visited", "called", "joined", "phoned"},
    {"praised", "supported", "endorsed", "applauded", "defended"},
    {"was hailed by", "was backed by", "was lauded by", "was cheered by", "was championed by"},
    {"blamed", "criticized", "attacked", "condemned", "accused"},
    {"was slammed by", "was denounced by", "was rebuked by", "was mocked by", "was faulted by"},
}};

inline constexpr std::array<std::string_view, 6> kPrefixes = {
    "", "On Tuesday ,", "In a statement ,", "Earlier this week", "According to reports ,", "Yesterday"};

inline constexpr std::array<std::string_view, 6> kSuffixes = {
    ".", "on Monday .", "during the briefing .", "over the new policy .", "in the capital .", "after the vote ."};

inline constexpr std::array<std::string_view, 12> kFirstNames = {
    "Anna", "Boris", "Carla", "David", "Elena", "Frank", "Grace", "Hugo", "Irene", "Jonas", "Karen", "Louis"};

inline constexpr std::array<std::string_view, 12> kLastNames = {
    "Adler", "Brandt", "Castro", "Dumont", "Engel", "Fischer", "Garcia", "Hansen", "Ivanova", "Jensen", "Keller", "Lopez"};

inline std::string random_name(Rng& rng) {
  return std::string(kFirstNames[uniform_index(rng, kFirstNames.size())]) + " " +
         std::string(kLastNames[uniform_index(rng, kLastNames.size())]);
}

// Labels cycle 0..4 so every class gets n/5 examples (+1 for the first n%5).
inline std::vector<models::Example> generate(std::size_t n, std::uint64_t seed, const std::string& id_prefix = "syn") {
  Rng rng = make_rng(seed, "synthetic");
  std::vector<models::Example> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % kNumLabels);
    const auto& cues = kCues[static_cast<std::size_t>(label)];
    std::string text;
    const auto prefix = kPrefixes[uniform_index(rng, kPrefixes.size())];
    if (!prefix.empty()) text += std::string(prefix) + " ";
    text += "[Ent1] ";
    text += std::string(cues[uniform_index(rng, cues.size())]);
    text += " [Ent2] ";
    text += std::string(kSuffixes[uniform_index(rng, kSuffixes.size())]);
    models::Example ex;
    ex.item_id = id_prefix + "-" + std::to_string(i);
    ex.text = std::move(text);
    ex.surface_p = random_name(rng);
    do {
      ex.surface_q = random_name(rng);
    } while (ex.surface_q == ex.surface_p);
    ex.label = label_from_index(label);
    out.push_back(std::move(ex));
  }
  shuffle(std::span<models::Example>(out), rng);
  return out;
}

}  // namespace dse2qa::synthetic
