#pragma once

// Attribute similarity functions and the weighted-threshold match strategy.

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dedup/entity.hpp"
#include "dedup/error.hpp"

namespace dedup {

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return a.size();
  std::vector<std::size_t> prev(b.size() + 1);
  std::vector<std::size_t> cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t substitute = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, substitute});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// 1 - distance / max length; two empty strings are identical.
inline double edit_similarity(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

// Distinct 3-grams, sorted. No padding: a non-empty string shorter than three
// characters is a single gram.
inline std::vector<std::string_view> trigrams(std::string_view s) {
  std::vector<std::string_view> grams;
  if (s.empty()) return grams;
  if (s.size() < 3) {
    grams.push_back(s);
    return grams;
  }
  grams.reserve(s.size() - 2);
  for (std::size_t i = 0; i + 3 <= s.size(); ++i) grams.push_back(s.substr(i, 3));
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
  return grams;
}

namespace detail {

inline std::size_t shared_grams(const std::vector<std::string_view>& a, const std::vector<std::string_view>& b) {
  std::size_t shared = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia == *ib) {
      ++shared;
      ++ia;
      ++ib;
    } else if (*ia < *ib) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return shared;
}

}  // namespace detail

// Jaccard coefficient of the trigram sets.
inline double trigram_similarity(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  const auto ga = trigrams(a);
  const auto gb = trigrams(b);
  const std::size_t shared = detail::shared_grams(ga, gb);
  const std::size_t united = ga.size() + gb.size() - shared;
  return united == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(united);
}

// Dice coefficient of the trigram sets.
inline double trigram_dice_similarity(std::string_view a, std::string_view b) {
  if (a.empty() && b.empty()) return 1.0;
  const auto ga = trigrams(a);
  const auto gb = trigrams(b);
  const std::size_t total = ga.size() + gb.size();
  return total == 0 ? 0.0 : 2.0 * static_cast<double>(detail::shared_grams(ga, gb)) / static_cast<double>(total);
}

using SimilarityFunction = std::function<double(std::string_view, std::string_view)>;

// Known names: "edit", "trigram", "trigram_dice".
inline SimilarityFunction similarity_by_name(std::string_view name) {
  if (name == "edit") return edit_similarity;
  if (name == "trigram") return trigram_similarity;
  if (name == "trigram_dice") return trigram_dice_similarity;
  throw ConfigError("unknown similarity function '" + std::string(name) + "'");
}

struct Matcher {
  std::size_t attribute = 0;
  std::string name;
  SimilarityFunction similarity;
  double weight = 1.0;
};

struct MatchStrategy {
  std::vector<Matcher> matchers;
  double threshold = 0.75;

  // Edit similarity on the title, trigram similarity on the abstract, equal
  // weights, threshold 0.75.
  static MatchStrategy publication(std::size_t title, std::size_t abstract) {
    return {{{title, "edit", edit_similarity, 1.0}, {abstract, "trigram", trigram_similarity, 1.0}}, 0.75};
  }

  void validate() const {
    if (matchers.empty()) throw ConfigError("match strategy needs at least one matcher");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("match threshold must lie in [0, 1]");
    for (const auto& m : matchers) {
      if (!(m.weight > 0.0)) throw ConfigError("matcher weights must be positive");
      if (!m.similarity) throw ConfigError("matcher '" + m.name + "' has no similarity function");
    }
  }
};

// Slack for the threshold test, so that e.g. 0.5 * 0.8 + 0.5 * 0.7 still
// reaches 0.75 in binary floating point.
inline constexpr double kThresholdSlack = 1e-9;

struct MatchDecision {
  bool matched = false;
  double score = 0.0;           // weighted score of the matchers that ran
  std::size_t matchers_run = 0;
};

// Runs the matchers in order. With `short_circuit`, stops as soon as the
// remaining weight cannot lift the score to the threshold; the decision is
// the same either way.
inline MatchDecision evaluate_pair(const Entity& a, const Entity& b, const MatchStrategy& strategy,
                                   bool short_circuit = true) {
  double total_weight = 0.0;
  for (const auto& m : strategy.matchers) total_weight += m.weight;
  // suffix[i] = normalized weight of matchers i..end
  std::vector<double> suffix(strategy.matchers.size() + 1, 0.0);
  for (std::size_t i = strategy.matchers.size(); i-- > 0;) {
    suffix[i] = suffix[i + 1] + strategy.matchers[i].weight / total_weight;
  }

  MatchDecision out;
  for (std::size_t i = 0; i < strategy.matchers.size(); ++i) {
    const auto& m = strategy.matchers[i];
    if (m.attribute >= a.attributes.size() || m.attribute >= b.attributes.size()) {
      throw MatchError("matcher '" + m.name + "' needs attribute " + std::to_string(m.attribute) +
                       " missing on pair ('" + a.id + "', '" + b.id + "')");
    }
    out.score += m.weight / total_weight * m.similarity(a.attributes[m.attribute], b.attributes[m.attribute]);
    ++out.matchers_run;
    if (short_circuit && out.score + suffix[i + 1] < strategy.threshold - kThresholdSlack) return out;
  }
  out.matched = out.score >= strategy.threshold - kThresholdSlack;
  return out;
}

// Score of the pair if it is a match.
inline std::optional<double> match_pair(const Entity& a, const Entity& b, const MatchStrategy& strategy) {
  const auto decision = evaluate_pair(a, b, strategy);
  if (!decision.matched) return std::nullopt;
  return decision.score;
}

}  // namespace dedup
