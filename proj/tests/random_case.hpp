#pragma once

// Random Sorted Neighborhood configurations plus an oracle that is computed
// without any library code beyond the key rule.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dedup/entity.hpp"
#include "dedup/partitioning.hpp"

namespace testing_support {

using IdPair = std::pair<std::string, std::string>;

struct RandomCase {
  std::vector<dedup::Entity> entities;
  dedup::PartitionFunction partitioner;
  std::size_t window = 2;
  std::size_t mappers = 1;
};

struct CaseLimits {
  std::size_t max_n = 121;
  std::size_t max_window = 9;
  std::size_t max_mappers = 5;
  std::size_t max_partitions = 6;
};

inline dedup::KeyRule case_rule() { return dedup::KeyRule::title_prefix(0); }

inline std::string lower_key(const dedup::Entity& e) {
  std::string key = e.attributes[0].substr(0, 2);
  for (auto& ch : key) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return key;
}

// Titles over a small alphabet so that blocking keys collide often. The
// partitioner uses r - 1 distinct keys as boundaries, chosen so that every
// partition holds at least w - 1 entities; r shrinks until that is possible.
inline RandomCase make_random_case(std::mt19937_64& rng, const CaseLimits& limits = {}) {
  RandomCase c;
  c.window = 2 + rng() % (limits.max_window - 1);
  const std::size_t min_n = std::max<std::size_t>(2, c.window - 1);
  const std::size_t n = min_n + rng() % (limits.max_n - min_n + 1);
  c.mappers = 1 + rng() % limits.max_mappers;
  const std::string alphabet = std::string("abcdefgh").substr(0, 2 + rng() % 7);

  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
  std::shuffle(ids.begin(), ids.end(), rng);
  for (std::size_t i = 0; i < n; ++i) {
    std::string title;
    title += static_cast<char>(std::toupper(alphabet[rng() % alphabet.size()]));
    if (rng() % 5) title += alphabet[rng() % alphabet.size()];
    title += " title";
    char id[16];
    std::snprintf(id, sizeof id, "r%04d", ids[i]);
    c.entities.push_back({id, {title}});
  }

  std::vector<std::string> keys;
  for (const auto& e : c.entities) keys.push_back(lower_key(e));
  std::sort(keys.begin(), keys.end());
  std::vector<std::string> distinct = keys;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  auto fits = [&](const std::vector<std::string>& bounds) {
    std::size_t prev = 0;
    for (std::size_t b = 0; b <= bounds.size(); ++b) {
      const std::size_t end =
          b < bounds.size()
              ? static_cast<std::size_t>(std::upper_bound(keys.begin(), keys.end(), bounds[b]) - keys.begin())
              : keys.size();
      if (end - prev < c.window - 1) return false;
      prev = end;
    }
    return true;
  };

  std::size_t r = 1 + rng() % limits.max_partitions;
  while (r > 1) {
    bool found = false;
    for (int attempt = 0; attempt < 40 && !found; ++attempt) {
      if (distinct.size() < r) break;
      std::vector<std::string> pool(distinct.begin(), distinct.end() - 1);
      if (pool.size() < r - 1) break;
      std::shuffle(pool.begin(), pool.end(), rng);
      pool.resize(r - 1);
      std::sort(pool.begin(), pool.end());
      if (fits(pool)) {
        c.partitioner = dedup::PartitionFunction("random" + std::to_string(r), pool);
        found = true;
      }
    }
    if (found) break;
    --r;
  }
  if (r == 1) c.partitioner = dedup::PartitionFunction("random1", {});
  return c;
}

// All id pairs whose positions in (key, id) order are less than w apart.
inline std::set<IdPair> window_oracle(const std::vector<dedup::Entity>& entities, std::size_t w) {
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& e : entities) order.emplace_back(lower_key(e), e.id);
  std::sort(order.begin(), order.end());
  std::set<IdPair> out;
  for (std::size_t j = 0; j < order.size(); ++j) {
    for (std::size_t i = j >= w - 1 ? j - (w - 1) : 0; i < j; ++i) {
      out.insert(std::minmax(order[i].second, order[j].second));
    }
  }
  return out;
}

inline std::vector<IdPair> to_ids(const std::vector<dedup::Correspondence>& pairs,
                                  const std::vector<dedup::Entity>& entities) {
  std::vector<IdPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) out.emplace_back(entities[p.left].id, entities[p.right].id);
  return out;
}

inline std::set<IdPair> to_id_set(const std::vector<dedup::Correspondence>& pairs,
                                  const std::vector<dedup::Entity>& entities) {
  const auto v = to_ids(pairs, entities);
  return {v.begin(), v.end()};
}

inline std::size_t window_formula(std::size_t n, std::size_t w) {
  return n >= w ? (w - 1) * n - w * (w - 1) / 2 : n * (n == 0 ? 0 : n - 1) / 2;
}

}  // namespace testing_support
