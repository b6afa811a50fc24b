#pragma once

// Sorted Neighborhood building blocks: composite keys, the sequential sliding
// window (the reference result every parallel workflow is checked against)
// and the map side of sorted reduce partitions.

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dedup/entity.hpp"
#include "dedup/error.hpp"
#include "dedup/mr/engine.hpp"

namespace dedup {

// Key of the form [boundary.][partition.]blocking_key, compared
// component-wise; absent prefixes sort first. The id rank is appended as the
// last component so equal blocking keys still have a fixed order.
struct CompositeKey {
  std::optional<std::uint32_t> boundary;
  std::optional<std::uint32_t> partition;
  BlockingKey blocking_key;
  std::uint32_t entity_rank = 0;

  bool operator==(const CompositeKey&) const = default;
  auto operator<=>(const CompositeKey&) const = default;

  // Dotted form without the rank, e.g. "1.2.3".
  std::string to_string() const {
    std::string out;
    if (boundary) out += std::to_string(*boundary) + ".";
    if (partition) out += std::to_string(*partition) + ".";
    return out + blocking_key;
  }

  // Replicated (RepSN) or boundary (JobSN) entities carry a boundary prefix
  // that differs from their partition.
  bool is_replica() const { return boundary && partition && *boundary != *partition; }
};

using EntityRecord = mr::KeyValue<CompositeKey, EntityIndex>;

inline void require_window(std::size_t w) {
  if (w < 2) throw ConfigError("window size must be at least 2, got " + std::to_string(w));
}

// Calls fn(i, j) for every index pair i < j < n with j - i <= w - 1, in the
// order the window produces them: for each newly covered position j, its
// predecessors inside the window in ascending order.
template <class Fn>
void for_each_window_pair(std::size_t n, std::size_t w, Fn&& fn) {
  require_window(w);
  for (std::size_t j = 1; j < n; ++j) {
    const std::size_t first = j >= w - 1 ? j - (w - 1) : 0;
    for (std::size_t i = first; i < j; ++i) fn(i, j);
  }
}

// (w - 1) * n - w * (w - 1) / 2 for n >= w, otherwise n * (n - 1) / 2.
inline std::size_t window_pair_count(std::size_t n, std::size_t w) {
  require_window(w);
  if (n < w) return n * (n == 0 ? 0 : n - 1) / 2;
  return (w - 1) * n - w * (w - 1) / 2;
}

// Pairs of the sliding window over an already sorted entity sequence.
inline std::vector<Correspondence> sliding_window(std::span<const EntityIndex> sorted, std::size_t w,
                                                  std::span<const std::uint32_t> ranks) {
  std::vector<Correspondence> pairs;
  pairs.reserve(window_pair_count(sorted.size(), w));
  for_each_window_pair(sorted.size(), w, [&](std::size_t i, std::size_t j) {
    pairs.push_back(make_correspondence(sorted[i], sorted[j], ranks));
  });
  return pairs;
}

// Entity positions ordered by (blocking key, id).
inline std::vector<EntityIndex> sort_by_blocking_key(std::span<const Entity> entities, const KeyRule& rule,
                                                     std::span<const std::uint32_t> ranks) {
  std::vector<BlockingKey> keys;
  keys.reserve(entities.size());
  for (const auto& e : entities) keys.push_back(blocking_key(e, rule));
  std::vector<EntityIndex> order(entities.size());
  std::iota(order.begin(), order.end(), EntityIndex{0});
  std::sort(order.begin(), order.end(), [&](EntityIndex a, EntityIndex b) {
    return keys[a] != keys[b] ? keys[a] < keys[b] : ranks[a] < ranks[b];
  });
  return order;
}

// Sequential Sorted Neighborhood on the globally sorted dataset.
inline std::vector<Correspondence> sequential_sorted_neighborhood(std::span<const Entity> entities,
                                                                  const KeyRule& rule, std::size_t w) {
  require_window(w);
  const auto ranks = id_ranks(entities);
  const auto order = sort_by_blocking_key(entities, rule, ranks);
  return sliding_window(order, w, ranks);
}

// Map output of sorted reduce partitions: key p(k).k.
template <class Partitioner>
EntityRecord srp_map(const Entity& entity, EntityIndex index, std::uint32_t rank, const Partitioner& p,
                     const KeyRule& rule) {
  BlockingKey key = blocking_key(entity, rule);
  const std::uint32_t part = p(key);
  if (part == 0) throw PartitionError("partition function undefined for key '" + key + "'");
  return {CompositeKey{std::nullopt, part, std::move(key), rank}, index};
}

// Boundary pairs lost by running the window per partition only.
inline std::size_t srp_missed_pairs(std::size_t r, std::size_t w) {
  require_window(w);
  if (r == 0) throw ConfigError("reducer count must be positive");
  return (r - 1) * w * (w - 1) / 2;
}

}  // namespace dedup
