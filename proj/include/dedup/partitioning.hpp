#pragma once

// Range partitioning of blocking keys and skew metrics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dedup/entity.hpp"
#include "dedup/error.hpp"

namespace dedup {

// Monotone map from blocking key to a 1-based partition index. A key goes to
// the first partition whose upper boundary is >= the key; keys above the last
// boundary go to the last partition.
class PartitionFunction {
 public:
  PartitionFunction() : name_("single") {}

  PartitionFunction(std::string name, std::vector<BlockingKey> boundaries)
      : name_(std::move(name)), boundaries_(std::move(boundaries)) {
    for (std::size_t i = 1; i < boundaries_.size(); ++i) {
      if (!(boundaries_[i - 1] < boundaries_[i])) {
        throw ConfigError("partitioner '" + name_ + "': boundaries must be strictly ascending ('" +
                          boundaries_[i - 1] + "' before '" + boundaries_[i] + "')");
      }
    }
  }

  std::uint32_t operator()(std::string_view key) const {
    auto it = std::lower_bound(boundaries_.begin(), boundaries_.end(), key,
                               [](const BlockingKey& b, std::string_view k) { return std::string_view(b) < k; });
    return static_cast<std::uint32_t>(it - boundaries_.begin()) + 1;
  }

  std::size_t partitions() const noexcept { return boundaries_.size() + 1; }
  const std::string& name() const noexcept { return name_; }
  const std::vector<BlockingKey>& boundaries() const noexcept { return boundaries_; }

  PartitionFunction renamed(std::string name) const {
    PartitionFunction copy = *this;
    copy.name_ = std::move(name);
    return copy;
  }

 private:
  std::string name_;
  std::vector<BlockingKey> boundaries_;
};

// --- Two-character key grid -------------------------------------------------
//
// Keys are placed on a base-27 grid (' ' < 'a' < ... < 'z') over their first
// two characters. key_code is a floor mapping, so it is monotone for any byte
// string: characters that are not on the grid round down to the closest grid
// character and the remaining position saturates.

inline constexpr int kGridRadix = 27;
inline constexpr int kGridMaxCode = kGridRadix * kGridRadix - 1;

inline constexpr std::string_view kPublicationKeyLow = "a ";
inline constexpr std::string_view kPublicationKeyHigh = "zz";

namespace detail {

// Returns the grid digit at or below `c` and whether `c` is exactly on the grid.
inline std::pair<int, bool> floor_digit(unsigned char c) {
  if (c >= 'a' && c <= 'z') return {c - 'a' + 1, true};
  if (c > 'z') return {kGridRadix - 1, false};
  return {0, c == ' '};
}

}  // namespace detail

inline int key_code(std::string_view key) {
  if (key.empty() || static_cast<unsigned char>(key[0]) < ' ') return 0;
  const auto [high, exact] = detail::floor_digit(static_cast<unsigned char>(key[0]));
  if (!exact) return high * kGridRadix + (kGridRadix - 1);
  if (key.size() == 1 || static_cast<unsigned char>(key[1]) < ' ') return high * kGridRadix;
  return high * kGridRadix + detail::floor_digit(static_cast<unsigned char>(key[1])).first;
}

inline BlockingKey code_key(int code) {
  if (code < 0 || code > kGridMaxCode) throw ConfigError("key code out of range: " + std::to_string(code));
  auto digit = [](int d) { return d == 0 ? ' ' : static_cast<char>('a' + d - 1); };
  return {digit(code / kGridRadix), digit(code % kGridRadix)};
}

// r intervals of (nearly) equal width over the key codes of [low, high].
inline PartitionFunction make_even_partitioner(std::size_t r, std::string_view low, std::string_view high,
                                               std::string name = {}) {
  if (r == 0) throw ConfigError("even partitioner needs at least one partition");
  const int lo = key_code(low);
  const int hi = key_code(high);
  if (lo >= hi) throw ConfigError("even partitioner: degenerate key domain");
  const auto width = static_cast<std::size_t>(hi - lo + 1);
  if (r > width) throw ConfigError("even partitioner: more partitions than key codes");
  if (name.empty()) name = "Even" + std::to_string(r);
  std::vector<BlockingKey> boundaries;
  for (std::size_t i = 1; i < r; ++i) {
    const auto code = lo + static_cast<int>(i * width / r) - 1;
    boundaries.push_back(code_key(code));
  }
  return {std::move(name), std::move(boundaries)};
}

inline PartitionFunction make_publication_even(std::size_t r) {
  return make_even_partitioner(r, kPublicationKeyLow, kPublicationKeyHigh);
}

// Ten blocks of similar size for title-initial keys of the synthetic
// generator. Not derived from any published boundary list.
inline PartitionFunction manual_partitioner() {
  return {"Manual", {"cm", "ez", "hm", "jz", "mm", "oz", "rm", "tz", "wm"}};
}

// --- Skew injection ----------------------------------------------------------

namespace detail {

inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

inline std::uint64_t seeded_hash(std::uint64_t seed, std::string_view s) {
  return detail::mix64(seed ^ detail::fnv1a(s));
}

// Rewrites blocking keys so that ceil(f * n) entities land in the last
// partition of `partitioner`. Entities already there are kept first; the rest
// are picked by a seeded hash of their id. If the last partition already holds
// more than the target, the hash-selected excess is moved to partition r - 1.
struct SkewTransform {
  PartitionFunction partitioner;
  double fraction = 0.0;
  std::uint64_t seed = 0;

  std::size_t target_count(std::size_t n) const {
    return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  }

  std::vector<Entity> apply(std::span<const Entity> entities, const KeyRule& rule) const {
    if (rule.components.size() != 1 || rule.components.front().prefix != 2) {
      throw ConfigError("skew transform needs a single two-character key component");
    }
    const std::size_t attr = rule.components.front().attribute;
    const std::uint32_t last = static_cast<std::uint32_t>(partitioner.partitions());

    std::vector<Entity> out(entities.begin(), entities.end());
    std::vector<EntityIndex> inside;
    std::vector<EntityIndex> outside;
    for (EntityIndex i = 0; i < out.size(); ++i) {
      (partitioner(blocking_key(out[i], rule)) == last ? inside : outside).push_back(i);
    }
    auto by_hash = [&](std::vector<EntityIndex>& v) {
      std::sort(v.begin(), v.end(), [&](EntityIndex a, EntityIndex b) {
        const auto ha = seeded_hash(seed, out[a].id);
        const auto hb = seeded_hash(seed, out[b].id);
        return ha != hb ? ha < hb : out[a].id < out[b].id;
      });
    };
    auto rewrite = [&](Entity& e, const BlockingKey& key) {
      std::string& value = e.attributes[attr];
      value = key + value.substr(std::min<std::size_t>(2, value.size()));
    };

    const std::size_t target = target_count(out.size());
    if (inside.size() < target) {
      const int lo = key_code(partitioner.boundaries().back()) + 1;
      if (lo > kGridMaxCode) throw ConfigError("skew transform: last partition has no grid keys");
      const auto span = static_cast<std::uint64_t>(kGridMaxCode - lo + 1);
      by_hash(outside);
      for (std::size_t k = 0; k < target - inside.size(); ++k) {
        Entity& e = out[outside[k]];
        const auto code = lo + static_cast<int>(seeded_hash(seed + 1, e.id) % span);
        rewrite(e, code_key(code));
      }
    } else if (inside.size() > target) {
      int code = key_code(partitioner.boundaries().back());
      while (code >= 0 && partitioner(code_key(code)) != last - 1) --code;
      if (code < 0) throw ConfigError("skew transform: no grid key in partition " + std::to_string(last - 1));
      const BlockingKey below = code_key(code);
      by_hash(inside);
      for (std::size_t k = 0; k < inside.size() - target; ++k) rewrite(out[inside[k]], below);
    }
    return out;
  }
};

inline SkewTransform make_skewed_partitioner(const PartitionFunction& base, double fraction,
                                             std::uint64_t seed = 0) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("skew fraction must lie in (0, 1)");
  if (base.partitions() < 2) throw ConfigError("skew transform needs at least two partitions");
  const auto percent = static_cast<int>(std::lround(fraction * 100.0));
  return {base.renamed(base.name() + "_" + std::to_string(percent)), fraction, seed};
}

// --- Skew metrics -------------------------------------------------------------

// g = 2 * sum(i * y_i) / (n * sum(y_i)) - (n + 1) / n over ascending sizes.
inline double gini(std::span<const std::size_t> sizes) {
  if (sizes.empty()) throw MetricError("gini of an empty size list");
  std::vector<std::size_t> sorted(sizes.begin(), sizes.end());
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    total += static_cast<double>(sorted[i]);
    weighted += static_cast<double>(i + 1) * static_cast<double>(sorted[i]);
  }
  if (total == 0.0) throw MetricError("gini of all-zero sizes");
  const auto n = static_cast<double>(sorted.size());
  return 2.0 * weighted / (n * total) - (n + 1.0) / n;
}

struct PartitionProfile {
  std::vector<std::size_t> counts;  // partition order
  double gini = 0.0;

  std::vector<std::size_t> sorted_sizes() const {
    auto s = counts;
    std::sort(s.begin(), s.end());
    return s;
  }
};

template <class Partitioner>
PartitionProfile profile(std::span<const Entity> entities, const Partitioner& p, std::size_t partitions,
                         const KeyRule& rule) {
  PartitionProfile out;
  out.counts.assign(partitions, 0);
  for (const auto& e : entities) {
    const auto part = p(blocking_key(e, rule));
    if (part < 1 || part > partitions) {
      throw PartitionError("entity '" + e.id + "' mapped to partition " + std::to_string(part));
    }
    ++out.counts[part - 1];
  }
  out.gini = gini(out.counts);
  return out;
}

inline PartitionProfile profile(std::span<const Entity> entities, const PartitionFunction& p, const KeyRule& rule) {
  return profile(entities, p, p.partitions(), rule);
}

}  // namespace dedup
