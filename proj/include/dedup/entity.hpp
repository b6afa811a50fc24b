#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <iterator>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "dedup/error.hpp"

namespace dedup {

// Position of an entity inside the dataset a workflow was started on.
using EntityIndex = std::uint32_t;

using BlockingKey = std::string;

struct Entity {
  std::string id;
  std::vector<std::string> attributes;

  bool operator==(const Entity&) const = default;
};

struct Dataset {
  std::vector<std::string> attribute_names;  // excludes the id column
  std::vector<Entity> entities;

  std::size_t attribute_index(std::string_view name) const {
    auto it = std::find(attribute_names.begin(), attribute_names.end(), name);
    if (it == attribute_names.end()) throw ConfigError("unknown attribute '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - attribute_names.begin());
  }
};

// Blocking key = concatenation of attribute prefixes, optionally lowercased.
// Attributes shorter than the prefix contribute what they have, so "D" keys as
// "d" and sorts before "db".
struct KeyRule {
  struct Component {
    std::size_t attribute = 0;
    std::size_t prefix = 2;
  };

  std::vector<Component> components{Component{}};
  bool lowercase = true;

  // Lowercased first `length` characters of the title attribute.
  static KeyRule title_prefix(std::size_t title_attribute, std::size_t length = 2) {
    return KeyRule{{Component{title_attribute, length}}, true};
  }
};

inline BlockingKey blocking_key(const Entity& entity, const KeyRule& rule) {
  BlockingKey key;
  for (const auto& c : rule.components) {
    if (c.attribute >= entity.attributes.size()) {
      throw KeyingError("entity '" + entity.id + "' has no attribute " + std::to_string(c.attribute));
    }
    const std::string& value = entity.attributes[c.attribute];
    key.append(value, 0, std::min(c.prefix, value.size()));
  }
  if (rule.lowercase) {
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  }
  return key;
}

// ranks[i] = position of entities[i].id in ascending id order. Throws on a
// duplicate id.
inline std::vector<std::uint32_t> id_ranks(std::span<const Entity> entities) {
  std::vector<EntityIndex> order(entities.size());
  std::iota(order.begin(), order.end(), EntityIndex{0});
  std::sort(order.begin(), order.end(),
            [&](EntityIndex a, EntityIndex b) { return entities[a].id < entities[b].id; });
  std::vector<std::uint32_t> ranks(entities.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (pos > 0 && entities[order[pos]].id == entities[order[pos - 1]].id) {
      throw ConfigError("duplicate entity id '" + entities[order[pos]].id + "'");
    }
    ranks[order[pos]] = static_cast<std::uint32_t>(pos);
  }
  return ranks;
}

// Unordered entity pair. `left` is always the entity with the smaller id, so
// pair sets coming from different workflows compare by value.
struct Correspondence {
  EntityIndex left = 0;
  EntityIndex right = 0;
  std::optional<float> similarity;

  bool operator==(const Correspondence&) const = default;
  auto operator<=>(const Correspondence&) const = default;
};

inline Correspondence make_correspondence(EntityIndex a, EntityIndex b, std::span<const std::uint32_t> ranks,
                                          std::optional<float> similarity = std::nullopt) {
  if (ranks[b] < ranks[a]) std::swap(a, b);
  return {a, b, similarity};
}

// Sorts and removes duplicates.
inline void normalize(std::vector<Correspondence>& pairs) {
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
}

// Pairs in `a` but not in `b`, comparing endpoints only. Inputs need not be
// sorted.
inline std::vector<Correspondence> pair_difference(std::vector<Correspondence> a, std::vector<Correspondence> b) {
  auto endpoints_less = [](const Correspondence& x, const Correspondence& y) {
    return std::tie(x.left, x.right) < std::tie(y.left, y.right);
  };
  std::sort(a.begin(), a.end(), endpoints_less);
  std::sort(b.begin(), b.end(), endpoints_less);
  std::vector<Correspondence> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out), endpoints_less);
  return out;
}

inline bool same_pairs(std::vector<Correspondence> a, std::vector<Correspondence> b) {
  if (a.size() != b.size()) return false;
  return pair_difference(std::move(a), std::move(b)).empty();
}

}  // namespace dedup
