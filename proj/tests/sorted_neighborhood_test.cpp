#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dedup/harness/dataset.hpp"
#include "dedup/sorted_neighborhood.hpp"

namespace {

using dedup::CompositeKey;
using dedup::Entity;

using IdPair = std::pair<std::string, std::string>;

std::vector<IdPair> id_pairs(const std::vector<dedup::Correspondence>& pairs, const std::vector<Entity>& entities) {
  std::vector<IdPair> out;
  for (const auto& p : pairs) out.emplace_back(entities[p.left].id, entities[p.right].id);
  return out;
}

Entity titled(std::string title) { return Entity{"x", {std::move(title)}}; }

TEST(BlockingKey, TitlePrefixExamples) {
  const auto rule = dedup::KeyRule::title_prefix(0);
  EXPECT_EQ(dedup::blocking_key(titled("MapReduce Basics"), rule), "ma");
  EXPECT_EQ(dedup::blocking_key(titled("A survey"), rule), "a ");
  EXPECT_EQ(dedup::blocking_key(titled("DB"), rule), "db");
  EXPECT_EQ(dedup::blocking_key(titled("D"), rule), "d");
  EXPECT_LT(std::string("d"), std::string("db"));
}

TEST(BlockingKey, ConcatenatesComponents) {
  dedup::KeyRule rule{{{1, 3}, {0, 1}}, true};
  EXPECT_EQ(dedup::blocking_key(Entity{"x", {"Zeta", "Alphabet"}}, rule), "alpz");
}

TEST(BlockingKey, MissingAttributeIsKeyingError) {
  const auto rule = dedup::KeyRule::title_prefix(2);
  EXPECT_THROW(dedup::blocking_key(Entity{"x", {"only one"}}, rule), dedup::KeyingError);
}

TEST(SequentialSN, FixtureProducesFifteenPairsInWindowOrder) {
  const auto data = dedup::harness::fixture_dataset();
  const auto pairs =
      dedup::sequential_sorted_neighborhood(data.entities, dedup::harness::fixture_key_rule(), 3);
  // Sorted order a d b e f h c g i; each entity meets its two predecessors.
  const std::vector<IdPair> expected = {
      {"a", "d"}, {"a", "b"}, {"b", "d"}, {"d", "e"}, {"b", "e"}, {"b", "f"}, {"e", "f"}, {"e", "h"},
      {"f", "h"}, {"c", "f"}, {"c", "h"}, {"g", "h"}, {"c", "g"}, {"c", "i"}, {"g", "i"},
  };
  EXPECT_EQ(id_pairs(pairs, data.entities), expected);
}

TEST(SequentialSN, TwoEntitiesWindowTwo) {
  std::vector<Entity> entities = {{"q", {"Beta"}}, {"p", {"Alpha"}}};
  const auto pairs = dedup::sequential_sorted_neighborhood(entities, dedup::KeyRule::title_prefix(0), 2);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_EQ(id_pairs(pairs, entities), (std::vector<IdPair>{{"p", "q"}}));
}

TEST(SequentialSN, WindowBelowTwoRejected) {
  std::vector<Entity> entities = {{"p", {"Alpha"}}};
  EXPECT_THROW(dedup::sequential_sorted_neighborhood(entities, dedup::KeyRule::title_prefix(0), 1),
               dedup::ConfigError);
}

TEST(SequentialSN, DuplicateIdRejected) {
  std::vector<Entity> entities = {{"p", {"Alpha"}}, {"p", {"Beta"}}};
  EXPECT_THROW(dedup::sequential_sorted_neighborhood(entities, dedup::KeyRule::title_prefix(0), 2),
               dedup::ConfigError);
}

std::vector<Entity> random_entities(std::mt19937& rng, std::size_t n, const std::string& alphabet) {
  std::vector<Entity> entities;
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
  std::shuffle(ids.begin(), ids.end(), rng);
  for (std::size_t i = 0; i < n; ++i) {
    std::string title;
    title += alphabet[rng() % alphabet.size()];
    title += alphabet[rng() % alphabet.size()];
    char id[16];
    std::snprintf(id, sizeof id, "e%03d", ids[i]);
    entities.push_back({id, {title}});
  }
  return entities;
}

// Independent oracle: rank every entity by (key, id) and take all pairs whose
// ranks are less than w apart.
std::set<IdPair> brute_force(const std::vector<Entity>& entities, std::size_t w) {
  std::vector<std::pair<std::string, std::string>> order;  // (key, id)
  for (const auto& e : entities) {
    std::string key = e.attributes[0].substr(0, 2);
    for (auto& ch : key) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    order.emplace_back(key, e.id);
  }
  std::sort(order.begin(), order.end());
  std::set<IdPair> out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    for (std::size_t j = 0; j < order.size(); ++j) {
      const std::size_t gap = i > j ? i - j : j - i;
      if (i != j && gap < w) out.insert(std::minmax(order[i].second, order[j].second));
    }
  }
  return out;
}

TEST(SequentialSN, MatchesBruteForceOracle) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = rng() % 51;
    const std::size_t w = 2 + rng() % 9;
    const auto entities = random_entities(rng, n, trial % 2 ? "abc" : "ABCDEFGHIJ");
    const auto pairs = dedup::sequential_sorted_neighborhood(entities, dedup::KeyRule::title_prefix(0), w);
    const auto ids = id_pairs(pairs, entities);
    const std::set<IdPair> got(ids.begin(), ids.end());
    EXPECT_EQ(got.size(), ids.size()) << "duplicate pairs for n=" << n << " w=" << w;
    EXPECT_EQ(got, brute_force(entities, w)) << "n=" << n << " w=" << w;
  }
}

TEST(SequentialSN, ComparisonCountFormula) {
  for (std::size_t n = 0; n <= 60; ++n) {
    for (std::size_t w = 2; w <= 12; ++w) {
      std::size_t counted = 0;
      std::set<std::pair<std::size_t, std::size_t>> seen;
      dedup::for_each_window_pair(n, w, [&](std::size_t i, std::size_t j) {
        ++counted;
        EXPECT_LT(i, j);
        EXPECT_LT(j, n);
        seen.emplace(i, j);
      });
      // Closed forms, computed independently of the library.
      const std::size_t expected = n >= w ? (w - 1) * n - w * (w - 1) / 2 : n * (n > 0 ? n - 1 : 0) / 2;
      EXPECT_EQ(counted, expected) << "n=" << n << " w=" << w;
      EXPECT_EQ(seen.size(), counted);
      EXPECT_EQ(dedup::window_pair_count(n, w), expected);
    }
  }
}

TEST(SortedReducePartitions, MapKeyCarriesPartition) {
  const auto data = dedup::harness::fixture_dataset();
  const auto p = dedup::harness::fixture_partitioner();
  const auto rule = dedup::harness::fixture_key_rule();
  const auto record = dedup::srp_map(data.entities[2], 2, 2, p, rule);  // entity c, key 3
  EXPECT_EQ(record.key.to_string(), "2.3");
  EXPECT_EQ(record.value, 2u);
  EXPECT_EQ(dedup::srp_map(data.entities[0], 0, 0, p, rule).key.to_string(), "1.1");
  EXPECT_EQ(dedup::srp_map(data.entities[1], 1, 1, p, rule).key.to_string(), "1.2");
}

TEST(SortedReducePartitions, MissedPairFormula) {
  EXPECT_EQ(dedup::srp_missed_pairs(2, 3), 3u);
  EXPECT_EQ(dedup::srp_missed_pairs(1, 7), 0u);
  EXPECT_EQ(dedup::srp_missed_pairs(3, 4), 12u);
  EXPECT_THROW(dedup::srp_missed_pairs(0, 3), dedup::ConfigError);
}

TEST(CompositeKeyOrder, ComponentWiseWithAbsentPrefixesFirst) {
  const CompositeKey plain{std::nullopt, 1, "b", 0};
  const CompositeKey replica{2, 1, "a", 0};
  const CompositeKey original{2, 2, "a", 0};
  const CompositeKey later{2, 2, "a", 1};
  EXPECT_LT(plain, replica);
  EXPECT_LT(replica, original);
  EXPECT_LT(original, later);
  EXPECT_TRUE(replica.is_replica());
  EXPECT_FALSE(original.is_replica());
  EXPECT_FALSE(plain.is_replica());
  EXPECT_EQ(replica.to_string(), "2.1.a");
  EXPECT_EQ(plain.to_string(), "1.b");
}

TEST(CompositeKeyOrder, IsAStrictTotalOrder) {
  std::mt19937 rng(5);
  auto random_key = [&] {
    CompositeKey k;
    if (rng() % 2) k.boundary = rng() % 3;
    if (rng() % 2) k.partition = rng() % 3;
    k.blocking_key = std::string(1, static_cast<char>('a' + rng() % 3));
    k.entity_rank = rng() % 3;
    return k;
  };
  for (int trial = 0; trial < 2000; ++trial) {
    const auto a = random_key(), b = random_key(), c = random_key();
    EXPECT_EQ((a < b) + (b < a) + (a == b), 1);
    if (a < b && b < c) {
      EXPECT_LT(a, c);
    }
  }
}

}  // namespace
