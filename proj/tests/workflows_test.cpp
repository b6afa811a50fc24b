#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dedup/harness/dataset.hpp"
#include "dedup/workflows.hpp"
#include "random_case.hpp"

namespace {

using dedup::WorkflowOptions;
using testing_support::IdPair;
using testing_support::to_id_set;
using testing_support::to_ids;

class Fixture : public ::testing::Test {
 protected:
  dedup::Dataset data = dedup::harness::fixture_dataset();
  dedup::KeyRule rule = dedup::harness::fixture_key_rule();
  dedup::PartitionFunction p = dedup::harness::fixture_partitioner();

  WorkflowOptions options(std::size_t mappers = 3) const {
    WorkflowOptions o;
    o.window = 3;
    o.mappers = mappers;
    return o;
  }

  std::set<IdPair> ids(const std::vector<dedup::Correspondence>& pairs) const {
    return to_id_set(pairs, data.entities);
  }
};

const std::set<IdPair> kFifteen = {
    {"a", "b"}, {"a", "d"}, {"b", "d"}, {"b", "e"}, {"b", "f"}, {"c", "f"}, {"c", "g"}, {"c", "h"},
    {"c", "i"}, {"d", "e"}, {"e", "f"}, {"e", "h"}, {"f", "h"}, {"g", "h"}, {"g", "i"},
};
const std::set<IdPair> kBoundary = {{"c", "f"}, {"c", "h"}, {"g", "h"}};

TEST_F(Fixture, StandardBlockingComparesWithinBlocks) {
  const auto result = dedup::run_standard_blocking(data.entities, rule, dedup::harness::fixture_block_router, 2,
                                                   options());
  // Blocks: key 1 {a,d}, key 2 {b,e,f,h}, key 3 {c,g,i}.
  EXPECT_EQ(result.stats.comparisons, 1u + 6u + 3u);
  EXPECT_EQ(result.stats.per_reducer_input, (std::vector<std::size_t>{5, 4}));
  EXPECT_EQ(result.stats.per_reducer_comparisons, (std::vector<std::size_t>{4, 6}));
  EXPECT_EQ(result.pairs.size(), 10u);
}

TEST_F(Fixture, StandardBlockingWithMatchingFindsDuplicates) {
  auto o = options();
  o.match = dedup::MatchStrategy::publication(1, 2);
  const auto result = dedup::run_standard_blocking(data.entities, rule, dedup::harness::fixture_block_router, 2, o);
  EXPECT_EQ(ids(result.pairs), (std::set<IdPair>{{"a", "d"}, {"c", "i"}}));
  for (const auto& c : result.pairs) {
    ASSERT_TRUE(c.similarity.has_value());
    EXPECT_GE(*c.similarity, 0.75f);
  }
}

TEST_F(Fixture, StandardBlockingRouterOutOfRange) {
  auto bad = [](std::string_view) { return std::uint32_t{3}; };
  EXPECT_THROW(dedup::run_standard_blocking(data.entities, rule, bad, 2, options()), dedup::mr::TaskError);
}

TEST_F(Fixture, SequentialWorkflowMatchesReference) {
  const auto result = dedup::run_sequential_sn(data.entities, rule, options(1));
  EXPECT_EQ(ids(result.pairs), kFifteen);
  EXPECT_EQ(result.stats.comparisons, 15u);
}

TEST_F(Fixture, SrpMissesTheBoundaryPairs) {
  const auto result = dedup::run_srp(data.entities, rule, p, options());
  EXPECT_EQ(result.pairs.size(), 12u);
  std::set<IdPair> missing;
  for (const auto& pair : kFifteen) {
    if (!ids(result.pairs).count(pair)) missing.insert(pair);
  }
  EXPECT_EQ(missing, kBoundary);
  EXPECT_EQ(missing.size(), dedup::srp_missed_pairs(2, 3));
  EXPECT_EQ(result.stats.per_reducer_input, (std::vector<std::size_t>{6, 3}));
}

TEST_F(Fixture, JobSnSecondPhaseProducesExactlyTheBoundaryPairs) {
  const auto result = dedup::run_jobsn(data.entities, rule, p, options());
  EXPECT_EQ(ids(result.boundary_pairs), kBoundary);
  EXPECT_EQ(result.boundary_pairs.size(), 3u);
  EXPECT_EQ(ids(result.pairs), kFifteen);
  EXPECT_EQ(result.pairs.size(), 15u);
  EXPECT_EQ(result.stats.jobs_run, 2u);
  // Phase 2 sees f h c g; of its five window pairs (f,h) and (c,g) are
  // filtered, so 12 + 3 comparisons in total.
  EXPECT_EQ(result.stats.comparisons, 15u);
  EXPECT_TRUE(result.warnings.empty());
}

TEST_F(Fixture, RepSnReplicatesFiveEntities) {
  const auto result = dedup::run_repsn(data.entities, rule, p, options(3));
  EXPECT_EQ(ids(result.pairs), kFifteen);
  EXPECT_EQ(result.pairs.size(), 15u);
  EXPECT_EQ(result.stats.replicated_entities, 5u);
  EXPECT_LE(result.stats.replicated_entities, 3u * (2 - 1) * (3 - 1));
  // Reducer 2 gets c g i plus all five replicas but compares only f and h
  // against its own entities.
  EXPECT_EQ(result.stats.per_reducer_input, (std::vector<std::size_t>{6, 8}));
  EXPECT_EQ(result.stats.per_reducer_comparisons, (std::vector<std::size_t>{9, 6}));
}

TEST_F(Fixture, SinglePartitionNeedsNoBoundaryWork) {
  const dedup::PartitionFunction single;
  const auto jobsn = dedup::run_jobsn(data.entities, rule, single, options());
  EXPECT_TRUE(jobsn.boundary_pairs.empty());
  EXPECT_EQ(ids(jobsn.pairs), kFifteen);
  const auto repsn = dedup::run_repsn(data.entities, rule, single, options());
  EXPECT_EQ(repsn.stats.replicated_entities, 0u);
  EXPECT_EQ(ids(repsn.pairs), kFifteen);
  const auto srp = dedup::run_srp(data.entities, rule, single, options());
  EXPECT_EQ(ids(srp.pairs), kFifteen);
}

TEST_F(Fixture, InvalidOptionsRejected) {
  auto o = options();
  o.window = 1;
  EXPECT_THROW(dedup::run_repsn(data.entities, rule, p, o), dedup::ConfigError);
  o = options(0);
  EXPECT_THROW(dedup::run_jobsn(data.entities, rule, p, o), dedup::ConfigError);
  o = options();
  o.phase_two_reducers = 0;
  EXPECT_THROW(dedup::run_jobsn(data.entities, rule, p, o), dedup::ConfigError);
}

TEST_F(Fixture, UnderfullPartitionIsReported) {
  const dedup::PartitionFunction tiny{"tiny", {"1"}};  // partition 1 holds a, d
  auto o = options();
  o.window = 4;
  EXPECT_FALSE(dedup::run_repsn(data.entities, rule, tiny, o).warnings.empty());
}

TEST(RandomConfigs, ParallelWorkflowsEqualTheOracle) {
  std::mt19937_64 rng(8080);
  for (int trial = 0; trial < 150; ++trial) {
    const auto c = testing_support::make_random_case(rng);
    WorkflowOptions o;
    o.window = c.window;
    o.mappers = c.mappers;
    o.threads = 1 + trial % 3;
    const auto oracle = testing_support::window_oracle(c.entities, c.window);
    const auto rule = testing_support::case_rule();
    const std::size_t r = c.partitioner.partitions();
    SCOPED_TRACE("trial " + std::to_string(trial) + " n=" + std::to_string(c.entities.size()) +
                 " w=" + std::to_string(c.window) + " r=" + std::to_string(r) + " m=" + std::to_string(c.mappers));

    EXPECT_EQ(oracle.size(), testing_support::window_formula(c.entities.size(), c.window));

    const auto seq = dedup::run_sequential_sn(c.entities, rule, o);
    const auto jobsn = dedup::run_jobsn(c.entities, rule, c.partitioner, o);
    const auto repsn = dedup::run_repsn(c.entities, rule, c.partitioner, o);
    const auto srp = dedup::run_srp(c.entities, rule, c.partitioner, o);
    for (const auto* result : {&seq, &jobsn, &repsn}) {
      EXPECT_EQ(result->pairs.size(), oracle.size());
      EXPECT_EQ(to_id_set(result->pairs, c.entities), oracle);
      EXPECT_TRUE(result->warnings.empty());
    }

    // SRP loses exactly the window pairs that cross a partition boundary.
    std::set<IdPair> crossing;
    std::map<std::string, std::uint32_t> part_of;
    for (const auto& e : c.entities) part_of[e.id] = c.partitioner(testing_support::lower_key(e));
    for (const auto& pair : oracle) {
      if (part_of[pair.first] != part_of[pair.second]) crossing.insert(pair);
    }
    std::set<IdPair> lost = oracle;
    for (const auto& pair : to_ids(srp.pairs, c.entities)) lost.erase(pair);
    EXPECT_EQ(lost, crossing);
    EXPECT_EQ(lost.size(), dedup::srp_missed_pairs(r, c.window));
    EXPECT_EQ(to_id_set(jobsn.boundary_pairs, c.entities), crossing);

    EXPECT_LE(repsn.stats.replicated_entities, c.mappers * (r - 1) * (c.window - 1));
  }
}

TEST(RandomConfigs, JobSnIndependentOfTaskCounts) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = testing_support::make_random_case(rng);
    const auto rule = testing_support::case_rule();
    WorkflowOptions base;
    base.window = c.window;
    const auto reference = to_ids(dedup::run_jobsn(c.entities, rule, c.partitioner, base).pairs, c.entities);
    const std::multiset<IdPair> expected(reference.begin(), reference.end());
    for (std::size_t m : {1, 2, 5}) {
      for (std::size_t r2 : {1, 2, 3}) {
        WorkflowOptions o = base;
        o.mappers = m;
        o.phase_two_reducers = r2;
        const auto result = dedup::run_jobsn(c.entities, rule, c.partitioner, o);
        const auto got = to_ids(result.pairs, c.entities);
        EXPECT_EQ(std::multiset<IdPair>(got.begin(), got.end()), expected) << "m=" << m << " r2=" << r2;
        // Phase 1 and phase 2 never emit the same pair.
        std::set<IdPair> phase_two = to_id_set(result.boundary_pairs, c.entities);
        std::size_t overlap = 0;
        for (std::size_t i = 0; i + result.boundary_pairs.size() < result.pairs.size(); ++i) {
          overlap += phase_two.count({c.entities[result.pairs[i].left].id, c.entities[result.pairs[i].right].id});
        }
        EXPECT_EQ(overlap, 0u);
      }
    }
  }
}

TEST(RandomConfigs, RepSnIndependentOfMappers) {
  std::mt19937_64 rng(91);
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = testing_support::make_random_case(rng);
    const auto rule = testing_support::case_rule();
    WorkflowOptions o;
    o.window = c.window;
    const auto reference = to_id_set(dedup::run_repsn(c.entities, rule, c.partitioner, o).pairs, c.entities);
    for (std::size_t m : {2, 3, 7}) {
      o.mappers = m;
      const auto result = dedup::run_repsn(c.entities, rule, c.partitioner, o);
      EXPECT_EQ(to_id_set(result.pairs, c.entities), reference);
      EXPECT_LE(result.stats.replicated_entities, m * (c.partitioner.partitions() - 1) * (c.window - 1));
    }
  }
}

TEST(Matching, WorkflowsAgreeOnMatchedPairs) {
  dedup::harness::SyntheticSpec spec;
  spec.n = 400;
  spec.duplicate_rate = 0.2;
  spec.seed = 5;
  const auto data = dedup::harness::generate(spec).dataset;
  const auto rule = dedup::KeyRule::title_prefix(0);
  WorkflowOptions o;
  o.window = 6;
  o.mappers = 3;
  o.match = dedup::MatchStrategy::publication(0, 1);
  const auto p = dedup::make_publication_even(4);
  const auto seq = dedup::run_sequential_sn(data.entities, rule, o);
  const auto jobsn = dedup::run_jobsn(data.entities, rule, p, o);
  const auto repsn = dedup::run_repsn(data.entities, rule, p, o);
  ASSERT_FALSE(seq.pairs.empty());
  auto sorted = [](std::vector<dedup::Correspondence> v) {
    dedup::normalize(v);
    return v;
  };
  EXPECT_EQ(sorted(jobsn.pairs), sorted(seq.pairs));
  EXPECT_EQ(sorted(repsn.pairs), sorted(seq.pairs));
  EXPECT_LT(seq.pairs.size(), seq.stats.comparisons);
}

}  // namespace
