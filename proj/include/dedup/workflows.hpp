#pragma once

// End-to-end blocking workflows on the MapReduce engine:
//
//   standard blocking  one reduce call per blocking key, all pairs of a block
//   SRP                sorted reduce partitions, window per partition
//   JobSN              SRP plus a second job over the partition boundaries
//   RepSN              one job; mappers replicate boundary candidates
//
// Every workflow optionally runs a match strategy on the candidate pairs; in
// that case only matching pairs are returned (with their score).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dedup/entity.hpp"
#include "dedup/error.hpp"
#include "dedup/matching.hpp"
#include "dedup/mr/engine.hpp"
#include "dedup/partitioning.hpp"
#include "dedup/sorted_neighborhood.hpp"

namespace dedup {

struct JobStats {
  std::size_t comparisons = 0;          // pair evaluations, all jobs
  std::size_t pairs_emitted = 0;
  std::size_t replicated_entities = 0;  // RepSN only
  std::size_t jobs_run = 0;
  // Per reduce task of the first (or only) job.
  std::vector<std::size_t> per_reducer_input;
  std::vector<std::size_t> per_reducer_comparisons;
};

struct WorkflowResult {
  std::vector<Correspondence> pairs;
  JobStats stats;
  // JobSN only: pairs contributed by the boundary job.
  std::vector<Correspondence> boundary_pairs;
  std::vector<std::string> warnings;
};

struct WorkflowOptions {
  std::size_t window = 3;
  std::size_t mappers = 1;
  std::size_t threads = 0;             // engine worker threads, 0 = hardware
  std::size_t phase_two_reducers = 1;  // JobSN boundary job
  std::optional<MatchStrategy> match;
};

// Maps a blocking key to a 1-based partition.
using KeyRouter = std::function<std::uint32_t(std::string_view)>;

namespace detail {

// State shared read-only by all tasks of one workflow run.
struct RunState {
  std::span<const Entity> entities;
  std::vector<std::uint32_t> ranks;
  const KeyRule* rule = nullptr;
  const WorkflowOptions* options = nullptr;
  std::vector<EntityIndex> positions;  // map input: 0..n-1

  RunState(std::span<const Entity> e, const KeyRule& r, const WorkflowOptions& o)
      : entities(e), ranks(id_ranks(e)), rule(&r), options(&o), positions(e.size()) {
    std::iota(positions.begin(), positions.end(), EntityIndex{0});
    if (o.mappers == 0) throw ConfigError("at least one mapper is required");
    if (o.match) o.match->validate();
  }

  // Counts one comparison and emits the pair (or its match) to `ctx`.
  template <class Ctx>
  void consider(EntityIndex a, EntityIndex b, Ctx& ctx) const {
    ctx.add_work(1);
    if (!options->match) {
      ctx.emit(make_correspondence(a, b, ranks));
    } else if (auto score = match_pair(entities[a], entities[b], *options->match)) {
      ctx.emit(make_correspondence(a, b, ranks, static_cast<float>(*score)));
    }
  }

  CompositeKey key_of(EntityIndex i, std::optional<std::uint32_t> boundary,
                      std::optional<std::uint32_t> partition, BlockingKey key) const {
    return {boundary, partition, std::move(key), ranks[i]};
  }
};

template <class Result>
JobStats stats_from(const Result& job) {
  JobStats stats;
  stats.per_reducer_input = job.reducer_input;
  stats.per_reducer_comparisons = job.reducer_work;
  for (auto w : job.reducer_work) stats.comparisons += w;
  stats.jobs_run = 1;
  return stats;
}

inline std::vector<std::string> underfull_warnings(std::span<const Entity> entities, const KeyRule& rule,
                                                   const PartitionFunction& p, std::size_t w) {
  std::vector<std::size_t> counts(p.partitions(), 0);
  for (const auto& e : entities) ++counts[p(blocking_key(e, rule)) - 1];
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < w - 1) {
      warnings.push_back("partition " + std::to_string(i + 1) + " holds " + std::to_string(counts[i]) +
                         " entities (< w-1 = " + std::to_string(w - 1) +
                         "); boundary pairs spanning more than two partitions are not generated");
    }
  }
  return warnings;
}

inline mr::JobConfig<CompositeKey> partition_config(const WorkflowOptions& options, std::size_t reducers) {
  mr::JobConfig<CompositeKey> config;
  config.num_mappers = options.mappers;
  config.num_reducers = reducers;
  config.threads = options.threads;
  return config;
}

}  // namespace detail

// The sequential reference, packaged like the other workflows.
inline WorkflowResult run_sequential_sn(std::span<const Entity> entities, const KeyRule& rule,
                                        const WorkflowOptions& options) {
  require_window(options.window);
  detail::RunState state(entities, rule, options);
  const auto order = sort_by_blocking_key(entities, rule, state.ranks);

  struct Sink {
    std::vector<Correspondence>& out;
    std::size_t work = 0;
    void add_work(std::size_t n) { work += n; }
    void emit(Correspondence c) { out.push_back(c); }
  };
  WorkflowResult result;
  Sink sink{result.pairs};
  for_each_window_pair(order.size(), options.window,
                       [&](std::size_t i, std::size_t j) { state.consider(order[i], order[j], sink); });
  result.stats.comparisons = sink.work;
  result.stats.pairs_emitted = result.pairs.size();
  result.stats.per_reducer_input = {entities.size()};
  result.stats.per_reducer_comparisons = {sink.work};
  return result;
}

// Map: key = blocking key; route by `router`; one reduce call per key that
// compares all pairs of the block.
inline WorkflowResult run_standard_blocking(std::span<const Entity> entities, const KeyRule& rule,
                                            const KeyRouter& router, std::size_t reducers,
                                            const WorkflowOptions& options) {
  detail::RunState state(entities, rule, options);
  auto config = detail::partition_config(options, reducers);
  config.route = [&router, reducers](const CompositeKey& k) {
    const auto part = router(k.blocking_key);
    if (part < 1 || part > reducers) {
      throw PartitionError("router sent key '" + k.blocking_key + "' to partition " + std::to_string(part));
    }
    return static_cast<std::size_t>(part - 1);
  };
  config.same_group = [](const CompositeKey& a, const CompositeKey& b) { return a.blocking_key == b.blocking_key; };

  auto mapper = [&state](EntityIndex i, mr::MapContext<CompositeKey, EntityIndex>& ctx) {
    ctx.emit(state.key_of(i, std::nullopt, std::nullopt, blocking_key(state.entities[i], *state.rule)), i);
  };
  auto reducer = [&state](std::span<const EntityRecord> block,
                          mr::ReduceContext<CompositeKey, EntityIndex, Correspondence>& ctx) {
    for (std::size_t j = 1; j < block.size(); ++j) {
      for (std::size_t i = 0; i < j; ++i) state.consider(block[i].value, block[j].value, ctx);
    }
  };
  const auto job = mr::run_job(std::span<const EntityIndex>(state.positions),
                               mr::make_job<CompositeKey, EntityIndex, Correspondence>(config, mapper, reducer));
  WorkflowResult result;
  result.stats = detail::stats_from(job);
  result.pairs = job.merged_output();
  result.stats.pairs_emitted = result.pairs.size();
  return result;
}

inline WorkflowResult run_standard_blocking(std::span<const Entity> entities, const KeyRule& rule,
                                            const PartitionFunction& p, const WorkflowOptions& options) {
  return run_standard_blocking(entities, rule, KeyRouter(p), p.partitions(), options);
}

namespace detail {

// SRP map side shared by SRP and phase 1 of JobSN: key p(k).k, routed and
// grouped by the partition prefix.
inline auto srp_job_config(const WorkflowOptions& options, const PartitionFunction& p) {
  auto config = partition_config(options, p.partitions());
  config.route = [](const CompositeKey& k) { return static_cast<std::size_t>(*k.partition - 1); };
  config.same_group = [](const CompositeKey& a, const CompositeKey& b) { return a.partition == b.partition; };
  return config;
}

inline auto srp_mapper(const RunState& state, const PartitionFunction& p) {
  return [&state, &p](EntityIndex i, mr::MapContext<CompositeKey, EntityIndex>& ctx) {
    auto record = srp_map(state.entities[i], i, state.ranks[i], p, *state.rule);
    ctx.emit(std::move(record.key), record.value);
  };
}

}  // namespace detail

// Sorted reduce partitions: each reducer runs the window over its own,
// sorted, key range. Misses pairs that cross a partition boundary.
inline WorkflowResult run_srp(std::span<const Entity> entities, const KeyRule& rule, const PartitionFunction& p,
                              const WorkflowOptions& options) {
  require_window(options.window);
  detail::RunState state(entities, rule, options);
  const std::size_t w = options.window;
  auto reducer = [&state, w](std::span<const EntityRecord> partition,
                             mr::ReduceContext<CompositeKey, EntityIndex, Correspondence>& ctx) {
    for_each_window_pair(partition.size(), w, [&](std::size_t i, std::size_t j) {
      state.consider(partition[i].value, partition[j].value, ctx);
    });
  };
  const auto job = mr::run_job(std::span<const EntityIndex>(state.positions),
                               mr::make_job<CompositeKey, EntityIndex, Correspondence>(
                                   detail::srp_job_config(options, p), detail::srp_mapper(state, p), reducer));
  WorkflowResult result;
  result.stats = detail::stats_from(job);
  result.pairs = job.merged_output();
  result.stats.pairs_emitted = result.pairs.size();
  return result;
}

// JobSN. Phase 1 is SRP whose reducers additionally emit their first w-1
// entities as (i-1).i.k (i > 1) and their last w-1 entities as i.i.k (i < r).
// Phase 2 groups those by boundary prefix, runs the window and keeps only
// pairs whose entities come from different partitions; the others were
// already produced in phase 1.
inline WorkflowResult run_jobsn(std::span<const Entity> entities, const KeyRule& rule, const PartitionFunction& p,
                                const WorkflowOptions& options) {
  require_window(options.window);
  if (options.phase_two_reducers == 0) throw ConfigError("JobSN needs at least one phase-two reducer");
  detail::RunState state(entities, rule, options);
  const std::size_t w = options.window;
  const auto r = static_cast<std::uint32_t>(p.partitions());

  auto phase_one = [&state, w, r](std::span<const EntityRecord> partition,
                                  mr::ReduceContext<CompositeKey, EntityIndex, Correspondence>& ctx) {
    for_each_window_pair(partition.size(), w, [&](std::size_t i, std::size_t j) {
      state.consider(partition[i].value, partition[j].value, ctx);
    });
    const std::uint32_t part = *partition.front().key.partition;
    const std::size_t edge = std::min(w - 1, partition.size());
    if (part > 1) {
      for (const auto& rec : partition.first(edge)) {
        ctx.emit_side({part - 1, part, rec.key.blocking_key, rec.key.entity_rank}, rec.value);
      }
    }
    if (part < r) {
      for (const auto& rec : partition.last(edge)) {
        ctx.emit_side({part, part, rec.key.blocking_key, rec.key.entity_rank}, rec.value);
      }
    }
  };

  const std::size_t r2 = options.phase_two_reducers;
  auto config2 = detail::partition_config(options, r2);
  config2.route = [r2](const CompositeKey& k) { return static_cast<std::size_t>((*k.boundary - 1) % r2); };
  config2.same_group = [](const CompositeKey& a, const CompositeKey& b) { return a.boundary == b.boundary; };
  auto identity = [](const EntityRecord& rec, mr::MapContext<CompositeKey, EntityIndex>& ctx) {
    ctx.emit(rec.key, rec.value);
  };
  auto phase_two = [&state, w](std::span<const EntityRecord> boundary,
                               mr::ReduceContext<CompositeKey, EntityIndex, Correspondence>& ctx) {
    for_each_window_pair(boundary.size(), w, [&](std::size_t i, std::size_t j) {
      if (boundary[i].key.partition != boundary[j].key.partition) {
        state.consider(boundary[i].value, boundary[j].value, ctx);
      }
    });
  };

  const auto chained = mr::chain_jobs(
      std::span<const EntityIndex>(state.positions),
      mr::make_job<CompositeKey, EntityIndex, Correspondence>(detail::srp_job_config(options, p),
                                                              detail::srp_mapper(state, p), phase_one),
      mr::make_job<CompositeKey, EntityIndex, Correspondence>(config2, identity, phase_two));

  WorkflowResult result;
  result.stats = detail::stats_from(chained.first);
  for (auto c : chained.second.reducer_work) result.stats.comparisons += c;
  result.stats.jobs_run = 2;
  result.pairs = chained.first.merged_output();
  result.boundary_pairs = chained.second.merged_output();
  result.pairs.insert(result.pairs.end(), result.boundary_pairs.begin(), result.boundary_pairs.end());
  result.stats.pairs_emitted = result.pairs.size();
  result.warnings = detail::underfull_warnings(entities, rule, p, w);
  return result;
}

namespace detail {

// RepSN map task. Keeps, per partition i < r, the w-1 entities with the
// highest (blocking key, id) seen by this task and emits them on close as
// (i+1).i.k so they reach the succeeding reducer as well.
class ReplicatingMapper {
 public:
  ReplicatingMapper(const RunState& state, const PartitionFunction& p) : state_(&state), p_(&p) {}

  void configure(mr::MapContext<CompositeKey, EntityIndex>&) {
    buffers_.assign(p_->partitions() - 1, {});
  }

  void map(EntityIndex i, mr::MapContext<CompositeKey, EntityIndex>& ctx) {
    BlockingKey key = blocking_key(state_->entities[i], *state_->rule);
    const std::uint32_t part = (*p_)(key);
    const std::size_t keep = state_->options->window - 1;
    if (part < p_->partitions()) {
      auto& buffer = buffers_[part - 1];
      Candidate candidate{key, state_->ranks[i], i};
      if (buffer.size() < keep) {
        buffer.push_back(std::move(candidate));
      } else {
        auto smallest = std::min_element(buffer.begin(), buffer.end());
        if (*smallest < candidate) *smallest = std::move(candidate);
      }
    }
    ctx.emit(state_->key_of(i, part, part, std::move(key)), i);
  }

  void close(mr::MapContext<CompositeKey, EntityIndex>& ctx) {
    for (std::uint32_t part = 1; part <= buffers_.size(); ++part) {
      for (auto& c : buffers_[part - 1]) ctx.emit({part + 1, part, std::move(c.key), c.rank}, c.index);
    }
  }

 private:
  struct Candidate {
    BlockingKey key;
    std::uint32_t rank = 0;
    EntityIndex index = 0;

    bool operator<(const Candidate& o) const { return key != o.key ? key < o.key : rank < o.rank; }
  };

  const RunState* state_;
  const PartitionFunction* p_;
  std::vector<std::vector<Candidate>> buffers_;
};

}  // namespace detail

// RepSN: a single job. Reducer i receives its own partition plus the replicas
// of partition i-1 at the head of its sorted input, keeps the last w-1
// replicas and returns only pairs involving at least one of its own entities.
inline WorkflowResult run_repsn(std::span<const Entity> entities, const KeyRule& rule, const PartitionFunction& p,
                                const WorkflowOptions& options) {
  require_window(options.window);
  detail::RunState state(entities, rule, options);
  const std::size_t w = options.window;

  auto config = detail::partition_config(options, p.partitions());
  config.route = [](const CompositeKey& k) { return static_cast<std::size_t>(*k.boundary - 1); };
  config.same_group = [](const CompositeKey& a, const CompositeKey& b) { return a.boundary == b.boundary; };

  auto reducer = [&state, w](std::span<const EntityRecord> input,
                             mr::ReduceContext<CompositeKey, EntityIndex, Correspondence>& ctx) {
    std::size_t replicas = 0;
    while (replicas < input.size() && input[replicas].key.is_replica()) ++replicas;
    const auto list = input.subspan(replicas > w - 1 ? replicas - (w - 1) : 0);
    for_each_window_pair(list.size(), w, [&](std::size_t i, std::size_t j) {
      if (list[i].key.is_replica() && list[j].key.is_replica()) return;
      state.consider(list[i].value, list[j].value, ctx);
    });
  };

  const auto job = mr::run_job(std::span<const EntityIndex>(state.positions),
                               mr::make_job<CompositeKey, EntityIndex, Correspondence>(
                                   config, detail::ReplicatingMapper(state, p), reducer));
  WorkflowResult result;
  result.stats = detail::stats_from(job);
  result.stats.replicated_entities = job.map_output_count() - entities.size();
  result.pairs = job.merged_output();
  result.stats.pairs_emitted = result.pairs.size();
  result.warnings = detail::underfull_warnings(entities, rule, p, w);
  return result;
}

}  // namespace dedup
