#pragma once

// In-process MapReduce engine.
//
// A job splits its input into `num_mappers` contiguous slices, runs one map
// task per slice, routes every emitted (key, value) pair to one of
// `num_reducers` reduce tasks, stable-sorts each reducer's input by key and
// hands runs of keys that belong to the same group to the reduce function.
// Map tasks run concurrently, reduce tasks run concurrently after all map
// tasks have finished.
//
// The result is identical to a sequential run of the same job: map outputs are
// concatenated per reducer in mapper order (i.e. input order) before the
// stable sort, so neither the thread count nor scheduling order can leak into
// the output.

#include <algorithm>
#include <atomic>
#include <concepts>
#include <cstddef>
#include <exception>
#include <functional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "dedup/error.hpp"

namespace dedup::mr {

template <class K, class V>
struct KeyValue {
  K key;
  V value;

  bool operator==(const KeyValue&) const = default;
};

enum class Phase { map, reduce };

inline const char* to_string(Phase phase) {
  return phase == Phase::map ? "map" : "reduce";
}

// A user map or reduce function threw. Carries the owning task and the
// original exception.
class TaskError : public Error {
 public:
  TaskError(Phase phase, std::size_t task, std::size_t job, std::exception_ptr cause,
            const std::string& detail)
      : Error(describe(phase, task, job, detail)),
        phase_(phase),
        task_(task),
        job_(job),
        cause_(std::move(cause)),
        detail_(detail) {}

  Phase phase() const noexcept { return phase_; }
  std::size_t task() const noexcept { return task_; }
  // 1-based index of the job inside a chain; 0 for a standalone job.
  std::size_t job() const noexcept { return job_; }
  const std::exception_ptr& cause() const noexcept { return cause_; }

  TaskError in_job(std::size_t job) const { return {phase_, task_, job, cause_, detail_}; }

 private:
  static std::string describe(Phase phase, std::size_t task, std::size_t job,
                              const std::string& detail) {
    std::string out;
    if (job != 0) out += "job " + std::to_string(job) + ": ";
    out += std::string(to_string(phase)) + " task " + std::to_string(task) + ": " + detail;
    return out;
  }

  Phase phase_;
  std::size_t task_;
  std::size_t job_;
  std::exception_ptr cause_;
  std::string detail_;
};

template <class K>
struct JobConfig {
  std::size_t num_mappers = 1;
  std::size_t num_reducers = 1;
  // Worker threads per phase; 0 uses the hardware concurrency.
  std::size_t threads = 0;
  // Key -> reducer index in [0, num_reducers). May be empty when there is a
  // single reducer.
  std::function<std::size_t(const K&)> route;
  // Whether two adjacent keys of a sorted reducer input belong to the same
  // reduce call. Empty means key equivalence.
  std::function<bool(const K&, const K&)> same_group;

  void validate() const {
    if (num_mappers == 0) throw ConfigError("job needs at least one mapper");
    if (num_reducers == 0) throw ConfigError("job needs at least one reducer");
    if (num_reducers > 1 && !route) throw ConfigError("job with several reducers needs a route function");
  }
};

template <class K, class V>
class MapContext {
 public:
  MapContext(std::size_t task, const JobConfig<K>& config,
             std::vector<std::vector<KeyValue<K, V>>>& buckets)
      : task_(task), config_(config), buckets_(buckets) {}

  void emit(K key, V value) {
    std::size_t target = 0;
    if (config_.route) {
      target = config_.route(key);
      if (target >= buckets_.size()) {
        throw PartitionError("route returned reducer " + std::to_string(target) + " for a job with " +
                             std::to_string(buckets_.size()) + " reducers");
      }
    }
    buckets_[target].push_back({std::move(key), std::move(value)});
    ++emitted_;
  }

  std::size_t task() const noexcept { return task_; }
  std::size_t num_reducers() const noexcept { return buckets_.size(); }
  std::size_t emitted() const noexcept { return emitted_; }

 private:
  std::size_t task_;
  const JobConfig<K>& config_;
  std::vector<std::vector<KeyValue<K, V>>>& buckets_;
  std::size_t emitted_ = 0;
};

template <class K, class V, class Out>
class ReduceContext {
 public:
  ReduceContext(std::size_t reducer, std::vector<Out>& output, std::vector<KeyValue<K, V>>& side)
      : reducer_(reducer), output_(output), side_(side) {}

  void emit(Out out) { output_.push_back(std::move(out)); }

  // Secondary stream, typically the input of a chained job.
  void emit_side(K key, V value) { side_.push_back({std::move(key), std::move(value)}); }

  // Free-form work counter (e.g. comparisons executed) reported per reducer.
  void add_work(std::size_t units) noexcept { work_ += units; }

  std::size_t reducer() const noexcept { return reducer_; }
  std::size_t work() const noexcept { return work_; }

 private:
  std::size_t reducer_;
  std::vector<Out>& output_;
  std::vector<KeyValue<K, V>>& side_;
  std::size_t work_ = 0;
};

template <class K, class V, class Out>
struct JobResult {
  std::vector<std::vector<Out>> outputs;                  // per reducer, emission order
  std::vector<std::vector<KeyValue<K, V>>> side_outputs;  // per reducer
  std::vector<std::size_t> mapper_output;                 // pairs emitted per map task
  std::vector<std::size_t> reducer_input;                 // pairs received per reduce task
  std::vector<std::size_t> reducer_work;
  std::vector<std::size_t> reduce_calls;

  std::size_t map_output_count() const {
    std::size_t total = 0;
    for (auto n : mapper_output) total += n;
    return total;
  }

  std::vector<Out> merged_output() const {
    std::vector<Out> merged;
    for (const auto& part : outputs) merged.insert(merged.end(), part.begin(), part.end());
    return merged;
  }

  std::vector<KeyValue<K, V>> merged_side_output() const {
    std::vector<KeyValue<K, V>> merged;
    for (const auto& part : side_outputs) merged.insert(merged.end(), part.begin(), part.end());
    return merged;
  }
};

// Contiguous chunking; slice sizes differ by at most one and the first
// `n % m` slices are the larger ones.
template <class T>
std::vector<std::span<const T>> split_input(std::span<const T> input, std::size_t m) {
  if (m == 0) throw ConfigError("input must be split into at least one slice");
  std::vector<std::span<const T>> slices;
  slices.reserve(m);
  const std::size_t base = input.size() / m;
  const std::size_t extra = input.size() % m;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t len = base + (i < extra ? 1 : 0);
    slices.push_back(input.subspan(offset, len));
    offset += len;
  }
  return slices;
}

namespace detail {

inline std::size_t resolve_threads(std::size_t requested) {
  if (requested != 0) return requested;
  const auto hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs fn(0..count-1) on up to `threads` workers. Returns one exception slot
// per task.
template <class Fn>
std::vector<std::exception_ptr> run_tasks(std::size_t count, std::size_t threads, Fn&& fn) {
  std::vector<std::exception_ptr> failures(count);
  auto guarded = [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::min(count, threads);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) guarded(i);
    return failures;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) guarded(i);
      });
    }
  }
  return failures;
}

inline std::string what_of(const std::exception_ptr& ptr) {
  try {
    std::rethrow_exception(ptr);
  } catch (const std::exception& e) {
    return e.what();
  } catch (...) {
    return "unknown exception";
  }
}

// Lowest-indexed failure wins so the surfaced error is deterministic.
inline void rethrow_first(const std::vector<std::exception_ptr>& failures, Phase phase) {
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (failures[i]) throw TaskError(phase, i, 0, failures[i], what_of(failures[i]));
  }
}

template <class M, class In, class Ctx>
void invoke_map(M& mapper, const In& in, Ctx& ctx) {
  if constexpr (requires { mapper.map(in, ctx); }) {
    mapper.map(in, ctx);
  } else {
    mapper(in, ctx);
  }
}

template <class M, class Ctx>
void invoke_configure(M& mapper, Ctx& ctx) {
  if constexpr (requires { mapper.configure(ctx); }) mapper.configure(ctx);
}

template <class M, class Ctx>
void invoke_close(M& mapper, Ctx& ctx) {
  if constexpr (requires { mapper.close(ctx); }) mapper.close(ctx);
}

template <class R, class Group, class Ctx>
void invoke_reduce(R& reducer, Group group, Ctx& ctx) {
  if constexpr (requires { reducer.reduce(group, ctx); }) {
    reducer.reduce(group, ctx);
  } else {
    reducer(group, ctx);
  }
}

}  // namespace detail

// Bundles the types and functions of one job. Mapper and Reducer are copied
// per task, so each task starts from the prototype's state.
//
// Mapper: either a callable (const In&, MapContext<K, V>&) or an object with
// map(const In&, MapContext&) and optional configure(MapContext&) /
// close(MapContext&) hooks run before the first and after the last record of
// a task.
// Reducer: callable (std::span<const KeyValue<K, V>>, ReduceContext<K, V, Out>&)
// or an object with an equivalent reduce member.
template <class K, class V, class Out, class Mapper, class Reducer>
struct JobSpec {
  using key_type = K;
  using value_type = V;
  using output_type = Out;
  using result_type = JobResult<K, V, Out>;

  JobConfig<K> config;
  Mapper mapper;
  Reducer reducer;
};

template <class K, class V, class Out, class Mapper, class Reducer>
JobSpec<K, V, Out, Mapper, Reducer> make_job(JobConfig<K> config, Mapper mapper, Reducer reducer) {
  return {std::move(config), std::move(mapper), std::move(reducer)};
}

template <class In, class K, class V, class Out, class Mapper, class Reducer>
JobResult<K, V, Out> run_job(std::span<const In> input, const JobSpec<K, V, Out, Mapper, Reducer>& job) {
  using Pair = KeyValue<K, V>;
  const auto& config = job.config;
  config.validate();
  const std::size_t m = config.num_mappers;
  const std::size_t r = config.num_reducers;
  const std::size_t threads = detail::resolve_threads(config.threads);

  const auto slices = split_input(input, m);
  // buckets[mapper][reducer]
  std::vector<std::vector<std::vector<Pair>>> buckets(m, std::vector<std::vector<Pair>>(r));

  JobResult<K, V, Out> result;
  result.mapper_output.assign(m, 0);

  auto map_failures = detail::run_tasks(m, threads, [&](std::size_t task) {
    Mapper mapper = job.mapper;
    MapContext<K, V> ctx(task, config, buckets[task]);
    detail::invoke_configure(mapper, ctx);
    for (const In& record : slices[task]) detail::invoke_map(mapper, record, ctx);
    detail::invoke_close(mapper, ctx);
    result.mapper_output[task] = ctx.emitted();
  });
  detail::rethrow_first(map_failures, Phase::map);

  result.outputs.resize(r);
  result.side_outputs.resize(r);
  result.reducer_input.assign(r, 0);
  result.reducer_work.assign(r, 0);
  result.reduce_calls.assign(r, 0);

  auto same_group = [&config](const K& a, const K& b) {
    if (config.same_group) return config.same_group(a, b);
    return !(a < b) && !(b < a);
  };

  auto reduce_failures = detail::run_tasks(r, threads, [&](std::size_t task) {
    std::vector<Pair> input_list;
    std::size_t total = 0;
    for (std::size_t mapper = 0; mapper < m; ++mapper) total += buckets[mapper][task].size();
    input_list.reserve(total);
    for (std::size_t mapper = 0; mapper < m; ++mapper) {
      auto& bucket = buckets[mapper][task];
      std::move(bucket.begin(), bucket.end(), std::back_inserter(input_list));
      std::vector<Pair>().swap(bucket);
    }
    std::stable_sort(input_list.begin(), input_list.end(),
                     [](const Pair& a, const Pair& b) { return a.key < b.key; });
    result.reducer_input[task] = input_list.size();

    Reducer reducer = job.reducer;
    ReduceContext<K, V, Out> ctx(task, result.outputs[task], result.side_outputs[task]);
    const std::span<const Pair> sorted(input_list);
    std::size_t begin = 0;
    while (begin < sorted.size()) {
      std::size_t end = begin + 1;
      while (end < sorted.size() && same_group(sorted[end - 1].key, sorted[end].key)) ++end;
      detail::invoke_reduce(reducer, sorted.subspan(begin, end - begin), ctx);
      ++result.reduce_calls[task];
      begin = end;
    }
    result.reducer_work[task] = ctx.work();
  });
  detail::rethrow_first(reduce_failures, Phase::reduce);

  return result;
}

template <class Result1, class Result2>
struct ChainResult {
  Result1 first;
  Result2 second;
};

// Runs `first`, then feeds the merged side output of `first` (reducer order)
// into `second`. Task errors are re-raised tagged with the 1-based job index.
template <class In, class Spec1, class Spec2>
auto chain_jobs(std::span<const In> input, const Spec1& first, const Spec2& second)
    -> ChainResult<typename Spec1::result_type, typename Spec2::result_type> {
  ChainResult<typename Spec1::result_type, typename Spec2::result_type> out;
  try {
    out.first = run_job(input, first);
  } catch (const TaskError& e) {
    throw e.in_job(1);
  }
  const auto handoff = out.first.merged_side_output();
  try {
    out.second = run_job(std::span(handoff), second);
  } catch (const TaskError& e) {
    throw e.in_job(2);
  }
  return out;
}

}  // namespace dedup::mr
