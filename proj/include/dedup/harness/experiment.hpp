#pragma once

// Experiment orchestration: configuration, dataset preparation, running one
// or several workflows, cross-workflow pair-set assertions and the skew study.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dedup/entity.hpp"
#include "dedup/error.hpp"
#include "dedup/harness/dataset.hpp"
#include "dedup/harness/report.hpp"
#include "dedup/matching.hpp"
#include "dedup/partitioning.hpp"
#include "dedup/workflows.hpp"

namespace dedup::harness {

using nlohmann::json;

inline const std::vector<std::string>& workflow_names() {
  static const std::vector<std::string> names = {"seq-sn", "standard", "srp", "jobsn", "repsn"};
  return names;
}

// Workflows whose result must equal the sequential Sorted Neighborhood.
inline bool is_complete_sn(std::string_view name) { return name == "seq-sn" || name == "jobsn" || name == "repsn"; }

struct MatcherSpec {
  std::string attribute;  // name or numeric index
  std::string function = "edit";
  double weight = 1.0;
};

struct StrategySpec {
  std::vector<MatcherSpec> matchers;
  double threshold = 0.75;

  // {"matchers": [{"attr": "title", "fn": "edit", "weight": 1}], "threshold": 0.75}
  static StrategySpec from_json(const json& j) {
    StrategySpec spec;
    try {
      for (const auto& m : j.at("matchers")) {
        MatcherSpec ms;
        const auto& attr = m.at("attr");
        ms.attribute = attr.is_number() ? std::to_string(attr.get<std::size_t>()) : attr.get<std::string>();
        ms.function = m.at("fn").get<std::string>();
        ms.weight = m.value("weight", 1.0);
        spec.matchers.push_back(std::move(ms));
      }
      spec.threshold = j.value("threshold", 0.75);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("match strategy: ") + e.what());
    }
    return spec;
  }

  MatchStrategy resolve(const Dataset& data) const {
    MatchStrategy strategy;
    strategy.threshold = threshold;
    for (const auto& m : matchers) {
      std::size_t index = 0;
      if (!m.attribute.empty() && std::all_of(m.attribute.begin(), m.attribute.end(),
                                                 [](unsigned char c) { return std::isdigit(c) != 0; })) {
        index = std::stoull(m.attribute);
      } else {
        index = data.attribute_index(m.attribute);
      }
      strategy.matchers.push_back({index, m.function, similarity_by_name(m.function), m.weight});
    }
    strategy.validate();
    return strategy;
  }
};

inline StrategySpec load_strategy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open strategy file '" + path + "'");
  try {
    return StrategySpec::from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError("strategy file '" + path + "': " + e.what());
  }
}

struct PartitionerSpec {
  std::string name = "single";
  std::string kind = "named";  // named | manual | even | skewed
  std::vector<std::string> boundaries;
  std::size_t r = 0;
  double fraction = 0.0;
  std::string base = "even8";
  std::uint64_t seed = 0;

  // {name, kind: manual|even|skewed, boundaries|r|f, base, seed}
  static PartitionerSpec from_json(const json& j) {
    PartitionerSpec spec;
    try {
      if (j.is_string()) {
        spec.name = j.get<std::string>();
        return spec;
      }
      spec.name = j.value("name", std::string("custom"));
      spec.kind = j.value("kind", std::string("named"));
      if (j.contains("boundaries")) spec.boundaries = j.at("boundaries").get<std::vector<std::string>>();
      spec.r = j.value("r", std::size_t{0});
      spec.fraction = j.value("f", 0.0);
      spec.base = j.value("base", std::string("even8"));
      spec.seed = j.value("seed", std::uint64_t{0});
    } catch (const json::exception& e) {
      throw ConfigError(std::string("partitioner: ") + e.what());
    }
    return spec;
  }
};

struct ResolvedPartitioner {
  PartitionFunction function;
  std::optional<SkewTransform> skew;
  // Non-monotone router for standard blocking only ("fixture-blocks").
  std::optional<KeyRouter> block_router;
  std::size_t router_partitions = 0;
};

inline std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Named partitioners: single, fixture-range, fixture-blocks, manual, even
// (needs reducers), evenN, and <family>_<percent> for a skewed variant (e.g.
// even8_85).
inline ResolvedPartitioner named_partitioner(const std::string& raw, std::optional<std::size_t> reducers,
                                             std::uint64_t seed) {
  const std::string name = lowercase(raw);
  ResolvedPartitioner out;
  if (const auto underscore = name.rfind('_'); underscore != std::string::npos) {
    const auto base = named_partitioner(name.substr(0, underscore), reducers, seed);
    double percent = 0.0;
    try {
      percent = std::stod(name.substr(underscore + 1));
    } catch (const std::logic_error&) {
      throw ConfigError("bad skew suffix in partitioner '" + raw + "'");
    }
    out.skew = make_skewed_partitioner(base.function, percent / 100.0, seed);
    out.function = out.skew->partitioner;
    return out;
  }
  if (name == "single") {
    out.function = PartitionFunction();
  } else if (name == "fixture-range") {
    out.function = fixture_partitioner();
  } else if (name == "fixture-blocks") {
    out.block_router = KeyRouter(fixture_block_router);
    out.router_partitions = 2;
    out.function = PartitionFunction("fixture-blocks", {"1", "2"});  // used for profiles only
  } else if (name == "manual") {
    out.function = manual_partitioner();
  } else if (name == "even") {
    if (!reducers) throw ConfigError("partitioner 'even' needs --reducers");
    out.function = make_publication_even(*reducers);
  } else if (name.starts_with("even") && name.size() > 4 &&
             std::all_of(name.begin() + 4, name.end(), [](unsigned char c) { return std::isdigit(c); })) {
    out.function = make_publication_even(std::stoull(name.substr(4)));
  } else {
    throw ConfigError("unknown partitioner '" + raw + "'");
  }
  return out;
}

inline ResolvedPartitioner resolve_partitioner(const PartitionerSpec& spec, std::optional<std::size_t> reducers) {
  ResolvedPartitioner out;
  if (spec.kind == "named") {
    out = named_partitioner(spec.name, reducers, spec.seed);
  } else if (spec.kind == "manual") {
    out.function = PartitionFunction(spec.name, spec.boundaries);
  } else if (spec.kind == "even") {
    const std::size_t r = spec.r != 0 ? spec.r : reducers.value_or(0);
    out.function = make_publication_even(r).renamed(spec.name == "custom" ? "Even" + std::to_string(r) : spec.name);
  } else if (spec.kind == "skewed") {
    const auto base = named_partitioner(spec.base, reducers, spec.seed);
    out.skew = make_skewed_partitioner(base.function, spec.fraction, spec.seed);
    out.function = out.skew->partitioner;
  } else {
    throw ConfigError("unknown partitioner kind '" + spec.kind + "'");
  }
  const std::size_t r = out.block_router ? out.router_partitions : out.function.partitions();
  if (reducers && *reducers != r) {
    throw ConfigError("partitioner '" + out.function.name() + "' has " + std::to_string(r) +
                      " partitions but " + std::to_string(*reducers) + " reducers were requested");
  }
  return out;
}

struct ExperimentConfig {
  std::optional<std::string> input;
  Format format = Format::tsv;
  std::optional<SyntheticSpec> synthetic;
  std::optional<std::string> key_attribute;
  std::optional<std::size_t> key_prefix;
  PartitionerSpec partitioner;
  std::optional<std::size_t> reducers;
  std::optional<StrategySpec> strategy;
  std::vector<std::string> workflows = {"seq-sn"};
  std::size_t window = 3;
  std::size_t mappers = 1;
  std::size_t threads = 0;
  std::size_t phase_two_reducers = 1;
  // Groups of workflows whose pair sets must be equal. Empty: all named
  // complete-SN workflows (seq-sn, jobsn, repsn) must agree.
  std::vector<std::vector<std::string>> assert_equal;

  // Sections: "dataset" {input, format | synthetic}, "key" {attribute,
  // prefix}, "partitioner", "strategy"; scalars window, mappers, reducers,
  // threads, phase_two_reducers, workflows, assert_equal.
  static ExperimentConfig from_json(const json& j) {
    ExperimentConfig c;
    try {
      if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        if (d.contains("input")) c.input = d.at("input").get<std::string>();
        if (d.contains("format")) c.format = parse_format(d.at("format").get<std::string>());
        if (d.contains("synthetic")) c.synthetic = SyntheticSpec::parse(d.at("synthetic").get<std::string>());
      }
      if (j.contains("key")) {
        const auto& k = j.at("key");
        if (k.contains("attribute")) c.key_attribute = k.at("attribute").get<std::string>();
        if (k.contains("prefix")) c.key_prefix = k.at("prefix").get<std::size_t>();
      }
      if (j.contains("partitioner")) c.partitioner = PartitionerSpec::from_json(j.at("partitioner"));
      if (j.contains("strategy")) c.strategy = StrategySpec::from_json(j.at("strategy"));
      if (j.contains("workflows")) c.workflows = j.at("workflows").get<std::vector<std::string>>();
      if (j.contains("workflow")) c.workflows = {j.at("workflow").get<std::string>()};
      if (j.contains("reducers")) c.reducers = j.at("reducers").get<std::size_t>();
      c.window = j.value("window", c.window);
      c.mappers = j.value("mappers", c.mappers);
      c.threads = j.value("threads", c.threads);
      c.phase_two_reducers = j.value("phase_two_reducers", c.phase_two_reducers);
      if (j.contains("assert_equal")) c.assert_equal = j.at("assert_equal").get<std::vector<std::vector<std::string>>>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    try {
      return from_json(json::parse(in));
    } catch (const json::parse_error& e) {
      throw ConfigError("config file '" + path + "': " + e.what());
    }
  }
};

struct PreparedRun {
  Dataset dataset;
  std::vector<std::pair<std::string, std::string>> planted;
  KeyRule rule;
  ResolvedPartitioner partitioner;
  WorkflowOptions options;
  std::string dataset_label;
};

inline PreparedRun prepare(const ExperimentConfig& config) {
  PreparedRun run;
  bool fixture = false;
  if (config.input && config.synthetic) throw ConfigError("choose either an input file or a synthetic dataset");
  if (config.input) {
    run.dataset = ingest(*config.input, config.format);
    run.dataset_label = *config.input;
  } else if (config.synthetic) {
    auto generated = generate(*config.synthetic);
    run.dataset = std::move(generated.dataset);
    run.planted = std::move(generated.planted);
    fixture = config.synthetic->fixture;
    run.dataset_label = fixture ? "fixture"
                                : "synthetic:n=" + std::to_string(config.synthetic->n) +
                                      ",seed=" + std::to_string(config.synthetic->seed) +
                                      ",dup=" + format_double(config.synthetic->duplicate_rate, 3);
  } else {
    throw ConfigError("no dataset: give an input file or a synthetic spec");
  }

  if (fixture && !config.key_attribute) {
    run.rule = fixture_key_rule();
  } else {
    run.rule = KeyRule::title_prefix(run.dataset.attribute_index(config.key_attribute.value_or("title")),
                                     config.key_prefix.value_or(2));
  }

  run.partitioner = resolve_partitioner(config.partitioner, config.reducers);
  if (run.partitioner.skew) run.dataset.entities = run.partitioner.skew->apply(run.dataset.entities, run.rule);

  run.options.window = config.window;
  run.options.mappers = config.mappers;
  run.options.threads = config.threads;
  run.options.phase_two_reducers = config.phase_two_reducers;
  if (config.strategy) run.options.match = config.strategy->resolve(run.dataset);
  return run;
}

struct WorkflowRun {
  RunReport report;
  WorkflowResult result;
};

inline WorkflowRun run_workflow(const std::string& name, const PreparedRun& run) {
  const std::span<const Entity> entities(run.dataset.entities);
  const auto& p = run.partitioner.function;
  const auto& router = run.partitioner.block_router;
  if (router && name != "standard") {
    throw ConfigError("partitioner '" + p.name() + "' is not monotone and only valid for standard blocking");
  }
  const auto start = std::chrono::steady_clock::now();
  WorkflowResult result;
  if (name == "seq-sn") {
    result = run_sequential_sn(entities, run.rule, run.options);
  } else if (name == "standard") {
    result = router ? run_standard_blocking(entities, run.rule, *router, run.partitioner.router_partitions, run.options)
                    : run_standard_blocking(entities, run.rule, p, run.options);
  } else if (name == "srp") {
    result = run_srp(entities, run.rule, p, run.options);
  } else if (name == "jobsn") {
    result = run_jobsn(entities, run.rule, p, run.options);
  } else if (name == "repsn") {
    result = run_repsn(entities, run.rule, p, run.options);
  } else {
    throw ConfigError("unknown workflow '" + name + "'");
  }
  const double elapsed =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  double g = 0.0;
  if (!entities.empty()) {
    g = router ? profile(entities, *router, run.partitioner.router_partitions, run.rule).gini
               : profile(entities, p, run.rule).gini;
  }
  const std::size_t reducers = name == "seq-sn" ? 1 : (router ? run.partitioner.router_partitions : p.partitions());
  std::vector<std::pair<std::string, std::string>> echo = {
      {"dataset", run.dataset_label},
      {"entities", std::to_string(entities.size())},
      {"window", std::to_string(run.options.window)},
      {"mappers", std::to_string(name == "seq-sn" ? 1 : run.options.mappers)},
      {"reducers", std::to_string(reducers)},
      {"partitioner", name == "seq-sn" ? "none" : p.name()},
      {"matching", run.options.match ? "on" : "off"},
  };
  if (name == "jobsn") echo.emplace_back("phase_two_reducers", std::to_string(run.options.phase_two_reducers));
  WorkflowRun out{make_report(name, result, g, elapsed, std::move(echo)), std::move(result)};
  return out;
}

struct PairSetComparison {
  std::string a;
  std::string b;
  std::size_t only_in_a = 0;
  std::size_t only_in_b = 0;
  std::vector<std::string> sample;  // up to five differing pairs, "<side> id1 id2"

  bool equal() const { return only_in_a == 0 && only_in_b == 0; }
};

inline PairSetComparison compare_pairs(const std::string& name_a, const WorkflowResult& a, const std::string& name_b,
                                       const WorkflowResult& b, std::span<const Entity> entities) {
  PairSetComparison cmp{name_a, name_b, 0, 0, {}};
  const auto left = pair_difference(a.pairs, b.pairs);
  const auto right = pair_difference(b.pairs, a.pairs);
  cmp.only_in_a = left.size();
  cmp.only_in_b = right.size();
  for (const auto* side : {&left, &right}) {
    const std::string& owner = side == &left ? name_a : name_b;
    for (std::size_t i = 0; i < side->size() && cmp.sample.size() < 5; ++i) {
      cmp.sample.push_back("only in " + owner + ": " + entities[(*side)[i].left].id + "\t" +
                           entities[(*side)[i].right].id);
    }
  }
  return cmp;
}

struct ExperimentOutcome {
  PreparedRun prepared;
  std::vector<WorkflowRun> runs;
  std::vector<PairSetComparison> comparisons;  // every pair of runs
  std::vector<PairSetComparison> assertions;   // the ones that must be equal

  bool ok() const {
    return std::all_of(assertions.begin(), assertions.end(), [](const auto& c) { return c.equal(); });
  }

  const WorkflowRun& run(std::string_view name) const {
    for (const auto& r : runs) {
      if (r.report.workflow == name) return r;
    }
    throw ConfigError("workflow '" + std::string(name) + "' was not run");
  }
};

inline ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  if (config.workflows.empty()) throw ConfigError("no workflow selected");
  for (const auto& w : config.workflows) {
    if (std::find(workflow_names().begin(), workflow_names().end(), w) == workflow_names().end()) {
      throw ConfigError("unknown workflow '" + w + "'");
    }
  }
  ExperimentOutcome outcome;
  outcome.prepared = prepare(config);
  for (const auto& name : config.workflows) outcome.runs.push_back(run_workflow(name, outcome.prepared));

  const std::span<const Entity> entities(outcome.prepared.dataset.entities);
  auto index_of = [&](const std::string& name) -> const WorkflowRun& { return outcome.run(name); };
  for (std::size_t i = 0; i < outcome.runs.size(); ++i) {
    for (std::size_t j = i + 1; j < outcome.runs.size(); ++j) {
      outcome.comparisons.push_back(compare_pairs(outcome.runs[i].report.workflow, outcome.runs[i].result,
                                                  outcome.runs[j].report.workflow, outcome.runs[j].result, entities));
    }
  }

  auto groups = config.assert_equal;
  if (groups.empty()) {
    std::vector<std::string> complete;
    for (const auto& name : config.workflows) {
      if (is_complete_sn(name)) complete.push_back(name);
    }
    if (complete.size() > 1) groups.push_back(complete);
  }
  for (const auto& group : groups) {
    for (std::size_t k = 1; k < group.size(); ++k) {
      const auto& a = index_of(group.front());
      const auto& b = index_of(group[k]);
      outcome.assertions.push_back(compare_pairs(group.front(), a.result, group[k], b.result, entities));
    }
  }
  return outcome;
}

inline void write_comparison(const ExperimentOutcome& outcome, std::ostream& out) {
  out << "comparison:\n";
  for (const auto& c : outcome.comparisons) {
    out << c.a << " vs " << c.b << ": only_in_" << c.a << "=" << c.only_in_a << " only_in_" << c.b << "="
        << c.only_in_b << '\n';
  }
  for (const auto& c : outcome.assertions) {
    out << "assert " << c.a << " == " << c.b << ": " << (c.equal() ? "ok" : "FAILED") << '\n';
    if (!c.equal()) {
      for (const auto& s : c.sample) out << "  " << s << '\n';
    }
  }
}

// --- Skew study ----------------------------------------------------------------

struct SkewRow {
  std::string partitioner;
  double fraction = 0.0;  // 0 for the unmodified family
  std::vector<std::size_t> sizes;
  double gini = 0.0;
  std::size_t max_reducer_comparisons = 0;
  std::size_t comparisons = 0;
  double elapsed_ms = 0.0;
};

struct SkewStudy {
  std::vector<SkewRow> rows;  // baseline first, then one row per fraction
  bool gini_increasing = true;
  bool load_increasing = true;
};

// Runs `workflow` (RepSN by default) on the base dataset of `config` under
// the family partitioner and each skewed variant of it.
inline SkewStudy run_skew_study(const ExperimentConfig& config, const std::string& family,
                                const std::vector<double>& fractions, const std::string& workflow = "repsn") {
  auto base_config = config;
  base_config.partitioner = PartitionerSpec{};
  base_config.partitioner.name = family;
  base_config.strategy.reset();
  const PreparedRun base = prepare(base_config);

  SkewStudy study;
  auto record = [&](const PreparedRun& run, double fraction) {
    const auto wr = run_workflow(workflow, run);
    SkewRow row;
    row.partitioner = run.partitioner.function.name();
    row.fraction = fraction;
    row.sizes = profile(run.dataset.entities, run.partitioner.function, run.rule).counts;
    row.gini = wr.report.gini;
    row.max_reducer_comparisons = wr.report.max_reducer_comparisons();
    row.comparisons = wr.report.comparisons;
    row.elapsed_ms = wr.report.elapsed_ms;
    study.rows.push_back(std::move(row));
  };
  record(base, 0.0);
  for (double f : fractions) {
    PreparedRun skewed = base;
    skewed.partitioner.skew = make_skewed_partitioner(base.partitioner.function, f, config.partitioner.seed);
    skewed.partitioner.function = skewed.partitioner.skew->partitioner;
    skewed.dataset.entities = skewed.partitioner.skew->apply(base.dataset.entities, base.rule);
    record(skewed, f);
  }
  for (std::size_t i = 2; i < study.rows.size(); ++i) {
    study.gini_increasing = study.gini_increasing && study.rows[i].gini > study.rows[i - 1].gini;
    study.load_increasing =
        study.load_increasing && study.rows[i].max_reducer_comparisons > study.rows[i - 1].max_reducer_comparisons;
  }
  return study;
}

inline void write_skew_study(const SkewStudy& study, std::ostream& out) {
  out << "gini_increasing: " << (study.gini_increasing ? "yes" : "no") << '\n'
      << "load_increasing: " << (study.load_increasing ? "yes" : "no") << '\n'
      << "partitioner\tfraction\tgini\tmax_reducer_comparisons\tcomparisons\telapsed_ms\tsizes\n";
  for (const auto& row : study.rows) {
    out << row.partitioner << '\t' << format_double(row.fraction, 2) << '\t' << format_double(row.gini) << '\t'
        << row.max_reducer_comparisons << '\t' << row.comparisons << '\t' << format_double(row.elapsed_ms, 1) << '\t';
    for (std::size_t i = 0; i < row.sizes.size(); ++i) out << (i ? "," : "") << row.sizes[i];
    out << '\n';
  }
}

}  // namespace dedup::harness
