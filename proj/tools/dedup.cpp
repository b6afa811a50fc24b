// dedup: command line front end for the Sorted Neighborhood workflows.
//
//   dedup run     --workflow <name> (--input <path> | --synthetic <spec>) ...
//   dedup compare --workflows a,b,c ...
//   dedup skew    --family even8 --fractions 0.40,0.55,0.70,0.85 ...
//
// Exit codes: 0 success, 1 assertion failure, 2 configuration error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dedup/error.hpp"
#include "dedup/harness/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAssertion = 1;
constexpr int kExitConfig = 2;

struct CommonOptions {
  std::string config_file;
  std::string input;
  std::string format = "tsv";
  std::string synthetic;
  std::string key_attribute;
  std::size_t key_prefix = 0;
  std::size_t window = 0;
  std::size_t mappers = 0;
  std::size_t reducers = 0;
  std::size_t threads = 0;
  std::size_t phase_two_reducers = 0;
  std::string partitioner;
  std::uint64_t seed = 0;
  std::string match_file;
  std::string report_path;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config_file, "JSON experiment config; flags override it");
  cmd->add_option("--input", o.input, "TSV/CSV file: id column, then attributes, header row");
  cmd->add_option("--format", o.format, "Input format")->check(CLI::IsMember({"tsv", "csv"}));
  cmd->add_option("--synthetic", o.synthetic, "'fixture' or n=<N>,seed=<S>,dup=<rate>,alphabet=<letters>");
  cmd->add_option("--key-attribute", o.key_attribute, "Attribute for the blocking key (default: title)");
  cmd->add_option("--key-prefix", o.key_prefix, "Blocking key prefix length (default: 2)");
  cmd->add_option("--window", o.window, "Sliding window size w");
  cmd->add_option("--mappers", o.mappers, "Map tasks m");
  cmd->add_option("--reducers", o.reducers, "Reduce tasks r (must agree with the partitioner)");
  cmd->add_option("--threads", o.threads, "Engine worker threads (0 = hardware)");
  cmd->add_option("--phase-two-reducers", o.phase_two_reducers, "JobSN boundary job reducers");
  cmd->add_option("--partitioner", o.partitioner,
                  "single, fixture-range, fixture-blocks, manual, even, evenN, evenN_<pct>");
  cmd->add_option("--skew-seed", o.seed, "Seed for skew key rewriting");
  cmd->add_option("--match", o.match_file, "JSON match strategy file");
  cmd->add_option("--report", o.report_path, "Write the report here instead of stdout");
}

dedup::harness::ExperimentConfig build_config(const CommonOptions& o) {
  using dedup::harness::ExperimentConfig;
  if (!o.input.empty() && !o.synthetic.empty()) throw dedup::ConfigError("--input and --synthetic are exclusive");
  ExperimentConfig c = o.config_file.empty() ? ExperimentConfig{} : ExperimentConfig::load(o.config_file);
  if (!o.input.empty()) {
    c.input = o.input;
    c.synthetic.reset();
  }
  if (!o.synthetic.empty()) {
    c.synthetic = dedup::harness::SyntheticSpec::parse(o.synthetic);
    c.input.reset();
  }
  c.format = dedup::harness::parse_format(o.format);
  if (!o.key_attribute.empty()) c.key_attribute = o.key_attribute;
  if (o.key_prefix != 0) c.key_prefix = o.key_prefix;
  if (o.window != 0) c.window = o.window;
  if (o.mappers != 0) c.mappers = o.mappers;
  if (o.reducers != 0) c.reducers = o.reducers;
  if (o.threads != 0) c.threads = o.threads;
  if (o.phase_two_reducers != 0) c.phase_two_reducers = o.phase_two_reducers;
  if (!o.partitioner.empty()) {
    c.partitioner = dedup::harness::PartitionerSpec{};
    c.partitioner.name = o.partitioner;
  }
  if (o.seed != 0) c.partitioner.seed = o.seed;
  if (!o.match_file.empty()) c.strategy = dedup::harness::load_strategy(o.match_file);
  return c;
}

// Writes to `path`, or stdout when empty.
template <class Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream out(path);
  if (!out) throw dedup::ConfigError("cannot write '" + path + "'");
  fn(out);
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    try {
      out.push_back(std::stod(text.substr(start, end - start)));
    } catch (const std::logic_error&) {
      throw dedup::ConfigError("bad fraction list '" + text + "'");
    }
    start = end + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sorted Neighborhood deduplication on an in-process MapReduce engine"};
  app.require_subcommand(1);

  CommonOptions run_opts;
  std::string workflow;
  std::string emit_pairs;
  auto* run = app.add_subcommand("run", "Run one workflow and print its report");
  add_common(run, run_opts);
  run->add_option("--workflow", workflow, "seq-sn, standard, srp, jobsn or repsn")->required();
  run->add_option("--emit-pairs", emit_pairs, "Write the sorted pair listing here");

  CommonOptions cmp_opts;
  std::string workflows;
  std::string cmp_pairs_dir;
  auto* compare = app.add_subcommand("compare", "Run several workflows and compare their pair sets");
  add_common(compare, cmp_opts);
  compare->add_option("--workflows", workflows, "Comma-separated workflow list")->required();
  compare->add_option("--emit-pairs-dir", cmp_pairs_dir, "Write <workflow>.pairs files into this directory");

  CommonOptions skew_opts;
  std::string family = "even8";
  std::string fractions = "0.40,0.55,0.70,0.85";
  std::string skew_workflow = "repsn";
  auto* skew = app.add_subcommand("skew", "Sweep skewed variants of a partitioner family");
  add_common(skew, skew_opts);
  skew->add_option("--family", family, "Base partitioner (even8, even10, manual, ...)");
  skew->add_option("--fractions", fractions, "Share of entities forced into the last partition");
  skew->add_option("--workflow", skew_workflow, "Workflow used for the load numbers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    using namespace dedup::harness;
    if (*run) {
      auto config = build_config(run_opts);
      config.workflows = {workflow};
      const auto outcome = run_experiment(config);
      const auto& wr = outcome.runs.front();
      with_output(run_opts.report_path, [&](std::ostream& out) { write_report(wr.report, out); });
      if (!emit_pairs.empty()) {
        with_output(emit_pairs, [&](std::ostream& out) {
          write_pairs(wr.result.pairs, outcome.prepared.dataset.entities, out);
        });
      }
      return kExitOk;
    }
    if (*compare) {
      auto config = build_config(cmp_opts);
      config.workflows.clear();
      for (const auto& w : CLI::detail::split(workflows, ',')) config.workflows.push_back(w);
      const auto outcome = run_experiment(config);
      with_output(cmp_opts.report_path, [&](std::ostream& out) {
        for (const auto& wr : outcome.runs) {
          write_report(wr.report, out);
          out << "---\n";
        }
        write_comparison(outcome, out);
      });
      if (!cmp_pairs_dir.empty()) {
        for (const auto& wr : outcome.runs) {
          with_output(cmp_pairs_dir + "/" + wr.report.workflow + ".pairs", [&](std::ostream& out) {
            write_pairs(wr.result.pairs, outcome.prepared.dataset.entities, out);
          });
        }
      }
      if (!outcome.ok()) {
        std::cerr << "pair-set assertion failed\n";
        return kExitAssertion;
      }
      return kExitOk;
    }
    if (*skew) {
      auto config = build_config(skew_opts);
      const auto study = run_skew_study(config, family, parse_fractions(fractions), skew_workflow);
      with_output(skew_opts.report_path, [&](std::ostream& out) { write_skew_study(study, out); });
      if (!study.gini_increasing || !study.load_increasing) {
        std::cerr << "skew sweep is not strictly increasing\n";
        return kExitAssertion;
      }
      return kExitOk;
    }
  } catch (const dedup::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
