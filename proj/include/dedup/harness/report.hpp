#pragma once

#include <algorithm>
#include <cstddef>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dedup/entity.hpp"
#include "dedup/workflows.hpp"

namespace dedup::harness {

struct RunReport {
  std::string workflow;
  std::vector<std::pair<std::string, std::string>> config;  // echoed parameters, in order
  std::size_t pairs = 0;
  std::size_t comparisons = 0;
  std::size_t replicated_entities = 0;
  std::size_t jobs_run = 0;
  std::vector<std::size_t> per_reducer_input;
  std::vector<std::size_t> per_reducer_comparisons;
  double gini = 0.0;  // over entities per partition
  double elapsed_ms = 0.0;
  std::vector<std::string> warnings;

  std::size_t max_reducer_comparisons() const {
    return per_reducer_comparisons.empty()
               ? 0
               : *std::max_element(per_reducer_comparisons.begin(), per_reducer_comparisons.end());
  }
};

inline RunReport make_report(std::string workflow, const WorkflowResult& result, double gini, double elapsed_ms,
                             std::vector<std::pair<std::string, std::string>> config) {
  RunReport report;
  report.workflow = std::move(workflow);
  report.config = std::move(config);
  report.pairs = result.pairs.size();
  report.comparisons = result.stats.comparisons;
  report.replicated_entities = result.stats.replicated_entities;
  report.jobs_run = result.stats.jobs_run;
  report.per_reducer_input = result.stats.per_reducer_input;
  report.per_reducer_comparisons = result.stats.per_reducer_comparisons;
  report.gini = gini;
  report.elapsed_ms = elapsed_ms;
  report.warnings = result.warnings;
  return report;
}

inline std::string format_double(double v, int precision = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

// Flat "key: value" lines followed by a tab-separated per-reducer table.
inline void write_report(const RunReport& r, std::ostream& out) {
  out << "workflow: " << r.workflow << '\n';
  for (const auto& [key, value] : r.config) out << key << ": " << value << '\n';
  out << "pairs: " << r.pairs << '\n'
      << "comparisons: " << r.comparisons << '\n'
      << "replicated_entities: " << r.replicated_entities << '\n'
      << "jobs_run: " << r.jobs_run << '\n'
      << "gini: " << format_double(r.gini) << '\n'
      << "max_reducer_comparisons: " << r.max_reducer_comparisons() << '\n'
      << "elapsed_ms: " << format_double(r.elapsed_ms, 3) << '\n'
      << "warnings: " << r.warnings.size() << '\n';
  for (const auto& w : r.warnings) out << "warning: " << w << '\n';
  out << "reducer\tinput\tcomparisons\n";
  for (std::size_t i = 0; i < r.per_reducer_input.size(); ++i) {
    out << (i + 1) << '\t' << r.per_reducer_input[i] << '\t'
        << (i < r.per_reducer_comparisons.size() ? r.per_reducer_comparisons[i] : 0) << '\n';
  }
}

// One "id1<TAB>id2[<TAB>score]" line per pair, sorted by (id1, id2).
inline void write_pairs(std::span<const Correspondence> pairs, std::span<const Entity> entities, std::ostream& out) {
  std::vector<const Correspondence*> sorted;
  sorted.reserve(pairs.size());
  for (const auto& p : pairs) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(), [&](const Correspondence* a, const Correspondence* b) {
    const auto& al = entities[a->left].id;
    const auto& bl = entities[b->left].id;
    if (al != bl) return al < bl;
    return entities[a->right].id < entities[b->right].id;
  });
  for (const auto* p : sorted) {
    out << entities[p->left].id << '\t' << entities[p->right].id;
    if (p->similarity) out << '\t' << format_double(*p->similarity, 4);
    out << '\n';
  }
}

}  // namespace dedup::harness
