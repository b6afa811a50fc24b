#pragma once

// Dataset ingestion (TSV/CSV), the built-in nine-entity fixture and a seeded
// generator of publication-like records with planted near-duplicates.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "dedup/entity.hpp"
#include "dedup/error.hpp"
#include "dedup/partitioning.hpp"

namespace dedup::harness {

enum class Format { tsv, csv };

inline Format parse_format(std::string_view name) {
  if (name == "tsv") return Format::tsv;
  if (name == "csv") return Format::csv;
  throw ConfigError("unknown input format '" + std::string(name) + "' (expected tsv or csv)");
}

namespace detail {

inline std::vector<std::string> split_tsv(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.emplace_back(line.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

// RFC 4180 style: fields may be quoted, "" inside quotes is a literal quote.
// Quoted fields spanning lines are not supported.
inline std::vector<std::string> split_csv(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty() && !was_quoted) {
      quoted = was_quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      was_quoted = false;
    } else {
      if (was_quoted) throw IngestError("text after closing quote", line_no);
      field += c;
    }
  }
  if (quoted) throw IngestError("unterminated quoted field", line_no);
  fields.push_back(std::move(field));
  return fields;
}

}  // namespace detail

// First column is the id, the rest are attributes named by the header row.
// Blank lines are skipped.
inline Dataset ingest(std::istream& in, Format format) {
  Dataset data;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t columns = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = format == Format::tsv ? detail::split_tsv(line) : detail::split_csv(line, line_no);
    if (!have_header) {
      if (fields.size() < 2) throw IngestError("header needs an id column and at least one attribute", line_no);
      columns = fields.size();
      data.attribute_names.assign(fields.begin() + 1, fields.end());
      have_header = true;
      continue;
    }
    if (fields.size() != columns) {
      throw IngestError("expected " + std::to_string(columns) + " columns, found " + std::to_string(fields.size()),
                        line_no);
    }
    if (fields[0].empty()) throw IngestError("empty id", line_no);
    if (!seen.insert(fields[0]).second) throw IngestError("duplicate id '" + fields[0] + "'", line_no);
    Entity e;
    e.id = std::move(fields[0]);
    e.attributes.assign(std::make_move_iterator(fields.begin() + 1), std::make_move_iterator(fields.end()));
    data.entities.push_back(std::move(e));
  }
  if (!have_header) throw IngestError("missing header row");
  return data;
}

inline Dataset ingest(const std::string& path, Format format) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot open '" + path + "'");
  return ingest(in, format);
}

// Tab-separated with header. Tabs and newlines inside values are replaced by
// spaces.
inline void write_tsv(const Dataset& data, std::ostream& out) {
  auto clean = [](std::string s) {
    std::replace_if(s.begin(), s.end(), [](char c) { return c == '\t' || c == '\n' || c == '\r'; }, ' ');
    return s;
  };
  out << "id";
  for (const auto& name : data.attribute_names) out << '\t' << clean(name);
  out << '\n';
  for (const auto& e : data.entities) {
    out << clean(e.id);
    for (const auto& a : e.attributes) out << '\t' << clean(a);
    out << '\n';
  }
}

// --- Fixture -------------------------------------------------------------------

// Nine entities a..i in input order a, b, ..., i. The "key" attribute holds
// the blocking key 1/2/3; sorted by (key, id) they read a d b e f h c g i.
// (a, d) and (c, i) are near-duplicates.
inline Dataset fixture_dataset() {
  Dataset data;
  data.attribute_names = {"key", "title", "abstract"};
  const std::string dup1 = "sorted neighborhood blocking partitions entities by a sliding window over sorted keys";
  const std::string dup2 = "skewed key distributions overload single reducers and dominate the job runtime";
  data.entities = {
      {"a", {"1", "Efficient parallel sorted neighborhood blocking", dup1}},
      {"b", {"2", "Graph partitioning heuristics", "spectral methods and multilevel coarsening for graphs"}},
      {"c", {"3", "Load balancing for MapReduce entity resolution", dup2}},
      {"d", {"1", "Efficient parallel sorted neighbourhood blocking", dup1}},
      {"e", {"2", "Query optimization in column stores", "vectorized execution and late materialization"}},
      {"f", {"2", "Wireless sensor network routing", "energy aware multi hop routing protocols"}},
      {"g", {"3", "Compiler support for vector units", "auto vectorization of loops with conditionals"}},
      {"h", {"2", "Transactional memory revisited", "hardware support for optimistic concurrency"}},
      {"i", {"3", "Load balancing for MapReduce-based entity resolution", dup2}},
  };
  return data;
}

// Blocking key of the fixture: the one-character "key" attribute.
inline KeyRule fixture_key_rule() { return KeyRule{{KeyRule::Component{0, 1}}, false}; }

// p(k) = 1 for k <= 2, else 2.
inline PartitionFunction fixture_partitioner() { return {"fixture-range", {"2"}}; }

// Keys 1 and 3 to reducer 1, key 2 to reducer 2 (not monotone; only for
// standard blocking).
inline std::uint32_t fixture_block_router(std::string_view key) { return key == "2" ? 2 : 1; }

// --- Synthetic generator -----------------------------------------------------

struct SyntheticSpec {
  std::size_t n = 1000;
  std::string key_alphabet = "abcdefghijklmnopqrstuvwxyz";  // title initials
  double duplicate_rate = 0.0;  // fraction of the n records that are near-duplicates
  std::uint64_t seed = 1;
  bool fixture = false;  // ignore everything else, return the nine-entity fixture

  // "fixture" or comma-separated key=value with keys n, seed, dup, alphabet.
  static SyntheticSpec parse(std::string_view text) {
    SyntheticSpec spec;
    if (text == "fixture") {
      spec.fixture = true;
      return spec;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
      auto end = text.find(',', start);
      if (end == std::string_view::npos) end = text.size();
      const auto item = text.substr(start, end - start);
      start = end + 1;
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) throw ConfigError("synthetic spec item '" + std::string(item) + "' lacks '='");
      const auto key = item.substr(0, eq);
      const auto value = std::string(item.substr(eq + 1));
      try {
        if (key == "n") {
          spec.n = std::stoull(value);
        } else if (key == "seed") {
          spec.seed = std::stoull(value);
        } else if (key == "dup") {
          spec.duplicate_rate = std::stod(value);
        } else if (key == "alphabet") {
          spec.key_alphabet = value;
        } else {
          throw ConfigError("unknown synthetic spec key '" + std::string(key) + "'");
        }
      } catch (const std::logic_error&) {
        throw ConfigError("bad value for synthetic spec key '" + std::string(key) + "'");
      }
    }
    return spec;
  }

  void validate() const {
    if (fixture) return;
    if (!(duplicate_rate >= 0.0 && duplicate_rate <= 0.5)) throw ConfigError("duplicate rate must lie in [0, 0.5]");
    if (key_alphabet.empty()) throw ConfigError("key alphabet must not be empty");
    for (char c : key_alphabet) {
      if (c < 'a' || c > 'z') throw ConfigError("key alphabet must be lowercase letters");
    }
  }
};

struct GeneratedData {
  Dataset dataset;
  std::vector<std::pair<std::string, std::string>> planted;  // (original id, duplicate id)
};

namespace detail {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  // Uniform in [0, bound); modulo bias is irrelevant here and keeps the
  // sequence identical across standard libraries.
  std::size_t below(std::size_t bound) { return static_cast<std::size_t>(engine_() % bound); }
  std::size_t between(std::size_t lo, std::size_t hi) { return lo + below(hi - lo + 1); }

 private:
  std::mt19937_64 engine_;
};

inline std::string random_word(Rng& rng, char initial) {
  static constexpr std::string_view kConsonants = "bcdfghjklmnprstvwz";
  static constexpr std::string_view kVowels = "aeiou";
  std::string word(1, initial);
  const std::size_t syllables = rng.between(1, 3);
  bool vowel = kVowels.find(initial) == std::string_view::npos;
  for (std::size_t s = 0; s < syllables * 2; ++s) {
    word += vowel ? kVowels[rng.below(kVowels.size())] : kConsonants[rng.below(kConsonants.size())];
    vowel = !vowel;
  }
  return word;
}

inline std::string random_text(Rng& rng, std::size_t words, char first_initial) {
  std::string out;
  for (std::size_t i = 0; i < words; ++i) {
    if (i > 0) out += ' ';
    out += random_word(rng, i == 0 ? first_initial : static_cast<char>('a' + rng.below(26)));
  }
  return out;
}

// `edits` substitutions at distinct positions >= 2, so the blocking key (two
// character title prefix) is unchanged and the text always differs.
inline std::string perturb(Rng& rng, std::string text, std::size_t edits) {
  if (text.size() <= 2) return text;
  std::vector<std::size_t> used;
  for (std::size_t k = 0; k < edits && used.size() < text.size() - 2; ++k) {
    std::size_t pos = 2 + rng.below(text.size() - 2);
    while (std::find(used.begin(), used.end(), pos) != used.end()) pos = pos + 1 < text.size() ? pos + 1 : 2;
    used.push_back(pos);
    const char replacement = static_cast<char>('a' + rng.below(26));
    text[pos] = replacement == text[pos] ? (replacement == 'z' ? 'a' : static_cast<char>(replacement + 1))
                                         : replacement;
  }
  return text;
}

}  // namespace detail

inline GeneratedData generate(const SyntheticSpec& spec) {
  spec.validate();
  GeneratedData out;
  if (spec.fixture) {
    out.dataset = fixture_dataset();
    out.planted = {{"a", "d"}, {"c", "i"}};
    return out;
  }
  detail::Rng rng(spec.seed);
  const auto duplicates = static_cast<std::size_t>(spec.duplicate_rate * static_cast<double>(spec.n));
  const std::size_t originals = spec.n - duplicates;

  struct Record {
    std::string title;
    std::string abstract;
    std::size_t original = SIZE_MAX;  // for duplicates: index of the source record
  };
  std::vector<Record> records;
  records.reserve(spec.n);
  for (std::size_t i = 0; i < originals; ++i) {
    const char initial = spec.key_alphabet[rng.below(spec.key_alphabet.size())];
    std::string title = detail::random_text(rng, rng.between(4, 8), initial);
    title[0] = static_cast<char>(title[0] - 'a' + 'A');
    const std::size_t abstract_words = rng.between(12, 24);
    const auto abstract_initial = static_cast<char>('a' + rng.below(26));
    std::string abstract = detail::random_text(rng, abstract_words, abstract_initial);
    records.push_back({std::move(title), std::move(abstract), SIZE_MAX});
  }
  // Each duplicate copies a distinct original.
  std::vector<std::size_t> sources(originals);
  for (std::size_t i = 0; i < originals; ++i) sources[i] = i;
  for (std::size_t i = 0; i < duplicates && i < originals; ++i) {
    std::swap(sources[i], sources[i + rng.below(originals - i)]);
    const auto& src = records[sources[i]];
    records.push_back({detail::perturb(rng, src.title, rng.between(1, 2)), src.abstract, sources[i]});
  }

  // Shuffle so duplicates are spread over the input (and over mappers).
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

  const std::size_t digits = std::to_string(records.empty() ? 0 : records.size() - 1).size();
  auto make_id = [digits](std::size_t pos) {
    std::string num = std::to_string(pos);
    return "p" + std::string(digits - num.size(), '0') + num;
  };
  std::vector<std::string> ids(records.size());
  out.dataset.attribute_names = {"title", "abstract"};
  out.dataset.entities.reserve(records.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    ids[order[pos]] = make_id(pos);
    const auto& rec = records[order[pos]];
    out.dataset.entities.push_back({ids[order[pos]], {rec.title, rec.abstract}});
  }
  for (std::size_t i = originals; i < records.size(); ++i) {
    out.planted.emplace_back(ids[records[i].original], ids[i]);
  }
  return out;
}

}  // namespace dedup::harness
