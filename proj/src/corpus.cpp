#include "prelearn/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace prelearn {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Minimal RFC 4180 field splitter for a single line.
std::vector<std::string> split_csv_line(const std::string& line, const std::string& source,
                                        std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw ParseError(source, lineno, "unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string unescape_tsv(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[i + 1];
      if (n == 'n') { out.push_back('\n'); ++i; continue; }
      if (n == 't') { out.push_back('\t'); ++i; continue; }
      if (n == 'r') { out.push_back('\r'); ++i; continue; }
      if (n == '\\') { out.push_back('\\'); ++i; continue; }
    }
    out.push_back(s[i]);
  }
  return out;
}

std::string escape_tsv(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t pos = 0;
  while (true) {
    const std::size_t tab = line.find('\t', pos);
    if (tab == std::string::npos) {
      cols.push_back(line.substr(pos));
      break;
    }
    cols.push_back(line.substr(pos, tab - pos));
    pos = tab + 1;
  }
  return cols;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

}  // namespace

double PairsFile::positive_fraction() const {
  if (pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(positives) / static_cast<double>(pairs.size());
}

PairsFile load_pairs(const std::filesystem::path& path, Domain domain) {
  std::ifstream in = open_or_throw(path);
  const std::string source = path.string();
  PairsFile out;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line, source, lineno);
    if (!header_seen) {
      header_seen = true;
      if (fields.size() == 3 && trim(fields[0]) == "concept_a") continue;
    }
    if (fields.size() != 3) {
      throw ParseError(source, lineno, "expected 3 fields, got " + std::to_string(fields.size()));
    }
    LabeledPair p;
    p.a = trim(fields[0]);
    p.b = trim(fields[1]);
    p.domain = domain;
    const std::string label = trim(fields[2]);
    if (label == "1") {
      p.label = 1;
    } else if (label == "0") {
      p.label = 0;
    } else {
      throw ParseError(source, lineno, "unknown label value '" + label + "'");
    }
    if (p.a.empty() || p.b.empty()) throw ParseError(source, lineno, "empty concept id");
    if (p.a == p.b) throw ParseError(source, lineno, "pair relates concept '" + p.a + "' to itself");
    out.positives += static_cast<std::size_t>(p.label);
    out.pairs.push_back(std::move(p));
  }
  return out;
}

ConceptRegistry::ConceptRegistry(std::vector<Concept> concepts) : concepts_(std::move(concepts)) {
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    Concept& c = concepts_[i];
    if (!index_.emplace(c.id, i).second) {
      throw std::invalid_argument("duplicate concept id '" + c.id + "'");
    }
    c.norm_title = text::preprocess(c.title);
    c.norm_description = text::preprocess(c.description);
  }
}

const Concept& ConceptRegistry::at(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown concept id '" + id + "'");
  return concepts_[it->second];
}

void ConceptRegistry::require_all(std::span<const LabeledPair> pairs) const {
  std::set<std::string> missing;
  for (const auto& p : pairs) {
    if (!contains(p.a)) missing.insert(p.a);
    if (!contains(p.b)) missing.insert(p.b);
  }
  if (missing.empty()) return;
  std::string msg = "pairs reference concept ids missing from the registry:";
  for (const auto& id : missing) msg += " " + id;
  throw std::invalid_argument(msg);
}

ConceptRegistry load_concept_pages(const std::filesystem::path& path) {
  std::ifstream in = open_or_throw(path);
  const std::string source = path.string();
  std::vector<Concept> concepts;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = split_tabs(line);
    if (lineno == 1 && cols[0] == "concept_id") continue;
    if (cols.size() != 4) {
      throw ParseError(source, lineno, "expected 4 tab-separated columns, got " +
                                           std::to_string(cols.size()));
    }
    Concept c;
    c.id = trim(cols[0]);
    c.title = trim(cols[1]);
    try {
      c.domain = parse_domain(trim(cols[2]));
    } catch (const std::invalid_argument& e) {
      throw ParseError(source, lineno, e.what());
    }
    c.description = unescape_tsv(cols[3]);
    if (trim(c.description).empty()) {
      throw ParseError(source, lineno, "empty description for concept '" + c.id + "'");
    }
    if (!seen.insert(c.id).second) {
      throw ParseError(source, lineno, "duplicate concept id '" + c.id + "'");
    }
    concepts.push_back(std::move(c));
  }
  return ConceptRegistry(std::move(concepts));
}

void write_concept_pages(const std::filesystem::path& path, const ConceptRegistry& registry) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "concept_id\ttitle\tdomain\tdescription\n";
  for (const auto& c : registry.concepts()) {
    out << c.id << '\t' << c.title << '\t' << domain_slug(c.domain) << '\t'
        << escape_tsv(c.description) << '\n';
  }
}

void write_pairs(const std::filesystem::path& path, std::span<const LabeledPair> pairs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "concept_a,concept_b,label\n";
  for (const auto& p : pairs) out << csv_field(p.a) << ',' << csv_field(p.b) << ',' << p.label << '\n';
}

DatasetSplit make_training_split(const ConceptRegistry& registry, const PairsByDomain& pairs,
                                 Scenario scenario, Domain target) {
  if (std::find(kAllDomains.begin(), kAllDomains.end(), target) == kAllDomains.end()) {
    throw std::invalid_argument("unknown target domain");
  }
  for (Domain d : kAllDomains) {
    if (!pairs.count(d)) {
      throw std::invalid_argument("pairs for domain " + std::string(domain_slug(d)) + " not loaded");
    }
  }
  DatasetSplit split;
  split.scenario = scenario;
  split.target_domain = target;
  for (Domain d : kAllDomains) {
    if (scenario == Scenario::CrossDomain && d == target) continue;
    const auto& train = pairs.at(d).train;
    split.train.insert(split.train.end(), train.begin(), train.end());
  }
  split.eval = pairs.at(target).test;
  registry.require_all(split.train);
  registry.require_all(split.eval);
  return split;
}

namespace {

std::vector<int> labels_of(std::span<const LabeledPair> pairs) {
  std::vector<int> labels;
  labels.reserve(pairs.size());
  for (const auto& p : pairs) labels.push_back(p.label);
  return labels;
}

std::map<int, std::vector<std::size_t>> shuffled_classes(std::span<const int> labels,
                                                         std::mt19937_64& rng) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  for (auto& [label, members] : by_class) std::shuffle(members.begin(), members.end(), rng);
  return by_class;
}

}  // namespace

Folds stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("stratified_kfold: k must be >= 2");
  std::mt19937_64 rng(seed);
  auto by_class = shuffled_classes(labels, rng);
  for (const auto& [label, members] : by_class) {
    if (members.size() < static_cast<std::size_t>(k)) {
      throw std::invalid_argument("stratified_kfold: class " + std::to_string(label) + " has " +
                                  std::to_string(members.size()) + " members, fewer than k=" +
                                  std::to_string(k));
    }
  }
  Folds folds(static_cast<std::size_t>(k));
  // Dealing continues across classes; fold sizes differ by at most one.
  std::size_t next = 0;
  for (const auto& [label, members] : by_class) {
    for (std::size_t idx : members) {
      folds[next].push_back(idx);
      next = (next + 1) % folds.size();
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

Folds stratified_kfold(std::span<const LabeledPair> pairs, int k, std::uint64_t seed) {
  const auto labels = labels_of(pairs);
  return stratified_kfold(std::span<const int>(labels), k, seed);
}

Holdout stratified_holdout(std::span<const int> labels, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw std::invalid_argument("stratified_holdout: fraction must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  Holdout out;
  for (const auto& [label, members] : shuffled_classes(labels, rng)) {
    const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(members.size())));
    out.validation.insert(out.validation.end(), members.begin(), members.begin() + n_val);
    out.train.insert(out.train.end(), members.begin() + n_val, members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  return out;
}

Holdout stratified_holdout(std::span<const LabeledPair> pairs, double fraction, std::uint64_t seed) {
  const auto labels = labels_of(pairs);
  return stratified_holdout(std::span<const int>(labels), fraction, seed);
}

std::filesystem::path pages_path(const std::filesystem::path& dir) { return dir / "pages.tsv"; }

std::filesystem::path pairs_path(const std::filesystem::path& dir, Domain d, bool test) {
  return dir / "pairs" / (std::string(domain_slug(d)) + (test ? "_test.csv" : "_train.csv"));
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  ds.registry = load_concept_pages(pages_path(dir));
  for (Domain d : kAllDomains) {
    DomainPairs dp;
    dp.train = load_pairs(pairs_path(dir, d, false), d).pairs;
    const auto test = pairs_path(dir, d, true);
    if (std::filesystem::exists(test)) dp.test = load_pairs(test, d).pairs;
    ds.registry.require_all(dp.train);
    ds.registry.require_all(dp.test);
    ds.pairs.emplace(d, std::move(dp));
  }
  return ds;
}

}  // namespace prelearn
