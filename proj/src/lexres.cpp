#include "prelearn/lexres.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "http.hpp"
#include "prelearn/textprep.hpp"
#include "prelearn/types.hpp"

namespace prelearn {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

AoaLexicon::AoaLexicon(std::span<const std::pair<std::string, double>> rows) {
  std::unordered_map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& [word, value] : rows) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw std::invalid_argument("AoA value for '" + word + "' must be positive and finite");
    }
    auto& slot = acc[word];
    slot.first += value;
    slot.second += 1;
  }
  std::vector<double> values;
  values.reserve(acc.size());
  for (const auto& [word, sum_count] : acc) {
    const double mean = sum_count.first / static_cast<double>(sum_count.second);
    entries_.emplace(word, mean);
    values.push_back(mean);
  }
  if (values.empty()) return;
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  stats_.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - stats_.mean) * (v - stats_.mean);
  stats_.sd = std::sqrt(ss / n);
  stats_.q1 = quantile_sorted(values, 0.25);
  stats_.q3 = quantile_sorted(values, 0.75);
}

std::optional<double> AoaLexicon::find(const std::string& word) const {
  const auto it = entries_.find(word);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::optional<double> parse_double(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  // Some norm releases use a decimal comma.
  std::string buf(s);
  std::replace(buf.begin(), buf.end(), ',', '.');
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc() || ptr != buf.data() + buf.size() || buf.empty()) return std::nullopt;
  return v;
}

}  // namespace

AoaLexicon load_aoa_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::pair<std::string, double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(path.string(), lineno, "expected word<TAB>aoa");
    const std::string word = text::preprocess(line.substr(0, tab)).str();
    const auto value = parse_double(std::string_view(line).substr(tab + 1));
    if (!value) {
      if (lineno == 1) continue;  // header
      throw ParseError(path.string(), lineno, "non-numeric AoA value");
    }
    if (!(*value > 0.0) || !std::isfinite(*value)) {
      throw ParseError(path.string(), lineno, "non-positive AoA value");
    }
    rows.emplace_back(word, *value);
  }
  return AoaLexicon(rows);
}

ConceptAoa concept_aoa(std::span<const std::string> tokens, const AoaLexicon& lexicon) {
  const AoaStats& s = lexicon.stats();
  const double lo = s.lower_fence();
  const double hi = s.upper_fence();
  double log_sum = 0.0;
  std::size_t matches = 0;
  for (const auto& tok : tokens) {
    const auto v = lexicon.find(tok);
    if (!v) continue;
    // Values are positive, so a non-positive lower fence never binds.
    log_sum += std::log(std::clamp(*v, lo, hi));
    ++matches;
  }
  if (matches == 0) return {s.mean, 0};
  return {std::exp(log_sum / static_cast<double>(matches)), matches};
}

void ConceptMapping::insert(const std::string& concept_id, MappingEntry entry) {
  if (entry.qid && !is_valid_qid(*entry.qid)) {
    throw std::invalid_argument("malformed Wikidata id '" + *entry.qid + "' for " + concept_id);
  }
  entries_[concept_id] = std::move(entry);
}

const MappingEntry& ConceptMapping::at(const std::string& concept_id) const {
  const auto it = entries_.find(concept_id);
  if (it == entries_.end()) throw std::out_of_range("no mapping for concept '" + concept_id + "'");
  return it->second;
}

std::optional<std::string> ConceptMapping::qid(const std::string& concept_id) const {
  const auto it = entries_.find(concept_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.qid;
}

std::size_t ConceptMapping::resolvable() const {
  return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(),
                                                [](const auto& kv) { return kv.second.qid.has_value(); }));
}

bool is_valid_qid(std::string_view qid) {
  return qid.size() >= 2 && qid[0] == 'Q' &&
         std::all_of(qid.begin() + 1, qid.end(), [](char c) { return c >= '0' && c <= '9'; });
}

ConceptMapping load_concept_mapping(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  ConceptMapping mapping;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t pos = 0;
    for (std::size_t tab; (tab = line.find('\t', pos)) != std::string::npos; pos = tab + 1) {
      cols.push_back(line.substr(pos, tab - pos));
    }
    cols.push_back(line.substr(pos));
    if (lineno == 1 && cols[0] == "concept_id") continue;
    if (cols.size() != 3) throw ParseError(path.string(), lineno, "expected concept_id<TAB>title<TAB>qid");
    MappingEntry e{cols[1], std::nullopt};
    if (!cols[2].empty()) {
      if (!is_valid_qid(cols[2])) {
        throw ParseError(path.string(), lineno, "malformed Wikidata id '" + cols[2] + "'");
      }
      e.qid = cols[2];
    }
    mapping.insert(cols[0], std::move(e));
  }
  return mapping;
}

void write_concept_mapping(const std::filesystem::path& path, const ConceptMapping& mapping) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "concept_id\ttitle\tqid\n";
  for (const auto& [id, e] : mapping.entries()) out << id << '\t' << e.title << '\t' << e.qid.value_or("") << '\n';
}

namespace {

std::string title_for_sitelink(std::string title) {
  std::replace(title.begin(), title.end(), '_', ' ');
  return title;
}

std::string sparql_string(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"@it";
}

std::optional<std::string> qid_from_uri(std::string_view uri) {
  const auto slash = uri.rfind('/');
  const std::string_view tail = slash == std::string_view::npos ? uri : uri.substr(slash + 1);
  if (!is_valid_qid(tail)) return std::nullopt;
  return std::string(tail);
}

}  // namespace

std::string build_sitelink_query(std::span<const std::string> titles) {
  std::string q =
      "PREFIX schema: <http://schema.org/>\n"
      "SELECT ?title ?item WHERE {\n  VALUES ?title {";
  for (const auto& t : titles) q += " " + sparql_string(title_for_sitelink(t));
  q +=
      " }\n"
      "  ?article schema:about ?item ;\n"
      "           schema:isPartOf <https://it.wikipedia.org/> ;\n"
      "           schema:name ?title .\n}";
  return q;
}

ConceptMapping fetch_mapping(const std::vector<std::pair<std::string, std::string>>& id_titles,
                             const std::string& endpoint, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  const auto base = http::parse_base_url(endpoint);
  auto client = http::make_client(base, std::chrono::seconds(60));
  const httplib::Headers headers = {{"Accept", "application/sparql-results+json"}};

  std::map<std::string, std::string> qid_by_title;
  for (std::size_t start = 0; start < id_titles.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, id_titles.size());
    std::vector<std::string> titles;
    for (std::size_t i = start; i < end; ++i) titles.push_back(id_titles[i].second);
    const std::string path = base.path_prefix + "?format=json&query=" +
                             http::percent_encode(build_sitelink_query(titles));
    const auto res = http::get_with_retry(*client, path, 4, std::chrono::milliseconds(500), headers);
    if (res.status != 200) {
      throw std::runtime_error("SPARQL endpoint returned HTTP " + std::to_string(res.status));
    }
    const auto doc = nlohmann::json::parse(res.body);
    for (const auto& b : doc.at("results").at("bindings")) {
      const auto qid = qid_from_uri(b.at("item").at("value").get<std::string>());
      if (qid) qid_by_title.emplace(b.at("title").at("value").get<std::string>(), *qid);
    }
  }

  ConceptMapping mapping;
  for (const auto& [id, title] : id_titles) {
    MappingEntry e{title, std::nullopt};
    if (auto it = qid_by_title.find(title_for_sitelink(title)); it != qid_by_title.end()) e.qid = it->second;
    mapping.insert(id, std::move(e));
  }
  return mapping;
}

}  // namespace prelearn
