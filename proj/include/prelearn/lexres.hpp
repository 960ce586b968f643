#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace prelearn {

/// Summary statistics over the per-word mean AoA values. sd is the
/// population standard deviation; quartiles use linear interpolation
/// between order statistics (position (n-1)p).
struct AoaStats {
  double mean = 0.0;
  double sd = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;

  double iqr() const { return q3 - q1; }
  double lower_fence() const { return q1 - 1.5 * iqr(); }
  double upper_fence() const { return q3 + 1.5 * iqr(); }
};

class AoaLexicon {
 public:
  AoaLexicon() = default;
  /// Rows are (word, rating); repeated words are averaged. Throws on
  /// non-positive or non-finite ratings.
  explicit AoaLexicon(std::span<const std::pair<std::string, double>> rows);

  std::size_t size() const { return entries_.size(); }
  std::optional<double> find(const std::string& word) const;
  const AoaStats& stats() const { return stats_; }
  const std::unordered_map<std::string, double>& entries() const { return entries_; }

 private:
  std::unordered_map<std::string, double> entries_;
  AoaStats stats_;
};

/// Linear-interpolation quantile of an ascending-sorted sample.
double quantile_sorted(std::span<const double> sorted, double p);

/// TSV `word<TAB>aoa`, one row per rating. A header whose second column is
/// not numeric is skipped on the first line only. Words are lowercased.
AoaLexicon load_aoa_lexicon(const std::filesystem::path& path);

struct ConceptAoa {
  double aoa = 0.0;
  std::size_t matches = 0;
};

/// Geometric mean of the lexicon values of matching tokens, each clipped into
/// the lexicon's Tukey fences. No matches yields (global mean, 0).
ConceptAoa concept_aoa(std::span<const std::string> tokens, const AoaLexicon& lexicon);

struct MappingEntry {
  std::string title;
  std::optional<std::string> qid;
};

class ConceptMapping {
 public:
  void insert(const std::string& concept_id, MappingEntry entry);
  bool contains(const std::string& concept_id) const { return entries_.count(concept_id) != 0; }
  const MappingEntry& at(const std::string& concept_id) const;
  std::optional<std::string> qid(const std::string& concept_id) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t resolvable() const;
  const std::map<std::string, MappingEntry>& entries() const { return entries_; }

 private:
  std::map<std::string, MappingEntry> entries_;
};

bool is_valid_qid(std::string_view qid);

/// TSV `concept_id<TAB>title<TAB>qid`; empty qid means unmapped.
ConceptMapping load_concept_mapping(const std::filesystem::path& path);
void write_concept_mapping(const std::filesystem::path& path, const ConceptMapping& mapping);

/// Queries a SPARQL endpoint for the Wikidata item behind each Italian
/// Wikipedia title. `endpoint` is a full URL, e.g.
/// https://query.wikidata.org/sparql. Titles without a sitelink map to no qid.
ConceptMapping fetch_mapping(const std::vector<std::pair<std::string, std::string>>& id_titles,
                             const std::string& endpoint, std::size_t batch_size = 50);

/// Builds the SPARQL query text used by fetch_mapping for one batch.
std::string build_sitelink_query(std::span<const std::string> titles);

}  // namespace prelearn
