#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "prelearn/textprep.hpp"
#include "prelearn/types.hpp"

namespace prelearn {

struct Concept {
  std::string id;
  std::string title;
  Domain domain = Domain::DataMining;
  std::string description;  // raw, as loaded

  // Cached preprocess() outputs; filled by the registry.
  text::NormalizedText norm_title;
  text::NormalizedText norm_description;
};

/// Ordered pair (a, b); label 1 means b is a prerequisite of a.
struct LabeledPair {
  std::string a;
  std::string b;
  int label = 0;
  Domain domain = Domain::DataMining;
};

struct PairsFile {
  std::vector<LabeledPair> pairs;
  std::size_t positives = 0;
  /// NaN when empty.
  double positive_fraction() const;
};

/// Pairs CSV with header `concept_a,concept_b,label`.
PairsFile load_pairs(const std::filesystem::path& path, Domain domain);

class ConceptRegistry {
 public:
  ConceptRegistry() = default;
  explicit ConceptRegistry(std::vector<Concept> concepts);

  std::size_t size() const { return concepts_.size(); }
  bool contains(const std::string& id) const { return index_.count(id) != 0; }
  /// Throws std::out_of_range naming the id.
  const Concept& at(const std::string& id) const;
  const std::vector<Concept>& concepts() const { return concepts_; }

  /// Throws std::invalid_argument listing every id referenced by `pairs`
  /// that is absent from the registry.
  void require_all(std::span<const LabeledPair> pairs) const;

 private:
  std::vector<Concept> concepts_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Pages TSV: `concept_id<TAB>title<TAB>domain<TAB>description`, with `\n`,
/// `\t` and `\\` escaped inside the description. A header row starting with
/// `concept_id` is skipped.
ConceptRegistry load_concept_pages(const std::filesystem::path& path);
void write_concept_pages(const std::filesystem::path& path, const ConceptRegistry& registry);
void write_pairs(const std::filesystem::path& path, std::span<const LabeledPair> pairs);

struct DomainPairs {
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> test;
};
using PairsByDomain = std::map<Domain, DomainPairs>;

struct DatasetSplit {
  std::vector<LabeledPair> train;
  std::vector<LabeledPair> eval;
  Scenario scenario = Scenario::InDomain;
  Domain target_domain = Domain::DataMining;
};

/// InDomain: train is the union of all four domains' training pairs.
/// CrossDomain: the union of the three non-target domains.
/// eval is the target domain's test pairs in both cases.
DatasetSplit make_training_split(const ConceptRegistry& registry, const PairsByDomain& pairs,
                                 Scenario scenario, Domain target);

using Folds = std::vector<std::vector<std::size_t>>;

/// Shuffles each class with a seeded RNG and deals its members round-robin
/// into k folds. Returns row indices per fold, each sorted ascending.
Folds stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed);
Folds stratified_kfold(std::span<const LabeledPair> pairs, int k, std::uint64_t seed);

struct Holdout {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};
/// Moves round(fraction * n_c) members of each class c into validation.
Holdout stratified_holdout(std::span<const int> labels, double fraction, std::uint64_t seed);
Holdout stratified_holdout(std::span<const LabeledPair> pairs, double fraction, std::uint64_t seed);

/// Dataset directory layout: `<dir>/pages.tsv` and
/// `<dir>/pairs/<slug>_{train,test}.csv` per domain. Missing test files
/// yield empty test lists.
struct Dataset {
  ConceptRegistry registry;
  PairsByDomain pairs;
};
Dataset load_dataset(const std::filesystem::path& dir);

std::filesystem::path pages_path(const std::filesystem::path& dir);
std::filesystem::path pairs_path(const std::filesystem::path& dir, Domain d, bool test);

}  // namespace prelearn
