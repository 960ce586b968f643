#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "prelearn/corpus.hpp"
#include "prelearn/embeddings.hpp"
#include "prelearn/lexres.hpp"
#include "prelearn/pageviews.hpp"

namespace prelearn {

/// Which feature groups go into a pair vector. Slot order is fixed:
/// complexity(A), complexity(B), [a_in_b, b_in_a], domain one-hot,
/// Wikipedia-title embeddings (A, B), Wikidata embeddings (A, B).
struct FeatureConfig {
  bool include_complexity = true;  // per-concept complexity slots plus the two substring slots
  bool include_page_view = true;
  bool include_domain_onehot = true;
  bool include_wp_embedding = false;
  bool include_wd_embedding = false;

  /// The "Complex" system (with_wd = false) or "Complex+wd". Cross-domain
  /// drops the domain one-hot.
  static FeatureConfig complex(Scenario scenario, bool with_wd);

  /// Turns the one-hot off for cross-domain runs.
  FeatureConfig for_scenario(Scenario scenario) const;

  std::vector<std::string> layout() const;
  std::size_t size() const;
  /// Stable identifier for the layout, e.g. "cx1-pv1-oh1-wp0-wd1".
  std::string layout_id() const;
  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

std::vector<std::string> complexity_slot_names(bool include_page_view);

struct RelatedStats {
  double aoa_mean = 0.0;
  std::size_t count = 0;
};

/// Resources consumed by feature assembly. Optional members are required
/// only by configs that use them.
struct FeatureDeps {
  const ConceptRegistry* registry = nullptr;
  const AoaLexicon* lexicon = nullptr;
  PageviewSource* pageviews = nullptr;
  const ConceptMapping* mapping = nullptr;
  const EmbeddingStore* wd_store = nullptr;
  const EmbeddingStore* wp_store = nullptr;
};

/// [a_in_b, b_in_a] then the 4-slot domain one-hot when requested.
Eigen::VectorXd pair_feature_vector(const LabeledPair& pair, const ConceptRegistry& registry,
                                    const FeatureConfig& config);

/// Caches per-concept profiles; each description is tokenized and scanned once.
class FeatureBuilder {
 public:
  FeatureBuilder(FeatureConfig config, FeatureDeps deps);

  const FeatureConfig& config() const { return config_; }

  /// Other registry concepts whose normalized title occurs in this concept's
  /// normalized description; mean of their own concept_aoa values.
  RelatedStats related_concept_stats(const Concept& c);
  ConceptAoa concept_aoa_of(const Concept& c);
  /// [aoa_gm, aoa_matches, related_aoa, related_count, word_count,
  ///  formula_count, page_view]; the last slot only with include_page_view.
  Eigen::VectorXd complexity_vector(const Concept& c);

  Eigen::VectorXd assemble(const LabeledPair& pair);
  /// One row per pair. Throws if any value is NaN or infinite.
  Eigen::MatrixXd assemble_matrix(std::span<const LabeledPair> pairs);

 private:
  struct Profile {
    ConceptAoa aoa;
    std::optional<RelatedStats> related;
    std::size_t words = 0;
    std::size_t formulas = 0;
  };
  Profile& profile(const Concept& c);
  Eigen::VectorXd wd_vector(const Concept& c) const;

  FeatureConfig config_;
  FeatureDeps deps_;
  std::unordered_map<std::string, Profile> profiles_;
};

/// CSV with header `concept_a,concept_b,domain,label,<slot names...>`.
void write_feature_csv(const std::filesystem::path& path, const FeatureConfig& config,
                       std::span<const LabeledPair> pairs, const Eigen::MatrixXd& features);

}  // namespace prelearn
