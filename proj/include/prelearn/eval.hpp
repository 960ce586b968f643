#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "prelearn/corpus.hpp"
#include "prelearn/embeddings.hpp"
#include "prelearn/features.hpp"
#include "prelearn/forest.hpp"
#include "prelearn/lexres.hpp"
#include "prelearn/pageviews.hpp"

namespace prelearn {

// ---------------------------------------------------------------- metrics

struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  double precision() const;  // 0 when nothing was predicted positive
  double recall() const;     // 0 when there are no positive golds
  double f1() const;         // 0 when precision + recall == 0
  double accuracy() const;
  /// Mean of the positive- and negative-class F1.
  double macro_f1() const;
};

/// Throws std::invalid_argument when sizes differ or are zero.
Confusion confusion(std::span<const int> preds, std::span<const int> gold, int positive_label = 1);

/// Positive-class F1: 2PR / (P + R), or 0 when P + R = 0.
double binary_f1(std::span<const int> preds, std::span<const int> gold, int positive_label = 1);

// ------------------------------------------------------- classifier seam

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const Eigen::MatrixXd& x, std::span<const int> y) = 0;
  virtual std::vector<int> predict(const Eigen::MatrixXd& x) const = 0;
};
using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

/// Z-score normalizer plus random forest, both fitted inside fit().
class ForestClassifier : public Classifier {
 public:
  explicit ForestClassifier(ForestParams params, std::string layout_id = {});
  void fit(const Eigen::MatrixXd& x, std::span<const int> y) override;
  std::vector<int> predict(const Eigen::MatrixXd& x) const override;
  const Forest& forest() const { return forest_; }

 private:
  ForestParams params_;
  std::string layout_id_;
  Forest forest_;
};

ClassifierFactory forest_factory(ForestParams params, std::string layout_id = {});

// -------------------------------------------------------- cross-validation

struct CvResult {
  std::vector<Confusion> folds;
  std::vector<double> fold_f1;
  double mean_f1 = 0.0;
  double mean_macro_f1 = 0.0;
  double mean_accuracy = 0.0;
};

/// For each fold: a fresh classifier is fitted on the other folds' rows plus
/// every row of `extra_x` (always-train rows) and scored on the held-out fold.
CvResult cross_validate(const Eigen::MatrixXd& x, std::span<const int> y, const Folds& folds,
                        const ClassifierFactory& make, const Eigen::MatrixXd* extra_x = nullptr,
                        std::span<const int> extra_y = {});

// ---------------------------------------------------------- experiments

enum class System { Complex, ComplexWd, ItalianBert, Custom };
enum class EvalMode { TestSet, CrossValidation, Holdout };

std::string_view system_name(System s);  // "Complex", "Complex+wd", "Italian-BERT", "custom"
System parse_system(std::string_view text);
std::string_view eval_mode_name(EvalMode m);
EvalMode parse_eval_mode(std::string_view text);

struct ExperimentConfig {
  Scenario scenario = Scenario::InDomain;
  System system = System::Complex;
  FeatureConfig features;            // ignored for ItalianBert
  std::string features_name;         // report label; derived from features when empty
  Domain target = Domain::DataMining;
  EvalMode mode = EvalMode::TestSet;
  int folds = 10;
  double holdout_fraction = 0.30;
  ForestParams forest;
  std::uint64_t seed = 1;            // fold/holdout seed and forest seed

  /// Features for the named system under the scenario (domain one-hot off
  /// for cross-domain).
  static ExperimentConfig for_system(System system, Scenario scenario, Domain target, std::uint64_t seed);
  FeatureConfig effective_features() const;
  std::string label() const;
  /// Canonical text rendering; its SHA-256 is the config hash.
  std::string canonical() const;
};

/// Everything an experiment may read. Null members are only an error when
/// a config needs them.
struct Resources {
  const Dataset* dataset = nullptr;
  const AoaLexicon* lexicon = nullptr;
  PageviewSource* pageviews = nullptr;
  const ConceptMapping* mapping = nullptr;
  const EmbeddingStore* wd_store = nullptr;
  const EmbeddingStore* wp_store = nullptr;
  /// Directory of externally produced prediction files
  /// `<dir>/<scenario>/<domain_slug>.csv` with header
  /// `concept_a,concept_b,pred_label`.
  std::optional<std::filesystem::path> external_predictions;
  /// When set, test-set predictions are written here in the same schema.
  std::optional<std::filesystem::path> prediction_output;
  /// Overrides the forest for Complex/ComplexWd/Custom runs (tests).
  ClassifierFactory classifier;
};

struct EvalRow {
  std::string scenario;
  std::string system;
  std::string features;
  std::string domain;  // DM / Geo / Phy / Prec / AVG
  double f1_pos = 0.0;
  double f1_macro = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> fold_f1;  // CV mode only
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<std::string> config_hashes;
};

/// Throws std::invalid_argument naming the first missing resource.
void check_resources(const ExperimentConfig& config, const Resources& resources);

/// One (scenario, system, features, target domain) cell.
EvalRow run_experiment(const ExperimentConfig& config, const Resources& resources);

/// Runs `base` for every domain and appends the AVG row (arithmetic mean).
/// All resources are checked before any training starts.
EvalReport run_all_domains(const ExperimentConfig& base, const Resources& resources);

/// run_all_domains for each config, concatenated in order.
EvalReport run_ablation(const std::vector<ExperimentConfig>& configs, const Resources& resources);

/// The feature rows of the ablation grid for one scenario.
std::vector<ExperimentConfig> ablation_grid(Scenario scenario, EvalMode mode, std::uint64_t seed,
                                            bool include_bert);

/// Header `scenario,system,features,domain,f1_pos,f1_macro,accuracy,seed`.
std::string report_csv(const EvalReport& report);
/// Aligned table with one line per (scenario, system, features) and columns
/// DM Geo Phy Prec AVG holding positive-class F1.
std::string report_table(const EvalReport& report);

// --------------------------------------------------- prediction exchange

struct PredictionRow {
  std::string a;
  std::string b;
  int pred_label = 0;
};

/// Strict reader for `concept_a,concept_b,pred_label`; throws on any schema
/// deviation or duplicate pair.
std::vector<PredictionRow> load_predictions(const std::filesystem::path& path);
void write_predictions(const std::filesystem::path& path, std::span<const PredictionRow> rows);

/// Joins predictions to gold pairs by (a, b). With `require_all`, every gold
/// pair needs a prediction; predictions for unknown pairs are always an error.
Confusion score_predictions(std::span<const PredictionRow> preds, std::span<const LabeledPair> gold,
                            bool require_all);

std::filesystem::path external_prediction_path(const std::filesystem::path& dir, Scenario s, Domain d);

}  // namespace prelearn
