#include "prelearn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "prelearn/checksum.hpp"

namespace prelearn {

// ---------------------------------------------------------------- metrics

double Confusion::precision() const {
  return tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double Confusion::recall() const {
  return tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double Confusion::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double Confusion::accuracy() const {
  const std::size_t n = tp + fp + fn + tn;
  return n == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(n);
}

double Confusion::macro_f1() const {
  const Confusion negative{tn, fn, fp, tp};
  return 0.5 * (f1() + negative.f1());
}

Confusion confusion(std::span<const int> preds, std::span<const int> gold, int positive_label) {
  if (preds.size() != gold.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(preds.size()) + " predictions vs " +
                                std::to_string(gold.size()) + " gold labels");
  }
  if (preds.empty()) throw std::invalid_argument("confusion: empty input");
  Confusion c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool p = preds[i] == positive_label;
    const bool g = gold[i] == positive_label;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

double binary_f1(std::span<const int> preds, std::span<const int> gold, int positive_label) {
  return confusion(preds, gold, positive_label).f1();
}

// ------------------------------------------------------- classifier seam

ForestClassifier::ForestClassifier(ForestParams params, std::string layout_id)
    : params_(params), layout_id_(std::move(layout_id)) {}

void ForestClassifier::fit(const Eigen::MatrixXd& x, std::span<const int> y) {
  forest_ = train_normalized_forest(x, y, params_, layout_id_);
}

std::vector<int> ForestClassifier::predict(const Eigen::MatrixXd& x) const {
  std::vector<int> out;
  for (const auto& p : predict_batch(forest_, x)) out.push_back(p.label);
  return out;
}

ClassifierFactory forest_factory(ForestParams params, std::string layout_id) {
  return [params, layout_id] { return std::make_unique<ForestClassifier>(params, layout_id); };
}

// -------------------------------------------------------- cross-validation

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& x, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(idx[i]));
  return out;
}

std::vector<int> take(std::span<const int> y, std::span<const std::size_t> idx) {
  std::vector<int> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(y[i]);
  return out;
}

Eigen::MatrixXd vstack(const Eigen::MatrixXd& top, const Eigen::MatrixXd& bottom) {
  if (top.rows() == 0) return bottom;
  if (bottom.rows() == 0) return top;
  Eigen::MatrixXd out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

void summarize(CvResult& r) {
  const double k = static_cast<double>(r.folds.size());
  r.mean_f1 = r.mean_macro_f1 = r.mean_accuracy = 0.0;
  for (const auto& c : r.folds) {
    r.fold_f1.push_back(c.f1());
    r.mean_f1 += c.f1() / k;
    r.mean_macro_f1 += c.macro_f1() / k;
    r.mean_accuracy += c.accuracy() / k;
  }
}

}  // namespace

CvResult cross_validate(const Eigen::MatrixXd& x, std::span<const int> y, const Folds& folds,
                        const ClassifierFactory& make, const Eigen::MatrixXd* extra_x,
                        std::span<const int> extra_y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw std::invalid_argument("cross_validate: X/y size mismatch");
  if (folds.size() < 2) throw std::invalid_argument("cross_validate: need at least 2 folds");
  if (extra_x && static_cast<std::size_t>(extra_x->rows()) != extra_y.size()) {
    throw std::invalid_argument("cross_validate: extra X/y size mismatch");
  }
  CvResult result;
  for (std::size_t held = 0; held < folds.size(); ++held) {
    std::vector<std::size_t> train_idx;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      if (f != held) train_idx.insert(train_idx.end(), folds[f].begin(), folds[f].end());
    }
    std::sort(train_idx.begin(), train_idx.end());
    Eigen::MatrixXd train_x = take_rows(x, train_idx);
    std::vector<int> train_y = take(y, train_idx);
    if (extra_x) {
      train_x = vstack(train_x, *extra_x);
      train_y.insert(train_y.end(), extra_y.begin(), extra_y.end());
    }
    auto clf = make();
    clf->fit(train_x, train_y);
    const auto preds = clf->predict(take_rows(x, folds[held]));
    const auto gold = take(y, folds[held]);
    result.folds.push_back(confusion(preds, gold));
  }
  summarize(result);
  return result;
}

// ---------------------------------------------------------- experiments

std::string_view system_name(System s) {
  switch (s) {
    case System::Complex: return "Complex";
    case System::ComplexWd: return "Complex+wd";
    case System::ItalianBert: return "Italian-BERT";
    case System::Custom: return "custom";
  }
  return "?";
}

System parse_system(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "complex") return System::Complex;
  if (t == "complex+wd" || t == "complex-wd" || t == "complexwd" || t == "complex_wd") return System::ComplexWd;
  if (t == "italian-bert" || t == "bert" || t == "italianbert") return System::ItalianBert;
  if (t == "custom") return System::Custom;
  throw std::invalid_argument("unknown system '" + std::string(text) + "'");
}

std::string_view eval_mode_name(EvalMode m) {
  switch (m) {
    case EvalMode::TestSet: return "test";
    case EvalMode::CrossValidation: return "cv";
    case EvalMode::Holdout: return "holdout";
  }
  return "?";
}

EvalMode parse_eval_mode(std::string_view text) {
  if (text == "test") return EvalMode::TestSet;
  if (text == "cv") return EvalMode::CrossValidation;
  if (text == "holdout") return EvalMode::Holdout;
  throw std::invalid_argument("unknown evaluation mode '" + std::string(text) + "'");
}

ExperimentConfig ExperimentConfig::for_system(System system, Scenario scenario, Domain target,
                                              std::uint64_t seed) {
  ExperimentConfig c;
  c.system = system;
  c.scenario = scenario;
  c.target = target;
  c.seed = seed;
  c.forest.seed = seed;
  c.features = FeatureConfig::complex(scenario, system == System::ComplexWd);
  return c;
}

FeatureConfig ExperimentConfig::effective_features() const { return features.for_scenario(scenario); }

namespace {

std::string describe(const FeatureConfig& f) {
  std::vector<std::string> parts;
  if (f.include_complexity) parts.emplace_back("complexity");
  if (f.include_complexity && f.include_page_view) parts.emplace_back("page_view");
  if (f.include_wd_embedding && f.include_wp_embedding) {
    parts.emplace_back("wd+wp_embedding");
  } else if (f.include_wd_embedding) {
    parts.emplace_back("wd_embedding");
  } else if (f.include_wp_embedding) {
    parts.emplace_back("wp_embedding");
  }
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "+") + p;
  return out.empty() ? "none" : out;
}

}  // namespace

std::string ExperimentConfig::label() const {
  if (!features_name.empty()) return features_name;
  if (system == System::ItalianBert) return "italian-bert";
  return describe(effective_features());
}

std::string ExperimentConfig::canonical() const {
  std::ostringstream os;
  os << "scenario=" << scenario_name(scenario) << ";system=" << system_name(system)
     << ";target=" << domain_slug(target) << ";mode=" << eval_mode_name(mode) << ";folds=" << folds
     << ";holdout=" << holdout_fraction << ";seed=" << seed;
  if (system != System::ItalianBert) {
    os << ";layout=" << effective_features().layout_id() << ";n_trees=" << forest.n_trees
       << ";mtry=" << forest.mtry.value_or(0) << ";min_node=" << forest.min_node_size
       << ";bootstrap=" << forest.bootstrap << ";forest_seed=" << forest.seed;
  }
  return os.str();
}

void check_resources(const ExperimentConfig& config, const Resources& r) {
  if (!r.dataset) throw std::invalid_argument("missing resource: dataset");
  for (Domain d : kAllDomains) {
    if (!r.dataset->pairs.count(d)) {
      throw std::invalid_argument("missing resource: training pairs for " + std::string(domain_slug(d)));
    }
  }
  const auto& target_pairs = r.dataset->pairs.at(config.target);
  if (config.mode == EvalMode::TestSet && target_pairs.test.empty()) {
    throw std::invalid_argument("missing resource: test pairs for " + std::string(domain_slug(config.target)));
  }
  if (config.system == System::ItalianBert) {
    if (!r.external_predictions) throw std::invalid_argument("missing resource: Italian-BERT prediction directory");
    const auto p = external_prediction_path(*r.external_predictions, config.scenario, config.target);
    if (!std::filesystem::exists(p)) throw std::invalid_argument("missing resource: " + p.string());
    return;
  }
  const FeatureConfig f = config.effective_features();
  if (f.include_complexity && !r.lexicon) throw std::invalid_argument("missing resource: AoA lexicon");
  if (f.include_complexity && f.include_page_view && !r.pageviews) {
    throw std::invalid_argument("missing resource: pageview cache");
  }
  if (f.include_wd_embedding && !r.mapping) throw std::invalid_argument("missing resource: concept mapping");
  if (f.include_wd_embedding && !r.wd_store) throw std::invalid_argument("missing resource: Wikidata embeddings");
  if (f.include_wp_embedding && !r.wp_store) throw std::invalid_argument("missing resource: Wikipedia embeddings");
}

namespace {

std::vector<int> labels_of(std::span<const LabeledPair> pairs) {
  std::vector<int> y;
  y.reserve(pairs.size());
  for (const auto& p : pairs) y.push_back(p.label);
  return y;
}

void fill_row(EvalRow& row, const Confusion& c) {
  row.f1_pos = c.f1();
  row.f1_macro = c.macro_f1();
  row.accuracy = c.accuracy();
  row.precision = c.precision();
  row.recall = c.recall();
}

EvalRow blank_row(const ExperimentConfig& config) {
  EvalRow row;
  row.scenario = std::string(scenario_name(config.scenario));
  row.system = std::string(system_name(config.system));
  row.features = config.label();
  row.domain = std::string(domain_short(config.target));
  row.seed = config.seed;
  return row;
}

// Training pairs of every domain except the target.
std::vector<LabeledPair> other_domain_training(const Dataset& ds, Domain target) {
  std::vector<LabeledPair> out;
  for (Domain d : kAllDomains) {
    if (d == target) continue;
    const auto& t = ds.pairs.at(d).train;
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

void audit_no_target(std::span<const LabeledPair> train, Domain target) {
  for (const auto& p : train) {
    if (p.domain == target) throw std::logic_error("cross-domain training set contains a target-domain pair");
  }
}

struct CellContext {
  FeatureBuilder* builder = nullptr;
  // Models trained on a training set that does not depend on the target.
  std::map<std::string, std::shared_ptr<Classifier>>* model_cache = nullptr;
};

std::shared_ptr<Classifier> fit_classifier(const ExperimentConfig& config, const Resources& r,
                                           const Eigen::MatrixXd& x, std::span<const int> y) {
  auto clf = r.classifier ? r.classifier()
                          : std::make_unique<ForestClassifier>(config.forest, config.effective_features().layout_id());
  clf->fit(x, y);
  return clf;
}

EvalRow run_bert_cell(const ExperimentConfig& config, const Resources& r) {
  const auto path = external_prediction_path(*r.external_predictions, config.scenario, config.target);
  const auto preds = load_predictions(path);
  const auto& target = r.dataset->pairs.at(config.target);
  EvalRow row = blank_row(config);
  if (config.mode == EvalMode::TestSet) {
    fill_row(row, score_predictions(preds, target.test, true));
  } else {
    fill_row(row, score_predictions(preds, target.train, false));
  }
  return row;
}

void maybe_write_predictions(const ExperimentConfig& config, const Resources& r,
                             std::span<const LabeledPair> eval, const std::vector<int>& preds) {
  if (!r.prediction_output) return;
  std::vector<PredictionRow> rows;
  for (std::size_t i = 0; i < eval.size(); ++i) rows.push_back({eval[i].a, eval[i].b, preds[i]});
  std::string system(system_name(config.system));
  std::replace(system.begin(), system.end(), '+', '_');
  const auto dir = *r.prediction_output / std::string(scenario_name(config.scenario)) / system;
  std::filesystem::create_directories(dir);
  write_predictions(dir / (std::string(domain_slug(config.target)) + ".csv"), rows);
}

EvalRow run_cell(const ExperimentConfig& config, const Resources& r, CellContext ctx) {
  if (config.system == System::ItalianBert) return run_bert_cell(config, r);
  const Dataset& ds = *r.dataset;
  FeatureBuilder& builder = *ctx.builder;
  EvalRow row = blank_row(config);
  const auto& target_pairs = ds.pairs.at(config.target);

  if (config.mode == EvalMode::TestSet) {
    const DatasetSplit split = make_training_split(ds.registry, ds.pairs, config.scenario, config.target);
    if (config.scenario == Scenario::CrossDomain) audit_no_target(split.train, config.target);
    // In-domain models are keyed once; cross-domain models per target.
    const std::string key = config.scenario == Scenario::InDomain ? "in-domain" : std::string(domain_slug(config.target));
    std::shared_ptr<Classifier> clf;
    if (ctx.model_cache && ctx.model_cache->count(key)) {
      clf = ctx.model_cache->at(key);
    } else {
      const auto y = labels_of(split.train);
      clf = fit_classifier(config, r, builder.assemble_matrix(split.train), y);
      if (ctx.model_cache) (*ctx.model_cache)[key] = clf;
    }
    const auto preds = clf->predict(builder.assemble_matrix(split.eval));
    fill_row(row, confusion(preds, labels_of(split.eval)));
    maybe_write_predictions(config, r, split.eval, preds);
    return row;
  }

  const std::vector<LabeledPair>& pool = target_pairs.train;
  const Eigen::MatrixXd pool_x = builder.assemble_matrix(pool);
  const std::vector<int> pool_y = labels_of(pool);
  const auto others = other_domain_training(ds, config.target);
  const Eigen::MatrixXd others_x = builder.assemble_matrix(others);
  const std::vector<int> others_y = labels_of(others);

  Folds folds;
  if (config.mode == EvalMode::CrossValidation) {
    folds = stratified_kfold(std::span<const int>(pool_y), config.folds, config.seed);
  } else {
    const auto h = stratified_holdout(std::span<const int>(pool_y), config.holdout_fraction, config.seed);
    folds = {h.train, h.validation};
  }

  std::vector<Confusion> scored;
  if (config.scenario == Scenario::InDomain) {
    if (config.mode == EvalMode::CrossValidation) {
      ClassifierFactory make = r.classifier ? r.classifier : forest_factory(config.forest, config.effective_features().layout_id());
      scored = cross_validate(pool_x, pool_y, folds, make, &others_x, others_y).folds;
    } else {
      const auto train_x = take_rows(pool_x, folds[0]);
      auto train_y = take(pool_y, folds[0]);
      train_y.insert(train_y.end(), others_y.begin(), others_y.end());
      auto clf = fit_classifier(config, r, vstack(train_x, others_x), train_y);
      scored.push_back(confusion(clf->predict(take_rows(pool_x, folds[1])), take(pool_y, folds[1])));
    }
  } else {
    audit_no_target(others, config.target);
    auto clf = fit_classifier(config, r, others_x, others_y);
    const std::size_t first = config.mode == EvalMode::Holdout ? 1 : 0;
    for (std::size_t f = first; f < folds.size(); ++f) {
      scored.push_back(confusion(clf->predict(take_rows(pool_x, folds[f])), take(pool_y, folds[f])));
    }
  }

  CvResult cv;
  cv.folds = scored;
  summarize(cv);
  row.f1_pos = cv.mean_f1;
  row.f1_macro = cv.mean_macro_f1;
  row.accuracy = cv.mean_accuracy;
  double p = 0.0;
  double rc = 0.0;
  for (const auto& c : scored) {
    p += c.precision() / static_cast<double>(scored.size());
    rc += c.recall() / static_cast<double>(scored.size());
  }
  row.precision = p;
  row.recall = rc;
  row.fold_f1 = cv.fold_f1;
  return row;
}

FeatureDeps deps_of(const Resources& r) {
  FeatureDeps d;
  d.registry = &r.dataset->registry;
  d.lexicon = r.lexicon;
  d.pageviews = r.pageviews;
  d.mapping = r.mapping;
  d.wd_store = r.wd_store;
  d.wp_store = r.wp_store;
  return d;
}

EvalRow average_row(const std::vector<EvalRow>& cells) {
  EvalRow avg = cells.front();
  avg.domain = "AVG";
  avg.fold_f1.clear();
  avg.f1_pos = avg.f1_macro = avg.accuracy = avg.precision = avg.recall = 0.0;
  for (const auto& c : cells) {
    avg.f1_pos += c.f1_pos;
    avg.f1_macro += c.f1_macro;
    avg.accuracy += c.accuracy;
    avg.precision += c.precision;
    avg.recall += c.recall;
  }
  const double n = static_cast<double>(cells.size());
  avg.f1_pos /= n;
  avg.f1_macro /= n;
  avg.accuracy /= n;
  avg.precision /= n;
  avg.recall /= n;
  return avg;
}

}  // namespace

EvalRow run_experiment(const ExperimentConfig& config, const Resources& resources) {
  check_resources(config, resources);
  if (config.system == System::ItalianBert) return run_cell(config, resources, {});
  FeatureBuilder builder(config.effective_features(), deps_of(resources));
  return run_cell(config, resources, {&builder, nullptr});
}

EvalReport run_all_domains(const ExperimentConfig& base, const Resources& resources) {
  std::vector<ExperimentConfig> cells;
  for (Domain d : kAllDomains) {
    ExperimentConfig c = base;
    c.target = d;
    check_resources(c, resources);
    cells.push_back(c);
  }
  EvalReport report;
  std::vector<EvalRow> rows;
  std::optional<FeatureBuilder> builder;
  if (base.system != System::ItalianBert) builder.emplace(base.effective_features(), deps_of(resources));
  std::map<std::string, std::shared_ptr<Classifier>> cache;
  for (const auto& c : cells) {
    rows.push_back(run_cell(c, resources, {builder ? &*builder : nullptr, &cache}));
    report.config_hashes.push_back(sha256_hex(c.canonical()));
  }
  report.rows = rows;
  report.rows.push_back(average_row(rows));
  return report;
}

EvalReport run_ablation(const std::vector<ExperimentConfig>& configs, const Resources& resources) {
  for (const auto& c : configs) {
    for (Domain d : kAllDomains) {
      ExperimentConfig cell = c;
      cell.target = d;
      check_resources(cell, resources);
    }
  }
  EvalReport all;
  for (const auto& c : configs) {
    auto part = run_all_domains(c, resources);
    all.rows.insert(all.rows.end(), part.rows.begin(), part.rows.end());
    all.config_hashes.insert(all.config_hashes.end(), part.config_hashes.begin(), part.config_hashes.end());
  }
  return all;
}

std::vector<ExperimentConfig> ablation_grid(Scenario scenario, EvalMode mode, std::uint64_t seed,
                                            bool include_bert) {
  struct Row {
    const char* name;
    bool complexity, page_view, wp, wd;
  };
  // Raw-text rows first, then structured rows.
  const Row rows[] = {
      {"complexity", true, false, false, false},
      {"wp_embedding", false, false, true, false},
      {"complexity+page_view", true, true, false, false},
      {"wd_embedding", false, false, false, true},
      {"wd+wp_embedding", false, false, true, true},
      {"complexity+page_view+wd_embedding", true, true, false, true},
  };
  std::vector<ExperimentConfig> out;
  for (const auto& r : rows) {
    ExperimentConfig c = ExperimentConfig::for_system(System::Custom, scenario, Domain::DataMining, seed);
    c.mode = mode;
    c.features.include_complexity = r.complexity;
    c.features.include_page_view = r.page_view;
    c.features.include_domain_onehot = r.complexity && scenario == Scenario::InDomain;
    c.features.include_wp_embedding = r.wp;
    c.features.include_wd_embedding = r.wd;
    c.features_name = r.name;
    out.push_back(c);
    if (include_bert && std::string_view(r.name) == "wp_embedding") {
      ExperimentConfig b = ExperimentConfig::for_system(System::ItalianBert, scenario, Domain::DataMining, seed);
      b.mode = EvalMode::Holdout;
      b.features_name = "Italian-BERT";
      out.push_back(b);
    }
  }
  return out;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string report_csv(const EvalReport& report) {
  std::string out = "scenario,system,features,domain,f1_pos,f1_macro,accuracy,seed\n";
  for (const auto& r : report.rows) {
    out += r.scenario + "," + r.system + "," + r.features + "," + r.domain + "," + fixed(r.f1_pos, 6) + "," +
           fixed(r.f1_macro, 6) + "," + fixed(r.accuracy, 6) + "," + std::to_string(r.seed) + "\n";
  }
  return out;
}

std::string report_table(const EvalReport& report) {
  struct Line {
    std::string scenario, system, features;
    std::map<std::string, double> f1;
  };
  std::vector<Line> lines;
  for (const auto& r : report.rows) {
    auto it = std::find_if(lines.begin(), lines.end(), [&](const Line& l) {
      return l.scenario == r.scenario && l.system == r.system && l.features == r.features;
    });
    if (it == lines.end()) {
      lines.push_back({r.scenario, r.system, r.features, {}});
      it = std::prev(lines.end());
    }
    it->f1[r.domain] = r.f1_pos;
  }
  std::size_t w_scen = 8, w_sys = 6, w_feat = 8;
  for (const auto& l : lines) {
    w_scen = std::max(w_scen, l.scenario.size());
    w_sys = std::max(w_sys, l.system.size());
    w_feat = std::max(w_feat, l.features.size());
  }
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(w_scen)) << "Scenario" << " | " << std::setw(static_cast<int>(w_sys))
     << "System" << " | " << std::setw(static_cast<int>(w_feat)) << "Features" << " |    DM |   Geo |   Phy |  Prec |   AVG\n";
  os << std::string(w_scen + w_sys + w_feat + 6 + 40, '-') << '\n';
  for (const auto& l : lines) {
    os << std::left << std::setw(static_cast<int>(w_scen)) << l.scenario << " | " << std::setw(static_cast<int>(w_sys))
       << l.system << " | " << std::setw(static_cast<int>(w_feat)) << l.features << " |";
    for (const char* col : {"DM", "Geo", "Phy", "Prec", "AVG"}) {
      const auto it = l.f1.find(col);
      os << ' ' << std::right << std::setw(5) << (it == l.f1.end() ? std::string("-") : fixed(it->second, 3))
         << (std::string_view(col) == "AVG" ? "" : " |");
    }
    os << '\n';
  }
  return os.str();
}

// --------------------------------------------------- prediction exchange

std::vector<PredictionRow> load_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string(), 1, "empty prediction file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "concept_a,concept_b,pred_label") {
    throw ParseError(path.string(), 1, "header must be 'concept_a,concept_b,pred_label'");
  }
  std::vector<PredictionRow> rows;
  std::set<std::pair<std::string, std::string>> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || line.find(',', c2 + 1) != std::string::npos) {
      throw ParseError(path.string(), lineno, "expected 3 fields");
    }
    PredictionRow r{line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1), 0};
    const std::string label = line.substr(c2 + 1);
    if (label == "1") r.pred_label = 1;
    else if (label != "0") throw ParseError(path.string(), lineno, "pred_label must be 0 or 1");
    if (!seen.emplace(r.a, r.b).second) throw ParseError(path.string(), lineno, "duplicate pair " + r.a + "," + r.b);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_predictions(const std::filesystem::path& path, std::span<const PredictionRow> rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "concept_a,concept_b,pred_label\n";
  for (const auto& r : rows) out << r.a << ',' << r.b << ',' << r.pred_label << '\n';
}

Confusion score_predictions(std::span<const PredictionRow> preds, std::span<const LabeledPair> gold,
                            bool require_all) {
  std::map<std::pair<std::string, std::string>, int> gold_by_pair;
  for (const auto& g : gold) gold_by_pair[{g.a, g.b}] = g.label;
  std::vector<int> p;
  std::vector<int> y;
  for (const auto& r : preds) {
    const auto it = gold_by_pair.find({r.a, r.b});
    if (it == gold_by_pair.end()) throw std::invalid_argument("prediction for unknown pair " + r.a + "," + r.b);
    p.push_back(r.pred_label);
    y.push_back(it->second);
  }
  if (require_all && p.size() != gold_by_pair.size()) {
    throw std::invalid_argument("predictions cover " + std::to_string(p.size()) + " of " +
                                std::to_string(gold_by_pair.size()) + " gold pairs");
  }
  return confusion(p, y);
}

std::filesystem::path external_prediction_path(const std::filesystem::path& dir, Scenario s, Domain d) {
  return dir / std::string(scenario_name(s)) / (std::string(domain_slug(d)) + ".csv");
}

}  // namespace prelearn
