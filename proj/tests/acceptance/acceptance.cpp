// Acceptance suite: prints one PASS/FAIL/SKIP line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "prelearn/corpus.hpp"
#include "prelearn/eval.hpp"
#include "prelearn/features.hpp"
#include "prelearn/forest.hpp"
#include "prelearn/normalizer.hpp"
#include "support/synthetic.hpp"

namespace {

using namespace prelearn;
using Clock = std::chrono::steady_clock;

constexpr double kF1OracleSeconds = 1.0;
constexpr double kGiniOracleSeconds = 5.0;
constexpr double kNormTolerance = 1e-9;
constexpr double kSyntheticMinF1 = 0.85;
constexpr double kSyntheticSeconds = 60.0;
constexpr double kRealComplexIn = 0.848;
constexpr double kRealComplexWdIn = 0.856;
constexpr double kRealComplexCross = 0.639;
constexpr double kRealInTolerance = 0.05;
constexpr double kRealCrossTolerance = 0.07;

enum class Outcome { Pass, Fail, Skip };

struct Verdict {
  Outcome outcome;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ------------------------------------------------------------- metric oracle

double oracle_f1(const std::vector<int>& pred, const std::vector<int>& gold) {
  std::size_t cells[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < pred.size(); ++i) ++cells[pred[i]][gold[i]];
  const auto tp = static_cast<double>(cells[1][1]);
  const auto fp = static_cast<double>(cells[1][0]);
  const auto fn = static_cast<double>(cells[0][1]);
  const double p = tp + fp == 0 ? 0.0 : tp / (tp + fp);
  const double r = tp + fn == 0 ? 0.0 : tp / (tp + fn);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

Verdict metric_oracle() {
  std::mt19937_64 rng(1000);
  const auto t0 = Clock::now();
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    const double rate = static_cast<double>(rng() % 101) / 100.0;
    std::bernoulli_distribution coin(rate);
    std::vector<int> pred(n), gold(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = coin(rng) ? 1 : 0;
      gold[i] = static_cast<int>(rng() % 2);
    }
    if (binary_f1(pred, gold) != oracle_f1(pred, gold)) ++mismatches;
  }
  const double secs = seconds_since(t0);
  const bool ok = mismatches == 0 && secs < kF1OracleSeconds;
  return {ok ? Outcome::Pass : Outcome::Fail,
          std::to_string(mismatches) + " mismatches / 1000, " + fmt("%.3f s", secs)};
}

// --------------------------------------------------------------- gini oracle

struct Exhaustive {
  Eigen::Index feature = -1;
  double threshold = 0.0;
};

// Weighted child impurity compared as exact fractions: minimizing
// nl*gini_l + nr*gini_r is maximizing (l0^2+l1^2)/nl + (r0^2+r1^2)/nr.
std::optional<Exhaustive> exhaustive_split(const Eigen::MatrixXd& x, const std::vector<int>& y) {
  long long p0 = 0, p1 = 0;
  for (int v : y) (v ? p1 : p0)++;
  if (p0 == 0 || p1 == 0) return std::nullopt;
  const long long n = p0 + p1;
  // Parent score as a fraction (p0^2 + p1^2) / n.
  long long best_num = p0 * p0 + p1 * p1;
  long long best_den = n;
  std::optional<Exhaustive> best;
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    std::vector<double> vals(x.col(f).data(), x.col(f).data() + x.rows());
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
      const double t = vals[i] + (vals[i + 1] - vals[i]) / 2.0;
      long long l0 = 0, l1 = 0;
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        if (x(r, f) <= vals[i]) (y[static_cast<std::size_t>(r)] ? l1 : l0)++;
      }
      const long long r0 = p0 - l0, r1 = p1 - l1;
      const long long nl = l0 + l1, nr = r0 + r1;
      const long long num = (l0 * l0 + l1 * l1) * nr + (r0 * r0 + r1 * r1) * nl;
      const long long den = nl * nr;
      if (num * best_den > best_num * den) {
        best_num = num;
        best_den = den;
        best = Exhaustive{f, t};
      }
    }
  }
  return best;
}

Verdict gini_oracle() {
  std::mt19937_64 rng(500);
  const auto t0 = Clock::now();
  std::size_t mismatches = 0;
  std::size_t with_split = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<Eigen::Index>(1 + rng() % 12);
    const auto p = static_cast<Eigen::Index>(1 + rng() % 4);
    Eigen::MatrixXd x(n, p);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) x(i, j) = static_cast<double>(rng() % 5) - 1.5;
      y[static_cast<std::size_t>(i)] = static_cast<int>(rng() % 2);
    }
    std::vector<std::size_t> rows(static_cast<std::size_t>(n));
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    std::vector<Eigen::Index> feats(static_cast<std::size_t>(p));
    std::iota(feats.begin(), feats.end(), Eigen::Index{0});
    const auto got = gini_split(x, y, rows, feats);
    const auto want = exhaustive_split(x, y);
    if (got.has_value() != want.has_value()) {
      ++mismatches;
      continue;
    }
    if (!want) continue;
    ++with_split;
    if (got->feature != want->feature || got->threshold != want->threshold) ++mismatches;
  }
  const double secs = seconds_since(t0);
  const bool ok = mismatches == 0 && secs < kGiniOracleSeconds;
  return {ok ? Outcome::Pass : Outcome::Fail, std::to_string(mismatches) + " mismatches / 500 (" +
                                                  std::to_string(with_split) + " with a split), " +
                                                  fmt("%.3f s", secs)};
}

// -------------------------------------------------------------- determinism

struct SyntheticWorld {
  testing::SyntheticCorpus corpus;
  PageviewSource pageviews;
  Resources resources;

  explicit SyntheticWorld(testing::SyntheticOptions opts = {})
      : corpus(testing::make_synthetic(opts)), pageviews(corpus.pageviews, corpus.window, true) {
    resources.dataset = &corpus.dataset;
    resources.lexicon = &corpus.lexicon;
    resources.pageviews = &pageviews;
    resources.mapping = &corpus.mapping;
    resources.wd_store = &corpus.wd;
    resources.wp_store = &corpus.wp;
  }
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct DeterminismRun {
  std::string csv;
  std::string predictions;
};

DeterminismRun determinism_run(const std::string& tag, unsigned threads) {
  SyntheticWorld w;
  const auto dir = testing::temp_dir("acceptance_det_" + tag);
  w.resources.prediction_output = dir;
  auto cfg = ExperimentConfig::for_system(System::Complex, Scenario::InDomain, Domain::DataMining, 2020);
  cfg.forest.n_threads = threads;
  const auto report = run_all_domains(cfg, w.resources);
  DeterminismRun out{report_csv(report), {}};
  for (Domain d : kAllDomains) {
    out.predictions += slurp(dir / "in-domain" / "Complex" / (std::string(domain_slug(d)) + ".csv"));
  }
  return out;
}

Verdict determinism() {
  const auto a = determinism_run("a", 1);
  const auto b = determinism_run("b", 1);
  const auto c = determinism_run("c", 4);
  const bool same_csv = a.csv == b.csv && a.csv == c.csv;
  const bool same_preds = !a.predictions.empty() && a.predictions == b.predictions && a.predictions == c.predictions;
  return {same_csv && same_preds ? Outcome::Pass : Outcome::Fail,
          std::string("report CSV ") + (same_csv ? "identical" : "differs") + ", predictions " +
              (same_preds ? "identical" : "differ") + " across 3 runs (1, 1 and 4 threads)"};
}

// ------------------------------------------------------------ normalization

Verdict normalization() {
  std::mt19937_64 rng(77);
  double worst_mu = 0.0;
  double worst_sd = 0.0;
  bool constants_zero = true;
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<Eigen::Index>(2 + rng() % 500);
    const auto p = static_cast<Eigen::Index>(1 + rng() % 30);
    std::normal_distribution<double> nd(static_cast<double>(rng() % 1000) - 500.0,
                                        1.0 + static_cast<double>(rng() % 1000));
    Eigen::MatrixXd x(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < p; ++j) x(i, j) = nd(rng);
    for (Eigen::Index j = 0; j < p; j += 5) x.col(j).setConstant(nd(rng));
    const auto norm = fit_normalizer(x);
    const Eigen::MatrixXd z = normalize(norm, x);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (norm.is_constant(j)) {
        constants_zero = constants_zero && z.col(j).isZero(0.0);
        continue;
      }
      const double mu = z.col(j).mean();
      const double sd = std::sqrt((z.col(j).array() - mu).square().mean());
      worst_mu = std::max(worst_mu, std::abs(mu));
      worst_sd = std::max(worst_sd, std::abs(sd - 1.0));
    }
  }
  const bool ok = worst_mu < kNormTolerance && worst_sd < kNormTolerance && constants_zero;
  char buf[160];
  std::snprintf(buf, sizeof buf, "max |mu| = %.3g, max |sd - 1| = %.3g over 50 matrices", worst_mu, worst_sd);
  return {ok ? Outcome::Pass : Outcome::Fail, buf};
}

// ------------------------------------------------------------ stratification

Verdict stratification() {
  std::vector<int> labels(100, 0);
  for (int i = 0; i < 20; ++i) labels[static_cast<std::size_t>(i)] = 1;
  bool folds_ok = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto folds = stratified_kfold(labels, 10, seed);
    folds_ok = folds_ok && folds.size() == 10;
    for (const auto& f : folds) {
      const auto pos = std::count_if(f.begin(), f.end(), [&](std::size_t i) { return labels[i] == 1; });
      folds_ok = folds_ok && pos == 2 && f.size() == 10;
    }
  }

  SyntheticWorld w({.concepts_per_domain = 10, .train_pairs_per_domain = 30, .test_pairs_per_domain = 10});
  std::size_t leaked = 0;
  std::size_t audited = 0;
  for (Domain d : kAllDomains) {
    const auto split = make_training_split(w.corpus.dataset.registry, w.corpus.dataset.pairs, Scenario::CrossDomain, d);
    audited += split.train.size();
    leaked += static_cast<std::size_t>(
        std::count_if(split.train.begin(), split.train.end(), [d](const LabeledPair& p) { return p.domain == d; }));
  }
  // The experiment runner repeats the audit internally and must not throw.
  bool runner_ok = true;
  try {
    auto cfg = ExperimentConfig::for_system(System::Complex, Scenario::CrossDomain, Domain::DataMining, 1);
    cfg.forest.n_trees = 5;
    run_all_domains(cfg, w.resources);
  } catch (const std::exception&) {
    runner_ok = false;
  }
  const bool ok = folds_ok && leaked == 0 && runner_ok;
  return {ok ? Outcome::Pass : Outcome::Fail,
          std::string("2 positives per fold: ") + (folds_ok ? "yes" : "no") + "; " + std::to_string(leaked) +
              " target pairs among " + std::to_string(audited) + " cross-domain training pairs"};
}

// ---------------------------------------------------------- synthetic e2e

Verdict synthetic_end_to_end() {
  const auto t0 = Clock::now();
  SyntheticWorld w;
  auto cfg = ExperimentConfig::for_system(System::Complex, Scenario::InDomain, Domain::DataMining, 2020);
  cfg.mode = EvalMode::CrossValidation;
  const auto report = run_all_domains(cfg, w.resources);
  const double secs = seconds_since(t0);
  const double avg = report.rows.back().f1_pos;
  double mean = 0.0;
  for (std::size_t i = 0; i < 4; ++i) mean += report.rows[i].f1_pos / 4.0;
  const bool avg_consistent = std::abs(mean - avg) < 1e-12;
  const bool ok = avg >= kSyntheticMinF1 && secs < kSyntheticSeconds && avg_consistent;
  std::string detail = "10-fold CV mean F1";
  for (std::size_t i = 0; i < 4; ++i) detail += " " + report.rows[i].domain + "=" + fmt("%.3f", report.rows[i].f1_pos);
  detail += " AVG=" + fmt("%.3f", avg) + " (>= 0.85), " + fmt("%.1f s", secs);
  return {ok ? Outcome::Pass : Outcome::Fail, detail};
}

// ------------------------------------------------------------ feature layout

Verdict feature_layout() {
  SyntheticWorld w({.concepts_per_domain = 6, .train_pairs_per_domain = 10, .test_pairs_per_domain = 4});
  FeatureDeps deps{&w.corpus.dataset.registry, &w.corpus.lexicon, &w.pageviews,
                   &w.corpus.mapping,          &w.corpus.wd,      &w.corpus.wp};
  const LabeledPair pair = w.corpus.dataset.pairs.at(Domain::Physics).train.front();
  struct Case {
    bool wd;
    Scenario scenario;
    Eigen::Index expected;
  };
  const Case cases[] = {{false, Scenario::InDomain, 20},
                        {false, Scenario::CrossDomain, 16},
                        {true, Scenario::InDomain, 420},
                        {true, Scenario::CrossDomain, 416}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const auto cfg = FeatureConfig::complex(c.scenario, c.wd);
    FeatureBuilder b(cfg, deps);
    const auto len = b.assemble(pair).size();
    ok = ok && len == c.expected && static_cast<Eigen::Index>(cfg.layout().size()) == c.expected;
    if (!detail.empty()) detail += " / ";
    detail += std::to_string(len);
  }
  return {ok ? Outcome::Pass : Outcome::Fail, "lengths " + detail + " (expected 20 / 16 / 420 / 416)"};
}

// ----------------------------------------------------------- real-data rows

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

Verdict real_data_table() {
  const auto data = env("PRELEARN_DATA_DIR");
  const auto aoa = env("PRELEARN_AOA");
  const auto pv = env("PRELEARN_PAGEVIEW_CACHE");
  const auto mapping_path = env("PRELEARN_MAPPING");
  const auto wd_path = env("PRELEARN_WD_EMBEDDINGS");
  if (!data || !aoa || !pv || !mapping_path || !wd_path) {
    return {Outcome::Skip,
            "real dataset not configured; set PRELEARN_DATA_DIR, PRELEARN_AOA, PRELEARN_PAGEVIEW_CACHE, "
            "PRELEARN_MAPPING and PRELEARN_WD_EMBEDDINGS"};
  }
  const auto ds = load_dataset(*data);
  const auto lex = load_aoa_lexicon(*aoa);
  PageviewWindow window{env("PRELEARN_PAGEVIEW_START").value_or("20190901"),
                        env("PRELEARN_PAGEVIEW_END").value_or("20200831")};
  PageviewSource pageviews(PageviewCache::load(*pv), window, true);
  const auto mapping = load_concept_mapping(*mapping_path);
  std::set<std::string> qids;
  for (const auto& [id, e] : mapping.entries())
    if (e.qid) qids.insert(*e.qid);
  const auto wd = load_graph_embeddings(*wd_path, qids);
  Resources r;
  r.dataset = &ds;
  r.lexicon = &lex;
  r.pageviews = &pageviews;
  r.mapping = &mapping;
  r.wd_store = &wd;

  struct Row {
    System system;
    Scenario scenario;
    double expected;
    double tolerance;
    const char* name;
  };
  const Row rows[] = {{System::Complex, Scenario::InDomain, kRealComplexIn, kRealInTolerance, "Complex in"},
                      {System::ComplexWd, Scenario::InDomain, kRealComplexWdIn, kRealInTolerance, "Complex+wd in"},
                      {System::Complex, Scenario::CrossDomain, kRealComplexCross, kRealCrossTolerance,
                       "Complex cross"}};
  bool ok = true;
  std::string detail;
  for (const auto& row : rows) {
    const auto cfg = ExperimentConfig::for_system(row.system, row.scenario, Domain::DataMining, 1);
    const double avg = run_all_domains(cfg, r).rows.back().f1_pos;
    ok = ok && std::abs(avg - row.expected) <= row.tolerance;
    if (!detail.empty()) detail += "; ";
    detail += std::string(row.name) + " AVG " + fmt("%.3f", avg) + " vs " + fmt("%.3f", row.expected);
  }
  return {ok ? Outcome::Pass : Outcome::Fail, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"metric oracle", metric_oracle},
      {"gini oracle", gini_oracle},
      {"determinism", determinism},
      {"normalization property", normalization},
      {"stratification", stratification},
      {"synthetic end-to-end", synthetic_end_to_end},
      {"feature layout", feature_layout},
      {"real-data structured rows", real_data_table},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {Outcome::Fail, std::string("exception: ") + e.what()};
    }
    const char* tag = v.outcome == Outcome::Pass ? "PASS" : v.outcome == Outcome::Fail ? "FAIL" : "SKIP";
    if (v.outcome == Outcome::Fail) ++failures;
    std::printf("%s  %-26s %s\n", tag, name.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
