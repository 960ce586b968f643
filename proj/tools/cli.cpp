#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "prelearn/checksum.hpp"
#include "prelearn/corpus.hpp"
#include "prelearn/embeddings.hpp"
#include "prelearn/eval.hpp"
#include "prelearn/features.hpp"
#include "prelearn/forest.hpp"
#include "prelearn/lexres.hpp"
#include "prelearn/pageviews.hpp"

namespace prelearn::cli {
namespace {

namespace fs = std::filesystem;

struct CliConfig {
  std::string data_dir;
  std::string aoa_path;
  std::string pageview_cache;
  std::string window_start = "20190901";
  std::string window_end = "20200831";
  std::string mapping_path;
  std::string wd_path;
  std::string wp_path;
  std::string bert_dir;
  std::string scenario = "in-domain";
  std::string system = "complex";
  std::string mode = "test";
  std::string target = "data_mining";
  std::string split = "train";
  std::string out;
  std::uint64_t seed = 1;
  int folds = 10;
  int n_trees = 500;
  int min_node_size = 1;
  int mtry = 0;
  unsigned threads = 0;
  std::size_t concurrency = 4;
  bool offline = false;

  // slice-embeddings
  std::string input;
  std::string kind = "wikidata";
};

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Loaded {
  Dataset dataset;
  std::optional<AoaLexicon> lexicon;
  std::optional<PageviewSource> pageviews;
  std::optional<ConceptMapping> mapping;
  std::optional<EmbeddingStore> wd;
  std::optional<EmbeddingStore> wp;
  std::vector<fs::path> inputs;

  Resources view() {
    Resources r;
    r.dataset = &dataset;
    r.lexicon = lexicon ? &*lexicon : nullptr;
    r.pageviews = pageviews ? &*pageviews : nullptr;
    r.mapping = mapping ? &*mapping : nullptr;
    r.wd_store = wd ? &*wd : nullptr;
    r.wp_store = wp ? &*wp : nullptr;
    return r;
  }
};

PageviewWindow window_of(const CliConfig& c) { return {c.window_start, c.window_end}; }

std::set<std::string> titles_of(const ConceptRegistry& reg) {
  std::set<std::string> out;
  for (const auto& c : reg.concepts()) out.insert(c.title);
  return out;
}

std::set<std::string> qids_of(const ConceptMapping& m) {
  std::set<std::string> out;
  for (const auto& [id, e] : m.entries()) {
    if (e.qid) out.insert(*e.qid);
  }
  return out;
}

EmbeddingStore load_wp(const fs::path& path, const std::optional<std::set<std::string>>& filter) {
  if (path.extension() == ".tsv") return load_graph_embeddings(path, filter, kTitleEmbeddingDim);
  return load_title_embeddings(path, filter);
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string("missing required option ") + flag);
}

// Loads only what the feature configuration consumes.
Loaded load_resources(const CliConfig& c, const FeatureConfig& f, bool need_features) {
  require(c.data_dir, "--data");
  Loaded l;
  l.dataset = load_dataset(c.data_dir);
  l.inputs.push_back(pages_path(c.data_dir));
  for (Domain d : kAllDomains) {
    l.inputs.push_back(pairs_path(c.data_dir, d, false));
    if (fs::exists(pairs_path(c.data_dir, d, true))) l.inputs.push_back(pairs_path(c.data_dir, d, true));
  }
  if (!need_features) return l;
  if (f.include_complexity) {
    require(c.aoa_path, "--aoa");
    l.lexicon = load_aoa_lexicon(c.aoa_path);
    l.inputs.emplace_back(c.aoa_path);
    if (f.include_page_view) {
      require(c.pageview_cache, "--pageviews");
      std::optional<PageviewClient> client;
      if (!c.offline) client.emplace(PageviewClientOptions{pageviews_base_url_from_env(), c.concurrency});
      l.pageviews.emplace(PageviewCache::load(c.pageview_cache), window_of(c), c.offline, std::move(client));
      if (fs::exists(c.pageview_cache)) l.inputs.emplace_back(c.pageview_cache);
    }
  }
  if (f.include_wd_embedding) {
    require(c.mapping_path, "--mapping");
    require(c.wd_path, "--wd-embeddings");
    l.mapping = load_concept_mapping(c.mapping_path);
    l.wd = load_graph_embeddings(c.wd_path, qids_of(*l.mapping));
    l.inputs.emplace_back(c.mapping_path);
    l.inputs.emplace_back(c.wd_path);
  }
  if (f.include_wp_embedding) {
    require(c.wp_path, "--wp-embeddings");
    l.wp = load_wp(c.wp_path, titles_of(l.dataset.registry));
    l.inputs.emplace_back(c.wp_path);
  }
  return l;
}

// Fetches pageviews for every concept once so feature assembly never blocks
// on one request at a time.
void warm_pageviews(Loaded& l) {
  if (!l.pageviews) return;
  std::vector<std::string> titles;
  for (const auto& c : l.dataset.registry.concepts()) titles.push_back(c.title);
  l.pageviews->prefetch(titles);
}

void persist_pageviews(const CliConfig& c, const Loaded& l) {
  if (l.pageviews && l.pageviews->dirty()) l.pageviews->cache().save(c.pageview_cache);
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << body;
}

void write_manifest(const fs::path& path, const std::string& command, const CliConfig& c,
                    const std::vector<std::string>& config_hashes, const std::vector<fs::path>& inputs) {
  nlohmann::json cfg = {
      {"data", c.data_dir},       {"aoa", c.aoa_path},       {"pageviews", c.pageview_cache},
      {"window", {c.window_start, c.window_end}},            {"mapping", c.mapping_path},
      {"wd_embeddings", c.wd_path}, {"wp_embeddings", c.wp_path}, {"bert_predictions", c.bert_dir},
      {"scenario", c.scenario},   {"system", c.system},      {"mode", c.mode},
      {"target", c.target},       {"folds", c.folds},        {"n_trees", c.n_trees},
      {"mtry", c.mtry},           {"min_node_size", c.min_node_size}, {"offline", c.offline}};
  nlohmann::json in = nlohmann::json::object();
  for (const auto& p : inputs) in[p.string()] = sha256_file(p);
  nlohmann::json m = {{"tool", "prelearn"},
                      {"command", command},
                      {"seed", c.seed},
                      {"config", cfg},
                      {"config_hash", sha256_hex(cfg.dump())},
                      {"cell_config_hashes", config_hashes},
                      {"inputs", in}};
  write_text(path, m.dump(2) + "\n");
}

ForestParams forest_params(const CliConfig& c) {
  ForestParams p;
  p.n_trees = c.n_trees;
  p.min_node_size = c.min_node_size;
  if (c.mtry > 0) p.mtry = c.mtry;
  p.seed = c.seed;
  p.n_threads = c.threads;
  return p;
}

ExperimentConfig experiment_of(const CliConfig& c) {
  const System system = parse_system(c.system);
  if (system == System::Custom) throw UsageError("--system must be complex, complex+wd or italian-bert");
  const Domain target = c.target == "all" ? Domain::DataMining : parse_domain(c.target);
  ExperimentConfig e = ExperimentConfig::for_system(system, parse_scenario(c.scenario), target, c.seed);
  e.mode = parse_eval_mode(c.mode);
  e.folds = c.folds;
  e.forest = forest_params(c);
  return e;
}

// ------------------------------------------------------------ commands

int cmd_fetch_pageviews(const CliConfig& c, std::ostream& out) {
  if (c.offline) throw std::runtime_error("offline mode forbids fetching pageviews");
  require(c.data_dir, "--data");
  require(c.pageview_cache, "--pageviews");
  const auto registry = load_concept_pages(pages_path(c.data_dir));
  PageviewSource source(PageviewCache::load(c.pageview_cache), window_of(c), false,
                        PageviewClient(PageviewClientOptions{pageviews_base_url_from_env(), c.concurrency}));
  std::vector<std::string> titles;
  for (const auto& concept_page : registry.concepts()) titles.push_back(concept_page.title);
  const std::size_t before = source.cache().size();
  source.prefetch(titles);
  source.cache().save(c.pageview_cache);
  out << "fetch-pageviews: " << source.cache().size() - before << " fetched, " << source.cache().size()
      << " cached in " << c.pageview_cache << "\n";
  return 0;
}

int cmd_fetch_mapping(const CliConfig& c, std::ostream& out) {
  if (c.offline) throw std::runtime_error("offline mode forbids querying the SPARQL endpoint");
  require(c.data_dir, "--data");
  require(c.out, "--out");
  const auto registry = load_concept_pages(pages_path(c.data_dir));
  std::vector<std::pair<std::string, std::string>> id_titles;
  for (const auto& concept_page : registry.concepts()) id_titles.emplace_back(concept_page.id, concept_page.title);
  const char* env = std::getenv("PRELEARN_SPARQL_URL");
  const std::string endpoint = env && *env ? env : "https://query.wikidata.org/sparql";
  const auto mapping = fetch_mapping(id_titles, endpoint);
  write_concept_mapping(c.out, mapping);
  out << "fetch-mapping: " << mapping.resolvable() << "/" << mapping.size() << " concepts mapped to Wikidata, wrote "
      << c.out << "\n";
  return 0;
}

int cmd_slice(const CliConfig& c, std::ostream& out) {
  require(c.input, "--input");
  require(c.out, "--out");
  EmbeddingStore store;
  if (c.kind == "wikidata") {
    require(c.mapping_path, "--mapping");
    store = load_graph_embeddings(c.input, qids_of(load_concept_mapping(c.mapping_path)));
  } else if (c.kind == "wikipedia") {
    require(c.data_dir, "--data");
    store = load_wp(c.input, titles_of(load_concept_pages(pages_path(c.data_dir))));
  } else {
    throw UsageError("--kind must be wikidata or wikipedia");
  }
  write_embeddings_tsv(c.out, store);
  out << "slice-embeddings: kept " << store.size() << " vectors of dim " << store.dim() << ", wrote " << c.out << "\n";
  return 0;
}

std::vector<LabeledPair> select_pairs(const Dataset& ds, const CliConfig& c) {
  const bool test = c.split == "test";
  if (!test && c.split != "train") throw UsageError("--split must be train or test");
  std::vector<LabeledPair> out;
  for (Domain d : kAllDomains) {
    if (c.target != "all" && parse_domain(c.target) != d) continue;
    const auto& src = test ? ds.pairs.at(d).test : ds.pairs.at(d).train;
    out.insert(out.end(), src.begin(), src.end());
  }
  return out;
}

FeatureDeps deps_of(Loaded& l) {
  FeatureDeps d;
  d.registry = &l.dataset.registry;
  d.lexicon = l.lexicon ? &*l.lexicon : nullptr;
  d.pageviews = l.pageviews ? &*l.pageviews : nullptr;
  d.mapping = l.mapping ? &*l.mapping : nullptr;
  d.wd_store = l.wd ? &*l.wd : nullptr;
  d.wp_store = l.wp ? &*l.wp : nullptr;
  return d;
}

int cmd_features(const CliConfig& c, std::ostream& out) {
  require(c.out, "--out");
  const auto exp = experiment_of(c);
  if (exp.system == System::ItalianBert) throw UsageError("features are only defined for the complex systems");
  const FeatureConfig f = exp.effective_features();
  Loaded l = load_resources(c, f, true);
  warm_pageviews(l);
  const auto pairs = select_pairs(l.dataset, c);
  FeatureBuilder builder(f, deps_of(l));
  const auto x = builder.assemble_matrix(pairs);
  write_feature_csv(c.out, f, pairs, x);
  persist_pageviews(c, l);
  out << "features: " << x.rows() << " pairs x " << x.cols() << " slots (" << f.layout_id() << "), wrote " << c.out
      << "\n";
  return 0;
}

int cmd_train(const CliConfig& c, std::ostream& out) {
  require(c.out, "--out");
  const auto exp = experiment_of(c);
  if (exp.system == System::ItalianBert) throw UsageError("the Italian-BERT system is trained by its own tooling");
  if (c.target == "all") throw UsageError("--target must name one domain");
  const FeatureConfig f = exp.effective_features();
  Loaded l = load_resources(c, f, true);
  warm_pageviews(l);
  const DatasetSplit split = make_training_split(l.dataset.registry, l.dataset.pairs, exp.scenario, exp.target);
  FeatureBuilder builder(f, deps_of(l));
  const auto x = builder.assemble_matrix(split.train);
  std::vector<int> y;
  for (const auto& p : split.train) y.push_back(p.label);
  const Forest forest = train_normalized_forest(x, y, exp.forest, f.layout_id());
  save_forest(fs::path(c.out), forest);
  persist_pageviews(c, l);
  write_manifest(fs::path(c.out).string() + ".manifest.json", "train", c, {sha256_hex(exp.canonical())}, l.inputs);
  out << "train: " << forest.trees.size() << " trees on " << x.rows() << " pairs x " << x.cols() << " features, wrote "
      << c.out << "\n";
  return 0;
}

int write_report(const CliConfig& c, const std::string& command, const EvalReport& report,
                 const std::vector<fs::path>& inputs, std::ostream& out) {
  const fs::path dir = c.out;
  fs::create_directories(dir);
  write_text(dir / "report.csv", report_csv(report));
  write_text(dir / "report.txt", report_table(report));
  write_manifest(dir / "manifest.json", command, c, report.config_hashes, inputs);
  out << report_table(report);
  const auto& avg = report.rows.back();
  out << command << ": " << report.rows.size() << " rows, last AVG f1_pos=" << std::fixed << std::setprecision(3)
      << avg.f1_pos << ", wrote " << (dir / "report.csv").string() << "\n";
  return 0;
}

int cmd_evaluate(const CliConfig& c, std::ostream& out) {
  require(c.out, "--out");
  const auto exp = experiment_of(c);
  const bool bert = exp.system == System::ItalianBert;
  Loaded l = load_resources(c, exp.effective_features(), !bert);
  Resources r = l.view();
  if (bert) {
    require(c.bert_dir, "--bert-predictions");
    r.external_predictions = fs::path(c.bert_dir);
  }
  if (exp.mode == EvalMode::TestSet) r.prediction_output = fs::path(c.out) / "predictions";
  for (Domain d : kAllDomains) {
    ExperimentConfig cell = exp;
    cell.target = d;
    check_resources(cell, r);
  }
  warm_pageviews(l);
  const auto report = run_all_domains(exp, r);
  persist_pageviews(c, l);
  return write_report(c, "evaluate", report, l.inputs, out);
}

int cmd_ablate(const CliConfig& c, std::ostream& out) {
  require(c.out, "--out");
  const EvalMode mode = parse_eval_mode(c.mode);
  std::vector<Scenario> scenarios;
  if (c.scenario == "both") {
    scenarios = {Scenario::InDomain, Scenario::CrossDomain};
  } else {
    scenarios = {parse_scenario(c.scenario)};
  }
  std::vector<ExperimentConfig> grid;
  for (Scenario s : scenarios) {
    for (auto cfg : ablation_grid(s, mode, c.seed, !c.bert_dir.empty())) {
      cfg.folds = c.folds;
      cfg.forest = forest_params(c);
      grid.push_back(cfg);
    }
  }
  FeatureConfig all;
  all.include_complexity = all.include_page_view = all.include_wd_embedding = all.include_wp_embedding = true;
  Loaded l = load_resources(c, all, true);
  Resources r = l.view();
  if (!c.bert_dir.empty()) r.external_predictions = fs::path(c.bert_dir);
  warm_pageviews(l);
  const auto report = run_ablation(grid, r);
  persist_pageviews(c, l);
  return write_report(c, "ablate", report, l.inputs, out);
}

void add_data_options(CLI::App& sub, CliConfig& c) {
  sub.add_option("--data", c.data_dir, "Dataset directory (pages.tsv, pairs/<domain>_{train,test}.csv)");
}

void add_feature_options(CLI::App& sub, CliConfig& c) {
  add_data_options(sub, c);
  sub.add_option("--aoa", c.aoa_path, "AoA lexicon TSV (word<TAB>aoa)");
  sub.add_option("--pageviews", c.pageview_cache, "Pageview cache JSON");
  sub.add_option("--window-start", c.window_start, "Pageview window start (YYYYMMDD)");
  sub.add_option("--window-end", c.window_end, "Pageview window end (YYYYMMDD)");
  sub.add_option("--mapping", c.mapping_path, "Concept mapping TSV (concept_id<TAB>title<TAB>qid)");
  sub.add_option("--wd-embeddings", c.wd_path, "Wikidata entity embeddings TSV");
  sub.add_option("--wp-embeddings", c.wp_path, "Wikipedia title embeddings (text format, or .tsv slice)");
  sub.add_option("--concurrency", c.concurrency, "Concurrent pageview requests when online");
}

void add_model_options(CLI::App& sub, CliConfig& c) {
  sub.add_option("--system", c.system, "complex | complex+wd | italian-bert");
  sub.add_option("--scenario", c.scenario, "in-domain | cross-domain");
  sub.add_option("--seed", c.seed, "Seed for folds and forest");
  sub.add_option("--n-trees", c.n_trees, "Number of trees");
  sub.add_option("--mtry", c.mtry, "Features tried per split (0 = floor(sqrt(p)))");
  sub.add_option("--min-node-size", c.min_node_size, "Minimum node size");
  sub.add_option("--threads", c.threads, "Tree-growing threads (0 = all cores)");
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliConfig c;
  CLI::App app{"Prerequisite relation classification toolkit", "prelearn"};
  app.set_config("--config", "", "Optional TOML/INI config file; command-line flags take precedence");
  app.add_flag("--offline", c.offline, "Forbid network access; pageviews must come from the cache");
  app.require_subcommand(1);

  auto* fetch_pv = app.add_subcommand("fetch-pageviews", "Fill the pageview cache for every concept title");
  add_data_options(*fetch_pv, c);
  fetch_pv->add_option("--pageviews", c.pageview_cache, "Pageview cache JSON")->required();
  fetch_pv->add_option("--window-start", c.window_start, "Window start (YYYYMMDD)");
  fetch_pv->add_option("--window-end", c.window_end, "Window end (YYYYMMDD)");
  fetch_pv->add_option("--concurrency", c.concurrency, "Concurrent requests");

  auto* fetch_map = app.add_subcommand("fetch-mapping", "Map concepts to Wikidata ids via SPARQL");
  add_data_options(*fetch_map, c);
  fetch_map->add_option("--out", c.out, "Output mapping TSV")->required();

  auto* slice = app.add_subcommand("slice-embeddings", "Filter a large embedding file to the experiment vocabulary");
  slice->add_option("--input", c.input, "Embedding file")->required();
  slice->add_option("--kind", c.kind, "wikidata | wikipedia");
  slice->add_option("--mapping", c.mapping_path, "Mapping TSV (wikidata kind)");
  add_data_options(*slice, c);
  slice->add_option("--out", c.out, "Output TSV")->required();

  auto* features = app.add_subcommand("features", "Export the feature matrix as CSV");
  add_feature_options(*features, c);
  add_model_options(*features, c);
  features->add_option("--domain", c.target, "Domain or 'all'");
  features->add_option("--split", c.split, "train | test");
  features->add_option("--out", c.out, "Output CSV")->required();

  auto* train = app.add_subcommand("train", "Train a forest and write the model file");
  add_feature_options(*train, c);
  add_model_options(*train, c);
  train->add_option("--target", c.target, "Target domain (excluded from training for cross-domain)");
  train->add_option("--out", c.out, "Output model file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a system on all four domains");
  add_feature_options(*evaluate, c);
  add_model_options(*evaluate, c);
  evaluate->add_option("--mode", c.mode, "test | cv | holdout");
  evaluate->add_option("--folds", c.folds, "Folds for cv mode");
  evaluate->add_option("--bert-predictions", c.bert_dir, "Directory of Italian-BERT prediction files");
  evaluate->add_option("--out", c.out, "Output directory")->required();

  auto* ablate = app.add_subcommand("ablate", "Run the feature ablation grid");
  add_feature_options(*ablate, c);
  add_model_options(*ablate, c);
  ablate->add_option("--mode", c.mode, "cv | holdout | test");
  ablate->add_option("--folds", c.folds, "Folds for cv mode");
  ablate->add_option("--bert-predictions", c.bert_dir, "Directory of Italian-BERT validation predictions");
  ablate->add_option("--out", c.out, "Output directory")->required();

  std::vector<const char*> argv{"prelearn"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (*ablate && !ablate->count("--mode")) c.mode = "cv";
    if (*fetch_pv) return cmd_fetch_pageviews(c, out);
    if (*fetch_map) return cmd_fetch_mapping(c, out);
    if (*slice) return cmd_slice(c, out);
    if (*features) return cmd_features(c, out);
    if (*train) return cmd_train(c, out);
    if (*evaluate) return cmd_evaluate(c, out);
    if (*ablate) return cmd_ablate(c, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace prelearn::cli
