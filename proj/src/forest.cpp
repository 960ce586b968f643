#include "prelearn/forest.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace prelearn {

namespace detail {

double gini_decrease(std::int64_t l0, std::int64_t l1, std::int64_t r0, std::int64_t r1) {
  auto gini = [](double a, double b) {
    const double n = a + b;
    return n == 0.0 ? 0.0 : 1.0 - (a / n) * (a / n) - (b / n) * (b / n);
  };
  const double nl = static_cast<double>(l0 + l1);
  const double nr = static_cast<double>(r0 + r1);
  const double n = nl + nr;
  return gini(static_cast<double>(l0 + r0), static_cast<double>(l1 + r1)) -
         (nl / n) * gini(static_cast<double>(l0), static_cast<double>(l1)) -
         (nr / n) * gini(static_cast<double>(r0), static_cast<double>(r1));
}

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  // Adjacent doubles: fall back to the lower value, which still separates.
  return (mid > lo && mid < hi) ? mid : lo;
}

}  // namespace detail

int ForestParams::resolve_mtry(Eigen::Index n_features) const {
  if (n_features < 1) throw std::invalid_argument("forest needs at least one feature");
  const int p = static_cast<int>(n_features);
  const int m = mtry.value_or(std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(p))))));
  if (m < 1 || m > p) {
    throw std::invalid_argument("mtry " + std::to_string(m) + " outside [1, " + std::to_string(p) + "]");
  }
  return m;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

class TreeGrower {
 public:
  TreeGrower(const Eigen::MatrixXd& x, std::span<const int> y, int mtry, int min_node_size,
             std::uint64_t seed)
      : x_(x), y_(y), mtry_(mtry), min_node_size_(min_node_size), rng_(seed),
        all_features_(static_cast<std::size_t>(x.cols())) {
    std::iota(all_features_.begin(), all_features_.end(), Eigen::Index{0});
  }

  Tree grow(std::vector<std::size_t> rows) {
    Tree tree;
    grow_node(tree, std::move(rows));
    return tree;
  }

 private:
  void grow_node(Tree& tree, std::vector<std::size_t> rows) {
    const std::size_t self = tree.nodes.size();
    tree.nodes.emplace_back();
    for (std::size_t r : rows) (y_[r] ? tree.nodes[self].count1 : tree.nodes[self].count0)++;
    const bool pure = tree.nodes[self].count0 == 0 || tree.nodes[self].count1 == 0;
    if (pure || rows.size() <= static_cast<std::size_t>(min_node_size_)) return;

    // Partial Fisher-Yates: the first mtry entries become this node's candidates.
    for (int i = 0; i < mtry_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(i), all_features_.size() - 1);
      std::swap(all_features_[static_cast<std::size_t>(i)], all_features_[pick(rng_)]);
    }
    const std::vector<Eigen::Index> candidates(all_features_.begin(), all_features_.begin() + mtry_);
    const auto split = gini_split(x_, y_, rows, candidates);
    if (!split) return;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : rows) (x_(static_cast<Eigen::Index>(r), split->feature) <= split->threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    tree.nodes[self].feature = split->feature;
    tree.nodes[self].threshold = split->threshold;
    grow_node(tree, std::move(left));
    tree.nodes[self].right = static_cast<std::int32_t>(tree.nodes.size());
    grow_node(tree, std::move(right));
  }

  const Eigen::MatrixXd& x_;
  std::span<const int> y_;
  int mtry_;
  int min_node_size_;
  std::mt19937_64 rng_;
  std::vector<Eigen::Index> all_features_;
};

}  // namespace

Forest train_forest(const Eigen::MatrixXd& x, std::span<const int> y, const ForestParams& params) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw std::invalid_argument("train_forest: " + std::to_string(x.rows()) + " rows but " +
                                std::to_string(y.size()) + " labels");
  }
  if (params.n_trees < 1) throw std::invalid_argument("train_forest: n_trees must be >= 1");
  if (params.min_node_size < 1) throw std::invalid_argument("train_forest: min_node_size must be >= 1");
  bool has0 = false;
  bool has1 = false;
  for (int label : y) {
    if (label != 0 && label != 1) throw std::invalid_argument("train_forest: labels must be 0 or 1");
    (label ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw std::invalid_argument("train_forest: training labels contain a single class");
  if (!x.allFinite()) throw std::invalid_argument("train_forest: non-finite feature values");

  const int mtry = params.resolve_mtry(x.cols());
  Forest forest;
  forest.n_features = x.cols();
  forest.params = params;
  forest.params.mtry = mtry;
  forest.trees.resize(static_cast<std::size_t>(params.n_trees));

  const std::size_t n = y.size();
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t t; (t = next.fetch_add(1)) < forest.trees.size();) {
      try {
        const std::uint64_t seed = derive_seed(params.seed, t);
        std::mt19937_64 sampler(seed);
        std::vector<std::size_t> rows(n);
        if (params.bootstrap) {
          std::uniform_int_distribution<std::size_t> draw(0, n - 1);
          for (auto& r : rows) r = draw(sampler);
        } else {
          std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        TreeGrower grower(x, y, mtry, params.min_node_size, derive_seed(seed, 0x5eed));
        forest.trees[t] = grower.grow(std::move(rows));
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  unsigned threads = params.n_threads ? params.n_threads : std::thread::hardware_concurrency();
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(forest.trees.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return forest;
}

Forest train_normalized_forest(const Eigen::MatrixXd& x, std::span<const int> y,
                               const ForestParams& params, std::string layout_id) {
  auto norm = fit_normalizer(x);
  Forest f = train_forest(normalize(norm, x), y, params);
  f.normalizer = std::move(norm);
  f.layout_id = std::move(layout_id);
  return f;
}

namespace {

Prediction vote(const Forest& forest, const Eigen::VectorXd& x) {
  std::size_t positive = 0;
  for (const auto& tree : forest.trees) positive += static_cast<std::size_t>(tree.predict(x));
  Prediction p;
  p.vote_fraction = static_cast<double>(positive) / static_cast<double>(forest.trees.size());
  p.label = 2 * positive > forest.trees.size() ? 1 : 0;
  return p;
}

}  // namespace

Prediction predict(const Forest& forest, const Eigen::VectorXd& x) {
  if (x.size() != forest.n_features) {
    throw std::invalid_argument("predict: input has " + std::to_string(x.size()) + " features, forest expects " +
                                std::to_string(forest.n_features));
  }
  if (forest.trees.empty()) throw std::logic_error("predict: empty forest");
  if (!forest.normalizer) return vote(forest, x);
  const Eigen::VectorXd z = normalize(*forest.normalizer, x.transpose()).transpose();
  return vote(forest, z);
}

std::vector<Prediction> predict_batch(const Forest& forest, const Eigen::MatrixXd& x) {
  if (x.cols() != forest.n_features) {
    throw std::invalid_argument("predict: input has " + std::to_string(x.cols()) + " features, forest expects " +
                                std::to_string(forest.n_features));
  }
  const Eigen::MatrixXd z = forest.normalizer ? normalize(*forest.normalizer, x) : x;
  std::vector<Prediction> out;
  out.reserve(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) out.push_back(vote(forest, z.row(i).transpose()));
  return out;
}

namespace {

constexpr const char* kMagic = "prelearn-forest";
constexpr int kFormatVersion = 1;

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

double parse_hex(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw std::runtime_error("model file: bad number '" + s + "'");
  return v;
}

template <typename T>
T read(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw std::runtime_error(std::string("model file: expected ") + what);
  return v;
}

void expect(std::istream& in, const std::string& word) {
  const auto got = read<std::string>(in, word.c_str());
  if (got != word) throw std::runtime_error("model file: expected '" + word + "', got '" + got + "'");
}

void read_subtree(std::istream& in, Tree& tree, std::size_t& remaining) {
  if (remaining == 0) throw std::runtime_error("model file: tree has fewer nodes than declared");
  --remaining;
  const auto kind = read<std::string>(in, "node kind");
  const std::size_t self = tree.nodes.size();
  tree.nodes.emplace_back();
  if (kind == "L") {
    tree.nodes[self].count0 = read<std::int64_t>(in, "count");
    tree.nodes[self].count1 = read<std::int64_t>(in, "count");
    return;
  }
  if (kind != "S") throw std::runtime_error("model file: unknown node kind '" + kind + "'");
  tree.nodes[self].feature = read<Eigen::Index>(in, "feature");
  tree.nodes[self].threshold = parse_hex(read<std::string>(in, "threshold"));
  tree.nodes[self].count0 = read<std::int64_t>(in, "count");
  tree.nodes[self].count1 = read<std::int64_t>(in, "count");
  read_subtree(in, tree, remaining);
  tree.nodes[self].right = static_cast<std::int32_t>(tree.nodes.size());
  read_subtree(in, tree, remaining);
}

}  // namespace

void save_forest(std::ostream& out, const Forest& f) {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "layout " << (f.layout_id.empty() ? "-" : f.layout_id) << '\n';
  out << "features " << f.n_features << '\n';
  out << "params " << f.params.n_trees << ' ' << f.params.mtry.value_or(0) << ' ' << f.params.min_node_size
      << ' ' << (f.params.bootstrap ? 1 : 0) << ' ' << f.params.seed << '\n';
  out << "normalizer " << (f.normalizer ? 1 : 0) << '\n';
  if (f.normalizer) {
    out << "mean";
    for (Eigen::Index j = 0; j < f.normalizer->mean.size(); ++j) out << ' ' << hex(f.normalizer->mean[j]);
    out << "\nsd";
    for (Eigen::Index j = 0; j < f.normalizer->sd.size(); ++j) out << ' ' << hex(f.normalizer->sd[j]);
    out << '\n';
  }
  out << "trees " << f.trees.size() << '\n';
  for (const auto& tree : f.trees) {
    out << "tree " << tree.nodes.size() << '\n';
    // Stored order is already preorder with left children adjacent.
    for (const auto& n : tree.nodes) {
      if (n.is_leaf()) {
        out << "L " << n.count0 << ' ' << n.count1 << '\n';
      } else {
        out << "S " << n.feature << ' ' << hex(n.threshold) << ' ' << n.count0 << ' ' << n.count1 << '\n';
      }
    }
  }
  out << "end\n";
}

Forest load_forest(std::istream& in) {
  expect(in, kMagic);
  const int version = read<int>(in, "format version");
  if (version != kFormatVersion) {
    throw std::runtime_error("model file: unsupported format version " + std::to_string(version));
  }
  Forest f;
  expect(in, "layout");
  f.layout_id = read<std::string>(in, "layout id");
  if (f.layout_id == "-") f.layout_id.clear();
  expect(in, "features");
  f.n_features = read<Eigen::Index>(in, "feature count");
  expect(in, "params");
  f.params.n_trees = read<int>(in, "n_trees");
  const int mtry = read<int>(in, "mtry");
  if (mtry > 0) f.params.mtry = mtry;
  f.params.min_node_size = read<int>(in, "min_node_size");
  f.params.bootstrap = read<int>(in, "bootstrap") != 0;
  f.params.seed = read<std::uint64_t>(in, "seed");
  expect(in, "normalizer");
  if (read<int>(in, "normalizer flag")) {
    Normalizer<double> norm;
    norm.mean.resize(f.n_features);
    norm.sd.resize(f.n_features);
    expect(in, "mean");
    for (Eigen::Index j = 0; j < f.n_features; ++j) norm.mean[j] = parse_hex(read<std::string>(in, "mean"));
    expect(in, "sd");
    for (Eigen::Index j = 0; j < f.n_features; ++j) norm.sd[j] = parse_hex(read<std::string>(in, "sd"));
    f.normalizer = std::move(norm);
  }
  expect(in, "trees");
  const auto n_trees = read<std::size_t>(in, "tree count");
  f.trees.resize(n_trees);
  for (auto& tree : f.trees) {
    expect(in, "tree");
    std::size_t remaining = read<std::size_t>(in, "node count");
    const std::size_t declared = remaining;
    tree.nodes.reserve(declared);
    read_subtree(in, tree, remaining);
    if (remaining != 0) throw std::runtime_error("model file: tree has more nodes than its structure uses");
    for (const auto& n : tree.nodes) {
      if (!n.is_leaf() && (n.feature < 0 || n.feature >= f.n_features)) {
        throw std::runtime_error("model file: split feature out of range");
      }
    }
  }
  expect(in, "end");
  return f;
}

void save_forest(const std::filesystem::path& path, const Forest& forest) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  save_forest(out, forest);
}

Forest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load_forest(in);
}

}  // namespace prelearn
