#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "prelearn/normalizer.hpp"

namespace prelearn {

/// Classical random-forest classification defaults.
struct ForestParams {
  int n_trees = 500;
  std::optional<int> mtry;  // floor(sqrt(p)) when unset
  int min_node_size = 1;
  bool bootstrap = true;    // n draws with replacement; false grows every tree on all rows
  std::uint64_t seed = 1;
  unsigned n_threads = 0;   // 0 = hardware concurrency

  int resolve_mtry(Eigen::Index n_features) const;
};

struct Split {
  Eigen::Index feature = -1;
  double threshold = 0.0;  // rows with x <= threshold go left
  double impurity_decrease = 0.0;
  friend bool operator==(const Split&, const Split&) = default;
};

namespace detail {

// Binary Gini split score as an exact rational: maximizing
// (l0^2 + l1^2)/nl + (r0^2 + r1^2)/nr is equivalent to maximizing the
// impurity decrease for a fixed parent.
struct SplitScore {
  __int128 num = 0;
  __int128 den = 1;

  static SplitScore of(std::int64_t l0, std::int64_t l1, std::int64_t r0, std::int64_t r1) {
    const __int128 nl = l0 + l1;
    const __int128 nr = r0 + r1;
    return {(static_cast<__int128>(l0) * l0 + static_cast<__int128>(l1) * l1) * nr +
                (static_cast<__int128>(r0) * r0 + static_cast<__int128>(r1) * r1) * nl,
            nl * nr};
  }
  bool greater_than(const SplitScore& o) const { return num * o.den > o.num * den; }
};

double gini_decrease(std::int64_t l0, std::int64_t l1, std::int64_t r0, std::int64_t r1);

double midpoint(double lo, double hi);

}  // namespace detail

/// Exact CART search over the candidate features: every midpoint between
/// consecutive distinct sorted values is scored, and the split with the
/// largest Gini impurity decrease wins. Ties go to the lowest feature index,
/// then the lowest threshold. Only strictly positive decreases qualify.
///
/// `rows` index into `x` and `labels` (0/1) and may repeat (bootstrap).
template <typename Derived>
std::optional<Split> gini_split(const Eigen::MatrixBase<Derived>& x, std::span<const int> labels,
                                std::span<const std::size_t> rows,
                                std::span<const Eigen::Index> features) {
  if (rows.size() < 2) return std::nullopt;
  std::int64_t p0 = 0;
  std::int64_t p1 = 0;
  for (std::size_t r : rows) (labels[r] ? p1 : p0)++;
  if (p0 == 0 || p1 == 0) return std::nullopt;

  std::vector<Eigen::Index> order(features.begin(), features.end());
  std::sort(order.begin(), order.end());

  // (p0^2 + p1^2) / n: a split must beat this to decrease impurity.
  const detail::SplitScore parent_score{static_cast<__int128>(p0) * p0 + static_cast<__int128>(p1) * p1,
                                        static_cast<__int128>(p0 + p1)};
  std::optional<Split> best;
  detail::SplitScore best_score;

  std::vector<std::pair<double, int>> column(rows.size());
  for (Eigen::Index f : order) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      column[i] = {static_cast<double>(x(static_cast<Eigen::Index>(rows[i]), f)), labels[rows[i]]};
    }
    std::sort(column.begin(), column.end());
    std::int64_t l0 = 0;
    std::int64_t l1 = 0;
    for (std::size_t i = 0; i + 1 < column.size(); ++i) {
      (column[i].second ? l1 : l0)++;
      if (column[i].first == column[i + 1].first) continue;
      const auto score = detail::SplitScore::of(l0, l1, p0 - l0, p1 - l1);
      if (!score.greater_than(parent_score)) continue;
      if (!best || score.greater_than(best_score)) {
        best_score = score;
        best = Split{f, detail::midpoint(column[i].first, column[i + 1].first),
                     detail::gini_decrease(l0, l1, p0 - l0, p1 - l1)};
      }
    }
  }
  return best;
}

/// Flat preorder tree; a node's left child immediately follows it.
struct TreeNode {
  Eigen::Index feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t right = -1;
  std::int64_t count0 = 0;  // training class counts reaching the node
  std::int64_t count1 = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  /// Leaf majority; an even leaf votes negative.
  template <typename Derived>
  int predict(const Eigen::MatrixBase<Derived>& x) const {
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
      const auto& n = nodes[i];
      i = static_cast<double>(x(n.feature)) <= n.threshold ? i + 1 : static_cast<std::size_t>(n.right);
    }
    return nodes[i].count1 > nodes[i].count0 ? 1 : 0;
  }
  friend bool operator==(const Tree&, const Tree&) = default;
};

struct Prediction {
  int label = 0;
  double vote_fraction = 0.0;  // share of trees voting positive
};

struct Forest {
  std::vector<Tree> trees;
  Eigen::Index n_features = 0;
  std::string layout_id;
  /// Applied to inputs before traversal when present.
  std::optional<Normalizer<double>> normalizer;
  ForestParams params;
};

/// Grows `params.n_trees` trees; tree t draws from an RNG seeded by
/// (params.seed, t), so results do not depend on thread count. Row order is
/// part of the deterministic input.
Forest train_forest(const Eigen::MatrixXd& x, std::span<const int> y, const ForestParams& params);

/// Fits a normalizer on `x`, trains on the normalized rows and attaches it.
Forest train_normalized_forest(const Eigen::MatrixXd& x, std::span<const int> y,
                               const ForestParams& params, std::string layout_id);

/// Majority vote; an exact tie goes to the negative class.
Prediction predict(const Forest& forest, const Eigen::VectorXd& x);
std::vector<Prediction> predict_batch(const Forest& forest, const Eigen::MatrixXd& x);

/// Versioned text format with doubles written as hex floats; the round
/// trip is exact.
void save_forest(std::ostream& out, const Forest& forest);
Forest load_forest(std::istream& in);
void save_forest(const std::filesystem::path& path, const Forest& forest);
Forest load_forest(const std::filesystem::path& path);

/// SplitMix64 step used to derive per-tree seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace prelearn
