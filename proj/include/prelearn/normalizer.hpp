#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace prelearn {

/// Per-column z-score statistics fitted on a training matrix (rows are
/// samples). Columns whose values are all identical are flagged constant and
/// map to 0.
template <typename Scalar>
struct Normalizer {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector mean;
  Vector sd;  // population standard deviation, 0 for constant columns

  Eigen::Index cols() const { return mean.size(); }
  bool is_constant(Eigen::Index j) const { return sd[j] == Scalar(0); }
};

template <typename Derived>
Normalizer<typename Derived::Scalar> fit_normalizer(const Eigen::MatrixBase<Derived>& train) {
  using Scalar = typename Derived::Scalar;
  if (train.rows() == 0 || train.cols() == 0) throw std::invalid_argument("fit_normalizer: empty matrix");
  Normalizer<Scalar> n;
  const auto rows = static_cast<Scalar>(train.rows());
  n.mean = train.colwise().sum().transpose() / rows;
  n.sd.resize(train.cols());
  for (Eigen::Index j = 0; j < train.cols(); ++j) {
    const auto col = train.col(j);
    if ((col.array() == col(0)).all()) {
      n.sd[j] = Scalar(0);
      continue;
    }
    n.sd[j] = std::sqrt((col.array() - n.mean[j]).square().sum() / rows);
  }
  return n;
}

/// Applies the fitted statistics row-wise; works on single rows or batches.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> normalize(const Normalizer<Scalar>& n,
                                                                const Eigen::MatrixBase<Derived>& rows) {
  if (rows.cols() != n.cols()) {
    throw std::invalid_argument("normalize: matrix has " + std::to_string(rows.cols()) +
                                " columns, normalizer was fitted on " + std::to_string(n.cols()));
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(rows.rows(), rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    if (n.is_constant(j)) {
      out.col(j).setZero();
    } else {
      out.col(j) = (rows.col(j).array() - n.mean[j]) / n.sd[j];
    }
  }
  return out;
}

}  // namespace prelearn
