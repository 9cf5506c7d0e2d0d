#pragma once

#include <Eigen/Dense>

namespace mmmd {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Index = Eigen::Index;

/// An m x d matrix of observations from one population, one row per
/// observation. Construction validates m >= 2, d >= 1 and finiteness.
class Sample {
 public:
  explicit Sample(RowMatrix data);

  [[nodiscard]] Index rows() const noexcept { return data_.rows(); }
  [[nodiscard]] Index dim() const noexcept { return data_.cols(); }
  [[nodiscard]] const RowMatrix& data() const noexcept { return data_; }
  [[nodiscard]] auto row(Index i) const { return data_.row(i); }

  /// Rows of `a` followed by rows of `b`.
  static Sample pooled(const Sample& a, const Sample& b);

 private:
  RowMatrix data_;
};

}  // namespace mmmd
