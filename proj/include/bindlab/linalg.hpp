#pragma once

#include <utility>

#include "bindlab/cg_engine.hpp"

namespace bindlab {

// Generalized symmetric eigenproblem H c = E S c restricted to the span of
// Gram eigenvectors with eigenvalue above rel_cutoff * (largest eigenvalue).
class PrunedGram {
 public:
  static constexpr double kDefaultCutoff = 1e-10;

  explicit PrunedGram(const Matrix& gram, double rel_cutoff = kDefaultCutoff);

  Eigen::Index rank() const { return transform_.cols(); }
  Eigen::Index dimension() const { return transform_.rows(); }
  double smallest_retained() const { return smallest_; }
  double largest() const { return largest_; }
  // Columns span the retained subspace, orthonormal in the S metric.
  const Matrix& transform() const { return transform_; }

  // Lowest eigenpair; the vector satisfies c^T S c = 1.
  std::pair<double, Vector> lowest(const Matrix& h) const;
  Vector eigenvalues(const Matrix& h) const;

 private:
  Matrix transform_;
  double smallest_ = 0.0;
  double largest_ = 0.0;
};

}  // namespace bindlab
