#include "bindlab/linalg.hpp"

namespace bindlab {

PrunedGram::PrunedGram(const Matrix& gram, double rel_cutoff) {
  if (gram.rows() == 0) throw ConfigurationError("empty basis");
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
  if (es.info() != Eigen::Success) throw ConstructionError("Gram eigensolver failed");
  const Vector& ev = es.eigenvalues();
  largest_ = ev.maxCoeff();
  if (!(largest_ > 0.0)) throw ConfigurationError("Gram matrix has no positive eigenvalue");
  const double cut = rel_cutoff * largest_;
  Eigen::Index keep = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) keep += ev[i] > cut ? 1 : 0;
  if (keep == 0) throw ConfigurationError("basis is empty after linear-dependence pruning");
  transform_.resize(gram.rows(), keep);
  Eigen::Index col = 0;
  smallest_ = largest_;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > cut) {
      transform_.col(col++) = es.eigenvectors().col(i) / std::sqrt(ev[i]);
      smallest_ = std::min(smallest_, ev[i]);
    }
  }
}

std::pair<double, Vector> PrunedGram::lowest(const Matrix& h) const {
  const Matrix reduced = transform_.transpose() * h * transform_;
  Eigen::SelfAdjointEigenSolver<Matrix> es(reduced);
  if (es.info() != Eigen::Success) throw ConstructionError("eigensolver failed");
  Vector c = transform_ * es.eigenvectors().col(0);
  // Fix the overall sign for reproducible reports.
  Eigen::Index imax = 0;
  c.cwiseAbs().maxCoeff(&imax);
  if (c[imax] < 0.0) c = -c;
  return {es.eigenvalues()[0], std::move(c)};
}

Vector PrunedGram::eigenvalues(const Matrix& h) const {
  const Matrix reduced = transform_.transpose() * h * transform_;
  Eigen::SelfAdjointEigenSolver<Matrix> es(reduced, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace bindlab
