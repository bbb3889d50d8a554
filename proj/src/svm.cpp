#include "bindlab/svm.hpp"

#include <cmath>

namespace bindlab {

CandidateSampler::CandidateSampler(int n_particles, CandidateOptions opts, std::uint64_t seed)
    : n_(n_particles), opts_(opts), rng_(seed) {
  if (!(opts_.width_min > 0.0) || !(opts_.width_max > opts_.width_min)) {
    throw ConfigurationError("candidate width range must satisfy 0 < min < max");
  }
}

double CandidateSampler::log_uniform() {
  const double lo = std::log(opts_.width_min * opts_.scale);
  const double hi = std::log(opts_.width_max * opts_.scale);
  return std::exp(lo + (hi - lo) * unit_(rng_));
}

CorrelatedGaussian CandidateSampler::next() {
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<double> single(n_);
    for (auto& s : single) s = log_uniform();
    std::vector<double> pair(n_ * (n_ - 1) / 2, 0.0);
    for (auto& p : pair) {
      if (unit_(rng_) < opts_.pair_fraction) {
        p = log_uniform();
        if (unit_(rng_) < opts_.negative_fraction) p = -p;
      }
    }
    SmallMatrix m = SmallMatrix::Zero(n_, n_);
    for (int i = 0; i < n_; ++i) m(i, i) = single[i];
    std::size_t idx = 0;
    for (int i = 0; i < n_; ++i) {
      for (int j = i + 1; j < n_; ++j, ++idx) {
        m(i, i) += pair[idx];
        m(j, j) += pair[idx];
        m(i, j) -= pair[idx];
        m(j, i) -= pair[idx];
      }
    }
    Eigen::SelfAdjointEigenSolver<SmallMatrix> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo > 0.0 && hi / lo < opts_.max_condition) return CorrelatedGaussian(m);
  }
  throw ConstructionError("candidate sampler could not produce a positive-definite matrix");
}

CandidateColumn candidate_overlaps(const BasisSet& basis, const CorrelatedGaussian& g) {
  CandidateColumn col;
  col.overlap.resize(static_cast<Eigen::Index>(basis.size()));
  const double mult = basis.multiplicity();
  for (std::size_t k = 0; k < basis.size(); ++k) {
    double s = 0.0;
    for (const auto& img : basis.permuted(k)) s += overlap(g, img);
    col.overlap[k] = mult * s;
  }
  double self = 0.0;
  for (const auto& p : basis.permutations()) self += overlap(g, g.permuted(p));
  col.self_overlap = mult * self;
  return col;
}

double max_normalized_overlap(const Matrix& gram, const CandidateColumn& col) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k < col.overlap.size(); ++k) {
    worst = std::max(worst, std::abs(col.overlap[k]) / std::sqrt(gram(k, k) * col.self_overlap));
  }
  return worst;
}

}  // namespace bindlab
