#pragma once

// Candidate generation for stochastic growth of correlated-Gaussian bases.

#include <cstdint>
#include <random>

#include "bindlab/cg_engine.hpp"

namespace bindlab {

struct CandidateOptions {
  // Log-uniform range of single-particle and pair widths, in units of scale
  // (1/length^2).
  double width_min = 1e-2;
  double width_max = 1e2;
  double scale = 1.0;
  // Probability that a given pair carries an explicit correlation term, and
  // that such a term is anti-correlating (negative).
  double pair_fraction = 0.5;
  double negative_fraction = 0.25;
  double max_condition = 1e8;
  // Candidates whose normalized overlap with an accepted element exceeds this
  // are treated as degenerate.
  double max_overlap = 0.99;
};

class CandidateSampler {
 public:
  CandidateSampler(int n_particles, CandidateOptions opts, std::uint64_t seed);

  CorrelatedGaussian next();
  const CandidateOptions& options() const { return opts_; }

 private:
  double log_uniform();

  int n_;
  CandidateOptions opts_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
};

// Overlaps of candidate g (symmetrized) with every basis function, and with
// itself.
struct CandidateColumn {
  Vector overlap;
  double self_overlap = 0.0;
};

CandidateColumn candidate_overlaps(const BasisSet& basis, const CorrelatedGaussian& g);
double max_normalized_overlap(const Matrix& gram, const CandidateColumn& col);

}  // namespace bindlab
