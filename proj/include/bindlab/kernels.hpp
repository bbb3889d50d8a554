#pragma once

// Matrix assembly over basis-element pairs. Every kernel has a serial
// reference path and an OpenMP path; both evaluate each matrix entry with the
// same function and summation order, so their results are bitwise equal and
// independent of thread scheduling.

#include <vector>

#include "bindlab/cg_engine.hpp"

namespace bindlab {

enum class Exec { serial, parallel };

// Symmetrized matrices of the permutation-invariant operators used by both
// Hamiltonians.
struct OperatorMatrices {
  Matrix overlap;
  Matrix kinetic;    // sum_i -Delta_i
  Matrix nuclear;    // sum_i 1/|x_i|
  Matrix repulsion;  // sum_{i<j} 1/|x_i - x_j|
};

OperatorMatrices assemble_operators(const BasisSet& basis, Exec exec = Exec::parallel);

// Entry (k, l) of each operator matrix.
struct OperatorEntry {
  double overlap = 0.0;
  double kinetic = 0.0;
  double nuclear = 0.0;
  double repulsion = 0.0;
};
OperatorEntry operator_entry(const BasisSet& basis, std::size_t k, std::size_t l);
Matrix assemble_overlap(const BasisSet& basis, Exec exec = Exec::parallel);

// Pair observables of particles 1 and 2. Under bosonic symmetrization they are
// averaged over all pairs, which equals the (1,2) value in any symmetric state.
enum class PairObservable { inv_distance, mean_distance, tail_mass, inside_mass };
Matrix assemble_pair_observable(const BasisSet& basis, PairObservable obs, double ell = 0.0,
                                Exec exec = Exec::parallel);

// Transition one-particle density of the symmetrized pair (k, l): a mixture of
// normalized isotropic Gaussians, sum_t weight[t] G(x; variance[t]).
struct PairDensity {
  std::vector<double> weight;
  std::vector<double> variance;
};

// Pairs packed as p(k, l) = l (l + 1) / 2 + k for k <= l, so appending a basis
// element appends a contiguous block of pairs.
inline std::size_t packed_pair(std::size_t k, std::size_t l) {
  return k <= l ? l * (l + 1) / 2 + k : k * (k + 1) / 2 + l;
}
inline std::size_t packed_count(std::size_t size) { return size * (size + 1) / 2; }

PairDensity pair_density(const BasisSet& basis, std::size_t k, std::size_t l);
std::vector<PairDensity> assemble_pair_densities(const BasisSet& basis,
                                                 Exec exec = Exec::parallel);

// Coulomb energy between two Gaussian-mixture densities.
double density_coulomb(const PairDensity& a, const PairDensity& b);

// J[p][q] = iint rho_p(x) rho_q(y) / |x - y| over packed pairs.
Matrix assemble_hartree(const std::vector<PairDensity>& densities, Exec exec = Exec::parallel);

// Rows of J for pairs in [first, densities.size()) against all pairs; used
// when the basis grows by one element.
Matrix assemble_hartree_rows(const std::vector<PairDensity>& densities, std::size_t first,
                             Exec exec = Exec::parallel);

}  // namespace bindlab
