#pragma once

// Two-electron atom H_U = sum_i (p_i^2 - 1/|x_i|) + U / |x_1 - x_2| on
// L^2(R^6), solved by Rayleigh-Ritz in a symmetrized correlated-Gaussian basis.
// With p^2 = -Delta the hydrogen ground energy is -1/4.

#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "bindlab/cg_engine.hpp"
#include "bindlab/kernels.hpp"
#include "bindlab/linalg.hpp"
#include "bindlab/svm.hpp"

namespace bindlab {

inline constexpr double kHydrogenEnergy = -0.25;

struct AtomProblem {
  double U = 1.0;
  BasisSet basis{2};
};

std::pair<double, VariationalState> solve_atom(const AtomProblem& problem);

// Lowest eigenvalue of p^2 - 1/|x| in an N = 1 basis.
double hydrogen_ground(const BasisSet& basis1p);

// Best single Gaussian exp(-a r^2) for hydrogen, in closed form.
inline double hydrogen_single_gaussian_exponent() { return 2.0 / (9.0 * std::numbers::pi); }

struct EvenTempered {
  double a_min = 0.0;
  double ratio = 0.0;
  double energy = 0.0;
};
// Minimizes the hydrogen energy over (a_min, ratio) for a fixed count.
EvenTempered optimize_even_tempered(std::size_t count);

// Assembled atom problem on a basis that grows one element at a time.
class AtomSystem {
 public:
  explicit AtomSystem(BasisSet basis, Exec exec = Exec::parallel);

  const BasisSet& basis() const { return basis_; }
  std::size_t size() const { return basis_.size(); }
  const OperatorMatrices& operators() const { return ops_; }

  Matrix hamiltonian(double U) const;
  std::pair<double, VariationalState> solve(double U) const;
  // Lowest eigenvalue after adding g; nullopt for degenerate candidates.
  std::optional<double> screen_candidate(const CorrelatedGaussian& g, double U,
                                         double max_overlap) const;

  void append(const CorrelatedGaussian& g);
  void truncate(std::size_t size);

 private:
  BasisSet basis_;
  Exec exec_;
  OperatorMatrices ops_;
};

struct AtomBasisOptions {
  std::size_t target_size = 40;
  int trials = 30;
  std::uint64_t seed = 1;
  CandidateOptions candidates{1e-3, 1e2, 1.0, 0.5, 0.25, 1e8, 0.99};
  int max_stalls = 30;
};

struct AtomGrowth {
  BasisSet basis;
  VariationalState state;
  double energy = 0.0;
  std::vector<double> energies;
};

// Stochastic growth at fixed U: each step adds the best of `trials` screened
// candidates if it lowers the energy.
AtomGrowth optimize_atom_basis(double U, const AtomBasisOptions& opts,
                               const BasisSet* initial = nullptr);

}  // namespace bindlab
