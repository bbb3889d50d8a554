#pragma once

// Pekar-Tomasevich functional for N polarons in a correlated-Gaussian basis:
//
//   P[psi] = sum_i ||grad_i psi||^2 + U sum_{i<j} <1/r_ij> - alpha iint rho rho / |x - y|,
//
// minimized by alternating between the optimal field
// phi = 2 sqrt(alpha) rho * |x|^{-1} and the lowest eigenvector of the
// linear operator sum_i (p_i^2 - sqrt(alpha) phi(x_i)) + U V_C.

#include <cstdint>
#include <optional>
#include <vector>

#include "bindlab/cg_engine.hpp"
#include "bindlab/kernels.hpp"
#include "bindlab/linalg.hpp"
#include "bindlab/svm.hpp"

namespace bindlab {

struct CouplingParams {
  double alpha = 1.0;
  double U = 0.0;
  int n_particles = 1;

  void validate() const;
};

// phi(x) = sum_t weight[t] erf(sqrt(exponent[t]) |x|) / |x|, i.e. the Coulomb
// potential of the charge distribution sum_t weight[t] G(x; 1/(2 exponent[t])).
struct FieldPotential {
  std::vector<double> weight;
  std::vector<double> exponent;
  double field_energy = 0.0;  // (1/16 pi) int |grad phi|^2

  double operator()(double r) const;
  double recompute_field_energy() const;
  FieldPotential scaled(double factor) const;
};

struct EnergyReport {
  double total = 0.0;
  double kinetic = 0.0;
  double repulsion = 0.0;   // U sum_{i<j} <1/r_ij>
  double attraction = 0.0;  // -alpha iint rho rho / |x - y|
  double multiplier = 0.0;  // Euler-Lagrange eigenvalue, total + attraction
  int iterations = 0;
  bool converged = true;
  // Two-field energies P[psi_k, phi_k] after each SCF iteration.
  std::vector<double> history;
};

struct ScfOptions {
  int max_iter = 500;
  double tol = 1e-9;
  double mixing = 0.7;
};

struct ScfResult {
  VariationalState state;
  EnergyReport report;
  Vector density;  // packed pair-density coefficients of the final field
};

// Assembled PT problem on a fixed basis; grows one element at a time.
class PtSystem {
 public:
  explicit PtSystem(BasisSet basis, Exec exec = Exec::parallel);

  const BasisSet& basis() const { return basis_; }
  std::size_t size() const { return basis_.size(); }
  const OperatorMatrices& operators() const { return ops_; }
  const Matrix& hartree() const { return hartree_; }
  const PrunedGram& pruned() const { return *pruned_; }

  // d_q with rho_psi = sum_q d_q rho_q for psi = sum_k c_k (function k).
  Vector packed_density(const Vector& c) const;
  double hartree_energy(const Vector& c) const;
  // W(d)_kl = int rho_kl (rho_d * |x|^{-1}).
  Matrix mean_field(const Vector& d) const;
  EnergyReport evaluate(const Vector& c, const CouplingParams& params) const;

  ScfResult solve(const CouplingParams& params, const ScfOptions& opts = {},
                  const Vector* start = nullptr) const;

  // Field generated by packed density d, with J d and d.J d cached.
  struct Field {
    Vector density;
    Vector potential;
    double hartree = 0.0;
    PairDensity charge;  // rho_d as a single Gaussian mixture
  };
  Field field(const Vector& d) const;

  // Lowest two-field energy after adding g, with the field held fixed. Upper
  // bound on the PT energy reachable with the enlarged basis; nullopt for
  // degenerate candidates.
  std::optional<double> screen_candidate(const CorrelatedGaussian& g, const Field& field,
                                         const CouplingParams& params,
                                         double max_overlap) const;

  void append(const CorrelatedGaussian& g);
  void truncate(std::size_t size);

 private:
  void refresh_pruning();

  BasisSet basis_;
  Exec exec_;
  OperatorMatrices ops_;
  std::vector<PairDensity> densities_;
  Matrix hartree_;
  std::optional<PrunedGram> pruned_;
};

EnergyReport evaluate_pt(const VariationalState& state, const CouplingParams& params);
FieldPotential optimal_potential(const VariationalState& state, double alpha);
double evaluate_two_field(const VariationalState& state, const FieldPotential& potential,
                          const CouplingParams& params);
double linearization_gap(const VariationalState& state, const FieldPotential& potential,
                         const CouplingParams& params);

ScfResult scf_solve(const BasisSet& basis, const CouplingParams& params,
                    const ScfOptions& opts = {});

struct BasisOptions {
  std::size_t target_size = 20;
  int trials = 20;
  std::uint64_t seed = 1;
  CandidateOptions candidates{};
  ScfOptions scf{};
  // Consecutive growth steps without an accepted candidate before giving up.
  int max_stalls = 20;
};

struct GrowthResult {
  BasisSet basis;
  VariationalState state;
  EnergyReport report;
  std::vector<double> energies;  // solved energy after each accepted element
};

// Stochastic growth: each step screens `trials` sampled candidates, runs the
// SCF with the best one and keeps it iff the solved energy strictly decreases.
// Candidate widths are drawn in units of alpha^2.
GrowthResult optimize_basis(const CouplingParams& params, const BasisOptions& opts,
                            const BasisSet* initial = nullptr);

// Caches solved cluster energies E^(n)_U(alpha) keyed by (n, U).
class ClusterEnergies {
 public:
  ClusterEnergies(double alpha, BasisOptions opts);

  const GrowthResult& solve(int n, double U);
  double alpha() const { return alpha_; }
  const BasisOptions& options() const { return opts_; }
  void set_size_for(int n, std::size_t size);

 private:
  double alpha_;
  BasisOptions opts_;
  std::vector<std::pair<int, std::size_t>> sizes_;
  std::vector<std::pair<std::pair<int, double>, GrowthResult>> cache_;
};

struct BreakupResult {
  double energy = 0.0;
  int split = 1;  // n of the minimizing n + (N - n) split
  bool converged = true;
};

BreakupResult breakup_energy(const CouplingParams& params, ClusterEnergies& clusters);

// (E at (alpha, U), E at (f alpha, f U) / f^2), the second solved on the basis
// dilated by f.
std::pair<double, double> rescale_check(const VariationalState& state,
                                        const CouplingParams& params, double factor,
                                        const ScfOptions& opts = {1000, 1e-13, 0.7});

}  // namespace bindlab
