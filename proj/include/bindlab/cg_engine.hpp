#pragma once

// Centered, spherically symmetric correlated Gaussians on N-particle
// configuration space:
//
//   g_A(X) = n_A exp(-1/2 sum_ij A_ij x_i . x_j),   x_i in R^3,
//
// with A symmetric positive definite and n_A = (det A / pi^N)^{3/4}, so every
// primitive has unit L2 norm. All matrix elements used by the solvers reduce
// to Gaussian integrals and are evaluated in closed form here.

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "bindlab/errors.hpp"

namespace bindlab {

inline constexpr int kMaxParticles = 6;

using SmallMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxParticles, kMaxParticles>;
using SmallVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxParticles, 1>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// One row per particle.
using Configuration =
    Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor, kMaxParticles, 3>;

class CorrelatedGaussian {
 public:
  // Throws ConstructionError unless corr is symmetric positive definite.
  explicit CorrelatedGaussian(const SmallMatrix& corr);

  // N = 1, g proportional to exp(-a r^2), i.e. corr = 2a.
  static CorrelatedGaussian isotropic(double a);
  // Product of one-particle Gaussians exp(-a_i r_i^2).
  static CorrelatedGaussian product(std::span<const double> exponents);
  // corr = sum_i single[i] e_i e_i^T + sum_{i<j} pair[ij] (e_i - e_j)(e_i - e_j)^T,
  // pair given in row-major upper-triangle order (01, 02, ..., 12, ...).
  static CorrelatedGaussian from_pair_parameters(std::span<const double> single,
                                                 std::span<const double> pair);

  int n_particles() const { return static_cast<int>(corr_.rows()); }
  const SmallMatrix& corr() const { return corr_; }
  double norm_const() const { return norm_const_; }
  double log_det() const { return log_det_; }

  // (sigma g)(x_1, ..., x_N) = g(x_{sigma(1)}, ..., x_{sigma(N)}).
  CorrelatedGaussian permuted(std::span<const int> perm) const;
  // g(f X) up to normalization: corr scaled by f^2.
  CorrelatedGaussian dilated(double f) const;

  double value(const Configuration& x) const;

 private:
  SmallMatrix corr_;
  double log_det_ = 0.0;
  double norm_const_ = 1.0;
};

// Radial statistics of a centered 3D Gaussian vector with per-coordinate
// variance v.
double gaussian_inv_radius(double v);            // E[1/|r|]
double gaussian_mean_radius(double v);           // E[|r|]
double gaussian_radial_tail(double v, double ell);    // P(|r| > ell)
double gaussian_radial_inside(double v, double ell);  // P(|r| <= ell)

// Everything derived from the product g_a g_b, which is an unnormalized
// Gaussian with precision C = A + B.
struct PairKernel {
  double overlap = 0.0;  // <a|b>
  double kinetic = 0.0;  // <a| sum_i -Delta_i |b>
  SmallMatrix cov;       // C^{-1}: per-coordinate covariance of X under g_a g_b

  static PairKernel build(const CorrelatedGaussian& a, const CorrelatedGaussian& b);

  // Per-coordinate variance of x_i - x_j (j < 0 means x_i itself).
  double variance(int i, int j = -1) const;
  double inv_distance(int i, int j = -1) const;
  double mean_distance(int i, int j = -1) const;
  double tail_mass(int i, int j, double ell) const;
  double inside_mass(int i, int j, double ell) const;
};

// Primitive (unsymmetrized) matrix elements between normalized Gaussians.
double overlap(const CorrelatedGaussian& g1, const CorrelatedGaussian& g2);
double kinetic(const CorrelatedGaussian& g1, const CorrelatedGaussian& g2);
double coulomb_pair(const CorrelatedGaussian& g1, const CorrelatedGaussian& g2, int i, int j);
double coulomb_nuclear(const CorrelatedGaussian& g1, const CorrelatedGaussian& g2, int i);
// iint rho_ij(x) rho_kl(y) / |x - y|, rho_ij the transition one-particle
// density sum_p int g_i g_j with x at position p.
double hartree_tensor(const CorrelatedGaussian& gi, const CorrelatedGaussian& gj,
                      const CorrelatedGaussian& gk, const CorrelatedGaussian& gl);

enum class Symmetrization { none, bosonic };

// Basis function k is sum over the stored permutations of (sigma g_k); with
// Symmetrization::none that is just g_k.
class BasisSet {
 public:
  explicit BasisSet(int n_particles, Symmetrization sym = Symmetrization::bosonic);
  BasisSet(int n_particles, Symmetrization sym, std::vector<CorrelatedGaussian> elements);

  void add(CorrelatedGaussian g);
  void truncate(std::size_t size);

  std::size_t size() const { return elements_.size(); }
  bool empty() const { return elements_.empty(); }
  int n_particles() const { return n_particles_; }
  Symmetrization symmetrization() const { return sym_; }
  const CorrelatedGaussian& operator[](std::size_t k) const { return elements_[k]; }
  const std::vector<CorrelatedGaussian>& elements() const { return elements_; }
  const std::vector<std::vector<int>>& permutations() const { return perms_; }
  const std::vector<CorrelatedGaussian>& permuted(std::size_t k) const { return permuted_[k]; }

  // Kernels <g_k | tau g_l> for every stored permutation tau. For operators
  // that commute with particle exchange the symmetrized element is
  // multiplicity() * sum_tau <g_k|O|tau g_l>.
  std::vector<PairKernel> pair_kernels(std::size_t k, std::size_t l) const;
  double multiplicity() const { return static_cast<double>(perms_.size()); }

  BasisSet dilated(double f) const;

 private:
  int n_particles_;
  Symmetrization sym_;
  std::vector<CorrelatedGaussian> elements_;
  std::vector<std::vector<int>> perms_;
  std::vector<std::vector<CorrelatedGaussian>> permuted_;
};

BasisSet even_tempered(std::size_t count, double a_min, double ratio);

// Linear expansion psi = sum_k coeffs[k] (basis function k). Constructors
// normalize the coefficients against the Gram matrix.
class VariationalState {
 public:
  VariationalState(BasisSet basis, Vector coeffs);
  VariationalState(BasisSet basis, Vector coeffs, Matrix gram);

  const BasisSet& basis() const { return basis_; }
  const Vector& coeffs() const { return coeffs_; }
  const Matrix& gram() const { return gram_; }
  int n_particles() const { return basis_.n_particles(); }

  double norm2() const { return coeffs_.dot(gram_ * coeffs_); }
  double expectation(const Matrix& op) const { return coeffs_.dot(op * coeffs_); }
  double value(const Configuration& x) const;
  VariationalState dilated(double f) const;

 private:
  BasisSet basis_;
  Vector coeffs_;
  Matrix gram_;
};

// P(|x_1 - x_2| > ell) and its complement under |psi|^2, each as a separate
// closed form (erf / erfc terms).
double pair_tail_mass(const VariationalState& state, double ell);
double pair_inside_mass(const VariationalState& state, double ell);

// i.i.d. draws from |psi|^2 by exact rejection from the positive Gaussian
// mixture (sum_p |c_p| g_p)^2.
std::vector<Configuration> sample_configurations(const VariationalState& state, std::size_t n,
                                                 std::uint64_t seed);

std::vector<std::vector<int>> all_permutations(int n);

}  // namespace bindlab
