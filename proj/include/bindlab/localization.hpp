#pragma once

// Partitions of unity, cutoffs and explicit constants of the localization
// argument, each with a numerical certificate.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bindlab/errors.hpp"

namespace bindlab {

// Radial partition in the interparticle distance t:
//   phi(t)   = sin(pi/2 (t - l/b)/(l - l/b)) on [l/b, l], cos(pi/2 (t - l)/(bl - l)) on [l, bl]
//   phi_0(t) = 1 below l/b, cos(...) on [l/b, l], 0 above l
//   phi_j(t) = phi(b^{1-j} t), j >= 1.
class RadialPartition {
 public:
  RadialPartition(double ell, double b);

  double ell() const { return ell_; }
  double b() const { return b_; }

  double value(int j, double t) const;
  double derivative(int j, double t) const;  // closed form, one-sided at kinks
  // Pieces that can be non-zero at t.
  std::pair<int, int> active(double t) const;
  double sum_of_squares(double t) const;
  // sum_k phi_k'(t)^2 from closed-form or finite-difference derivatives.
  double derivative_sum(double t) const;
  double derivative_sum_fd(double t) const;
  // Tightest right-hand side of the localization bound among the pieces
  // whose support contains t.
  double localization_bound(double t) const;

  std::pair<double, double> support(int j) const;

 private:
  double ell_;
  double b_;
};

RadialPartition build_radial_partition(double ell, double b);

struct SumToOneReport {
  std::size_t points = 0;
  double max_deviation = 0.0;
  double witness = 0.0;
};
SumToOneReport check_sum_to_one(const RadialPartition& p, std::size_t points = 10000);

struct LocalizationReport {
  std::size_t points = 0;
  double worst_slack = 0.0;  // min over t of bound - derivative sum
  double witness = 0.0;
  double max_error = 0.0;    // max derivative sum
  bool ok = true;            // worst_slack >= -1e-9
};
// Log-spaced t over [t_min ell, t_max ell].
LocalizationReport check_localization_bound(const RadialPartition& p, std::size_t points = 100000,
                                            double t_min = 1e-3, double t_max = 1e6);

// chi(x) = sin(pi |x|) / (sqrt(2 pi) |x|) on the unit ball, 0 outside.
double ball_cutoff(double r);
double ball_cutoff_derivative(double r);
struct BallCutoffReport {
  double norm = 0.0;       // int chi^2
  double grad_norm = 0.0;  // int |grad chi|^2
  double at_origin = 0.0;
};
BallCutoffReport check_ball_cutoff();

struct ConstantsReport {
  double alpha = 0.0;
  double eps = 0.0;
  double delta = 0.0;
  double b = 0.0;
  int n_particles = 2;
  double kappa = 0.0;
  double kappa_argmin = 0.0;
  double d_lo = 0.0;
  double d_hi = 0.0;
  double ell_c = 0.0;            // closed-form value as stated
  double ell_c_rederived = 0.0;  // N (N-1)^2 / (2 b delta^2) in the delta term
  double L_over_ell = 0.0;       // L = delta ell / (N - 1)
};

// Throws ConfigurationError when kappa <= 0 ("delta too large").
ConstantsReport compute_constants(double alpha, double eps, double delta, double b,
                                  int n_particles = 2);

struct Step2Report {
  double ell = 0.0;
  int j_max = 30;
  std::size_t d_points = 0;
  double worst_slack = 0.0;  // relative to the localization penalty
  int worst_j = 0;
  double worst_d = 0.0;
  bool ok = true;
};
// Evaluates (N-1) min_{d in D_j}(-2 alpha/d + 2 alpha (1+eps)/(d + 4 b^j L))
//   - b^{-2j} (b^2 pi^2 / (2 (l - l/b)^2) + N pi^2 / L^2)
// on a d-grid for j = 1..j_max at the given ell.
Step2Report check_step2(const ConstantsReport& c, double ell, int j_max = 30,
                        std::size_t d_points = 2001);

// Four-piece partition of R^3 x R^3 built from smooth steps in
// s = max(|x1|, |x2|), u = s / |x1 - x2| and v = |x1| / |x2|.
class HeliumPartition {
 public:
  HeliumPartition(double ell, double eps);

  double ell() const { return ell_; }
  double eps() const { return eps_; }

  std::array<double, 4> values(const std::array<double, 6>& x) const;
  // sum_j |grad chi_j|^2 by 5-point central differences.
  double gradient_sum(const std::array<double, 6>& x) const;
  // Whether each chi_j may be non-zero at x by the support conditions.
  std::array<bool, 4> allowed(const std::array<double, 6>& x) const;

 private:
  double ell_;
  double eps_;
};

HeliumPartition build_helium_partition(double ell, double eps);

struct HeliumReport {
  std::size_t samples = 0;
  std::size_t rejected_ties = 0;
  double max_sum_deviation = 0.0;
  std::size_t support_violations = 0;
  std::size_t symmetry_violations = 0;
  double c_inner = 0.0;  // max ell^2 sum |grad|^2 where chi_0 > 0
  double c_outer = 0.0;  // max ell s sum |grad|^2 where chi_1..3 not all 0
  double c_eps = 0.0;
  std::optional<std::array<double, 6>> witness;
  bool ok = true;
};
HeliumReport check_helium_partition(const HeliumPartition& hp, std::size_t n_samples,
                                    std::uint64_t seed);

struct ImsReport {
  std::size_t samples = 0;
  std::size_t rejected = 0;
  double max_rel_error = 0.0;
  std::vector<double> witness;
  bool ok = true;
};
// sum_i sum_k |grad_i phi_k(t)|^2 = 2 sum_k phi_k'(t)^2 with t the largest
// pair distance, by finite differences at random configurations.
ImsReport verify_ims_radial(const RadialPartition& p, int n_particles, std::size_t n_samples,
                            std::uint64_t seed);

}  // namespace bindlab
