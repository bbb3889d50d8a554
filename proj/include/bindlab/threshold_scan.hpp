#pragma once

// Energy scans in the repulsion strength U, critical-point bracketing and the
// radius observables of the binding branch.
//
// Scans solve every grid point on one common basis, grown along the grid in a
// chain. At fixed psi the energy is affine in U, so each solved state is a
// line A + U B; the reported direct energy at U_i is the lower envelope of all
// lines found by the forward/backward sweeps. That keeps the scanned energy
// exactly concave and non-decreasing while staying a variational upper bound.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bindlab/atom_solver.hpp"
#include "bindlab/pt_solver.hpp"

namespace bindlab {

struct ScanOptions {
  double tol_bind_rel = 1e-5;    // tol_bind = tol_bind_rel * |breakup|
  BasisOptions pt{};             // growth at the first grid point
  std::size_t one_body_size = 20;
  std::size_t growth_per_point = 4;
  AtomBasisOptions atom{};
  std::size_t mc_samples = 20000;
  std::uint64_t mc_seed = 2024;
  // Radius for mass_inside; <= 0 picks 2 <r12> at the middle binding point.
  double mass_radius = 0.0;
  bool chained = true;
  double slope_step = 1e-3;
  int polish_passes = 2;
  // Used as the scan basis instead of growing one (top-level system only).
  std::optional<BasisSet> basis;
};

struct ScanPoint {
  double U = 0.0;
  double energy = 0.0;  // min(direct, breakup)
  double direct = 0.0;  // variational energy of the computed state
  double breakup = 0.0;
  bool binding = false;
  double inv_r12 = 0.0;
  double mean_r12 = 0.0;
  double mass_inside = 0.0;
  double max_pair_dist = 0.0;
  double max_pair_stderr = 0.0;
  bool converged = true;
  std::optional<double> left_slope;  // one-sided dE/dU, binding points only
};

enum class ScanKind { bipolaron, npolaron, atom };

struct ScanResult {
  ScanKind kind = ScanKind::bipolaron;
  double alpha = 0.0;
  int n_particles = 2;
  double tol_bind = 0.0;
  double mass_radius = 0.0;
  std::vector<ScanPoint> points;
  std::optional<std::pair<double, double>> critical_bracket;
  std::optional<double> left_slope;
  BasisSet basis{2};
  std::vector<Vector> coeffs;  // state of each point on `basis`
  std::vector<std::string> warnings;
  std::vector<std::string> notes;

  // Number of particle pairs, so dE/dU = pairs * inv_r12.
  double pair_count() const { return 0.5 * n_particles * (n_particles - 1); }
};

ScanResult scan_bipolaron(double alpha, const std::vector<double>& u_grid,
                          const ScanOptions& opts = {});
ScanResult scan_npolaron(double alpha, int n_particles, const std::vector<double>& u_grid,
                         const ScanOptions& opts = {});
ScanResult scan_atom(const std::vector<double>& u_grid, const ScanOptions& opts = {});

// Bracket logic on a finished scan: last converged binding point and the
// next converged non-binding point.
std::optional<std::pair<double, double>> find_bracket(const std::vector<ScanPoint>& points);

struct Probe {
  double U = 0.0;
  bool binding = false;
  bool converged = true;
  double energy = 0.0;
  double breakup = 0.0;
};
using ProbeFn = std::function<Probe(double)>;

struct CriticalResult {
  double lo = 0.0;
  double hi = 0.0;
  bool monotone = true;
  std::vector<Probe> probes;
  std::vector<std::string> warnings;
};

// Bisection on the binding indicator. Throws PreconditionError unless the
// start binds at lo and not at hi.
CriticalResult locate_critical(const ProbeFn& probe, std::pair<double, double> bracket,
                               double tol);

// Probe closures: each probe re-optimizes a basis at the probed U, starting
// from a base basis.
ProbeFn atom_probe(const AtomBasisOptions& opts, BasisSet base, double tol_bind_rel = 1e-5);
ProbeFn polaron_probe(double alpha, int n_particles, const BasisOptions& opts, BasisSet base,
                      double breakup, double tol_bind_rel = 1e-5);

struct FirstOrderReport {
  bool complete = false;
  double left_slope = 0.0;
  double jump = 0.0;
  double slope_floor = 0.0;
  std::vector<double> last_slopes;   // at the last binding points, ascending U
  std::vector<double> last_inv_r12;  // pairs * inv_r12 at the same points
  double slope_variation = 0.0;      // (max - min) / max over last_slopes
  double max_hf_mismatch = 0.0;      // relative
  std::vector<double> right_slopes;  // (E - breakup) / dU above the bracket
  double min_inv_ratio = 0.0;        // min over branch of inv_r12 / mid-branch value
  double min_mass_inside = 0.0;
  bool above_floor = false;
  std::vector<std::string> notes;
};

FirstOrderReport first_order_report(const ScanResult& scan);

}  // namespace bindlab
