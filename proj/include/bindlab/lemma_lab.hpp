#pragma once

// Verification and counterexample search for the two calculus lemmas on
// radial probability densities.
//
// Densities are piecewise linear on their node grid, so every integral used
// here (mass, int rho / r, tails) is evaluated exactly segment by segment.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bindlab/errors.hpp"

namespace bindlab {

class RadialDensity {
 public:
  // Nodes must be increasing and >= 0, values >= 0. Density is 0 beyond the
  // last node.
  RadialDensity(std::vector<double> grid, std::vector<double> values);

  // Samples f on n uniform nodes of [0, r_max] and normalizes.
  static RadialDensity from_function(const std::function<double(double)>& f, double r_max,
                                     std::size_t n);

  const std::vector<double>& grid() const { return r_; }
  const std::vector<double>& values() const { return rho_; }

  double mass() const { return cum_.back(); }
  RadialDensity normalized() const;

  double operator()(double r) const;
  double mass_below(double ell) const;      // int_0^ell rho
  double inv_above(double ell) const;       // int_ell^inf rho / r
  double inv_moment() const;                // int_0^inf rho / r, +inf if rho(0) > 0
  // Last radius where rho is positive (0 for a zero density).
  double support_end() const;
  double support_start() const;

 private:
  std::size_t segment(double r) const;

  std::vector<double> r_;
  std::vector<double> rho_;
  std::vector<double> cum_;      // prefix masses at nodes
  std::vector<double> inv_tail_;  // suffix int rho / r from each node
};

inline constexpr double kHypothesisTol = 1e-10;
inline constexpr double kConclusionTol = 1e-8;
inline constexpr std::size_t kMinHypothesisGrid = 200;
inline constexpr double kNormalizationTol = 1e-10;

struct LemmaReport {
  std::string lemma;  // "simple" or "general"
  std::vector<double> ell;
  std::vector<double> hypothesis_margins;
  double min_hypothesis_margin = 0.0;
  double min_hypothesis_at = 0.0;
  bool hypothesis_holds = false;
  std::vector<std::string> conclusion_names;
  std::vector<double> conclusion_values;
  std::vector<double> conclusion_bounds;
  std::vector<double> conclusion_margins;
  bool pass = true;
  bool skipped = false;
  std::vector<std::string> warnings;
  std::vector<std::string> notes;
};

// Log-spaced grid of n points over [ell_c, r_max]; starts at r_max * 1e-6
// when ell_c = 0.
std::vector<double> log_grid(double ell_c, double r_max, std::size_t n);

// Hypothesis (b / l^2) F(l) >= int_l^inf rho / r for l >= ell_c; checks
//   int rho / r >= 1 / (2 (b + ell_c))  and  F(ell_c) >= ell_c^2 / (b + ell_c)^2.
LemmaReport check_simple(const RadialDensity& rho, double b, double ell_c,
                         const std::vector<double>& ell_grid);

// Hypothesis ((1 - lambda) a + b / l^2) F(l) >= int_l^inf (lambda a + c / r) rho;
// checks int rho / r >= lambda c / (b + 2 c ell_c).
LemmaReport check_general(const RadialDensity& rho, double a, double b, double c, double lambda,
                          double ell_c, const std::vector<double>& ell_grid);

enum class LemmaKind { simple, general };

struct FalsificationWitness {
  std::uint64_t instance = 0;
  double a = 0.0, b = 0.0, c = 0.0, lambda = 1.0, ell_c = 0.0;
  double margin = 0.0;
  std::string conclusion;
};

struct FalsificationResult {
  LemmaKind which = LemmaKind::simple;
  std::uint64_t seed = 0;
  std::size_t requested = 0;
  std::size_t attempts = 0;
  std::size_t passing = 0;    // hypothesis-passing instances checked
  std::size_t violations = 0;
  double worst_margin = 0.0;  // smallest conclusion margin relative to its bound
  std::optional<FalsificationWitness> worst;
  std::optional<FalsificationWitness> first_violation;
};

// Draws random densities and constants until `trials` hypothesis-passing
// instances have been checked. Instance k is determined by (seed, k).
FalsificationResult falsification_search(LemmaKind which, std::size_t trials, std::uint64_t seed,
                                         std::size_t nodes = 2000);

struct RefinementReport {
  std::size_t n_coarse = 0;
  std::size_t n_fine = 0;
  double max_hypothesis_change = 0.0;
  double max_conclusion_change = 0.0;
};

// Same lemma instance on n and 2n - 1 (nested) nodes of f over [0, r_max].
RefinementReport refinement_check(const std::function<double(double)>& f, double r_max,
                                  std::size_t n, LemmaKind which, double a, double b, double c,
                                  double lambda, double ell_c, const std::vector<double>& ell_grid);

std::string to_string(LemmaKind k);

}  // namespace bindlab
