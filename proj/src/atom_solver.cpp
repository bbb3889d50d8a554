#include "bindlab/atom_solver.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace bindlab {

std::pair<double, VariationalState> solve_atom(const AtomProblem& problem) {
  if (problem.basis.n_particles() != 2) throw ConfigurationError("atom basis must have N = 2");
  if (problem.basis.symmetrization() != Symmetrization::bosonic) {
    throw ConfigurationError("atom basis must be symmetrized");
  }
  const AtomSystem sys(problem.basis);
  return sys.solve(problem.U);
}

double hydrogen_ground(const BasisSet& basis1p) {
  if (basis1p.n_particles() != 1) throw ConfigurationError("hydrogen basis must have N = 1");
  if (basis1p.empty()) throw ConfigurationError("cannot solve on an empty basis");
  const OperatorMatrices ops = assemble_operators(basis1p);
  const PrunedGram pg(ops.overlap);
  return pg.lowest(ops.kinetic - ops.nuclear).first;
}

EvenTempered optimize_even_tempered(std::size_t count) {
  if (count < 1) throw ConfigurationError("even-tempered count must be at least 1");
  const auto energy = [count](double log_a, double log_r) {
    return hydrogen_ground(even_tempered(count, std::exp(log_a), std::exp(log_r)));
  };
  constexpr int bits = 40;
  double log_a = std::log(hydrogen_single_gaussian_exponent());
  if (count == 1) return {std::exp(log_a), 1.0, energy(log_a, 0.0)};
  double log_r = std::log(3.0);
  log_a -= 0.5 * static_cast<double>(count - 1) * log_r;
  double best = energy(log_a, log_r);
  // alternating 1D Brent searches
  for (int sweep = 0; sweep < 30; ++sweep) {
    const auto ra = boost::math::tools::brent_find_minima(
        [&](double x) { return energy(x, log_r); }, log_a - 3.0, log_a + 3.0, bits);
    log_a = ra.first;
    const auto rr = boost::math::tools::brent_find_minima(
        [&](double y) { return energy(log_a, y); }, std::log(1.05), std::log(20.0), bits);
    log_r = rr.first;
    const double e = rr.second;
    const bool done = std::abs(e - best) < 1e-14;
    best = std::min(best, e);
    if (done) break;
  }
  return {std::exp(log_a), std::exp(log_r), best};
}

AtomSystem::AtomSystem(BasisSet basis, Exec exec) : basis_(std::move(basis)), exec_(exec) {
  ops_ = assemble_operators(basis_, exec_);
}

Matrix AtomSystem::hamiltonian(double U) const {
  if (!(U >= 0.0) || !std::isfinite(U)) throw ConfigurationError("U must be non-negative");
  return ops_.kinetic - ops_.nuclear + U * ops_.repulsion;
}

std::pair<double, VariationalState> AtomSystem::solve(double U) const {
  if (basis_.empty()) throw ConfigurationError("cannot solve on an empty basis");
  const PrunedGram pg(ops_.overlap);
  auto [e, c] = pg.lowest(hamiltonian(U));
  return {e, VariationalState(basis_, std::move(c), ops_.overlap)};
}

std::optional<double> AtomSystem::screen_candidate(const CorrelatedGaussian& g, double U,
                                                   double max_overlap) const {
  const auto n = static_cast<Eigen::Index>(size());
  BasisSet tmp = basis_;
  tmp.add(g);
  Vector s_col(n + 1), h_col(n + 1);
  for (Eigen::Index k = 0; k <= n; ++k) {
    const OperatorEntry e =
        operator_entry(tmp, static_cast<std::size_t>(k), static_cast<std::size_t>(n));
    s_col[k] = e.overlap;
    h_col[k] = e.kinetic - e.nuclear + U * e.repulsion;
  }
  if (!(s_col[n] > 0.0)) return std::nullopt;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::abs(s_col[k]) / std::sqrt(ops_.overlap(k, k) * s_col[n]) > max_overlap) {
      return std::nullopt;
    }
  }
  Matrix s(n + 1, n + 1), h(n + 1, n + 1);
  s.topLeftCorner(n, n) = ops_.overlap;
  h.topLeftCorner(n, n) = hamiltonian(U);
  s.col(n) = s_col;
  s.row(n) = s_col.transpose();
  h.col(n) = h_col;
  h.row(n) = h_col.transpose();
  try {
    const PrunedGram pg(s);
    if (n > 0 && pg.rank() <= PrunedGram(ops_.overlap).rank()) return std::nullopt;
    const double e = pg.lowest(h).first;
    if (!std::isfinite(e)) return std::nullopt;
    return e;
  } catch (const ConfigurationError&) {
    return std::nullopt;
  }
}

void AtomSystem::append(const CorrelatedGaussian& g) {
  const auto n = static_cast<Eigen::Index>(size());
  basis_.add(g);
  for (Matrix* m : {&ops_.overlap, &ops_.kinetic, &ops_.nuclear, &ops_.repulsion}) {
    m->conservativeResize(n + 1, n + 1);
  }
  for (Eigen::Index k = 0; k <= n; ++k) {
    const OperatorEntry e =
        operator_entry(basis_, static_cast<std::size_t>(k), static_cast<std::size_t>(n));
    ops_.overlap(k, n) = ops_.overlap(n, k) = e.overlap;
    ops_.kinetic(k, n) = ops_.kinetic(n, k) = e.kinetic;
    ops_.nuclear(k, n) = ops_.nuclear(n, k) = e.nuclear;
    ops_.repulsion(k, n) = ops_.repulsion(n, k) = e.repulsion;
  }
}

void AtomSystem::truncate(std::size_t new_size) {
  if (new_size >= size()) return;
  basis_.truncate(new_size);
  const auto n = static_cast<Eigen::Index>(new_size);
  for (Matrix* m : {&ops_.overlap, &ops_.kinetic, &ops_.nuclear, &ops_.repulsion}) {
    *m = Matrix(m->topLeftCorner(n, n));
  }
}

AtomGrowth optimize_atom_basis(double U, const AtomBasisOptions& opts, const BasisSet* initial) {
  if (!(U >= 0.0)) throw ConfigurationError("U must be non-negative");
  if (opts.target_size < 1 || opts.trials < 1) {
    throw ConfigurationError("target_size and trials must be at least 1");
  }
  CandidateSampler sampler(2, opts.candidates, opts.seed);
  AtomSystem sys(initial != nullptr ? *initial : BasisSet(2));
  if (sys.basis().n_particles() != 2) throw ConfigurationError("atom basis must have N = 2");

  double current = std::numeric_limits<double>::infinity();
  if (!sys.basis().empty()) current = sys.solve(U).first;
  std::vector<double> energies;
  if (std::isfinite(current)) energies.push_back(current);
  int stalls = 0;
  while (sys.size() < opts.target_size && stalls < opts.max_stalls) {
    std::vector<CorrelatedGaussian> pool;
    for (int t = 0; t < opts.trials; ++t) pool.push_back(sampler.next());
    std::vector<double> bound(pool.size(), std::numeric_limits<double>::infinity());
    const auto count = static_cast<long long>(pool.size());
#pragma omp parallel for schedule(dynamic)
    for (long long t = 0; t < count; ++t) {
      const auto e = sys.screen_candidate(pool[t], U, opts.candidates.max_overlap);
      if (e) bound[t] = *e;
    }
    const auto best = std::min_element(bound.begin(), bound.end());
    if (!(*best < current)) {
      ++stalls;
      continue;
    }
    sys.append(pool[static_cast<std::size_t>(best - bound.begin())]);
    current = *best;
    energies.push_back(current);
    stalls = 0;
  }
  if (sys.basis().empty()) throw ConfigurationError("atom basis growth produced no element");
  auto [e, state] = sys.solve(U);
  return {sys.basis(), std::move(state), e, std::move(energies)};
}

}  // namespace bindlab
