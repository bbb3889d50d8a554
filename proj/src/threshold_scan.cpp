#include "bindlab/threshold_scan.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace bindlab {

namespace {

struct Line {
  Vector c;
  double a = 0.0;  // U-independent part of the energy
  double b = 0.0;  // dE/dU
};

struct Envelope {
  std::size_t index = 0;
  double value = 0.0;
};

Envelope lowest_line(const std::vector<Line>& lines, double U) {
  Envelope best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t j = 0; j < lines.size(); ++j) {
    const double v = lines[j].a + U * lines[j].b;
    if (v < best.value) best = {j, v};
  }
  return best;
}

void check_grid(const std::vector<double>& grid, bool allow_zero) {
  if (grid.empty()) throw ConfigurationError("U grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!std::isfinite(grid[i]) || grid[i] < 0.0 || (!allow_zero && grid[i] == 0.0)) {
      throw ConfigurationError(allow_zero ? "U grid values must be >= 0"
                                          : "U grid values must be > 0");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw ConfigurationError("U grid must be strictly ascending");
    }
  }
}

std::uint64_t point_seed(std::uint64_t base, double U, int n) {
  std::uint64_t h = base ^ (std::bit_cast<std::uint64_t>(U) * 0x9E3779B97F4A7C15ULL);
  h ^= static_cast<std::uint64_t>(n) * 0xBF58476D1CE4E5B9ULL;
  return h ^ (h >> 31);
}

std::pair<double, double> max_pair_distance(const VariationalState& state, std::size_t n,
                                            std::uint64_t seed) {
  if (n == 0) return {0.0, 0.0};
  const auto samples = sample_configurations(state, n, seed);
  const int np = state.n_particles();
  double sum = 0.0, sum2 = 0.0;
  for (const auto& x : samples) {
    double m = 0.0;
    for (int i = 0; i < np; ++i) {
      for (int j = i + 1; j < np; ++j) m = std::max(m, (x.row(i) - x.row(j)).norm());
    }
    sum += m;
    sum2 += m * m;
  }
  const double dn = static_cast<double>(samples.size());
  const double mean = sum / dn;
  const double var = std::max(0.0, sum2 / dn - mean * mean);
  return {mean, std::sqrt(var / std::max(1.0, dn - 1.0))};
}

// Observables, binding flags, mass radius and bracket for points whose
// U, direct, breakup, converged and coeffs are already set.
void finish_scan(ScanResult& res, const ScanOptions& opts) {
  const Matrix gram = assemble_overlap(res.basis);
  const Matrix inv = assemble_pair_observable(res.basis, PairObservable::inv_distance);
  const Matrix mean = assemble_pair_observable(res.basis, PairObservable::mean_distance);
  std::vector<VariationalState> states;
  states.reserve(res.points.size());
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    ScanPoint& p = res.points[i];
    states.emplace_back(res.basis, res.coeffs[i], gram);
    p.energy = std::min(p.direct, p.breakup);
    p.binding = p.direct < p.breakup - res.tol_bind;
    p.inv_r12 = states.back().expectation(inv);
    p.mean_r12 = states.back().expectation(mean);
  }
  std::vector<std::size_t> bind;
  for (std::size_t i = 0; i < res.points.size(); ++i) {
    if (res.points[i].binding && res.points[i].converged) bind.push_back(i);
  }
  res.mass_radius = opts.mass_radius;
  if (!(res.mass_radius > 0.0)) {
    const std::size_t mid = bind.empty() ? res.points.size() / 2 : bind[bind.size() / 2];
    res.mass_radius = 2.0 * res.points[mid].mean_r12;
  }
  const Matrix inside =
      assemble_pair_observable(res.basis, PairObservable::inside_mass, res.mass_radius);
  const auto count = static_cast<long long>(res.points.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    ScanPoint& p = res.points[i];
    p.mass_inside = states[i].expectation(inside);
    const auto [m, se] = max_pair_distance(
        states[i], opts.mc_samples, point_seed(opts.mc_seed, p.U, res.n_particles));
    p.max_pair_dist = m;
    p.max_pair_stderr = se;
  }
  res.critical_bracket = find_bracket(res.points);
  if (res.critical_bracket) {
    for (const auto& p : res.points) {
      if (p.U == res.critical_bracket->first) res.left_slope = p.left_slope;
    }
  }
}

BasisSet grow_pt_chain(double alpha, int n, const std::vector<double>& grid,
                       const ScanOptions& opts) {
  BasisSet basis(n);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    BasisOptions o = opts.pt;
    o.target_size = i == 0 ? opts.pt.target_size : basis.size() + opts.growth_per_point;
    o.seed = opts.pt.seed + 1000ULL * i + static_cast<std::uint64_t>(n);
    const GrowthResult g =
        optimize_basis(CouplingParams{alpha, grid[i], n}, o, i == 0 ? nullptr : &basis);
    basis = g.basis;
  }
  return basis;
}

struct DirectPoint {
  double energy = 0.0;
  Vector c;
  bool converged = true;
  std::optional<double> slope;
};

std::vector<DirectPoint> pt_common_solve(const BasisSet& basis, double alpha, int n,
                                         const std::vector<double>& grid,
                                         const std::vector<double>& breakup, double tol_bind,
                                         const ScanOptions& opts) {
  const PtSystem sys(basis);
  const auto params = [&](double U) { return CouplingParams{alpha, U, n}; };
  const auto line_of = [&](const ScfResult& r) {
    const Vector& c = r.state.coeffs();
    return Line{c, r.report.kinetic + r.report.attraction,
                c.dot(sys.operators().repulsion * c)};
  };
  const std::size_t m = grid.size();
  std::vector<Line> lines;
  std::vector<bool> converged(m, true);
  if (opts.chained) {
    std::optional<Vector> prev;
    for (std::size_t i = 0; i < m; ++i) {
      const ScfResult r = sys.solve(params(grid[i]), opts.pt.scf, prev ? &*prev : nullptr);
      lines.push_back(line_of(r));
      prev = r.state.coeffs();
    }
    for (std::size_t i = m; i-- > 0;) {
      const ScfResult r = sys.solve(params(grid[i]), opts.pt.scf, &*prev);
      lines.push_back(line_of(r));
      prev = r.state.coeffs();
    }
  } else {
    std::vector<Line> cold(m);
    const auto count = static_cast<long long>(m);
#pragma omp parallel for schedule(dynamic)
    for (long long i = 0; i < count; ++i) {
      cold[i] = line_of(sys.solve(params(grid[i]), opts.pt.scf));
    }
    lines = std::move(cold);
  }
  for (int pass = 0; pass < std::max(1, opts.polish_passes); ++pass) {
    for (std::size_t i = 0; i < m; ++i) {
      const Envelope e = lowest_line(lines, grid[i]);
      const Vector start = lines[e.index].c;
      const ScfResult r = sys.solve(params(grid[i]), opts.pt.scf, &start);
      converged[i] = r.report.converged;
      lines.push_back(line_of(r));
    }
  }
  std::vector<DirectPoint> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Envelope e = lowest_line(lines, grid[i]);
    out[i] = {e.value, lines[e.index].c, converged[i], std::nullopt};
  }
  // one-sided slopes on the common basis at binding points
  const double h = opts.slope_step;
  for (std::size_t i = 0; i < m; ++i) {
    if (!(out[i].energy < breakup[i] - tol_bind)) continue;
    const bool left = grid[i] - h >= 0.0;
    const double u2 = left ? grid[i] - h : grid[i] + h;
    const ScfResult r = sys.solve(params(u2), opts.pt.scf, &out[i].c);
    const double e2 = std::min(r.report.total, lowest_line(lines, u2).value);
    out[i].slope = left ? (out[i].energy - e2) / h : (e2 - out[i].energy) / h;
  }
  return out;
}

struct PolaronCache {
  std::map<int, std::vector<double>> energies;
  std::map<int, std::vector<bool>> converged;
};

ScanResult scan_polaron_impl(double alpha, int n_particles, const std::vector<double>& grid,
                             const ScanOptions& opts, PolaronCache& cache, double e1,
                             bool e1_converged) {
  ScanResult res;
  res.kind = n_particles == 2 ? ScanKind::bipolaron : ScanKind::npolaron;
  res.alpha = alpha;
  res.n_particles = n_particles;
  const std::size_t m = grid.size();

  // cluster energies min(direct, breakup) for every proper sub-cluster size
  const auto cluster = [&](int n) -> std::pair<const std::vector<double>*, const std::vector<bool>*> {
    if (n == 1) return {nullptr, nullptr};
    if (!cache.energies.count(n)) {
      const ScanResult sub = scan_polaron_impl(alpha, n, grid, opts, cache, e1, e1_converged);
      std::vector<double> e(m);
      std::vector<bool> ok(m);
      for (std::size_t i = 0; i < m; ++i) {
        e[i] = sub.points[i].energy;
        ok[i] = sub.points[i].converged;
      }
      cache.energies[n] = std::move(e);
      cache.converged[n] = std::move(ok);
    }
    return {&cache.energies[n], &cache.converged[n]};
  };
  std::vector<double> breakup(m, std::numeric_limits<double>::infinity());
  std::vector<bool> breakup_ok(m, true);
  for (int n = 1; n <= n_particles / 2; ++n) {
    const auto a = cluster(n);
    const auto b = cluster(n_particles - n);
    for (std::size_t i = 0; i < m; ++i) {
      const double ea = a.first ? (*a.first)[i] : e1;
      const double eb = b.first ? (*b.first)[i] : e1;
      // ties resolved toward smaller n by the strict comparison
      if (ea + eb < breakup[i]) {
        breakup[i] = ea + eb;
        breakup_ok[i] = (a.second ? bool((*a.second)[i]) : e1_converged) &&
                        (b.second ? bool((*b.second)[i]) : e1_converged);
      }
    }
  }
  res.tol_bind = opts.tol_bind_rel * std::abs(breakup.front());

  res.basis = opts.basis && opts.basis->n_particles() == n_particles
                  ? *opts.basis
                  : grow_pt_chain(alpha, n_particles, grid, opts);
  const auto direct =
      pt_common_solve(res.basis, alpha, n_particles, grid, breakup, res.tol_bind, opts);
  for (std::size_t i = 0; i < m; ++i) {
    ScanPoint p;
    p.U = grid[i];
    p.direct = direct[i].energy;
    p.breakup = breakup[i];
    p.converged = direct[i].converged && breakup_ok[i];
    p.left_slope = direct[i].slope;
    res.points.push_back(p);
    res.coeffs.push_back(direct[i].c);
  }
  finish_scan(res, opts);
  res.notes.push_back(
      "binding is certified by an explicit variational state; non-binding above the bracket "
      "is not proved, since a richer trial class could still lower the direct energy");
  return res;
}

}  // namespace

std::optional<std::pair<double, double>> find_bracket(const std::vector<ScanPoint>& points) {
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].converged && points[i].binding) last = i;
  }
  if (!last) return std::nullopt;
  for (std::size_t j = *last + 1; j < points.size(); ++j) {
    if (points[j].converged && !points[j].binding) {
      return std::make_pair(points[*last].U, points[j].U);
    }
  }
  return std::nullopt;
}

ScanResult scan_npolaron(double alpha, int n_particles, const std::vector<double>& u_grid,
                         const ScanOptions& opts) {
  if (!(alpha > 0.0)) throw ConfigurationError("alpha must be positive");
  if (n_particles < 2 || n_particles > 4) {
    throw ConfigurationError("n_particles must be 2, 3 or 4");
  }
  check_grid(u_grid, false);
  BasisOptions one = opts.pt;
  one.target_size = opts.one_body_size;
  const GrowthResult g1 = optimize_basis(CouplingParams{alpha, 0.0, 1}, one);
  PolaronCache cache;
  return scan_polaron_impl(alpha, n_particles, u_grid, opts, cache, g1.report.total,
                           g1.report.converged);
}

ScanResult scan_bipolaron(double alpha, const std::vector<double>& u_grid,
                          const ScanOptions& opts) {
  return scan_npolaron(alpha, 2, u_grid, opts);
}

ScanResult scan_atom(const std::vector<double>& u_grid, const ScanOptions& opts) {
  check_grid(u_grid, true);
  ScanResult res;
  res.kind = ScanKind::atom;
  res.alpha = 0.0;
  res.n_particles = 2;
  res.tol_bind = opts.tol_bind_rel * std::abs(kHydrogenEnergy);
  const std::size_t m = u_grid.size();

  BasisSet basis(2);
  if (opts.basis) {
    if (opts.basis->n_particles() != 2) throw ConfigurationError("atom basis must have N = 2");
    basis = *opts.basis;
  }
  for (std::size_t i = 0; i < m && !opts.basis; ++i) {
    AtomBasisOptions o = opts.atom;
    o.target_size = i == 0 ? opts.atom.target_size : basis.size() + opts.growth_per_point;
    o.seed = opts.atom.seed + 1000ULL * i;
    basis = optimize_atom_basis(u_grid[i], o, i == 0 ? nullptr : &basis).basis;
  }
  res.basis = basis;
  const AtomSystem sys(basis);
  const double h = opts.slope_step;
  res.points.resize(m);
  res.coeffs.resize(m);
  const auto count = static_cast<long long>(m);
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    const double U = u_grid[i];
    auto [e, state] = sys.solve(U);
    ScanPoint& p = res.points[i];
    p.U = U;
    p.direct = e;
    p.breakup = kHydrogenEnergy;
    if (e < kHydrogenEnergy - res.tol_bind) {
      const bool left = U - h >= 0.0;
      const double e2 = sys.solve(left ? U - h : U + h).first;
      p.left_slope = left ? (e - e2) / h : (e2 - e) / h;
    }
    res.coeffs[i] = state.coeffs();
  }
  finish_scan(res, opts);
  res.notes.push_back(
      "binding is certified by an explicit variational state; the bracket is a lower "
      "estimate of the exact critical repulsion for this trial class");
  return res;
}

CriticalResult locate_critical(const ProbeFn& probe, std::pair<double, double> bracket,
                               double tol) {
  if (!(tol > 0.0)) throw ConfigurationError("bisection tolerance must be positive");
  auto [lo, hi] = bracket;
  if (!(hi > lo)) throw PreconditionError("bracket must satisfy U_lo < U_hi");
  CriticalResult out;
  const Probe plo = probe(lo);
  const Probe phi = probe(hi);
  out.probes = {plo, phi};
  if (!plo.converged || !phi.converged) {
    throw PreconditionError("bracket endpoints did not converge");
  }
  if (plo.binding == phi.binding) {
    throw PreconditionError(plo.binding ? "degenerate bracket: binding at both ends"
                                        : "degenerate bracket: no binding at either end");
  }
  if (!plo.binding) throw PreconditionError("bracket must bind at U_lo and not at U_hi");

  while (hi - lo >= tol) {
    bool moved = false;
    for (double frac : {0.5, 1.0 / 3.0, 2.0 / 3.0}) {
      const double mid = lo + frac * (hi - lo);
      const Probe p = probe(mid);
      out.probes.push_back(p);
      if (!p.converged) {
        std::ostringstream msg;
        msg << "probe at U = " << mid << " did not converge; excluded";
        out.warnings.push_back(msg.str());
        continue;
      }
      (p.binding ? lo : hi) = mid;
      moved = true;
      break;
    }
    if (!moved) {
      out.warnings.push_back("bisection stopped early: no converged probe in the bracket");
      break;
    }
  }
  out.lo = lo;
  out.hi = hi;

  // binding must not reappear above a non-binding probe
  double lowest_unbound = std::numeric_limits<double>::infinity();
  double highest_bound = -std::numeric_limits<double>::infinity();
  for (const Probe& p : out.probes) {
    if (!p.converged) continue;
    if (p.binding) {
      highest_bound = std::max(highest_bound, p.U);
    } else {
      lowest_unbound = std::min(lowest_unbound, p.U);
    }
  }
  if (highest_bound > lowest_unbound) {
    out.monotone = false;
    out.lo = lowest_unbound;
    out.hi = highest_bound;
    out.warnings.push_back(
        "binding indicator is not monotone across probes; widened bracket reports the lowest "
        "non-binding and the highest binding probe");
  }
  return out;
}

ProbeFn atom_probe(const AtomBasisOptions& opts, BasisSet base, double tol_bind_rel) {
  return [opts, base = std::move(base), tol_bind_rel](double U) {
    const AtomGrowth g = optimize_atom_basis(U, opts, &base);
    const double tol = tol_bind_rel * std::abs(kHydrogenEnergy);
    return Probe{U, g.energy < kHydrogenEnergy - tol, true, g.energy, kHydrogenEnergy};
  };
}

ProbeFn polaron_probe(double alpha, int n_particles, const BasisOptions& opts, BasisSet base,
                      double breakup, double tol_bind_rel) {
  return [=, base = std::move(base)](double U) {
    const GrowthResult g = optimize_basis(CouplingParams{alpha, U, n_particles}, opts, &base);
    const double tol = tol_bind_rel * std::abs(breakup);
    return Probe{U, g.report.total < breakup - tol, g.report.converged, g.report.total,
                 breakup};
  };
}

FirstOrderReport first_order_report(const ScanResult& scan) {
  FirstOrderReport r;
  std::vector<std::size_t> bind;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const ScanPoint& p = scan.points[i];
    if (p.converged && p.binding && p.left_slope) bind.push_back(i);
  }
  if (bind.size() < 3) {
    r.notes.push_back("fewer than three converged binding points; report incomplete");
    return r;
  }
  const double pairs = scan.pair_count();
  const std::size_t mid = bind[bind.size() / 2];
  const double mid_inv = scan.points[mid].inv_r12;
  r.slope_floor = 0.2 * pairs * mid_inv;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (std::size_t k = bind.size() - 3; k < bind.size(); ++k) {
    const ScanPoint& p = scan.points[bind[k]];
    r.last_slopes.push_back(*p.left_slope);
    r.last_inv_r12.push_back(pairs * p.inv_r12);
    lo = std::min(lo, *p.left_slope);
    hi = std::max(hi, *p.left_slope);
    r.max_hf_mismatch = std::max(
        r.max_hf_mismatch, std::abs(*p.left_slope - pairs * p.inv_r12) / (pairs * p.inv_r12));
  }
  r.left_slope = r.last_slopes.back();
  r.jump = r.left_slope;
  r.slope_variation = hi > 0.0 ? (hi - lo) / hi : std::numeric_limits<double>::infinity();
  r.above_floor = lo > r.slope_floor;
  r.min_inv_ratio = std::numeric_limits<double>::infinity();
  r.min_mass_inside = std::numeric_limits<double>::infinity();
  for (std::size_t k = bind.size() / 2; k < bind.size(); ++k) {
    r.min_inv_ratio = std::min(r.min_inv_ratio, scan.points[bind[k]].inv_r12 / mid_inv);
  }
  for (std::size_t k : bind) {
    r.min_mass_inside = std::min(r.min_mass_inside, scan.points[k].mass_inside);
  }
  if (scan.critical_bracket) {
    const ScanPoint* prev = nullptr;
    for (const ScanPoint& p : scan.points) {
      if (p.U < scan.critical_bracket->second || !p.converged || p.binding) continue;
      if (prev != nullptr) {
        r.right_slopes.push_back(((p.energy - p.breakup) - (prev->energy - prev->breakup)) /
                                 (p.U - prev->U));
      }
      prev = &p;
    }
  }
  r.complete = true;
  return r;
}

}  // namespace bindlab
