#include "bindlab/pt_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace bindlab {

namespace {

constexpr double kSqrt2OverPi = std::numbers::sqrt2 * std::numbers::inv_sqrtpi;

double relative_change(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

// Packed coefficients f_q c_k c_l with f = 2 off the diagonal.
Vector pack(const Vector& c) {
  const auto n = c.size();
  Vector d(static_cast<Eigen::Index>(packed_count(static_cast<std::size_t>(n))));
  for (Eigen::Index l = 0; l < n; ++l) {
    for (Eigen::Index k = 0; k <= l; ++k) {
      d[static_cast<Eigen::Index>(packed_pair(k, l))] = (k == l ? 1.0 : 2.0) * c[k] * c[l];
    }
  }
  return d;
}

Matrix unpack(const Vector& w, Eigen::Index n) {
  Matrix m(n, n);
  for (Eigen::Index l = 0; l < n; ++l) {
    for (Eigen::Index k = 0; k <= l; ++k) {
      m(k, l) = m(l, k) = w[static_cast<Eigen::Index>(packed_pair(k, l))];
    }
  }
  return m;
}

PairDensity mixture(const std::vector<PairDensity>& densities, const Vector& d) {
  PairDensity out;
  for (std::size_t q = 0; q < densities.size(); ++q) {
    const double dq = d[static_cast<Eigen::Index>(q)];
    if (dq == 0.0) continue;
    for (std::size_t t = 0; t < densities[q].weight.size(); ++t) {
      out.weight.push_back(dq * densities[q].weight[t]);
      out.variance.push_back(densities[q].variance[t]);
    }
  }
  return out;
}

}  // namespace

void CouplingParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigurationError("alpha must be positive and finite");
  }
  if (!(U >= 0.0) || !std::isfinite(U)) {
    throw ConfigurationError("U must be non-negative and finite");
  }
  if (n_particles < 1 || n_particles > kMaxParticles) {
    throw ConfigurationError("n_particles must be in 1.." + std::to_string(kMaxParticles));
  }
}

double FieldPotential::operator()(double r) const {
  double s = 0.0;
  for (std::size_t t = 0; t < weight.size(); ++t) {
    const double sb = std::sqrt(exponent[t]);
    // erf(s r) / r -> 2 s / sqrt(pi) at the origin
    s += weight[t] * (r * sb < 1e-8 ? 2.0 * sb * std::numbers::inv_sqrtpi
                                    : std::erf(sb * r) / r);
  }
  return s;
}

double FieldPotential::recompute_field_energy() const {
  // Each term is the potential of a unit Gaussian charge of variance 1/(2 beta).
  double s = 0.0;
  for (std::size_t t = 0; t < weight.size(); ++t) {
    const double vt = 0.5 / exponent[t];
    double inner = 0.0;
    for (std::size_t u = 0; u < weight.size(); ++u) {
      inner += weight[u] / std::sqrt(vt + 0.5 / exponent[u]);
    }
    s += weight[t] * inner;
  }
  return 0.25 * kSqrt2OverPi * s;
}

FieldPotential FieldPotential::scaled(double factor) const {
  FieldPotential out = *this;
  for (auto& w : out.weight) w *= factor;
  out.field_energy *= factor * factor;
  return out;
}

PtSystem::PtSystem(BasisSet basis, Exec exec) : basis_(std::move(basis)), exec_(exec) {
  ops_ = assemble_operators(basis_, exec_);
  densities_ = assemble_pair_densities(basis_, exec_);
  hartree_ = assemble_hartree(densities_, exec_);
  refresh_pruning();
}

void PtSystem::refresh_pruning() {
  if (basis_.empty()) {
    pruned_.reset();
  } else {
    pruned_.emplace(ops_.overlap);
  }
}

Vector PtSystem::packed_density(const Vector& c) const { return pack(c); }

double PtSystem::hartree_energy(const Vector& c) const {
  const Vector d = pack(c);
  return d.dot(hartree_ * d);
}

Matrix PtSystem::mean_field(const Vector& d) const {
  return unpack(hartree_ * d, static_cast<Eigen::Index>(size()));
}

PtSystem::Field PtSystem::field(const Vector& d) const {
  Field f;
  f.density = d;
  f.potential = hartree_ * d;
  f.hartree = d.dot(f.potential);
  f.charge = mixture(densities_, d);
  return f;
}

EnergyReport PtSystem::evaluate(const Vector& c_in, const CouplingParams& params) const {
  params.validate();
  if (params.n_particles != basis_.n_particles()) {
    throw ConfigurationError("CouplingParams.n_particles does not match the basis");
  }
  if (c_in.size() != static_cast<Eigen::Index>(size())) {
    throw ConfigurationError("coefficient count does not match basis size");
  }
  const double n2 = c_in.dot(ops_.overlap * c_in);
  if (!(n2 > 0.0)) throw ConstructionError("state has zero norm");
  const Vector c = c_in / std::sqrt(n2);
  EnergyReport r;
  r.kinetic = c.dot(ops_.kinetic * c);
  r.repulsion = params.n_particles > 1 ? params.U * c.dot(ops_.repulsion * c) : 0.0;
  r.attraction = -params.alpha * hartree_energy(c);
  r.total = r.kinetic + r.repulsion + r.attraction;
  r.multiplier = r.total + r.attraction;
  return r;
}

ScfResult PtSystem::solve(const CouplingParams& params, const ScfOptions& opts,
                          const Vector* start) const {
  params.validate();
  if (params.n_particles != basis_.n_particles()) {
    throw ConfigurationError("CouplingParams.n_particles does not match the basis");
  }
  if (!pruned_) throw ConfigurationError("cannot solve on an empty basis");
  if (!(opts.mixing > 0.0 && opts.mixing <= 1.0)) {
    throw ConfigurationError("SCF mixing must lie in (0, 1]");
  }
  const auto n = static_cast<Eigen::Index>(size());
  const double alpha = params.alpha;
  const Matrix linear = params.n_particles > 1
                            ? Matrix(ops_.kinetic + params.U * ops_.repulsion)
                            : ops_.kinetic;

  Vector c;
  if (start != nullptr && start->size() == n && start->dot(ops_.overlap * *start) > 0.0) {
    c = *start / std::sqrt(start->dot(ops_.overlap * *start));
  } else {
    // best single basis function
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index arg = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      const double s = ops_.overlap(k, k);
      const auto p = static_cast<Eigen::Index>(packed_pair(k, k));
      const double e = linear(k, k) / s - alpha * hartree_(p, p) / (s * s);
      if (e < best) {
        best = e;
        arg = k;
      }
    }
    c = Vector::Zero(n);
    c[arg] = 1.0 / std::sqrt(ops_.overlap(arg, arg));
  }

  ScfResult out{VariationalState(basis_, c, ops_.overlap), {}, pack(c)};
  Vector d = pack(c);
  Vector w = hartree_ * d;
  double e_prev = c.dot(linear * c) - alpha * d.dot(w);
  std::vector<double> history{e_prev};
  bool converged = false;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    const Matrix h = linear - 2.0 * alpha * unpack(w, n);
    auto [lambda, cn] = pruned_->lowest(h);
    (void)lambda;
    const Vector dn = pack(cn);
    d = (1.0 - opts.mixing) * d + opts.mixing * dn;
    w = hartree_ * d;
    // two-field energy of (psi_n, field of the mixed density)
    const double e = cn.dot(linear * cn) - 2.0 * alpha * dn.dot(w) + alpha * d.dot(w);
    history.push_back(e);
    c = cn;
    if (relative_change(e, e_prev) <= opts.tol) {
      converged = true;
      e_prev = e;
      ++it;
      break;
    }
    e_prev = e;
  }

  out.report = evaluate(c, params);
  out.report.iterations = it;
  out.report.converged = converged;
  out.report.history = std::move(history);
  out.state = VariationalState(basis_, c, ops_.overlap);
  out.density = pack(out.state.coeffs());
  return out;
}

std::optional<double> PtSystem::screen_candidate(const CorrelatedGaussian& g, const Field& field,
                                                 const CouplingParams& params,
                                                 double max_overlap) const {
  if (g.n_particles() != basis_.n_particles()) {
    throw ConfigurationError("candidate particle count does not match the basis");
  }
  const auto n = static_cast<Eigen::Index>(size());
  BasisSet tmp = basis_;
  tmp.add(g);
  const auto kk = static_cast<std::size_t>(n);

  Vector s_col(n + 1), t_col(n + 1), v_col(n + 1), w_col(n + 1);
  for (Eigen::Index k = 0; k <= n; ++k) {
    const OperatorEntry e = operator_entry(tmp, static_cast<std::size_t>(k), kk);
    s_col[k] = e.overlap;
    t_col[k] = e.kinetic;
    v_col[k] = e.repulsion;
    w_col[k] = field.charge.weight.empty()
                   ? 0.0
                   : density_coulomb(pair_density(tmp, static_cast<std::size_t>(k), kk),
                                     field.charge);
  }
  if (!(s_col[n] > 0.0)) return std::nullopt;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (std::abs(s_col[k]) / std::sqrt(ops_.overlap(k, k) * s_col[n]) > max_overlap) {
      return std::nullopt;
    }
  }

  const double u = params.n_particles > 1 ? params.U : 0.0;
  Matrix s(n + 1, n + 1), h(n + 1, n + 1);
  s.topLeftCorner(n, n) = ops_.overlap;
  h.topLeftCorner(n, n) = ops_.kinetic + u * ops_.repulsion -
                          2.0 * params.alpha * unpack(field.potential, n);
  const Vector h_col = t_col + u * v_col - 2.0 * params.alpha * w_col;
  s.col(n) = s_col;
  s.row(n) = s_col.transpose();
  h.col(n) = h_col;
  h.row(n) = h_col.transpose();
  try {
    const PrunedGram pg(s);
    if (pg.rank() <= (n > 0 ? pruned_->rank() : 0)) return std::nullopt;
    const double lambda = pg.lowest(h).first;
    if (!std::isfinite(lambda)) return std::nullopt;
    return lambda + params.alpha * field.hartree;
  } catch (const ConfigurationError&) {
    return std::nullopt;
  }
}

void PtSystem::append(const CorrelatedGaussian& g) {
  const auto n = static_cast<Eigen::Index>(size());
  basis_.add(g);
  const auto kk = static_cast<std::size_t>(n);
  OperatorMatrices& o = ops_;
  for (Matrix* m : {&o.overlap, &o.kinetic, &o.nuclear, &o.repulsion}) {
    m->conservativeResize(n + 1, n + 1);
  }
  for (Eigen::Index k = 0; k <= n; ++k) {
    const OperatorEntry e = operator_entry(basis_, static_cast<std::size_t>(k), kk);
    o.overlap(k, n) = o.overlap(n, k) = e.overlap;
    o.kinetic(k, n) = o.kinetic(n, k) = e.kinetic;
    o.nuclear(k, n) = o.nuclear(n, k) = e.nuclear;
    o.repulsion(k, n) = o.repulsion(n, k) = e.repulsion;
  }
  const std::size_t first = densities_.size();
  for (std::size_t k = 0; k <= kk; ++k) densities_.push_back(pair_density(basis_, k, kk));
  const Matrix rows = assemble_hartree_rows(densities_, first, exec_);
  const auto total = static_cast<Eigen::Index>(densities_.size());
  const auto f = static_cast<Eigen::Index>(first);
  hartree_.conservativeResize(total, total);
  hartree_.bottomRows(total - f) = rows;
  hartree_.topRightCorner(f, total - f) = rows.leftCols(f).transpose();
  refresh_pruning();
}

void PtSystem::truncate(std::size_t new_size) {
  if (new_size >= size()) return;
  basis_.truncate(new_size);
  const auto n = static_cast<Eigen::Index>(new_size);
  for (Matrix* m : {&ops_.overlap, &ops_.kinetic, &ops_.nuclear, &ops_.repulsion}) {
    *m = Matrix(m->topLeftCorner(n, n));
  }
  densities_.resize(packed_count(new_size));
  const auto p = static_cast<Eigen::Index>(densities_.size());
  hartree_ = Matrix(hartree_.topLeftCorner(p, p));
  refresh_pruning();
}

EnergyReport evaluate_pt(const VariationalState& state, const CouplingParams& params) {
  const PtSystem sys(state.basis());
  return sys.evaluate(state.coeffs(), params);
}

FieldPotential optimal_potential(const VariationalState& state, double alpha) {
  if (!(alpha > 0.0)) throw ConfigurationError("alpha must be positive");
  const auto densities = assemble_pair_densities(state.basis());
  const PairDensity rho = mixture(densities, pack(state.coeffs() / std::sqrt(state.norm2())));
  FieldPotential phi;
  const double amp = 2.0 * std::sqrt(alpha);
  phi.weight.reserve(rho.weight.size());
  phi.exponent.reserve(rho.weight.size());
  for (std::size_t t = 0; t < rho.weight.size(); ++t) {
    phi.weight.push_back(amp * rho.weight[t]);
    phi.exponent.push_back(0.5 / rho.variance[t]);
  }
  phi.field_energy = alpha * density_coulomb(rho, rho);
  return phi;
}

double evaluate_two_field(const VariationalState& state, const FieldPotential& potential,
                          const CouplingParams& params) {
  params.validate();
  if (params.n_particles != state.n_particles()) {
    throw ConfigurationError("CouplingParams.n_particles does not match the state");
  }
  const OperatorMatrices ops = assemble_operators(state.basis());
  const Vector& c = state.coeffs();
  const double n2 = c.dot(ops.overlap * c);
  double e = c.dot(ops.kinetic * c);
  if (params.n_particles > 1) e += params.U * c.dot(ops.repulsion * c);
  if (!potential.weight.empty()) {
    PairDensity charge;
    for (std::size_t u = 0; u < potential.weight.size(); ++u) {
      charge.weight.push_back(potential.weight[u]);
      charge.variance.push_back(0.5 / potential.exponent[u]);
    }
    // int rho_psi phi
    const auto densities = assemble_pair_densities(state.basis());
    const PairDensity rho = mixture(densities, pack(c));
    e -= std::sqrt(params.alpha) * density_coulomb(rho, charge);
  }
  return e + potential.field_energy * n2;
}

double linearization_gap(const VariationalState& state, const FieldPotential& potential,
                         const CouplingParams& params) {
  return evaluate_two_field(state, potential, params) - evaluate_pt(state, params).total;
}

ScfResult scf_solve(const BasisSet& basis, const CouplingParams& params, const ScfOptions& opts) {
  if (basis.empty()) throw ConfigurationError("cannot solve on an empty basis");
  const PtSystem sys(basis);
  return sys.solve(params, opts);
}

GrowthResult optimize_basis(const CouplingParams& params, const BasisOptions& opts,
                            const BasisSet* initial) {
  params.validate();
  if (opts.target_size < 1) throw ConfigurationError("target_size must be at least 1");
  if (opts.trials < 1) throw ConfigurationError("trials must be at least 1");
  CandidateOptions cand = opts.candidates;
  cand.scale *= params.alpha * params.alpha;
  CandidateSampler sampler(params.n_particles, cand, opts.seed);

  PtSystem sys(initial != nullptr ? *initial : BasisSet(params.n_particles),
               Exec::parallel);
  if (sys.basis().n_particles() != params.n_particles) {
    throw ConfigurationError("initial basis particle count does not match params");
  }
  if (sys.size() == 0) {
    // seed with the best single candidate
    double best = std::numeric_limits<double>::infinity();
    std::optional<CorrelatedGaussian> pick;
    for (int t = 0; t < opts.trials; ++t) {
      CorrelatedGaussian g = sampler.next();
      PtSystem one(BasisSet(params.n_particles, sys.basis().symmetrization(), {g}),
                   Exec::serial);
      const double e = one.evaluate(Vector::Ones(1), params).total;
      if (e < best) {
        best = e;
        pick = g;
      }
    }
    sys.append(*pick);
  }

  ScfResult cur = sys.solve(params, opts.scf);
  std::vector<double> energies{cur.report.total};
  int stalls = 0;
  while (sys.size() < opts.target_size && stalls < opts.max_stalls) {
    const PtSystem::Field field = sys.field(cur.density);
    std::vector<CorrelatedGaussian> pool;
    pool.reserve(static_cast<std::size_t>(opts.trials));
    for (int t = 0; t < opts.trials; ++t) pool.push_back(sampler.next());
    std::vector<double> bound(pool.size(), std::numeric_limits<double>::infinity());
    const auto count = static_cast<long long>(pool.size());
#pragma omp parallel for schedule(dynamic)
    for (long long t = 0; t < count; ++t) {
      const auto e = sys.screen_candidate(pool[t], field, params, cand.max_overlap);
      if (e) bound[t] = *e;
    }
    const auto best = std::min_element(bound.begin(), bound.end());
    if (!std::isfinite(*best)) {
      ++stalls;
      continue;
    }
    const std::size_t before = sys.size();
    sys.append(pool[static_cast<std::size_t>(best - bound.begin())]);
    Vector start = Vector::Zero(static_cast<Eigen::Index>(sys.size()));
    start.head(static_cast<Eigen::Index>(before)) = cur.state.coeffs();
    ScfResult next = sys.solve(params, opts.scf, &start);
    if (next.report.converged && next.report.total < cur.report.total) {
      cur = std::move(next);
      energies.push_back(cur.report.total);
      stalls = 0;
    } else {
      sys.truncate(before);
      ++stalls;
    }
  }
  return {sys.basis(), cur.state, cur.report, std::move(energies)};
}

ClusterEnergies::ClusterEnergies(double alpha, BasisOptions opts)
    : alpha_(alpha), opts_(std::move(opts)) {
  if (!(alpha_ > 0.0)) throw ConfigurationError("alpha must be positive");
}

void ClusterEnergies::set_size_for(int n, std::size_t size) {
  for (auto& [k, s] : sizes_) {
    if (k == n) {
      s = size;
      return;
    }
  }
  sizes_.emplace_back(n, size);
}

const GrowthResult& ClusterEnergies::solve(int n, double U) {
  const double key_u = n == 1 ? 0.0 : U;
  for (const auto& [key, res] : cache_) {
    if (key.first == n && key.second == key_u) return res;
  }
  BasisOptions o = opts_;
  for (const auto& [k, s] : sizes_) {
    if (k == n) o.target_size = s;
  }
  o.seed = opts_.seed + 7919ULL * static_cast<std::uint64_t>(n);
  cache_.emplace_back(std::make_pair(n, key_u),
                      optimize_basis(CouplingParams{alpha_, key_u, n}, o));
  return cache_.back().second;
}

namespace {

// Cluster energy: the better of the direct solve and the cluster's own breakup.
std::pair<double, bool> cluster_energy(int n, double U, ClusterEnergies& clusters) {
  const GrowthResult& r = clusters.solve(n, U);
  double e = r.report.total;
  bool ok = r.report.converged;
  if (n >= 2) {
    const BreakupResult b = breakup_energy(CouplingParams{clusters.alpha(), U, n}, clusters);
    if (b.energy < e) e = b.energy;
    ok = ok && b.converged;
  }
  return {e, ok};
}

}  // namespace

BreakupResult breakup_energy(const CouplingParams& params, ClusterEnergies& clusters) {
  params.validate();
  if (params.n_particles < 2) throw ConfigurationError("breakup energy needs N >= 2");
  BreakupResult best;
  best.energy = std::numeric_limits<double>::infinity();
  for (int n = 1; n <= params.n_particles / 2; ++n) {
    const auto [ea, oka] = cluster_energy(n, params.U, clusters);
    const auto [eb, okb] = cluster_energy(params.n_particles - n, params.U, clusters);
    if (ea + eb < best.energy) {
      best.energy = ea + eb;
      best.split = n;
      best.converged = oka && okb;
    }
  }
  return best;
}

std::pair<double, double> rescale_check(const VariationalState& state,
                                        const CouplingParams& params, double factor,
                                        const ScfOptions& opts) {
  if (!(factor > 0.0)) throw ConfigurationError("rescale factor must be positive");
  const PtSystem base(state.basis());
  const ScfResult a = base.solve(params, opts, &state.coeffs());
  const PtSystem scaled(state.basis().dilated(factor));
  const CouplingParams p2{factor * params.alpha, factor * params.U, params.n_particles};
  const ScfResult b = scaled.solve(p2, opts, &state.coeffs());
  return {a.report.total, b.report.total / (factor * factor)};
}

}  // namespace bindlab
