#include "bindlab/cg_engine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>

#include "bindlab/kernels.hpp"

namespace bindlab {

namespace {

constexpr double kSqrt2OverPi = std::numbers::sqrt2 * std::numbers::inv_sqrtpi;

// log det of an SPD matrix; throws if the Cholesky factorization fails.
double spd_log_det(const SmallMatrix& m, const char* what) {
  Eigen::LLT<SmallMatrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw ConstructionError(std::string(what) + ": matrix is not positive definite");
  }
  double s = 0.0;
  for (int i = 0; i < m.rows(); ++i) {
    const double d = llt.matrixL()(i, i);
    if (!(d > 0.0)) throw ConstructionError(std::string(what) + ": singular matrix");
    s += 2.0 * std::log(d);
  }
  return s;
}

}  // namespace

CorrelatedGaussian::CorrelatedGaussian(const SmallMatrix& corr) : corr_(corr) {
  const int n = static_cast<int>(corr.rows());
  if (n < 1 || n > kMaxParticles || corr.cols() != n) {
    throw ConstructionError("correlation matrix must be square with 1.." +
                            std::to_string(kMaxParticles) + " rows");
  }
  if (!corr.allFinite()) throw ConstructionError("correlation matrix has non-finite entries");
  const double scale = corr.cwiseAbs().maxCoeff();
  if ((corr - corr.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ConstructionError("correlation matrix is not symmetric");
  }
  corr_ = 0.5 * (corr + corr.transpose());
  Eigen::SelfAdjointEigenSolver<SmallMatrix> es(corr_, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0)) {
    throw ConstructionError("correlation matrix is not positive definite");
  }
  log_det_ = spd_log_det(corr_, "CorrelatedGaussian");
  norm_const_ = std::exp(0.75 * (log_det_ - n * std::log(std::numbers::pi)));
}

CorrelatedGaussian CorrelatedGaussian::isotropic(double a) {
  SmallMatrix m(1, 1);
  m(0, 0) = 2.0 * a;
  return CorrelatedGaussian(m);
}

CorrelatedGaussian CorrelatedGaussian::product(std::span<const double> exponents) {
  const int n = static_cast<int>(exponents.size());
  SmallMatrix m = SmallMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = 2.0 * exponents[i];
  return CorrelatedGaussian(m);
}

CorrelatedGaussian CorrelatedGaussian::from_pair_parameters(std::span<const double> single,
                                                            std::span<const double> pair) {
  const int n = static_cast<int>(single.size());
  if (pair.size() != static_cast<std::size_t>(n * (n - 1) / 2)) {
    throw ConstructionError("pair parameter count must be N(N-1)/2");
  }
  SmallMatrix m = SmallMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) m(i, i) = single[i];
  std::size_t p = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j, ++p) {
      m(i, i) += pair[p];
      m(j, j) += pair[p];
      m(i, j) -= pair[p];
      m(j, i) -= pair[p];
    }
  }
  return CorrelatedGaussian(m);
}

CorrelatedGaussian CorrelatedGaussian::permuted(std::span<const int> perm) const {
  const int n = n_particles();
  // (P^T A P)(a, b) with P(i, perm[i]) = 1.
  SmallMatrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m(perm[i], perm[j]) = corr_(i, j);
  }
  return CorrelatedGaussian(m);
}

CorrelatedGaussian CorrelatedGaussian::dilated(double f) const {
  return CorrelatedGaussian(SmallMatrix(corr_ * (f * f)));
}

double CorrelatedGaussian::value(const Configuration& x) const {
  double q = 0.0;
  for (int i = 0; i < n_particles(); ++i) {
    for (int j = 0; j < n_particles(); ++j) q += corr_(i, j) * x.row(i).dot(x.row(j));
  }
  return norm_const_ * std::exp(-0.5 * q);
}

double gaussian_inv_radius(double v) { return kSqrt2OverPi / std::sqrt(v); }

double gaussian_mean_radius(double v) { return 2.0 * kSqrt2OverPi * std::sqrt(v); }

double gaussian_radial_tail(double v, double ell) {
  const double z = ell / std::sqrt(v);
  return std::erfc(z / std::numbers::sqrt2) + kSqrt2OverPi * z * std::exp(-0.5 * z * z);
}

double gaussian_radial_inside(double v, double ell) {
  const double z = ell / std::sqrt(v);
  return std::erf(z / std::numbers::sqrt2) - kSqrt2OverPi * z * std::exp(-0.5 * z * z);
}

PairKernel PairKernel::build(const CorrelatedGaussian& a, const CorrelatedGaussian& b) {
  if (a.n_particles() != b.n_particles()) {
    throw ConfigurationError("matrix element between Gaussians of different particle number");
  }
  const int n = a.n_particles();
  const SmallMatrix c = a.corr() + b.corr();
  Eigen::LLT<SmallMatrix> llt(c);
  if (llt.info() != Eigen::Success) throw ConstructionError("sum matrix is not positive definite");
  double log_det_c = 0.0;
  for (int i = 0; i < n; ++i) log_det_c += 2.0 * std::log(llt.matrixL()(i, i));

  PairKernel k;
  k.cov = llt.solve(SmallMatrix::Identity(n, n));
  k.overlap = std::exp(1.5 * (n * std::numbers::ln2 + 0.5 * (a.log_det() + b.log_det()) -
                              log_det_c));
  // sum_i grad_i g_a . grad_i g_b = (A X) . (B X) g_a g_b; <X X^T> = cov.
  k.kinetic = 3.0 * (a.corr() * k.cov * b.corr()).trace() * k.overlap;
  return k;
}

double PairKernel::variance(int i, int j) const {
  if (j < 0) return cov(i, i);
  return cov(i, i) + cov(j, j) - 2.0 * cov(i, j);
}

double PairKernel::inv_distance(int i, int j) const {
  return overlap * gaussian_inv_radius(variance(i, j));
}

double PairKernel::mean_distance(int i, int j) const {
  return overlap * gaussian_mean_radius(variance(i, j));
}

double PairKernel::tail_mass(int i, int j, double ell) const {
  return overlap * gaussian_radial_tail(variance(i, j), ell);
}

double PairKernel::inside_mass(int i, int j, double ell) const {
  return overlap * gaussian_radial_inside(variance(i, j), ell);
}

double overlap(const CorrelatedGaussian& g1, const CorrelatedGaussian& g2) {
  return PairKernel::build(g1, g2).overlap;
}

double kinetic(const CorrelatedGaussian& g1, const CorrelatedGaussian& g2) {
  return PairKernel::build(g1, g2).kinetic;
}

double coulomb_pair(const CorrelatedGaussian& g1, const CorrelatedGaussian& g2, int i, int j) {
  const int n = g1.n_particles();
  if (i == j) throw InvalidPairError("coulomb_pair requires two distinct particles");
  if (i < 0 || j < 0 || i >= n || j >= n) throw InvalidPairError("particle index out of range");
  return PairKernel::build(g1, g2).inv_distance(i, j);
}

double coulomb_nuclear(const CorrelatedGaussian& g1, const CorrelatedGaussian& g2, int i) {
  if (i < 0 || i >= g1.n_particles()) throw InvalidPairError("particle index out of range");
  return PairKernel::build(g1, g2).inv_distance(i);
}

double hartree_tensor(const CorrelatedGaussian& gi, const CorrelatedGaussian& gj,
                      const CorrelatedGaussian& gk, const CorrelatedGaussian& gl) {
  const PairKernel a = PairKernel::build(gi, gj);
  const PairKernel b = PairKernel::build(gk, gl);
  if (gi.n_particles() != gk.n_particles()) {
    throw ConfigurationError("hartree_tensor arguments differ in particle number");
  }
  const int n = gi.n_particles();
  double s = 0.0;
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q < n; ++q) s += gaussian_inv_radius(a.cov(p, p) + b.cov(q, q));
  }
  return a.overlap * b.overlap * s;
}

std::vector<std::vector<int>> all_permutations(int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

BasisSet::BasisSet(int n_particles, Symmetrization sym) : n_particles_(n_particles), sym_(sym) {
  if (n_particles < 1 || n_particles > kMaxParticles) {
    throw ConfigurationError("basis particle number out of range");
  }
  if (sym == Symmetrization::bosonic) {
    perms_ = all_permutations(n_particles);
  } else {
    perms_ = {std::vector<int>(n_particles)};
    std::iota(perms_[0].begin(), perms_[0].end(), 0);
  }
}

BasisSet::BasisSet(int n_particles, Symmetrization sym, std::vector<CorrelatedGaussian> elements)
    : BasisSet(n_particles, sym) {
  for (auto& g : elements) add(std::move(g));
}

void BasisSet::add(CorrelatedGaussian g) {
  if (g.n_particles() != n_particles_) {
    throw ConfigurationError("basis element particle number does not match the basis");
  }
  std::vector<CorrelatedGaussian> images;
  images.reserve(perms_.size());
  for (const auto& p : perms_) images.push_back(g.permuted(p));
  permuted_.push_back(std::move(images));
  elements_.push_back(std::move(g));
}

void BasisSet::truncate(std::size_t size) {
  if (size < elements_.size()) {
    elements_.resize(size, elements_.front());
    permuted_.resize(size);
  }
}

std::vector<PairKernel> BasisSet::pair_kernels(std::size_t k, std::size_t l) const {
  std::vector<PairKernel> out;
  out.reserve(perms_.size());
  for (const auto& img : permuted_[l]) out.push_back(PairKernel::build(elements_[k], img));
  return out;
}

BasisSet BasisSet::dilated(double f) const {
  BasisSet out(n_particles_, sym_);
  for (const auto& g : elements_) out.add(g.dilated(f));
  return out;
}

BasisSet even_tempered(std::size_t count, double a_min, double ratio) {
  BasisSet b(1, Symmetrization::none);
  double a = a_min;
  for (std::size_t k = 0; k < count; ++k, a *= ratio) b.add(CorrelatedGaussian::isotropic(a));
  return b;
}

VariationalState::VariationalState(BasisSet basis, Vector coeffs)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)) {
  gram_ = assemble_overlap(basis_, Exec::serial);
  if (coeffs_.size() != static_cast<Eigen::Index>(basis_.size())) {
    throw ConfigurationError("coefficient count does not match basis size");
  }
  const double n2 = norm2();
  if (!(n2 > 0.0)) throw ConstructionError("state has zero norm");
  coeffs_ /= std::sqrt(n2);
}

VariationalState::VariationalState(BasisSet basis, Vector coeffs, Matrix gram)
    : basis_(std::move(basis)), coeffs_(std::move(coeffs)), gram_(std::move(gram)) {
  if (coeffs_.size() != gram_.rows() ||
      gram_.rows() != static_cast<Eigen::Index>(basis_.size())) {
    throw ConfigurationError("coefficient / Gram size does not match basis size");
  }
  const double n2 = norm2();
  if (!(n2 > 0.0)) throw ConstructionError("state has zero norm");
  coeffs_ /= std::sqrt(n2);
}

double VariationalState::value(const Configuration& x) const {
  double s = 0.0;
  for (std::size_t k = 0; k < basis_.size(); ++k) {
    double gk = 0.0;
    for (const auto& img : basis_.permuted(k)) gk += img.value(x);
    s += coeffs_[k] * gk;
  }
  return s;
}

VariationalState VariationalState::dilated(double f) const {
  BasisSet b = basis_.dilated(f);
  // Normalized primitives stay normalized under dilation, so the Gram matrix
  // and coefficients carry over unchanged.
  return VariationalState(std::move(b), coeffs_, gram_);
}

double pair_tail_mass(const VariationalState& state, double ell) {
  if (ell < 0.0) throw DomainError("pair_tail_mass: negative distance");
  if (state.n_particles() < 2) throw ConfigurationError("pair_tail_mass needs N >= 2");
  return state.expectation(
      assemble_pair_observable(state.basis(), PairObservable::tail_mass, ell, Exec::serial));
}

double pair_inside_mass(const VariationalState& state, double ell) {
  if (ell < 0.0) throw DomainError("pair_inside_mass: negative distance");
  if (state.n_particles() < 2) throw ConfigurationError("pair_inside_mass needs N >= 2");
  return state.expectation(
      assemble_pair_observable(state.basis(), PairObservable::inside_mass, ell, Exec::serial));
}

std::vector<Configuration> sample_configurations(const VariationalState& state, std::size_t n,
                                                 std::uint64_t seed) {
  if (n < 1) throw DomainError("sample_configurations: need n >= 1");
  const BasisSet& basis = state.basis();
  const int np = basis.n_particles();

  // Expand psi into signed primitives c_p g_p.
  std::vector<const CorrelatedGaussian*> prim;
  std::vector<double> coef;
  for (std::size_t k = 0; k < basis.size(); ++k) {
    for (const auto& img : basis.permuted(k)) {
      prim.push_back(&img);
      coef.push_back(state.coeffs()[k]);
    }
  }
  const std::size_t m = prim.size();
  // Row p holds the upper triangle of -A_p / 2 (off-diagonal doubled), so
  // log g_p(X) = log n_p + row_p . triu(X X^T).
  const int tri = np * (np + 1) / 2;
  Matrix quad(static_cast<Eigen::Index>(m), tri);
  Vector log_amp(static_cast<Eigen::Index>(m));
  for (std::size_t p = 0; p < m; ++p) {
    const SmallMatrix& a = prim[p]->corr();
    int t = 0;
    for (int i = 0; i < np; ++i) {
      for (int j = i; j < np; ++j, ++t) {
        quad(static_cast<Eigen::Index>(p), t) = (i == j ? -0.5 : -1.0) * a(i, j);
      }
    }
    log_amp[static_cast<Eigen::Index>(p)] = std::log(prim[p]->norm_const());
  }

  // Proposal: mixture over primitive pairs (p <= q) of normalized Gaussians
  // N(0, (A_p + A_q)^{-1}), weight |c_p c_q| <g_p|g_q> (doubled off-diagonal).
  std::vector<double> weights;
  std::vector<std::pair<std::size_t, std::size_t>> index;
  weights.reserve(m * (m + 1) / 2);
  for (std::size_t q = 0; q < m; ++q) {
    for (std::size_t p = 0; p <= q; ++p) {
      const double w = std::abs(coef[p] * coef[q]) * overlap(*prim[p], *prim[q]);
      weights.push_back(p == q ? w : 2.0 * w);
      index.emplace_back(p, q);
    }
  }
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<std::optional<SmallMatrix>> factor(weights.size());
  const Vector cvec = Eigen::Map<const Vector>(coef.data(), static_cast<Eigen::Index>(m));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;
  std::vector<Configuration> out;
  out.reserve(n);
  std::size_t attempts = 0;
  const std::size_t max_attempts = 100000 * n + 1000000;
  Vector gram(tri);
  while (out.size() < n) {
    if (++attempts > max_attempts) {
      throw ConstructionError("sample_configurations: rejection sampler acceptance too low");
    }
    const std::size_t t = pick(rng);
    if (!factor[t]) {
      const auto [p, q] = index[t];
      const SmallMatrix c = prim[p]->corr() + prim[q]->corr();
      Eigen::LLT<SmallMatrix> llt(c);
      if (llt.info() != Eigen::Success) {
        throw ConstructionError("sample_configurations: degenerate mixture component");
      }
      // X = L^{-T} z has covariance C^{-1}.
      SmallMatrix lt = llt.matrixU();
      factor[t] = lt.inverse();
    }
    Configuration z(np, 3);
    for (int i = 0; i < np; ++i) {
      for (int d = 0; d < 3; ++d) z(i, d) = normal(rng);
    }
    Configuration x = (*factor[t]) * z;
    int g = 0;
    for (int i = 0; i < np; ++i) {
      for (int j = i; j < np; ++j, ++g) gram[g] = x.row(i).dot(x.row(j));
    }
    const Vector v = (log_amp + quad * gram).array().exp().matrix();
    const double signed_sum = cvec.dot(v);
    const double abs_sum = cvec.cwiseAbs().dot(v);
    if (abs_sum <= 0.0) continue;
    const double ratio = signed_sum / abs_sum;
    if (uniform(rng) < ratio * ratio) out.push_back(std::move(x));
  }
  return out;
}

}  // namespace bindlab
