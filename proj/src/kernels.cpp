#include "bindlab/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bindlab {

namespace {

// Fills the symmetric matrix m by evaluating f(k, l) for k <= l. Each entry
// is computed independently, so the parallel path reproduces the serial one
// bit for bit.
template <class F>
void fill_symmetric(Matrix& m, Exec exec, F&& f) {
  const Eigen::Index n = m.rows();
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index l = 0; l < n; ++l) {
      for (Eigen::Index k = 0; k <= l; ++k) m(k, l) = m(l, k) = f(k, l);
    }
  } else {
    for (Eigen::Index l = 0; l < n; ++l) {
      for (Eigen::Index k = 0; k <= l; ++k) m(k, l) = m(l, k) = f(k, l);
    }
  }
}

double pair_quantity(const PairKernel& pk, PairObservable obs, int i, int j, double ell) {
  switch (obs) {
    case PairObservable::inv_distance: return pk.inv_distance(i, j);
    case PairObservable::mean_distance: return pk.mean_distance(i, j);
    case PairObservable::tail_mass: return pk.tail_mass(i, j, ell);
    case PairObservable::inside_mass: return pk.inside_mass(i, j, ell);
  }
  return 0.0;
}

}  // namespace

OperatorEntry operator_entry(const BasisSet& basis, std::size_t k, std::size_t l) {
  const int n = basis.n_particles();
  OperatorEntry e;
  for (const PairKernel& pk : basis.pair_kernels(k, l)) {
    e.overlap += pk.overlap;
    e.kinetic += pk.kinetic;
    for (int i = 0; i < n; ++i) {
      e.nuclear += pk.inv_distance(i);
      for (int j = i + 1; j < n; ++j) e.repulsion += pk.inv_distance(i, j);
    }
  }
  const double mult = basis.multiplicity();
  e.overlap *= mult;
  e.kinetic *= mult;
  e.nuclear *= mult;
  e.repulsion *= mult;
  return e;
}

OperatorMatrices assemble_operators(const BasisSet& basis, Exec exec) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  OperatorMatrices out{Matrix(n, n), Matrix(n, n), Matrix(n, n), Matrix(n, n)};
  const auto body = [&](Eigen::Index k, Eigen::Index l) {
    const OperatorEntry e = operator_entry(basis, k, l);
    out.overlap(k, l) = out.overlap(l, k) = e.overlap;
    out.kinetic(k, l) = out.kinetic(l, k) = e.kinetic;
    out.nuclear(k, l) = out.nuclear(l, k) = e.nuclear;
    out.repulsion(k, l) = out.repulsion(l, k) = e.repulsion;
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (Eigen::Index l = 0; l < n; ++l) {
      for (Eigen::Index k = 0; k <= l; ++k) body(k, l);
    }
  } else {
    for (Eigen::Index l = 0; l < n; ++l) {
      for (Eigen::Index k = 0; k <= l; ++k) body(k, l);
    }
  }
  return out;
}

Matrix assemble_overlap(const BasisSet& basis, Exec exec) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  Matrix m(n, n);
  fill_symmetric(m, exec, [&](Eigen::Index k, Eigen::Index l) {
    double s = 0.0;
    for (const PairKernel& pk : basis.pair_kernels(k, l)) s += pk.overlap;
    return basis.multiplicity() * s;
  });
  return m;
}

Matrix assemble_pair_observable(const BasisSet& basis, PairObservable obs, double ell,
                                Exec exec) {
  const int np = basis.n_particles();
  if (np < 2) throw ConfigurationError("pair observables need N >= 2");
  const auto n = static_cast<Eigen::Index>(basis.size());
  const bool symmetric = basis.symmetrization() == Symmetrization::bosonic;
  const double pairs = 0.5 * np * (np - 1);
  Matrix m(n, n);
  fill_symmetric(m, exec, [&](Eigen::Index k, Eigen::Index l) {
    double s = 0.0;
    for (const PairKernel& pk : basis.pair_kernels(k, l)) {
      if (symmetric) {
        double avg = 0.0;
        for (int i = 0; i < np; ++i) {
          for (int j = i + 1; j < np; ++j) avg += pair_quantity(pk, obs, i, j, ell);
        }
        s += avg / pairs;
      } else {
        s += pair_quantity(pk, obs, 0, 1, ell);
      }
    }
    return basis.multiplicity() * s;
  });
  return m;
}

PairDensity pair_density(const BasisSet& basis, std::size_t k, std::size_t l) {
  const int np = basis.n_particles();
  PairDensity d;
  for (const PairKernel& pk : basis.pair_kernels(k, l)) {
    for (int i = 0; i < np; ++i) {
      d.weight.push_back(basis.multiplicity() * pk.overlap);
      d.variance.push_back(pk.cov(i, i));
    }
  }
  return d;
}

std::vector<PairDensity> assemble_pair_densities(const BasisSet& basis, Exec exec) {
  const std::size_t n = basis.size();
  std::vector<PairDensity> out(packed_count(n));
  const auto count = static_cast<long long>(n);
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long long l = 0; l < count; ++l) {
      for (long long k = 0; k <= l; ++k) out[packed_pair(k, l)] = pair_density(basis, k, l);
    }
  } else {
    for (long long l = 0; l < count; ++l) {
      for (long long k = 0; k <= l; ++k) out[packed_pair(k, l)] = pair_density(basis, k, l);
    }
  }
  return out;
}

double density_coulomb(const PairDensity& a, const PairDensity& b) {
  double s = 0.0;
  for (std::size_t t = 0; t < a.weight.size(); ++t) {
    double inner = 0.0;
    for (std::size_t u = 0; u < b.weight.size(); ++u) {
      inner += b.weight[u] / std::sqrt(a.variance[t] + b.variance[u]);
    }
    s += a.weight[t] * inner;
  }
  return s * gaussian_inv_radius(1.0);
}

Matrix assemble_hartree(const std::vector<PairDensity>& densities, Exec exec) {
  const auto n = static_cast<Eigen::Index>(densities.size());
  Matrix j(n, n);
  fill_symmetric(j, exec, [&](Eigen::Index p, Eigen::Index q) {
    return density_coulomb(densities[p], densities[q]);
  });
  return j;
}

Matrix assemble_hartree_rows(const std::vector<PairDensity>& densities, std::size_t first,
                             Exec exec) {
  const auto n = static_cast<Eigen::Index>(densities.size());
  const auto f = static_cast<Eigen::Index>(first);
  Matrix rows(n - f, n);
  if (exec == Exec::parallel) {
#pragma omp parallel for collapse(2) schedule(static)
    for (Eigen::Index r = 0; r < n - f; ++r) {
      for (Eigen::Index q = 0; q < n; ++q) {
        rows(r, q) = density_coulomb(densities[f + r], densities[q]);
      }
    }
  } else {
    for (Eigen::Index r = 0; r < n - f; ++r) {
      for (Eigen::Index q = 0; q < n; ++q) {
        rows(r, q) = density_coulomb(densities[f + r], densities[q]);
      }
    }
  }
  return rows;
}

}  // namespace bindlab
