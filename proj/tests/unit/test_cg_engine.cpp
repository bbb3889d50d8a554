#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "bindlab/cg_engine.hpp"
#include "bindlab/kernels.hpp"
#include "oracles.hpp"

using namespace bindlab;
using std::numbers::pi;

namespace {

SmallMatrix to_small(const Eigen::MatrixXd& m) { return m; }

double overlap_oracle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const int n = a.rows();
  return oracle::norm_const(a) * oracle::norm_const(b) *
         std::pow(std::pow(2 * pi, n) / (a + b).determinant(), 1.5);
}

double maxwell_inside(double v, double ell) {
  return oracle::integrate(
      [&](double r) { return 4 * pi * r * r * std::pow(2 * pi * v, -1.5) * std::exp(-r * r / (2 * v)); },
      0.0, ell, 400);
}

}  // namespace

TEST_CASE("single-particle closed forms") {
  const double a = 0.37;
  const auto g = CorrelatedGaussian::isotropic(a);
  CHECK(overlap(g, g) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(kinetic(g, g) == doctest::Approx(3 * a).epsilon(1e-13));
  CHECK(coulomb_nuclear(g, g, 0) == doctest::Approx(std::sqrt(8 * a / pi)).epsilon(1e-13));
  const double b = 1.9;
  const auto h = CorrelatedGaussian::isotropic(b);
  CHECK(overlap(g, h) == doctest::Approx(std::pow(2 * std::sqrt(a * b) / (a + b), 1.5)).epsilon(1e-13));
  // kinetic via the radial integral of grad g . grad h
  const double na = std::pow(2 * a / pi, 0.75), nb = std::pow(2 * b / pi, 0.75);
  const double kin = oracle::integrate(
      [&](double r) {
        return 4 * pi * r * r * na * nb * 4 * a * b * r * r * std::exp(-(a + b) * r * r);
      },
      0.0, 20.0);
  CHECK(kinetic(g, h) == doctest::Approx(kin).epsilon(1e-10));
}

TEST_CASE("overlap matches the Gaussian integral for random N <= 3") {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 30; ++t) {
    const int n = 1 + t % 3;
    const auto a = oracle::random_spd(n, rng), b = oracle::random_spd(n, rng);
    CHECK(overlap(CorrelatedGaussian(to_small(a)), CorrelatedGaussian(to_small(b))) ==
          doctest::Approx(overlap_oracle(a, b)).epsilon(1e-12));
  }
}

TEST_CASE("closed-form matrix elements agree with Monte-Carlo within 3 standard errors") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int t = 0; t < 50; ++t) {
    const int n = 1 + t % 3;
    const auto a = oracle::random_spd(n, rng), b = oracle::random_spd(n, rng);
    const CorrelatedGaussian ga(to_small(a)), gb(to_small(b));
    const double s = overlap_oracle(a, b);
    oracle::GaussianSampler sampler(a + b, 1000 + t);
    const int kind = (t / 3) % 3;
    double closed = 0.0;
    oracle::Estimate est;
    if (kind == 0) {
      closed = kinetic(ga, gb);
      est = oracle::mc_mean(sampler, 40000, [&](const Eigen::MatrixXd& x) {
        return ((a * x).transpose() * (b * x)).trace();
      });
    } else if (kind == 1 && n >= 2) {
      const int i = 0, j = n - 1;
      closed = coulomb_pair(ga, gb, i, j);
      est = oracle::mc_mean(sampler, 40000, [&](const Eigen::MatrixXd& x) {
        return 1.0 / (x.row(i) - x.row(j)).norm();
      });
    } else {
      const int i = n - 1;
      closed = coulomb_nuclear(ga, gb, i);
      est = oracle::mc_mean(sampler, 40000,
                            [&](const Eigen::MatrixXd& x) { return 1.0 / x.row(i).norm(); });
    }
    INFO("trial " << t << " N=" << n << " kind=" << kind);
    CHECK(std::abs(closed - s * est.mean) <= 3 * s * est.stderr_);
    ++checked;
  }
  CHECK(checked == 50);
}

TEST_CASE("overlap by importance sampling from |g_A|^2") {
  std::mt19937_64 rng(5);
  const auto a = oracle::random_spd(3, rng), b = oracle::random_spd(3, rng);
  oracle::GaussianSampler sampler(2 * a, 77);
  const auto est = oracle::mc_mean(sampler, 100000, [&](const Eigen::MatrixXd& x) {
    return oracle::norm_const(b) * oracle::gauss(b, x) / (oracle::norm_const(a) * oracle::gauss(a, x));
  });
  const double closed = overlap(CorrelatedGaussian(to_small(a)), CorrelatedGaussian(to_small(b)));
  CHECK(std::abs(closed - est.mean) <= 3 * est.stderr_);
}

TEST_CASE("Hartree tensor of isotropic Gaussians") {
  const double e[4] = {0.3, 1.1, 0.7, 2.5};
  const auto g0 = CorrelatedGaussian::isotropic(e[0]), g1 = CorrelatedGaussian::isotropic(e[1]);
  const auto g2 = CorrelatedGaussian::isotropic(e[2]), g3 = CorrelatedGaussian::isotropic(e[3]);
  const double v01 = 1.0 / (2 * (e[0] + e[1])), v23 = 1.0 / (2 * (e[2] + e[3]));
  const double expect = overlap(g0, g1) * overlap(g2, g3) * std::sqrt(2.0 / (pi * (v01 + v23)));
  CHECK(hartree_tensor(g0, g1, g2, g3) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(hartree_tensor(g0, g0, g0, g0) == doctest::Approx(2 * std::sqrt(e[0] / pi)).epsilon(1e-12));
}

TEST_CASE("radial Gaussian statistics against quadrature") {
  for (double v : {0.05, 0.7, 3.0}) {
    const auto dens = [&](double r) {
      return 4 * pi * r * r * std::pow(2 * pi * v, -1.5) * std::exp(-r * r / (2 * v));
    };
    const double hi = 20 * std::sqrt(v);
    CHECK(gaussian_inv_radius(v) ==
          doctest::Approx(oracle::integrate([&](double r) { return dens(r) / r; }, 0, hi)).epsilon(1e-10));
    CHECK(gaussian_mean_radius(v) ==
          doctest::Approx(oracle::integrate([&](double r) { return dens(r) * r; }, 0, hi)).epsilon(1e-10));
    const double ell = 1.3 * std::sqrt(v);
    CHECK(gaussian_radial_inside(v, ell) == doctest::Approx(maxwell_inside(v, ell)).epsilon(1e-10));
    CHECK(gaussian_radial_tail(v, ell) + gaussian_radial_inside(v, ell) ==
          doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("construction errors and matrix helpers") {
  SmallMatrix bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  CHECK_THROWS_AS(CorrelatedGaussian{bad}, ConstructionError);
  SmallMatrix asym(2, 2);
  asym << 1.0, 0.1, 0.2, 1.0;
  CHECK_THROWS_AS(CorrelatedGaussian{asym}, ConstructionError);

  const double single[2] = {0.5, 0.8};
  const double pair[1] = {0.3};
  const auto g = CorrelatedGaussian::from_pair_parameters(single, pair);
  CHECK(g.corr()(0, 0) == doctest::Approx(0.8));
  CHECK(g.corr()(0, 1) == doctest::Approx(-0.3));
  CHECK(g.corr()(1, 1) == doctest::Approx(1.1));

  const int swap[2] = {1, 0};
  const auto p = g.permuted(swap);
  CHECK(p.corr()(0, 0) == doctest::Approx(g.corr()(1, 1)));

  // kinetic scales as f^2 under dilation of both functions
  const auto gd = g.dilated(1.7);
  CHECK(kinetic(gd, gd) == doctest::Approx(1.7 * 1.7 * kinetic(g, g)).epsilon(1e-12));
  CHECK(overlap(gd, gd) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("bosonic states are exchange symmetric and normalized") {
  std::mt19937_64 rng(3);
  BasisSet basis(3);
  for (int k = 0; k < 4; ++k) basis.add(CorrelatedGaussian(to_small(oracle::random_spd(3, rng))));
  Vector c(4);
  c << 1.0, -0.4, 0.25, 0.8;
  const VariationalState st(basis, c);
  CHECK(st.norm2() == doctest::Approx(1.0).epsilon(1e-12));
  Configuration x(3, 3);
  x << 0.1, 0.2, -0.3, 0.7, -0.1, 0.4, -0.5, 0.3, 0.2;
  Configuration y = x;
  y.row(0) = x.row(2);
  y.row(2) = x.row(0);
  CHECK(st.value(x) == doctest::Approx(st.value(y)).epsilon(1e-13));
}

TEST_CASE("pair tail and inside masses are complementary and match quadrature") {
  std::mt19937_64 rng(9);
  for (int t = 0; t < 10; ++t) {
    BasisSet basis(2);
    for (int k = 0; k < 3; ++k) basis.add(CorrelatedGaussian(to_small(oracle::random_spd(2, rng))));
    Vector c = Vector::Random(3);
    c[0] += 2.0;
    const VariationalState st(basis, c);
    for (double ell : {0.2, 1.0, 3.5}) {
      CHECK(pair_tail_mass(st, ell) + pair_inside_mass(st, ell) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  // one element, no symmetrization: |x1 - x2| is Maxwell with v = e^T (2A)^{-1} e
  Eigen::MatrixXd a(2, 2);
  a << 1.2, 0.3, 0.3, 0.6;
  const Eigen::Vector2d e(1.0, -1.0);
  const double v = e.dot((2 * a).inverse() * e);
  BasisSet one(2, Symmetrization::none, {CorrelatedGaussian(to_small(a))});
  const VariationalState st(one, Vector::Ones(1));
  CHECK(pair_inside_mass(st, 1.1) == doctest::Approx(maxwell_inside(v, 1.1)).epsilon(1e-10));
}

TEST_CASE("sampling from |psi|^2 reproduces closed-form pair statistics") {
  BasisSet basis(2);
  basis.add(CorrelatedGaussian::product(std::vector<double>{0.4, 0.4}));
  const double single[2] = {0.2, 0.2};
  const double pair[1] = {0.9};
  basis.add(CorrelatedGaussian::from_pair_parameters(single, pair));
  Vector c(2);
  c << 0.6, 0.5;
  const VariationalState st(basis, c);
  const auto xs = sample_configurations(st, 40000, 17);
  double s = 0.0, s2 = 0.0;
  for (const auto& x : xs) {
    const double r = (x.row(0) - x.row(1)).norm();
    s += r;
    s2 += r * r;
  }
  const double m = s / xs.size();
  const double se = std::sqrt((s2 / xs.size() - m * m) / xs.size());
  const Matrix op = assemble_pair_observable(basis, PairObservable::mean_distance);
  CHECK(std::abs(m - st.expectation(op)) <= 3 * se);

  const auto again = sample_configurations(st, 40000, 17);
  for (std::size_t k = 0; k < again.size(); ++k) CHECK(again[k] == xs[k]);
}
