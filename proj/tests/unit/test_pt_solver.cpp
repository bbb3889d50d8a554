#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bindlab/pt_solver.hpp"

using namespace bindlab;
using std::numbers::pi;

TEST_CASE("single Gaussian Pekar energy has the closed form 3a - 2 alpha sqrt(a/pi)") {
  for (double a : {0.02, 0.0354, 0.3}) {
    BasisSet b(1);
    b.add(CorrelatedGaussian::isotropic(a));
    const VariationalState st(b, Vector::Ones(1));
    for (double alpha : {1.0, 2.5}) {
      const auto r = evaluate_pt(st, {alpha, 0.0, 1});
      CHECK(r.total == doctest::Approx(3 * a - 2 * alpha * std::sqrt(a / pi)).epsilon(1e-12));
    }
  }
  // optimum a = alpha^2 / (9 pi), E = -alpha^2 / (3 pi)
  BasisSet b(1);
  b.add(CorrelatedGaussian::isotropic(1.0 / (9 * pi)));
  const auto r = scf_solve(b, {1.0, 0.0, 1});
  CHECK(r.report.total == doctest::Approx(-1.0 / (3 * pi)).epsilon(1e-12));
}

TEST_CASE("Pekar energy on an even-tempered basis") {
  const auto r = scf_solve(even_tempered(16, 0.005, 1.8), {1.0, 0.0, 1});
  CHECK(r.report.converged);
  CHECK(r.report.total > -0.1095);
  CHECK(r.report.total < -0.1070);
  // the minimizer satisfies the virial relation 2 T = -A
  CHECK(r.report.kinetic == doctest::Approx(-0.5 * r.report.attraction).epsilon(1e-5));
  CHECK(r.report.multiplier == doctest::Approx(r.report.total + r.report.attraction).epsilon(1e-12));
  for (std::size_t k = 1; k < r.report.history.size(); ++k) {
    CHECK(r.report.history[k] <= r.report.history[k - 1] + 1e-14);
  }
}

TEST_CASE("scaling law E(f alpha, f U) = f^2 E(alpha, U)") {
  const auto r = scf_solve(even_tempered(12, 0.01, 2.0), {1.0, 0.0, 1});
  for (double f : {0.5, 1.0, 4.0}) {
    const auto [e, ef] = rescale_check(r.state, {1.0, 0.0, 1}, f);
    CHECK(std::abs(ef / e - 1.0) < 1e-10);
  }
}

TEST_CASE("two-field energy bounds the functional from above") {
  const auto r = scf_solve(even_tempered(10, 0.01, 2.2), {1.0, 0.0, 1});
  const auto phi = optimal_potential(r.state, 1.0);
  CHECK(phi.recompute_field_energy() == doctest::Approx(phi.field_energy).epsilon(1e-10));
  CHECK(evaluate_two_field(r.state, phi, {1.0, 0.0, 1}) ==
        doctest::Approx(r.report.total).epsilon(1e-10));
  // a mistuned field only raises the two-field value
  CHECK(evaluate_two_field(r.state, phi.scaled(0.8), {1.0, 0.0, 1}) > r.report.total);
}

TEST_CASE("serial and parallel SCF agree exactly") {
  BasisOptions o;
  o.target_size = 8;
  o.seed = 5;
  const auto g = optimize_basis({1.0, 2.0, 2}, o);
  const PtSystem ser(g.basis, Exec::serial), par(g.basis, Exec::parallel);
  const auto a = ser.solve({1.0, 2.0, 2});
  const auto b = par.solve({1.0, 2.0, 2});
  CHECK(a.report.total == b.report.total);
  CHECK(a.report.iterations == b.report.iterations);
}

TEST_CASE("growth is deterministic and non-increasing") {
  BasisOptions o;
  o.target_size = 10;
  o.seed = 3;
  const auto g1 = optimize_basis({1.0, 0.0, 1}, o);
  const auto g2 = optimize_basis({1.0, 0.0, 1}, o);
  CHECK(g1.report.total == g2.report.total);
  for (std::size_t k = 1; k < g1.energies.size(); ++k) CHECK(g1.energies[k] < g1.energies[k - 1]);
}

TEST_CASE("break-up of two polarons is twice the one-polaron energy") {
  BasisOptions o;
  o.target_size = 10;
  ClusterEnergies clusters(1.0, o);
  const auto br = breakup_energy({1.0, 3.0, 2}, clusters);
  CHECK(br.split == 1);
  CHECK(br.energy == doctest::Approx(2 * clusters.solve(1, 3.0).report.total).epsilon(1e-14));
}

TEST_CASE("invalid coupling parameters") {
  CHECK_THROWS_AS((CouplingParams{0.0, 1.0, 2}.validate()), ConfigurationError);
  CHECK_THROWS_AS((CouplingParams{1.0, -1.0, 2}.validate()), ConfigurationError);
  CHECK_THROWS_AS(scf_solve(even_tempered(3, 0.1, 2.0), {1.0, 0.0, 2}), ConfigurationError);
}
