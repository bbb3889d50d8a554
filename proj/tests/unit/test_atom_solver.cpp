#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bindlab/atom_solver.hpp"

using namespace bindlab;
using std::numbers::pi;

TEST_CASE("hydrogen threshold") {
  const auto et = optimize_even_tempered(10);
  CHECK(std::abs(et.energy - kHydrogenEnergy) < 1e-4);
  CHECK(et.energy > kHydrogenEnergy);  // variational
  CHECK(hydrogen_ground(even_tempered(10, et.a_min, et.ratio)) == doctest::Approx(et.energy).epsilon(1e-12));
  const double single = hydrogen_ground(even_tempered(1, hydrogen_single_gaussian_exponent(), 1.0));
  CHECK(std::abs(single + 2.0 / (3.0 * pi)) < 1e-10);
}

TEST_CASE("non-interacting atom energy is twice hydrogen") {
  const auto et = optimize_even_tempered(6);
  BasisSet b(2);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j <= i; ++j) {
      const double e[2] = {et.a_min * std::pow(et.ratio, i), et.a_min * std::pow(et.ratio, j)};
      b.add(CorrelatedGaussian::product(e));
    }
  const auto [e0, st] = solve_atom({0.0, b});
  CHECK(e0 == doctest::Approx(2 * et.energy).epsilon(1e-9));
  const auto [e1, st1] = solve_atom({1.0, b});
  CHECK(e1 > e0);
}

TEST_CASE("serial and parallel atom systems agree exactly") {
  AtomBasisOptions o;
  o.target_size = 10;
  const auto g = optimize_atom_basis(1.0, o);
  const AtomSystem s(g.basis, Exec::serial), p(g.basis, Exec::parallel);
  CHECK(s.solve(1.0).first == p.solve(1.0).first);
}

TEST_CASE("atom energy is concave and non-decreasing in U on a fixed basis") {
  AtomBasisOptions o;
  o.target_size = 20;
  const auto g = optimize_atom_basis(1.0, o);
  const AtomSystem sys(g.basis);
  std::vector<double> e;
  for (double U = 0.8; U < 1.21; U += 0.1) e.push_back(sys.solve(U).first);
  for (std::size_t k = 1; k < e.size(); ++k) CHECK(e[k] >= e[k - 1]);
  for (std::size_t k = 1; k + 1 < e.size(); ++k) CHECK(e[k + 1] - 2 * e[k] + e[k - 1] <= 1e-12);
  CHECK(g.energy < kHydrogenEnergy);
}
