#include <doctest.h>

#include <random>
#include <sstream>

#include "bindlab/basis_io.hpp"
#include "oracles.hpp"

using namespace bindlab;

namespace {

BasisSet random_basis(int n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  BasisSet b(n);
  for (std::size_t i = 0; i < k; ++i) b.add(CorrelatedGaussian(SmallMatrix(oracle::random_spd(n, rng))));
  return b;
}

std::string saved(const BasisSet& b, const std::vector<Vector>& c = {}) {
  std::ostringstream os;
  write_basis(os, b, c);
  return os.str();
}

int error_line(const std::string& text) {
  std::istringstream is(text);
  try {
    read_basis(is);
  } catch (const BasisFormatError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("round trip of a 40-element two-particle basis is exact") {
  const auto b = random_basis(2, 40, 4);
  std::vector<Vector> c = {Vector::Random(40), Vector::Random(40)};
  std::istringstream is(saved(b, c));
  const auto back = read_basis(is);
  REQUIRE(back.basis.size() == 40);
  CHECK(back.basis.n_particles() == 2);
  CHECK(back.basis.symmetrization() == Symmetrization::bosonic);
  for (std::size_t k = 0; k < 40; ++k) CHECK(back.basis[k].corr() == b[k].corr());
  REQUIRE(back.coeffs.size() == 2);
  CHECK(back.coeffs[0] == c[0]);
  CHECK(back.coeffs[1] == c[1]);
  CHECK(saved(back.basis, back.coeffs) == saved(b, c));
}

TEST_CASE("comments and blank lines are ignored") {
  std::string t = "# saved basis\n\n" + saved(random_basis(1, 2, 1)) + "# end\n";
  std::istringstream is(t);
  CHECK(read_basis(is).basis.size() == 2);
}

TEST_CASE("corrupted files report the offending line") {
  const std::string good = saved(random_basis(2, 3, 2));
  auto replace_line = [&](int line, const std::string& with) {
    std::istringstream is(good);
    std::ostringstream os;
    std::string s;
    for (int k = 1; std::getline(is, s); ++k) os << (k == line ? with : s) << "\n";
    return os.str();
  };
  CHECK(error_line(replace_line(1, "bindlab-basis 2")) == 1);
  CHECK(error_line(replace_line(6, "1 0 0 x")) == 6);
  CHECK(error_line(replace_line(5, "1 0 0")) == 5);
  CHECK(error_line(replace_line(7, "1 2 2 1")) == 7);  // not positive definite
  CHECK(error_line(replace_line(3, "symmetrization odd")) == 3);
  CHECK(error_line(good + "junk\n") == 9);
  CHECK(error_line("bindlab-basis 1\nn_particles 2\n") == 3);
  CHECK_THROWS_AS(load_basis("/nonexistent/basis.txt"), ConfigurationError);
}
