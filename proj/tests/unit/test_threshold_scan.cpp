#include <doctest.h>

#include "bindlab/threshold_scan.hpp"

using namespace bindlab;

namespace {

ScanPoint pt(double U, bool bind, bool conv = true) {
  ScanPoint p;
  p.U = U;
  p.binding = bind;
  p.converged = conv;
  return p;
}

ProbeFn step_probe(double uc, int* calls = nullptr) {
  return [=](double U) {
    if (calls) ++*calls;
    Probe p;
    p.U = U;
    p.binding = U < uc;
    p.energy = U < uc ? -1.0 : 0.0;
    return p;
  };
}

}  // namespace

TEST_CASE("bracket from a finished scan") {
  const std::vector<ScanPoint> pts = {pt(1.0, true), pt(1.1, true), pt(1.2, false), pt(1.3, false)};
  const auto b = find_bracket(pts);
  REQUIRE(b);
  CHECK(b->first == 1.1);
  CHECK(b->second == 1.2);
  CHECK_FALSE(find_bracket({pt(1.0, true), pt(1.1, true)}));
  CHECK_FALSE(find_bracket({pt(1.0, false)}));
  // non-converged points do not close a bracket
  const auto c = find_bracket({pt(1.0, true), pt(1.1, false, false), pt(1.2, false)});
  REQUIRE(c);
  CHECK(c->second == 1.2);
}

TEST_CASE("bisection on a step indicator") {
  int calls = 0;
  const auto r = locate_critical(step_probe(1.0977, &calls), {1.05, 1.15}, 0.01);
  CHECK(r.lo <= 1.0977);
  CHECK(r.hi > 1.0977);
  CHECK(r.hi - r.lo <= 0.01);
  CHECK(r.monotone);
  CHECK(calls >= 4);
}

TEST_CASE("bisection preconditions") {
  CHECK_THROWS_AS(locate_critical(step_probe(1.0), {1.05, 1.15}, 0.01), PreconditionError);
  CHECK_THROWS_AS(locate_critical(step_probe(2.0), {1.05, 1.15}, 0.01), PreconditionError);
  CHECK_THROWS_AS(locate_critical(step_probe(1.1), {1.15, 1.05}, 0.01), PreconditionError);
  const ProbeFn bad = [](double U) {
    Probe p;
    p.U = U;
    p.binding = U < 1.1;
    p.converged = false;
    return p;
  };
  CHECK_THROWS_AS(locate_critical(bad, {1.05, 1.15}, 0.01), PreconditionError);
}

TEST_CASE("small atom scan keeps the energy structure") {
  ScanOptions o;
  o.atom.target_size = 20;
  o.growth_per_point = 2;
  o.mc_samples = 500;
  const auto s = scan_atom({0.9, 1.0, 1.1, 1.2, 1.3}, o);
  REQUIRE(s.points.size() == 5);
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    const auto& p = s.points[i];
    CHECK(p.energy <= p.breakup);
    CHECK(p.breakup == kHydrogenEnergy);
    if (i > 0) CHECK(p.energy >= s.points[i - 1].energy);
    if (i > 0 && i + 1 < s.points.size()) {
      CHECK(s.points[i + 1].energy - 2 * p.energy + s.points[i - 1].energy <= 1e-8);
    }
  }
  CHECK(s.points[0].binding);
  CHECK(s.coeffs.size() == s.points.size());
  const auto again = scan_atom({0.9, 1.0, 1.1, 1.2, 1.3}, o);
  for (std::size_t i = 0; i < s.points.size(); ++i) CHECK(again.points[i].energy == s.points[i].energy);
}
