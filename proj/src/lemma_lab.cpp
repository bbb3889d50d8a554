#include "bindlab/lemma_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace bindlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// exact int_ra^rb rho / r for linear rho
double segment_inv(double ra, double rb, double pa, double pb) {
  if (rb <= ra) return 0.0;
  if (ra == 0.0) return pa > 0.0 ? kInf : pb;
  const double x = (rb - ra) / ra;
  const double L = std::log1p(x);
  // x - log1p(x)
  const double rest =
      x < 1e-3 ? x * x * (0.5 - x * (1.0 / 3.0 - x * (0.25 - x * 0.2))) : x - L;
  const double beta = (pb - pa) / (rb - ra);
  return pa * L + beta * ra * rest;
}

struct Params {
  LemmaKind kind;
  double a, b, c, lambda;
};

// LHS - RHS of the hypothesis at ell.
double hypothesis_margin(const RadialDensity& rho, const Params& p, double ell) {
  const double F = rho.mass_below(ell);
  const double G = rho.inv_above(ell);
  if (p.kind == LemmaKind::simple) return p.b / (ell * ell) * F - G;
  const double tail = rho.mass() - F;
  return ((1.0 - p.lambda) * p.a + p.b / (ell * ell)) * F - (p.lambda * p.a * tail + p.c * G);
}

void require_normalized(const RadialDensity& rho) {
  if (std::abs(rho.mass() - 1.0) > kNormalizationTol) {
    std::ostringstream m;
    m.precision(17);
    m << "density is not normalized: integral = " << rho.mass();
    throw NormalizationError(m.str());
  }
}

// given grid, plus density nodes and midpoints inside [ell_c, R]
std::vector<double> hypothesis_grid(const RadialDensity& rho, double ell_c,
                                    const std::vector<double>& ell_grid) {
  std::vector<double> g = ell_grid;
  const double R = rho.support_end();
  const auto& r = rho.grid();
  if (ell_c > 0.0) g.push_back(ell_c);
  for (std::size_t k = 0; k < r.size(); ++k) {
    if (r[k] >= ell_c && r[k] <= R && r[k] > 0.0) g.push_back(r[k]);
    if (k + 1 < r.size()) {
      const double mid = 0.5 * (r[k] + r[k + 1]);
      if (mid >= ell_c && mid <= R && mid > 0.0) g.push_back(mid);
    }
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

LemmaReport run_check(const RadialDensity& rho, const Params& p, double ell_c,
                      const std::vector<double>& ell_grid) {
  LemmaReport rep;
  rep.lemma = to_string(p.kind);
  if (!(p.b > 0.0)) throw ConfigurationError("b must be positive");
  if (!(ell_c >= 0.0)) throw ConfigurationError("ell_c must be non-negative");
  if (p.kind == LemmaKind::general) {
    if (!(p.a >= 0.0)) throw ConfigurationError("a must be non-negative");
    if (!(p.c > 0.0)) throw ConfigurationError("c must be positive");
    if (!(p.lambda > 0.0 && p.lambda <= 1.0)) throw ConfigurationError("lambda must lie in (0, 1]");
  }
  require_normalized(rho);
  for (double l : ell_grid) {
    if (!(l >= ell_c * (1.0 - 1e-12)) || !(l > 0.0)) {
      throw PreconditionError("hypothesis grid must lie in [ell_c, inf) and be positive");
    }
  }
  if (ell_grid.size() < kMinHypothesisGrid) {
    std::ostringstream m;
    m << "hypothesis-grid-too-coarse: " << ell_grid.size() << " points < " << kMinHypothesisGrid;
    rep.warnings.push_back(m.str());
    rep.skipped = true;
    rep.pass = true;
    return rep;
  }

  rep.ell = hypothesis_grid(rho, ell_c, ell_grid);
  rep.hypothesis_margins.resize(rep.ell.size());
  rep.min_hypothesis_margin = kInf;
  for (std::size_t i = 0; i < rep.ell.size(); ++i) {
    const double m = hypothesis_margin(rho, p, rep.ell[i]);
    rep.hypothesis_margins[i] = m;
    if (m < rep.min_hypothesis_margin) {
      rep.min_hypothesis_margin = m;
      rep.min_hypothesis_at = rep.ell[i];
    }
  }
  rep.hypothesis_holds = rep.min_hypothesis_margin >= -kHypothesisTol;
  rep.notes.push_back(
      "for ell >= support end R the hypothesis reads (b/ell^2 [+ (1-lambda) a]) * 1 >= 0, "
      "which always holds");

  const double inv = rho.inv_moment();
  if (p.kind == LemmaKind::simple) {
    rep.conclusion_names = {"inv_moment", "mass_inside"};
    rep.conclusion_values = {inv, rho.mass_below(ell_c)};
    rep.conclusion_bounds = {1.0 / (2.0 * (p.b + ell_c)),
                             ell_c * ell_c / ((p.b + ell_c) * (p.b + ell_c))};
  } else {
    rep.conclusion_names = {"inv_moment"};
    rep.conclusion_values = {inv};
    rep.conclusion_bounds = {p.lambda * p.c / (p.b + 2.0 * p.c * ell_c)};
  }
  bool conclusions_ok = true;
  for (std::size_t i = 0; i < rep.conclusion_values.size(); ++i) {
    const double m = rep.conclusion_values[i] - rep.conclusion_bounds[i];
    rep.conclusion_margins.push_back(std::isnan(m) ? -kInf : m);
    if (!(m >= -kConclusionTol)) conclusions_ok = false;
  }
  rep.pass = !rep.hypothesis_holds || conclusions_ok;
  return rep;
}

}  // namespace

std::string to_string(LemmaKind k) { return k == LemmaKind::simple ? "simple" : "general"; }

RadialDensity::RadialDensity(std::vector<double> grid, std::vector<double> values)
    : r_(std::move(grid)), rho_(std::move(values)) {
  if (r_.size() < 2 || r_.size() != rho_.size()) {
    throw ConfigurationError("density needs at least two nodes and one value per node");
  }
  if (!(r_[0] >= 0.0)) throw ConfigurationError("density grid must start at r >= 0");
  for (std::size_t k = 0; k < r_.size(); ++k) {
    if (!std::isfinite(r_[k]) || (k > 0 && !(r_[k] > r_[k - 1]))) {
      throw ConfigurationError("density grid must be strictly increasing");
    }
    if (!(rho_[k] >= 0.0) || !std::isfinite(rho_[k])) {
      throw ConfigurationError("density values must be finite and non-negative");
    }
  }
  const std::size_t n = r_.size();
  cum_.assign(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    cum_[k] = cum_[k - 1] + 0.5 * (rho_[k - 1] + rho_[k]) * (r_[k] - r_[k - 1]);
  }
  inv_tail_.assign(n, 0.0);
  for (std::size_t k = n - 1; k-- > 0;) {
    inv_tail_[k] = inv_tail_[k + 1] + segment_inv(r_[k], r_[k + 1], rho_[k], rho_[k + 1]);
  }
}

RadialDensity RadialDensity::from_function(const std::function<double(double)>& f, double r_max,
                                           std::size_t n) {
  if (n < 2) throw ConfigurationError("need at least two nodes");
  if (!(r_max > 0.0)) throw ConfigurationError("r_max must be positive");
  std::vector<double> r(n), v(n);
  for (std::size_t k = 0; k < n; ++k) {
    r[k] = r_max * static_cast<double>(k) / static_cast<double>(n - 1);
    v[k] = f(r[k]);
  }
  return RadialDensity(std::move(r), std::move(v)).normalized();
}

RadialDensity RadialDensity::normalized() const {
  const double m = mass();
  if (!(m > 0.0)) throw NormalizationError("cannot normalize a zero density");
  std::vector<double> v = rho_;
  for (auto& x : v) x /= m;
  return RadialDensity(r_, std::move(v));
}

std::size_t RadialDensity::segment(double r) const {
  // k with r_k <= r < r_{k+1}
  const auto it = std::upper_bound(r_.begin(), r_.end(), r);
  return static_cast<std::size_t>(it - r_.begin()) - 1;
}

double RadialDensity::operator()(double r) const {
  if (r < r_.front() || r > r_.back()) return 0.0;
  if (r == r_.back()) return rho_.back();
  const std::size_t k = segment(r);
  const double w = (r - r_[k]) / (r_[k + 1] - r_[k]);
  return (1.0 - w) * rho_[k] + w * rho_[k + 1];
}

double RadialDensity::mass_below(double ell) const {
  if (ell <= r_.front()) return 0.0;
  if (ell >= r_.back()) return cum_.back();
  const std::size_t k = segment(ell);
  return cum_[k] + 0.5 * (rho_[k] + (*this)(ell)) * (ell - r_[k]);
}

double RadialDensity::inv_above(double ell) const {
  if (ell >= r_.back()) return 0.0;
  if (ell <= r_.front()) return inv_tail_.front();
  const std::size_t k = segment(ell);
  return segment_inv(ell, r_[k + 1], (*this)(ell), rho_[k + 1]) + inv_tail_[k + 1];
}

double RadialDensity::inv_moment() const { return inv_tail_.front(); }

double RadialDensity::support_end() const {
  for (std::size_t k = rho_.size(); k-- > 0;) {
    if (rho_[k] > 0.0) return k + 1 < r_.size() ? r_[k + 1] : r_[k];
  }
  return 0.0;
}

double RadialDensity::support_start() const {
  for (std::size_t k = 0; k < rho_.size(); ++k) {
    if (rho_[k] > 0.0) return k > 0 ? r_[k - 1] : r_[k];
  }
  return 0.0;
}

std::vector<double> log_grid(double ell_c, double r_max, std::size_t n) {
  if (n < 2) throw ConfigurationError("grid needs at least two points");
  const double lo = ell_c > 0.0 ? ell_c : 1e-6 * r_max;
  if (!(r_max > lo)) throw ConfigurationError("grid end must exceed its start");
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(r_max);
  for (std::size_t i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * i / (n - 1));
  g.front() = lo;
  g.back() = r_max;
  return g;
}

LemmaReport check_simple(const RadialDensity& rho, double b, double ell_c,
                         const std::vector<double>& ell_grid) {
  return run_check(rho, {LemmaKind::simple, 0.0, b, 1.0, 1.0}, ell_c, ell_grid);
}

LemmaReport check_general(const RadialDensity& rho, double a, double b, double c, double lambda,
                          double ell_c, const std::vector<double>& ell_grid) {
  return run_check(rho, {LemmaKind::general, a, b, c, lambda}, ell_c, ell_grid);
}

namespace {

struct Instance {
  bool feasible = false;
  bool checked = false;  // hypothesis passed
  FalsificationWitness w;
  double rel_margin = kInf;
  double abs_margin = kInf;
  std::string worst_name;
};

Instance make_instance(LemmaKind which, std::uint64_t seed, std::uint64_t k, std::size_t nodes) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const auto log_uniform = [&](double lo, double hi) {
    return std::exp(std::log(lo) + U(rng) * (std::log(hi) - std::log(lo)));
  };

  const double R = log_uniform(2.0, 50.0);
  const int n_comp = 1 + static_cast<int>(U(rng) * 4.0);
  std::vector<double> r(nodes), v(nodes, 0.0);
  for (std::size_t i = 0; i < nodes; ++i) r[i] = R * static_cast<double>(i) / (nodes - 1);
  for (int m = 0; m < n_comp; ++m) {
    const double w = 0.1 + 0.9 * U(rng);
    const int type = static_cast<int>(U(rng) * 4.0);
    if (type == 0) {  // gamma-like
      const int pw = static_cast<int>(U(rng) * 5.0);
      const double s = R * (0.02 + 0.28 * U(rng));
      for (std::size_t i = 0; i < nodes; ++i) v[i] += w * std::pow(r[i] / s, pw) * std::exp(-r[i] / s);
    } else if (type == 1) {  // bump
      const double c = R * U(rng);
      const double s = R * log_uniform(0.002, 0.1);
      for (std::size_t i = 0; i < nodes; ++i) {
        const double z = (r[i] - c) / s;
        v[i] += w * std::exp(-0.5 * z * z);
      }
    } else if (type == 2) {  // box
      double x0 = R * U(rng), x1 = R * U(rng);
      if (x0 > x1) std::swap(x0, x1);
      for (std::size_t i = 0; i < nodes; ++i) v[i] += (r[i] >= x0 && r[i] <= x1) ? w : 0.0;
    } else {  // algebraic decay
      const double s = R * log_uniform(0.01, 0.5);
      const double p = 2.0 + 4.0 * U(rng);
      for (std::size_t i = 0; i < nodes; ++i) v[i] += w / (1.0 + std::pow(r[i] / s, p));
    }
  }

  Instance inst;
  inst.w.instance = k;
  if (!(*std::max_element(v.begin(), v.end()) > 0.0)) return inst;
  const RadialDensity rho = RadialDensity(r, v).normalized();

  Params p{which, 0.0, 0.0, 1.0, 1.0};
  if (which == LemmaKind::general) {
    p.a = U(rng) < 0.2 ? 0.0 : log_uniform(1e-3, 10.0);
    p.c = log_uniform(0.1, 10.0);
    p.lambda = U(rng) < 0.2 ? 1.0 : 0.05 + 0.95 * U(rng);
  }
  const double ell_c = R * log_uniform(0.005, 0.5);
  const double end = std::max(rho.support_end(), 2.0 * ell_c);
  const auto given = log_grid(ell_c, end, 256);
  const auto grid = hypothesis_grid(rho, ell_c, given);

  // smallest b passing on the grid
  double b_min = 1e-12;
  for (double l : grid) {
    const double F = rho.mass_below(l);
    const double G = rho.inv_above(l);
    double need = 0.0;
    if (which == LemmaKind::simple) {
      need = G;
    } else {
      need = p.lambda * p.a * (rho.mass() - F) + p.c * G - (1.0 - p.lambda) * p.a * F;
    }
    if (need <= 0.0) continue;
    if (!(F > 0.0)) return inst;  // no b can work
    b_min = std::max(b_min, need * l * l / F);
  }
  if (b_min > 1e6 * R) return inst;  // only reachable through vanishing inner mass
  const double pick = U(rng);
  p.b = pick < 0.25 ? b_min : b_min * log_uniform(1.0, 10.0);
  inst.feasible = true;
  inst.w.a = p.a;
  inst.w.b = p.b;
  inst.w.c = p.c;
  inst.w.lambda = p.lambda;
  inst.w.ell_c = ell_c;

  const LemmaReport rep = run_check(rho, p, ell_c, given);
  if (rep.skipped || !rep.hypothesis_holds) return inst;
  inst.checked = true;
  for (std::size_t i = 0; i < rep.conclusion_margins.size(); ++i) {
    const double bound = rep.conclusion_bounds[i];
    const double rel = bound > 1e-300 ? rep.conclusion_margins[i] / bound : rep.conclusion_margins[i];
    if (rel < inst.rel_margin) {
      inst.rel_margin = rel;
      inst.worst_name = rep.conclusion_names[i];
    }
    inst.abs_margin = std::min(inst.abs_margin, rep.conclusion_margins[i]);
  }
  return inst;
}

}  // namespace

FalsificationResult falsification_search(LemmaKind which, std::size_t trials, std::uint64_t seed,
                                         std::size_t nodes) {
  if (trials < 1) throw ConfigurationError("trials must be at least 1");
  if (nodes < 16) throw ConfigurationError("need at least 16 density nodes");
  FalsificationResult res;
  res.which = which;
  res.seed = seed;
  res.requested = trials;
  res.worst_margin = kInf;
  std::uint64_t next = 0;
  const std::uint64_t max_attempts = 50 * static_cast<std::uint64_t>(trials) + 1000;
  while (res.passing < trials && next < max_attempts) {
    const std::size_t batch = std::max<std::size_t>(64, (trials - res.passing) * 11 / 10);
    std::vector<Instance> out(batch);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(batch); ++i) {
      out[i] = make_instance(which, seed, next + i, nodes);
    }
    for (std::size_t i = 0; i < batch && res.passing < trials; ++i) {
      ++res.attempts;
      const Instance& inst = out[i];
      if (!inst.checked) continue;
      ++res.passing;
      FalsificationWitness w = inst.w;
      w.margin = inst.rel_margin;
      w.conclusion = inst.worst_name;
      if (inst.abs_margin < -kConclusionTol) {
        ++res.violations;
        if (!res.first_violation) res.first_violation = w;
      }
      if (inst.rel_margin < res.worst_margin) {
        res.worst_margin = inst.rel_margin;
        res.worst = w;
      }
    }
    next += batch;
  }
  return res;
}

RefinementReport refinement_check(const std::function<double(double)>& f, double r_max,
                                  std::size_t n, LemmaKind which, double a, double b, double c,
                                  double lambda, double ell_c, const std::vector<double>& ell_grid) {
  const RadialDensity coarse = RadialDensity::from_function(f, r_max, n);
  const RadialDensity fine = RadialDensity::from_function(f, r_max, 2 * n - 1);
  const Params p{which, a, b, c, lambda};
  RefinementReport rep;
  rep.n_coarse = n;
  rep.n_fine = 2 * n - 1;
  for (double l : ell_grid) {
    rep.max_hypothesis_change =
        std::max(rep.max_hypothesis_change,
                 std::abs(hypothesis_margin(coarse, p, l) - hypothesis_margin(fine, p, l)));
  }
  const auto rc = run_check(coarse, p, ell_c, ell_grid);
  const auto rf = run_check(fine, p, ell_c, ell_grid);
  for (std::size_t i = 0; i < rc.conclusion_margins.size(); ++i) {
    rep.max_conclusion_change = std::max(
        rep.max_conclusion_change, std::abs(rc.conclusion_margins[i] - rf.conclusion_margins[i]));
  }
  return rep;
}

}  // namespace bindlab
