#include "bindlab/localization.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <tuple>

namespace bindlab {

namespace {

constexpr double kPi = std::numbers::pi;

// 4th-order central first derivative.
template <class F>
double d5(const F& f, double x, double h) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}

// 4th-order one-sided; dir = +1 forward, -1 backward.
template <class F>
double d5_one_sided(const F& f, double x, double h, int dir) {
  const double s = dir * h;
  return (-25 * f(x) + 48 * f(x + s) - 36 * f(x + 2 * s) + 16 * f(x + 3 * s) - 3 * f(x + 4 * s)) /
         (12 * s);
}

// sin/cos argument of the transition pieces.
inline double rise(double t, double lo, double hi) { return 0.5 * kPi * (t - lo) / (hi - lo); }

}  // namespace

RadialPartition::RadialPartition(double ell, double b) : ell_(ell), b_(b) {
  if (!(ell > 0.0) || !std::isfinite(ell)) throw DomainError("partition length must be positive");
  if (!(b > 1.0) || !std::isfinite(b)) throw DomainError("partition ratio b must exceed 1");
}

RadialPartition build_radial_partition(double ell, double b) { return RadialPartition(ell, b); }

std::pair<double, double> RadialPartition::support(int j) const {
  if (j < 0) throw DomainError("piece index must be non-negative");
  if (j == 0) return {0.0, ell_};
  return {std::pow(b_, j - 2) * ell_, std::pow(b_, j) * ell_};
}

double RadialPartition::value(int j, double t) const {
  if (j < 0) throw DomainError("piece index must be non-negative");
  const double lo = ell_ / b_;
  if (j == 0) {
    if (t <= lo) return 1.0;
    if (t >= ell_) return 0.0;
    return std::cos(rise(t, lo, ell_));
  }
  const double s = t * std::pow(b_, 1 - j);
  if (s <= lo || s >= b_ * ell_) return 0.0;
  if (s <= ell_) return std::sin(rise(s, lo, ell_));
  return std::cos(rise(s, ell_, b_ * ell_));
}

double RadialPartition::derivative(int j, double t) const {
  if (j < 0) throw DomainError("piece index must be non-negative");
  const double lo = ell_ / b_;
  if (j == 0) {
    if (t < lo || t >= ell_) return 0.0;
    return -std::sin(rise(t, lo, ell_)) * 0.5 * kPi / (ell_ - lo);
  }
  const double scale = std::pow(b_, 1 - j);
  const double s = t * scale;
  if (s < lo || s >= b_ * ell_) return 0.0;
  if (s < ell_) return std::cos(rise(s, lo, ell_)) * 0.5 * kPi / (ell_ - lo) * scale;
  return -std::sin(rise(s, ell_, b_ * ell_)) * 0.5 * kPi / (b_ * ell_ - ell_) * scale;
}

std::pair<int, int> RadialPartition::active(double t) const {
  if (t < ell_) {
    // phi_1 starts at l/b, phi_2 at l
    return {0, t > ell_ / b_ ? 1 : 0};
  }
  const int m = static_cast<int>(std::floor(std::log(t / ell_) / std::log(b_)));
  // t in [b^m l, b^{m+1} l) lives in phi_{m+1}, phi_{m+2}; widen for rounding
  return {std::max(1, m), m + 3};
}

double RadialPartition::sum_of_squares(double t) const {
  const auto [lo, hi] = active(t);
  double s = 0.0;
  for (int j = lo; j <= hi; ++j) {
    const double v = value(j, t);
    s += v * v;
  }
  return s;
}

double RadialPartition::derivative_sum(double t) const {
  const auto [lo, hi] = active(t);
  double s = 0.0;
  for (int j = lo; j <= hi; ++j) {
    const double d = derivative(j, t);
    s += d * d;
  }
  return s;
}

double RadialPartition::derivative_sum_fd(double t) const {
  const double h = 1e-5 * t;
  // nearest kink b^m l, m >= -1
  const double m = std::round(std::log(t / ell_) / std::log(b_));
  const double kink = std::pow(b_, std::max(m, -1.0)) * ell_;
  const bool near_kink = std::abs(t - kink) < 2.5 * h;
  const int dir = t >= kink ? 1 : -1;
  const auto [lo, hi] = active(t);
  double s = 0.0;
  for (int j = std::max(0, lo - 1); j <= hi + 1; ++j) {
    const auto f = [this, j](double x) { return value(j, x); };
    const double d = near_kink ? d5_one_sided(f, t, h, dir) : d5(f, t, h);
    s += d * d;
  }
  return s;
}

double RadialPartition::localization_bound(double t) const {
  const double base = kPi * kPi / (4.0 * (ell_ - ell_ / b_) * (ell_ - ell_ / b_));
  if (t < 0.0) throw DomainError("distance must be non-negative");
  const double m = t > 0.0 ? std::log(t / ell_) / std::log(b_) : -1.0;
  // largest j with b^{j-2} l <= t, i.e. j <= m + 2
  int j = static_cast<int>(std::floor(m + 2.0 + 1e-12));
  while (j >= 1 && support(j).first > t) --j;
  if (j >= 1 && t <= support(j).second) return base * std::pow(b_, 2.0 * (1 - j));
  return base;  // only phi_0 applies
}

SumToOneReport check_sum_to_one(const RadialPartition& p, std::size_t points) {
  SumToOneReport r;
  r.points = points;
  const double lo = std::log(1e-3 * p.ell());
  const double hi = std::log(std::pow(p.b(), 20) * p.ell());
  for (std::size_t i = 0; i < points; ++i) {
    const double t =
        points == 1 ? std::exp(lo) : std::exp(lo + (hi - lo) * static_cast<double>(i) / (points - 1));
    const double dev = std::abs(p.sum_of_squares(t) - 1.0);
    if (dev > r.max_deviation) {
      r.max_deviation = dev;
      r.witness = t;
    }
  }
  return r;
}

LocalizationReport check_localization_bound(const RadialPartition& p, std::size_t points,
                                            double t_min, double t_max) {
  if (points < 2) throw ConfigurationError("need at least two test points");
  LocalizationReport r;
  r.points = points;
  r.worst_slack = std::numeric_limits<double>::infinity();
  const double lo = std::log(t_min * p.ell());
  const double hi = std::log(t_max * p.ell());
  std::vector<double> slack(points), err(points), ts(points);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(points); ++i) {
    const double t = std::exp(lo + (hi - lo) * static_cast<double>(i) / (points - 1));
    ts[i] = t;
    err[i] = p.derivative_sum_fd(t);
    slack[i] = p.localization_bound(t) - err[i];
  }
  for (std::size_t i = 0; i < points; ++i) {
    r.max_error = std::max(r.max_error, err[i]);
    if (slack[i] < r.worst_slack) {
      r.worst_slack = slack[i];
      r.witness = ts[i];
    }
  }
  r.ok = r.worst_slack >= -1e-9;
  return r;
}

double ball_cutoff(double r) {
  r = std::abs(r);
  if (r >= 1.0) return 0.0;
  const double c = 1.0 / std::sqrt(2.0 * kPi);
  if (r < 1e-4) {
    const double x2 = kPi * kPi * r * r;
    return c * kPi * (1.0 - x2 / 6.0 + x2 * x2 / 120.0);
  }
  return c * std::sin(kPi * r) / r;
}

double ball_cutoff_derivative(double r) {
  r = std::abs(r);
  if (r >= 1.0) return 0.0;
  const double c = 1.0 / std::sqrt(2.0 * kPi);
  if (r < 1e-3) {
    const double p3 = kPi * kPi * kPi;
    return c * (-p3 * r / 3.0 + p3 * kPi * kPi * r * r * r / 30.0);
  }
  return c * (kPi * r * std::cos(kPi * r) - std::sin(kPi * r)) / (r * r);
}

BallCutoffReport check_ball_cutoff() {
  using boost::math::quadrature::gauss_kronrod;
  BallCutoffReport rep;
  rep.norm = gauss_kronrod<double, 61>::integrate(
      [](double r) {
        const double x = ball_cutoff(r);
        return 4.0 * kPi * r * r * x * x;
      },
      0.0, 1.0, 15, 1e-14);
  rep.grad_norm = gauss_kronrod<double, 61>::integrate(
      [](double r) {
        const double x = ball_cutoff_derivative(r);
        return 4.0 * kPi * r * r * x * x;
      },
      0.0, 1.0, 15, 1e-14);
  rep.at_origin = ball_cutoff(0.0);
  return rep;
}

ConstantsReport compute_constants(double alpha, double eps, double delta, double b,
                                  int n_particles) {
  if (!(alpha > 0.0)) throw ConfigurationError("alpha must be positive");
  if (!(eps > 0.0)) throw ConfigurationError("eps must be positive");
  if (!(b > 1.0)) throw ConfigurationError("b must exceed 1");
  if (!(delta > 0.0)) throw ConfigurationError("delta must be positive");
  if (n_particles < 2) throw ConfigurationError("constants need at least two particles");
  const double N = n_particles;
  const double nm1 = N - 1.0;

  ConstantsReport rep;
  rep.alpha = alpha;
  rep.eps = eps;
  rep.delta = delta;
  rep.b = b;
  rep.n_particles = n_particles;
  rep.d_lo = 1.0 / (b * b) - 2.0 * delta * N / nm1;
  rep.d_hi = nm1;
  rep.L_over_ell = delta / nm1;

  const double delta_max = eps / (b * b) / (4.0 + 2.0 * eps * N / nm1);
  if (!(rep.d_lo > 0.0)) {
    std::ostringstream m;
    m << "delta too large: the interval [b^-2 - 2 delta N/(N-1), N-1] reaches d <= 0; need delta < "
      << delta_max;
    throw ConfigurationError(m.str());
  }

  const auto f = [eps, delta](double d) { return -1.0 / d + (1.0 + eps) / (d + 4.0 * delta); };
  // grid, then Brent around the best grid cell
  constexpr int n_grid = 4001;
  int best = 0;
  double fbest = std::numeric_limits<double>::infinity();
  const auto at = [&](int i) { return rep.d_lo + (rep.d_hi - rep.d_lo) * i / (n_grid - 1); };
  for (int i = 0; i < n_grid; ++i) {
    const double v = f(at(i));
    if (v < fbest) {
      fbest = v;
      best = i;
    }
  }
  double dmin = at(best);
  if (best > 0 && best < n_grid - 1) {
    const auto r = boost::math::tools::brent_find_minima(f, at(best - 1), at(best + 1), 52);
    if (r.second < fbest) {
      fbest = r.second;
      dmin = r.first;
    }
  }
  // endpoints are exact candidates
  for (double d : {rep.d_lo, rep.d_hi}) {
    if (f(d) <= fbest) {
      fbest = f(d);
      dmin = d;
    }
  }
  rep.kappa = fbest;
  rep.kappa_argmin = dmin;
  if (!(rep.kappa > 0.0)) {
    std::ostringstream m;
    m << "delta too large: kappa = " << rep.kappa << " <= 0 (at d = " << dmin
      << "); positivity needs delta < d eps / 4 at the left endpoint, i.e. delta < " << delta_max;
    throw ConfigurationError(m.str());
  }

  const double pi2 = kPi * kPi;
  const double head = b / (4.0 * (1.0 - 1.0 / b) * (1.0 - 1.0 / b));
  const double pre = pi2 / (alpha * rep.kappa * nm1 * nm1);
  rep.ell_c = pre * (head + N / (2.0 * b * delta * delta));
  rep.ell_c_rederived = pre * (head + N * nm1 * nm1 / (2.0 * b * delta * delta));
  return rep;
}

Step2Report check_step2(const ConstantsReport& c, double ell, int j_max, std::size_t d_points) {
  if (!(ell > 0.0)) throw ConfigurationError("ell must be positive");
  if (d_points < 2) throw ConfigurationError("need at least two d points");
  const double N = c.n_particles;
  const double nm1 = N - 1.0;
  const double L = c.delta * ell / nm1;
  const double b = c.b;
  const double pi2 = kPi * kPi;
  Step2Report rep;
  rep.ell = ell;
  rep.j_max = j_max;
  rep.d_points = d_points;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  for (int j = 1; j <= j_max; ++j) {
    const double bj = std::pow(b, j);
    const double lo = (std::pow(b, j - 2) * ell - 2.0 * N * bj * L) / nm1;
    const double hi = ell * bj;
    double mn = std::numeric_limits<double>::infinity();
    double arg = lo;
    for (std::size_t k = 0; k < d_points; ++k) {
      const double d = k + 1 == d_points ? hi : lo + (hi - lo) * k / (d_points - 1);
      const double g = -2.0 * c.alpha / d + 2.0 * c.alpha * (1.0 + c.eps) / (d + 4.0 * bj * L);
      if (g < mn) {
        mn = g;
        arg = d;
      }
    }
    const double penalty =
        (b * b * pi2 / (2.0 * (ell - ell / b) * (ell - ell / b)) + N * pi2 / (L * L)) / (bj * bj);
    const double slack = (nm1 * mn - penalty) / penalty;
    if (slack < rep.worst_slack) {
      rep.worst_slack = slack;
      rep.worst_j = j;
      rep.worst_d = arg;
    }
  }
  rep.ok = rep.worst_slack >= -1e-10;
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

// (cos theta, sin theta), theta = pi/2 sin^2(pi tau / 2), exact at the ends.
inline std::pair<double, double> step(double tau) {
  if (tau <= 0.0) return {1.0, 0.0};
  if (tau >= 1.0) return {0.0, 1.0};
  const double s = std::sin(0.5 * kPi * tau);
  const double th = 0.5 * kPi * s * s;
  return {std::cos(th), std::sin(th)};
}

struct Shape {
  double r1, r2, s, r12;
};

inline Shape shape(const std::array<double, 6>& x) {
  const double r1 = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  const double r2 = std::sqrt(x[3] * x[3] + x[4] * x[4] + x[5] * x[5]);
  const double dx = x[0] - x[3], dy = x[1] - x[4], dz = x[2] - x[5];
  return {r1, r2, std::max(r1, r2), std::sqrt(dx * dx + dy * dy + dz * dz)};
}

inline std::array<double, 6> swapped(const std::array<double, 6>& x) {
  return {x[3], x[4], x[5], x[0], x[1], x[2]};
}

}  // namespace

HeliumPartition::HeliumPartition(double ell, double eps) : ell_(ell), eps_(eps) {
  if (!(ell > 0.0) || !std::isfinite(ell)) throw DomainError("partition length must be positive");
  if (!(eps > 0.0 && eps < 0.5)) throw DomainError("eps must lie in (0, 1/2)");
}

HeliumPartition build_helium_partition(double ell, double eps) { return HeliumPartition(ell, eps); }

std::array<double, 4> HeliumPartition::values(const std::array<double, 6>& x) const {
  const Shape sh = shape(x);
  const auto [A, B] = step((sh.s - 0.5 * ell_) / (0.5 * ell_));
  if (B == 0.0) return {A, 0.0, 0.0, 0.0};
  const double u = sh.r12 > 0.0 ? sh.s / sh.r12 : std::numeric_limits<double>::infinity();
  const auto [P, Q] = step((u - (1.0 - 2.0 * eps_)) / eps_);
  double cv = 1.0, sv = 0.0;
  if (Q != 0.0) {
    const double lg = std::log1p(eps_);
    // v = r1 / r2; r2 > 0 since s >= l/2
    const double tau_v = sh.r1 > 0.0 && sh.r2 > 0.0
                             ? (std::log(sh.r1 / sh.r2) + lg) / (2.0 * lg)
                             : (sh.r1 > 0.0 ? 1.0 : 0.0);
    std::tie(cv, sv) = step(tau_v);
  }
  return {A, B * P, B * Q * cv, B * Q * sv};
}

double HeliumPartition::gradient_sum(const std::array<double, 6>& x) const {
  const double h = 1e-5 * std::max(shape(x).s, 1e-300);
  std::array<double, 4> g2{};
  for (int k = 0; k < 6; ++k) {
    std::array<std::array<double, 4>, 4> v;
    const double off[4] = {-2 * h, -h, h, 2 * h};
    for (int m = 0; m < 4; ++m) {
      auto y = x;
      y[k] += off[m];
      v[m] = values(y);
    }
    for (int j = 0; j < 4; ++j) {
      const double d = (v[0][j] - 8 * v[1][j] + 8 * v[2][j] - v[3][j]) / (12 * h);
      g2[j] += d * d;
    }
  }
  return g2[0] + g2[1] + g2[2] + g2[3];
}

std::array<bool, 4> HeliumPartition::allowed(const std::array<double, 6>& x) const {
  const Shape sh = shape(x);
  const double tol = 1e-12 * std::max(1.0, sh.s);
  const bool outer = sh.s >= 0.5 * ell_ - tol;
  return {
      sh.s <= ell_ + tol,
      outer && sh.s <= (1.0 - eps_) * sh.r12 + tol,
      outer && sh.s >= (1.0 - 2.0 * eps_) * sh.r12 - tol && sh.r1 <= (1.0 + eps_) * sh.r2 + tol,
      outer && sh.s >= (1.0 - 2.0 * eps_) * sh.r12 - tol && sh.r2 <= (1.0 + eps_) * sh.r1 + tol,
  };
}

HeliumReport check_helium_partition(const HeliumPartition& hp, std::size_t n_samples,
                                    std::uint64_t seed) {
  const double ell = hp.ell();
  const double eps = hp.eps();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;

  const auto direction = [&]() {
    std::array<double, 3> d;
    double n = 0.0;
    do {
      for (auto& c : d) c = normal(rng);
      n = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    } while (n < 1e-12);
    for (auto& c : d) c /= n;
    return d;
  };

  // Configurations in units of ell; several generators target the
  // transition zones in s, u and v.
  HeliumReport rep;
  std::vector<std::array<double, 6>> xs;
  xs.reserve(n_samples);
  while (xs.size() < n_samples) {
    const int kind = static_cast<int>(xs.size() % 4);
    std::array<double, 6> x{};
    const double r1 = std::exp(std::log(0.05) + uniform(rng) * std::log(40.0));  // [0.05, 2]
    const auto e1 = direction();
    double r2 = 0.0;
    std::array<double, 3> e2{};
    switch (kind) {
      case 0:  // independent radii and directions
        r2 = std::exp(std::log(0.05) + uniform(rng) * std::log(40.0));
        e2 = direction();
        break;
      case 1:  // |x1| ~ |x2|
        r2 = r1 * std::exp(2.0 * std::log1p(eps) * (2.0 * uniform(rng) - 1.0));
        e2 = direction();
        break;
      case 2: {  // u near its transition: |x1 - x2| ~ s / (1 - 1.5 eps)
        r2 = r1 * std::exp(0.3 * (2.0 * uniform(rng) - 1.0));
        const double s = std::max(r1, r2);
        const double target = s / (1.0 - eps * (0.5 + 2.0 * uniform(rng)));
        // angle between x1 and x2 from the law of cosines, clamped
        double c = (r1 * r1 + r2 * r2 - target * target) / (2.0 * r1 * r2);
        c = std::clamp(c, -1.0, 1.0);
        const auto w = direction();
        // orthonormal complement of e1
        const double dot = w[0] * e1[0] + w[1] * e1[1] + w[2] * e1[2];
        std::array<double, 3> p{w[0] - dot * e1[0], w[1] - dot * e1[1], w[2] - dot * e1[2]};
        const double pn = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        for (auto& q : p) q /= pn;
        const double sn = std::sqrt(1.0 - c * c);
        for (int i = 0; i < 3; ++i) e2[i] = c * e1[i] + sn * p[i];
        break;
      }
      default: {  // x2 close to x1
        r2 = r1 * std::exp(0.1 * (2.0 * uniform(rng) - 1.0));
        e2 = e1;
        const auto w = direction();
        for (int i = 0; i < 3; ++i) e2[i] += 0.05 * uniform(rng) * w[i];
        const double n = std::sqrt(e2[0] * e2[0] + e2[1] * e2[1] + e2[2] * e2[2]);
        for (auto& q : e2) q /= n;
        break;
      }
    }
    for (int i = 0; i < 3; ++i) {
      x[i] = ell * r1 * e1[i];
      x[3 + i] = ell * r2 * e2[i];
    }
    const Shape sh = shape(x);
    // stay clear of the non-smooth set |x1| = |x2| (max) and x1 = x2
    if (std::abs(sh.r1 - sh.r2) < 1e-3 * sh.s || sh.r12 < 1e-3 * sh.s) {
      ++rep.rejected_ties;
      continue;
    }
    xs.push_back(x);
  }
  rep.samples = xs.size();

  std::vector<double> dev(xs.size()), inner(xs.size()), outer(xs.size());
  std::vector<int> support_bad(xs.size()), sym_bad(xs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(xs.size()); ++i) {
    const auto& x = xs[i];
    const auto v = hp.values(x);
    dev[i] = std::abs(v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3] - 1.0);
    const auto ok = hp.allowed(x);
    support_bad[i] = 0;
    for (int j = 0; j < 4; ++j) {
      if (v[j] != 0.0 && !ok[j]) support_bad[i] = 1;
    }
    const auto w = hp.values(swapped(x));
    sym_bad[i] = (std::abs(v[0] - w[0]) > 1e-12 || std::abs(v[1] - w[1]) > 1e-12 ||
                  std::abs(v[2] - w[3]) > 1e-12 || std::abs(v[3] - w[2]) > 1e-12)
                     ? 1
                     : 0;
    const double g = hp.gradient_sum(x);
    const double s = shape(x).s;
    inner[i] = v[0] != 0.0 ? g * ell * ell : 0.0;
    outer[i] = (v[1] != 0.0 || v[2] != 0.0 || v[3] != 0.0) ? g * ell * s : 0.0;
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    rep.max_sum_deviation = std::max(rep.max_sum_deviation, dev[i]);
    rep.support_violations += support_bad[i];
    rep.symmetry_violations += sym_bad[i];
    if (support_bad[i] && !rep.witness) rep.witness = xs[i];
    rep.c_inner = std::max(rep.c_inner, inner[i]);
    rep.c_outer = std::max(rep.c_outer, outer[i]);
  }
  rep.c_eps = std::max(rep.c_inner, rep.c_outer);
  if (!rep.witness && !xs.empty() && rep.max_sum_deviation > 1e-12) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (dev[i] == rep.max_sum_deviation) {
        rep.witness = xs[i];
        break;
      }
    }
  }
  rep.ok = rep.max_sum_deviation <= 1e-12 && rep.support_violations == 0 &&
           rep.symmetry_violations == 0;
  return rep;
}

ImsReport verify_ims_radial(const RadialPartition& p, int n_particles, std::size_t n_samples,
                            std::uint64_t seed) {
  if (n_particles < 2) throw ConfigurationError("IMS identity needs at least two particles");
  const int n = n_particles;
  const double ell = p.ell();
  const double b = p.b();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;

  const auto tmax = [n](const std::vector<double>& X, double* second = nullptr) {
    double best = 0.0, next = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double dx = X[3 * i] - X[3 * j], dy = X[3 * i + 1] - X[3 * j + 1],
                     dz = X[3 * i + 2] - X[3 * j + 2];
        const double d = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (d > best) {
          next = best;
          best = d;
        } else if (d > next) {
          next = d;
        }
      }
    }
    if (second) *second = next;
    return best;
  };

  ImsReport rep;
  std::vector<std::vector<double>> xs;
  while (xs.size() < n_samples) {
    // spread t over about [l/(2b), b^4 l]
    const double scale = ell * std::exp(std::log(0.5 / b) + uniform(rng) * std::log(2.0 * b * b * b * b * b));
    std::vector<double> X(3 * n);
    for (auto& c : X) c = scale * normal(rng);
    double second = 0.0;
    const double t = tmax(X, &second);
    const double h = 1e-5 * t;
    const double m = std::round(std::log(t / ell) / std::log(b));
    const double kink = std::pow(b, std::max(m, -1.0)) * ell;
    if (n > 2 && t - second < 10.0 * h) {
      ++rep.rejected;
      continue;
    }
    if (std::abs(t - kink) < 4.0 * h) {
      ++rep.rejected;
      continue;
    }
    xs.push_back(std::move(X));
  }
  rep.samples = xs.size();

  std::vector<double> err(xs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(xs.size()); ++s) {
    const auto& X = xs[s];
    const double t = tmax(X);
    const double h = 1e-5 * t;
    const auto [lo, hi] = p.active(t);
    double fd = 0.0;
    for (int k = std::max(0, lo - 1); k <= hi + 1; ++k) {
      for (int c = 0; c < 3 * n; ++c) {
        const auto f = [&](double xc) {
          auto Y = X;
          Y[c] = xc;
          return p.value(k, tmax(Y));
        };
        const double d = d5(f, X[c], h);
        fd += d * d;
      }
    }
    const double exact = 2.0 * p.derivative_sum(t);
    const double scale = exact > 0.0 ? exact : 2.0 * p.localization_bound(t);
    err[s] = std::abs(fd - exact) / scale;
  }
  for (std::size_t s = 0; s < xs.size(); ++s) {
    if (err[s] > rep.max_rel_error) {
      rep.max_rel_error = err[s];
      rep.witness = xs[s];
    }
  }
  rep.ok = rep.max_rel_error <= 1e-6;
  return rep;
}

}  // namespace bindlab
