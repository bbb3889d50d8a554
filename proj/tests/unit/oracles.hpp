#pragma once

// Independent reference computations for the unit tests. Nothing here calls
// into the library's closed forms.

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};

// Draws X (N x 3) from the normalized density proportional to
// exp(-1/2 tr(X^T C X)), i.e. each column ~ N(0, C^{-1}).
class GaussianSampler {
 public:
  GaussianSampler(const Eigen::MatrixXd& precision, std::uint64_t seed)
      : n_(precision.rows()), rng_(seed) {
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    // C = L L^T, X = L^{-T} Z
    linv_t_ = llt.matrixU().solve(Eigen::MatrixXd::Identity(n_, n_));
  }

  Eigen::MatrixXd draw() {
    Eigen::MatrixXd z(n_, 3);
    for (Eigen::Index i = 0; i < n_; ++i)
      for (int d = 0; d < 3; ++d) z(i, d) = normal_(rng_);
    return linv_t_ * z;
  }

 private:
  Eigen::Index n_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  Eigen::MatrixXd linv_t_;
};

template <class F>
Estimate mc_mean(GaussianSampler& s, std::size_t n, F&& f) {
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double v = f(s.draw());
    sum += v;
    sum2 += v * v;
  }
  const double m = sum / n;
  const double var = std::max(0.0, sum2 / n - m * m);
  return {m, std::sqrt(var / n)};
}

// Unnormalized g_A(X) = exp(-1/2 tr(X^T A X)).
inline double gauss(const Eigen::MatrixXd& a, const Eigen::MatrixXd& x) {
  return std::exp(-0.5 * (x.transpose() * a * x).trace());
}

inline double norm_const(const Eigen::MatrixXd& a) {
  return std::pow(a.determinant() / std::pow(std::numbers::pi, a.rows()), 0.75);
}

// Composite Gauss-Legendre on [lo, hi].
template <class F>
double integrate(F&& f, double lo, double hi, int panels = 2000) {
  static const double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                              0.9061798459386640};
  static const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                              0.4786286704993665, 0.2369268850561891};
  const double h = (hi - lo) / panels;
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double m = lo + (p + 0.5) * h;
    for (int k = 0; k < 5; ++k) s += w[k] * f(m + 0.5 * h * x[k]);
  }
  return 0.5 * h * s;
}

// Random symmetric positive definite N x N matrix with spectrum in [lo, hi].
inline Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng, double lo = 0.2, double hi = 3.0) {
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(std::log(lo), std::log(hi));
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = nd(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = std::exp(ud(rng));
  const Eigen::MatrixXd a = q * d.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

}  // namespace oracle
