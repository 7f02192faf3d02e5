#pragma once

// Randomized oracle suites shared by the unit tests and the acceptance binary.
// Each suite is deterministic in its seed and reports the worst deviation it saw.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mflq/linops.hpp"
#include "mflq/riccati.hpp"

namespace mflq::oracle {

struct SuiteResult {
  int cases = 0;
  int failures = 0;
  double worst = 0.0;
  std::string first_failure;

  void record(bool ok, double err, const std::string& what) {
    ++cases;
    worst = std::max(worst, std::isfinite(err) ? err : 1e300);
    if (!ok && failures++ == 0) first_failure = what;
  }
  bool pass() const { return failures == 0 && cases > 0; }
};

inline Mat gaussian(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> N(0.0, scale);
  Mat M(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = N(rng);
  return M;
}

inline Mat spd(std::mt19937_64& rng, Eigen::Index n, double floor) {
  const Mat G = gaussian(rng, n, n);
  return G * G.transpose() / static_cast<double>(n) + floor * Mat::Identity(n, n);
}

inline ControlSpec blank_control(int n, int m) {
  ControlSpec s;
  s.n = n;
  s.m1 = m;
  s.A = s.Abar = s.C = s.Cbar = s.Q = s.Qbar = Mat::Zero(n, n);
  s.B = s.Bbar = s.D = s.Dbar = Mat::Zero(n, m);
  s.S = s.Sbar = Mat::Zero(m, n);
  s.R = s.Rbar = Mat::Zero(m, m);
  return s;
}

// Scalar control problems without control noise. Both equations are then quadratics
// with an explicit stabilizing root:
//   b^2/r P^2 - (2a + c^2) P - q = 0,
//   bh^2/rh Ph^2 - 2 ah Ph - (qh + ch^2 P) = 0.
inline SuiteResult scalar_control_suite(int count, double tol, std::uint64_t seed = 101) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0), Pos(0.2, 2.0);
  SuiteResult out;
  for (int k = 0; k < count; ++k) {
    ControlSpec s = blank_control(1, 1);
    const double a = 2 * U(rng), ab = U(rng), c = U(rng), cb = 0.5 * U(rng);
    double b = U(rng) * 2, bb = 0.5 * U(rng);
    if (std::abs(b) < 0.2) b = std::copysign(0.2 + std::abs(b), b);
    if (std::abs(b + bb) < 0.2) bb = -bb;
    const double q = Pos(rng), qb = Pos(rng) - 0.1, r = Pos(rng), rb = 0.5 * Pos(rng);
    s.A(0, 0) = a, s.Abar(0, 0) = ab, s.C(0, 0) = c, s.Cbar(0, 0) = cb;
    s.B(0, 0) = b, s.Bbar(0, 0) = bb;
    s.Q(0, 0) = q, s.Qbar(0, 0) = qb, s.R(0, 0) = r, s.Rbar(0, 0) = rb;

    const double lin = 2 * a + c * c;
    const double P = r * (lin + std::sqrt(lin * lin + 4 * b * b * q / r)) / (2 * b * b);
    const double ah = a + ab, bh = b + bb, ch = c + cb, qh = q + qb, rh = r + rb;
    const double cst = qh + ch * ch * P;
    const double Ph = rh * (2 * ah + std::sqrt(4 * ah * ah + 4 * bh * bh * cst / rh)) / (2 * bh * bh);

    const ControlAreSolution sol = solve_control_are(s);
    double err = 1e300;
    if (sol.status == Status::solved)
      err = std::max(std::abs(sol.P(0, 0) - P), std::abs(sol.Phat(0, 0) - Ph));
    out.record(err <= tol, err, "scalar case " + std::to_string(k));
  }
  return out;
}

// Random stabilizable problems (B square and well conditioned). The finite-horizon value
// from zero terminal data must increase with T and reach the algebraic value by T = 40.
inline SuiteResult finite_horizon_suite(int count, double tol, std::uint64_t seed = 202) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 3);
  const double horizons[] = {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 40.0};
  SuiteResult out;
  for (int k = 0; k < count; ++k) {
    const int n = dim(rng);
    ControlSpec s = blank_control(n, n);
    s.A = gaussian(rng, n, n, 0.6);
    s.Abar = gaussian(rng, n, n, 0.3);
    s.C = gaussian(rng, n, n, 0.3);
    s.Cbar = gaussian(rng, n, n, 0.2);
    s.B = Mat::Identity(n, n) + gaussian(rng, n, n, 0.2);
    s.Bbar = gaussian(rng, n, n, 0.1);
    s.D = gaussian(rng, n, n, 0.2);
    s.Dbar = gaussian(rng, n, n, 0.1);
    s.Q = spd(rng, n, 0.5);
    s.Qbar = spd(rng, n, 0.1);
    s.R = spd(rng, n, 0.5);
    s.Rbar = spd(rng, n, 0.1);
    const Vec x = gaussian(rng, n, 1);

    const std::string tag = "finite-horizon case " + std::to_string(k) + " (n=" + std::to_string(n) + ")";
    const ControlAreSolution sol = solve_control_are(s);
    if (sol.status != Status::solved) {
      out.record(false, 1e300, tag + ": algebraic solve failed");
      continue;
    }
    const double target = x.dot(sol.Phat * x);
    double prev = 0.0, gap = 1e300;
    bool monotone = true, ok = true;
    for (double T : horizons) {
      const FiniteHorizonResult f = finite_horizon_control(s, T);
      ok = ok && f.ok;
      const double v = x.dot(f.Phat * x);
      monotone = monotone && v >= prev - 1e-10 * (1 + std::abs(v));
      prev = v;
      gap = std::abs(v - target);
    }
    out.record(ok && monotone && gap <= tol, gap,
               tag + (ok ? (monotone ? ": gap too large" : ": not monotone") : ": integration failed"));
  }
  return out;
}

// Moore-Penrose identities on random matrices of every rank, conditioned so that the
// retained singular values are at least 1e-3.
inline SuiteResult penrose_suite(int count, double tol, std::uint64_t seed = 303) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 6);
  SuiteResult out;
  for (int k = 0; k < count; ++k) {
    const int r = dim(rng), c = dim(rng);
    const int rank = std::uniform_int_distribution<int>(0, std::min(r, c))(rng);
    Mat A = Mat::Zero(r, c);
    if (rank > 0) {
      const Eigen::HouseholderQR<Mat> qu(gaussian(rng, r, r)), qv(gaussian(rng, c, c));
      const Mat U = qu.householderQ(), V = qv.householderQ();
      Vec sv(rank);
      for (int i = 0; i < rank; ++i) sv(i) = std::pow(10.0, std::uniform_real_distribution<double>(-3, 1)(rng));
      A = U.leftCols(rank) * sv.asDiagonal() * V.leftCols(rank).transpose();
    }
    const PinvResult p = pinv(A);
    const Mat& X = p.pinv;
    const double scale = std::max(1.0, A.norm()) * std::max(1.0, X.norm());
    double err = 0.0;
    err = std::max(err, (A * X * A - A).norm() / std::max(1.0, A.norm()));
    err = std::max(err, (X * A * X - X).norm() / std::max(1.0, X.norm()));
    err = std::max(err, (A * X - (A * X).transpose()).norm());
    err = std::max(err, (X * A - (X * A).transpose()).norm());
    err /= scale;
    out.record(err <= tol && p.rank == rank, err, "penrose case " + std::to_string(k));
  }
  return out;
}

// F X + X F' + G X G' = -W on random operators made stable by a diagonal shift.
inline SuiteResult lyapunov_suite(int count, double tol, std::uint64_t seed = 404) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> dim(1, 5);
  SuiteResult out;
  for (int k = 0; k < count; ++k) {
    const int n = dim(rng);
    const Mat M = gaussian(rng, n, n);
    const Mat G = gaussian(rng, n, n, 0.3);
    // Shift until the full operator is Hurwitz with margin 0.25.
    const Mat L0 = stochastic_operator(M, G);
    const double shift = std::max(0.0, spectral_abscissa(L0) + 0.25) / 2;
    const Mat F = M - shift * Mat::Identity(n, n);
    Mat W = spd(rng, n, 0.1);
    W /= W.norm();
    const Mat X = solve_stochastic_lyapunov(F, G, W, true);
    const double err = (F * X + X * F.transpose() + G * X * G.transpose() + W).norm();
    const Mat Y = solve_lyapunov(F, W);
    const double err2 = (F * Y + Y * F.transpose() + W).norm();
    const double worst = std::max(err, err2);
    out.record(worst <= tol, worst, "lyapunov case " + std::to_string(k));
  }
  return out;
}

}  // namespace mflq::oracle
