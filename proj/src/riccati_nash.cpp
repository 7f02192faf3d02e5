#include <Eigen/SVD>
#include <algorithm>
#include <functional>

#include "riccati_internal.hpp"

namespace mflq {

namespace {

constexpr double kSingularCond = 1e12;

double condition(const Mat& M) {
  Eigen::JacobiSVD<Mat> svd(M);
  const Vec& s = svd.singularValues();
  if (s.size() == 0) return 1.0;
  return s(s.size() - 1) > 0 ? s(0) / s(s.size() - 1) : INFINITY;
}

// Quadruple (P1, P2, P1hat, P2hat) flattened column-major for the Newton fallback.
struct Quad {
  std::array<Mat, 4> M;
  Vec flat() const {
    const Eigen::Index k = M[0].size();
    Vec v(4 * k);
    for (int i = 0; i < 4; ++i) v.segment(i * k, k) = Eigen::Map<const Vec>(M[i].data(), k);
    return v;
  }
  static Quad from(const Vec& v, Eigen::Index n) {
    Quad q;
    for (int i = 0; i < 4; ++i) q.M[i] = Eigen::Map<const Mat>(v.data() + i * n * n, n, n);
    return q;
  }
};

// Finite-difference Newton with backtracking on ||F||. Used when a fixed-point
// iteration stalls.
Vec fd_newton(const std::function<Vec(const Vec&)>& F, Vec x, int max_iter, double tol, int& iters) {
  Vec f = F(x);
  for (int it = 0; it < max_iter && f.norm() > tol; ++it, ++iters) {
    Mat J(f.size(), x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      const double h = 1e-7 * (1.0 + std::abs(x(j)));
      Vec xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      J.col(j) = (F(xp) - F(xm)) / (2 * h);
    }
    const Vec dx = J.completeOrthogonalDecomposition().solve(-f);
    bool moved = false;
    for (double a = 1.0; a > 1e-4; a *= 0.5) {
      const Vec xn = x + a * dx;
      const Vec fn = F(xn);
      if (fn.allFinite() && fn.norm() < f.norm()) {
        x = xn;
        f = fn;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return x;
}

struct OpenLoopGains {
  StackedBlocks blk, hblk;
  Mat Theta, ThetaBar;
  bool singular = false;
};

OpenLoopGains open_loop_gains(const GameSpec& g, const Quad& q) {
  OpenLoopGains r;
  r.blk = stacked_blocks(g, q.M[0], q.M[1]);
  r.hblk = stacked_hat_blocks(g, q.M[0], q.M[1], q.M[2], q.M[3]);
  r.singular = condition(r.blk.Sigma) > kSingularCond || condition(r.hblk.Sigma) > kSingularCond;
  if (r.singular) return r;
  r.Theta = -r.blk.Sigma.fullPivLu().solve(r.blk.K);
  r.ThetaBar = -r.hblk.Sigma.fullPivLu().solve(r.hblk.K);
  return r;
}

// Left-hand sides of the open-loop system with the stacked gains substituted.
std::array<Mat, 4> open_loop_equations(const GameSpec& g, const Quad& q, const Mat& Th, const Mat& Tb) {
  const HatCoefficients h = hat(g);
  std::array<Mat, 4> E;
  for (int i = 0; i < 2; ++i) {
    const Mat& P = q.M[i];
    const Mat& Ph = q.M[2 + i];
    const PlayerCost& c = g.cost[i];
    E[i] = P * g.A + g.A.transpose() * P + g.C.transpose() * P * g.C + c.Q +
           (P * g.B + g.C.transpose() * P * g.D + c.S.transpose()) * Th;
    E[2 + i] = Ph * h.A + h.A.transpose() * Ph + h.C.transpose() * P * h.C + h.player[i].Q +
               (Ph * h.B + h.C.transpose() * P * h.D + h.player[i].S.transpose()) * Tb;
  }
  return E;
}

// Each equation is linear in its own unknown once the gains are frozen.
bool open_loop_update(const GameSpec& g, const Mat& Th, const Mat& Tb, Quad& out) {
  const HatCoefficients h = hat(g);
  const Mat Ath = g.A + g.B * Th, Cth = g.C + g.D * Th;
  const Mat Acl = h.A + h.B * Tb, Ccl = h.C + h.D * Tb;
  for (int i = 0; i < 2; ++i) {
    const PlayerCost& c = g.cost[i];
    if (!solve_sylvester_like(g.A, Ath, g.C, Cth, c.Q + c.S.transpose() * Th, out.M[i])) return false;
    const Mat W = h.player[i].Q + h.C.transpose() * out.M[i] * Ccl + h.player[i].S.transpose() * Tb;
    if (!solve_sylvester_like(h.A, Acl, Mat(), Mat(), W, out.M[2 + i])) return false;
  }
  return true;
}

double joint_norm(const std::array<Mat, 4>& E) {
  double s = 0;
  for (const Mat& e : E) s = std::max(s, e.norm());
  return s;
}

}  // namespace

OpenLoopNashSolution solve_openloop_nash_are(const GameSpec& g, const SolveOptions& opts) {
  detail::Stopwatch clock;
  OpenLoopNashSolution out;
  const Eigen::Index n = g.n;
  if (g.players != 2 || g.m1 < 1 || g.m2 < 1) {
    out.meta.diagnostic = "open-loop Nash needs two players with m1, m2 >= 1";
    return out;
  }
  Quad q;
  for (Mat& M : q.M) M = Mat::Zero(n, n);
  const double target = 1e-3 * opts.are_tol;
  double res = INFINITY, best = INFINITY;
  int since_best = 0;
  bool singular = false;
  for (; out.meta.iterations < opts.max_iter; ++out.meta.iterations) {
    const OpenLoopGains gains = open_loop_gains(g, q);
    if (gains.singular) {
      singular = true;
      break;
    }
    res = joint_norm(open_loop_equations(g, q, gains.Theta, gains.ThetaBar));
    if (res <= target) break;
    if (res < best * 0.999) {
      best = res;
      since_best = 0;
    } else if (++since_best > 50) {
      break;  // stagnation
    }
    Quad next;
    if (!open_loop_update(g, gains.Theta, gains.ThetaBar, next)) {
      singular = true;
      break;
    }
    for (int i = 0; i < 4; ++i) q.M[i] = (1 - opts.damping) * q.M[i] + opts.damping * next.M[i];
  }

  if (!singular && res > target) {
    auto F = [&](const Vec& x) -> Vec {
      const Quad z = Quad::from(x, n);
      const OpenLoopGains gz = open_loop_gains(g, z);
      if (gz.singular) return Vec::Constant(x.size(), INFINITY);
      return Quad{open_loop_equations(g, z, gz.Theta, gz.ThetaBar)}.flat();
    };
    q = Quad::from(fd_newton(F, q.flat(), 50, target, out.meta.iterations), n);
    out.meta.diagnostic = "fixed point stalled; finite-difference Newton fallback used";
  }

  const OpenLoopGains gains = open_loop_gains(g, q);
  out.P1 = q.M[0];
  out.P2 = q.M[1];
  out.P1hat = q.M[2];
  out.P2hat = q.M[3];
  out.SigmaStack = gains.blk.Sigma;
  out.SigmaBarStack = gains.hblk.Sigma;
  if (gains.singular) {
    out.status = Status::diverged;
    out.meta.diagnostic = "stacked Sigma block singular (condition number above 1e12)";
    out.meta.wall_time_ms = clock.ms();
    return out;
  }
  out.ThetaStar2 = gains.Theta;
  out.ThetaBarStar2 = gains.ThetaBar;
  out.residuals = are_residuals(out, g);
  out.stabilizer = check_stabilizer(g, out.ThetaStar2, out.ThetaBarStar2);
  double worst = 0;
  for (const auto& [k, v] : out.residuals) worst = std::max(worst, v);
  if (!(worst <= opts.are_tol))
    out.status = out.meta.iterations >= opts.max_iter ? Status::max_iterations : Status::diverged;
  else if (!out.stabilizer.is_stabilizer)
    out.status = Status::not_static_stabilizing;
  else
    out.status = Status::solved;
  out.meta.wall_time_ms = clock.ms();
  return out;
}

namespace {

struct ClosedLoopState {
  Mat P1, P2, P1hat, P2hat;
  bool ok = false;
};

// P_i and Phat_i are linear in the gains: one stochastic and one deterministic Lyapunov
// solve per player.
ClosedLoopState closed_loop_values(const GameSpec& g, const Mat& Th, const Mat& Tb) {
  const HatCoefficients h = hat(g);
  const Mat Ath = g.A + g.B * Th, Cth = g.C + g.D * Th;
  const Mat Acl = h.A + h.B * Tb, Ccl = h.C + h.D * Tb;
  ClosedLoopState st;
  Mat* P[] = {&st.P1, &st.P2};
  Mat* Ph[] = {&st.P1hat, &st.P2hat};
  for (int i = 0; i < 2; ++i) {
    const PlayerCost& c = g.cost[i];
    const Mat W = c.Q + c.S.transpose() * Th + Th.transpose() * c.S + Th.transpose() * c.R * Th;
    if (!solve_sylvester_like(Ath, Ath, Cth, Cth, sym(W), *P[i])) return st;
    *P[i] = sym(*P[i]);
    const LqHat& hp = h.player[i];
    const Mat Wh = Ccl.transpose() * *P[i] * Ccl + hp.Q + hp.S.transpose() * Tb + Tb.transpose() * hp.S +
                   Tb.transpose() * hp.R * Tb;
    if (!solve_sylvester_like(Acl, Acl, Mat(), Mat(), sym(Wh), *Ph[i])) return st;
    *Ph[i] = sym(*Ph[i]);
  }
  st.ok = true;
  return st;
}

}  // namespace

ClosedLoopNashSolution solve_closedloop_nash_are(const GameSpec& g, const SolveOptions& opts) {
  detail::Stopwatch clock;
  ClosedLoopNashSolution out;
  const Eigen::Index n = g.n, m = g.m();
  if (g.players != 2 || g.m1 < 1 || g.m2 < 1) {
    out.meta.diagnostic = "closed-loop Nash needs two players with m1, m2 >= 1";
    return out;
  }
  Mat Th = Mat::Zero(m, n), Tb = Mat::Zero(m, n);
  {
    const OpenLoopNashSolution ol = solve_openloop_nash_are(g, opts);
    if (ol.ThetaStar2.size() && ol.status != Status::diverged && ol.status != Status::max_iterations) {
      Th = ol.ThetaStar2;
      Tb = ol.ThetaBarStar2;
    }
  }
  const double target = 1e-3 * opts.are_tol;

  // Stationarity map: gains -> gains implied by the Riccati values they induce.
  auto implied = [&](const Mat& T, const Mat& TB, ClosedLoopState& st, Mat& Tn, Mat& TBn) {
    st = closed_loop_values(g, T, TB);
    if (!st.ok) return false;
    const StackedBlocks b = stacked_blocks(g, st.P1, st.P2);
    const StackedBlocks hb = stacked_hat_blocks(g, st.P1, st.P2, st.P1hat, st.P2hat);
    Tn = detail::synthesize_gain(b.Sigma, b.K, nullptr);
    TBn = detail::synthesize_gain(hb.Sigma, hb.K, nullptr);
    return Tn.allFinite() && TBn.allFinite();
  };

  ClosedLoopState st;
  double res = INFINITY, best = INFINITY;
  int since_best = 0;
  bool broken = false;
  for (; out.meta.iterations < opts.max_iter; ++out.meta.iterations) {
    Mat Tn, TBn;
    if (!implied(Th, Tb, st, Tn, TBn)) {
      broken = true;
      break;
    }
    res = (Tn - Th).norm() + (TBn - Tb).norm();
    if (res <= target) break;
    if (res < best * 0.999) {
      best = res;
      since_best = 0;
    } else if (++since_best > 50) {
      break;
    }
    Th = (1 - opts.damping) * Th + opts.damping * Tn;
    Tb = (1 - opts.damping) * Tb + opts.damping * TBn;
  }
  if (!broken && res > target) {
    const Eigen::Index k = m * n;
    auto F = [&](const Vec& x) -> Vec {
      const Mat T = Eigen::Map<const Mat>(x.data(), m, n);
      const Mat TB = Eigen::Map<const Mat>(x.data() + k, m, n);
      ClosedLoopState s;
      Mat Tn, TBn;
      if (!implied(T, TB, s, Tn, TBn)) return Vec::Constant(x.size(), INFINITY);
      Vec r(2 * k);
      r.head(k) = Eigen::Map<const Vec>(Mat(Tn - T).data(), k);
      r.tail(k) = Eigen::Map<const Vec>(Mat(TBn - TB).data(), k);
      return r;
    };
    Vec x(2 * k);
    x.head(k) = Eigen::Map<const Vec>(Th.data(), k);
    x.tail(k) = Eigen::Map<const Vec>(Tb.data(), k);
    x = fd_newton(F, x, 50, target, out.meta.iterations);
    Th = Eigen::Map<const Mat>(x.data(), m, n);
    Tb = Eigen::Map<const Mat>(x.data() + k, m, n);
    out.meta.diagnostic = "fixed point stalled; finite-difference Newton fallback used";
  }

  st = closed_loop_values(g, Th, Tb);
  if (!st.ok) {
    out.status = Status::diverged;
    out.meta.diagnostic = "closed-loop Lyapunov operator singular at the current gains";
    out.meta.wall_time_ms = clock.ms();
    return out;
  }
  out.P1 = st.P1;
  out.P2 = st.P2;
  out.P1hat = st.P1hat;
  out.P2hat = st.P2hat;
  out.ThetaStar = Th;
  out.ThetaBarStar = Tb;
  const HatCoefficients h = hat(g);
  const int m1 = g.m1, m2 = g.m2;
  const Mat D1 = g.D.leftCols(m1), D2 = g.D.rightCols(m2);
  const Mat Dh1 = h.D.leftCols(m1), Dh2 = h.D.rightCols(m2);
  out.Sigma1 = sym(g.cost[0].R.topLeftCorner(m1, m1) + D1.transpose() * st.P1 * D1);
  out.Sigma2 = sym(g.cost[1].R.bottomRightCorner(m2, m2) + D2.transpose() * st.P2 * D2);
  out.SigmaBar1 = sym(h.player[0].R.topLeftCorner(m1, m1) + Dh1.transpose() * st.P1 * Dh1);
  out.SigmaBar2 = sym(h.player[1].R.bottomRightCorner(m2, m2) + Dh2.transpose() * st.P2 * Dh2);
  out.residuals = are_residuals(out, g);
  out.stabilizer = check_stabilizer(g, Th, Tb);
  double worst = 0;
  for (const auto& [k, v] : out.residuals)
    if (k.rfind("range", 0) != 0) worst = std::max(worst, v);
  const double sign = std::min({min_eig_sym(out.Sigma1), min_eig_sym(out.Sigma2),
                                min_eig_sym(out.SigmaBar1), min_eig_sym(out.SigmaBar2)});
  if (!(worst <= opts.are_tol))
    out.status = out.meta.iterations >= opts.max_iter ? Status::max_iterations : Status::diverged;
  else if (sign < -kTauPsd)
    out.status = Status::psd_violated;
  else if (!out.stabilizer.is_stabilizer)
    out.status = Status::not_static_stabilizing;
  else
    out.status = Status::solved;
  out.meta.wall_time_ms = clock.ms();
  return out;
}

}  // namespace mflq
