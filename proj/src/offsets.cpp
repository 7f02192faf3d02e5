#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "mflq/equilibrium.hpp"
#include "mflq/errors.hpp"
#include "riccati_internal.hpp"

namespace mflq {

namespace {

std::string rate_key(double rate) {
  std::ostringstream os;
  os.precision(17);
  os << "rate=" << rate;
  return os.str();
}

void require_solved(Status st, bool allow_unsolved, const char* what) {
  if (st != Status::solved && !allow_unsolved)
    throw Error(Errc::NotSolved, std::string(what) + " status is " + to_string(st));
}

Vec solve_resolvent(const Mat& L, const Vec& rhs, double rate) {
  Eigen::FullPivLU<Mat> lu(L);
  if (!lu.isInvertible() || lu.rcond() < 1e-13)
    throw Error(Errc::ResolventSingular, "resolvent singular at " + rate_key(rate));
  Vec x = lu.solve(rhs);
  x += lu.solve(rhs - L * x);
  return x;
}

// Single-cost offsets. The drift uses the minimum-norm mean gain: the free component of
// ThetaBar never enters the backward equation for eta.
OffsetSolution lq_offsets(const LqSpec& s, const Mat& P, const Mat& Phat) {
  const LqHat h = hat(s);
  const RiccatiTerms th = riccati_hat_map(s, P, Phat);
  const Mat SigPinv = pinv(th.Sigma).pinv;
  const Mat Acl = h.A + h.B * th.Theta;
  const Eigen::Index n = s.n, m = s.m();
  OffsetSolution out;
  out.players = 1;
  for (double rate : forcing_rates(s.forcing)) {
    const Vec b = forcing_at(s.forcing, ForcingKind::b, rate, n);
    const Vec sig = forcing_at(s.forcing, ForcingKind::sigma, rate, n);
    const Vec q = forcing_at(s.forcing, ForcingKind::q1, rate, n);
    const Vec rho = forcing_at(s.forcing, ForcingKind::rho1, rate, m);
    const Vec Psig = P * sig;
    const Vec f = th.Theta.transpose() * (h.D.transpose() * Psig + rho) + h.C.transpose() * Psig +
                  Phat * b + q;
    const Mat L = rate * Mat::Identity(n, n) - Acl.transpose();
    const Vec eta = solve_resolvent(L, f, rate);
    const Vec w = h.B.transpose() * eta + h.D.transpose() * Psig + rho;
    const RangeCheck rc = range_contains(th.Sigma, w);
    out.range_residuals[rate_key(rate)] = rc.residual;
    if (!rc.contained)
      throw Error(Errc::RangeConditionFailed, "offset range condition fails at " + rate_key(rate));
    out.eta_bar[0].push_back({eta, rate});
    out.v_star.push_back({-SigPinv * w, rate});
  }
  return out;
}

// Coupled per-rate system of both mean offsets and the common open-loop offset:
//   (rate I - F') eta_i - N_i v = g_i,   SigmaBarStack v + [Bhat_i' eta_i] = -[Dhat_i' P_i sigma + rho_ii].
struct GameOffsetData {
  Mat F, Cf, ThetaBar;
  std::array<Mat, 2> N, P, Phat;
  Mat SigmaBar;
};

OffsetSolution game_offsets(const GameSpec& g, const GameOffsetData& d) {
  const HatCoefficients h = hat(g);
  const Eigen::Index n = g.n, m = g.m();
  const int mi[2] = {g.m1, g.m2};
  const int off[2] = {0, g.m1};
  const ForcingKind qk[2] = {ForcingKind::q1, ForcingKind::q2};
  const ForcingKind rk[2] = {ForcingKind::rho1, ForcingKind::rho2};
  OffsetSolution out;
  out.players = 2;
  for (double rate : forcing_rates(g.forcing)) {
    const Vec b = forcing_at(g.forcing, ForcingKind::b, rate, n);
    const Vec sig = forcing_at(g.forcing, ForcingKind::sigma, rate, n);
    Mat L = Mat::Zero(2 * n + m, 2 * n + m);
    Vec rhs(2 * n + m);
    for (int i = 0; i < 2; ++i) {
      const Vec q = forcing_at(g.forcing, qk[i], rate, n);
      const Vec rho = forcing_at(g.forcing, rk[i], rate, m);
      const Vec Psig = d.P[i] * sig;
      L.block(i * n, i * n, n, n) = rate * Mat::Identity(n, n) - d.F.transpose();
      L.block(i * n, 2 * n, n, m) = -d.N[i];
      rhs.segment(i * n, n) = d.Phat[i] * b + d.Cf.transpose() * Psig + q + d.ThetaBar.transpose() * rho;
      L.block(2 * n + off[i], i * n, mi[i], n) = h.B.middleCols(off[i], mi[i]).transpose();
      rhs.segment(2 * n + off[i], mi[i]) =
          -(h.D.middleCols(off[i], mi[i]).transpose() * Psig + rho.segment(off[i], mi[i]));
    }
    L.block(2 * n, 2 * n, m, m) = d.SigmaBar;
    const Vec x = solve_resolvent(L, rhs, rate);
    out.eta_bar[0].push_back({x.segment(0, n), rate});
    out.eta_bar[1].push_back({x.segment(n, n), rate});
    out.v_star.push_back({x.segment(2 * n, m), rate});
    out.range_residuals[rate_key(rate)] = (L * x - rhs).norm();
  }
  return out;
}

}  // namespace

FeedbackStrategy synthesize_strategy(const ControlSpec& s, const ControlAreSolution& sol,
                                     const std::optional<FreeComponents>& free, bool allow_unsolved) {
  require_solved(sol.status, allow_unsolved, "control");
  const RiccatiTerms t = riccati_map(s, sol.P);
  const RiccatiTerms th = riccati_hat_map(s, sol.P, sol.Phat);
  FeedbackStrategy st;
  st.Theta = detail::synthesize_gain(t.Sigma, t.K, free ? &free->theta : nullptr);
  st.ThetaBar = detail::synthesize_gain(th.Sigma, th.K, free ? &free->theta_bar : nullptr);
  st.offset = solve_offsets(s, sol).v_star;
  return st;
}

FeedbackStrategy synthesize_strategy(const ZeroSumSpec& z, const ZeroSumSolution& sol,
                                     const std::optional<FreeComponents>& free, bool allow_unsolved) {
  require_solved(sol.status, allow_unsolved, "zero-sum");
  const RiccatiTerms t = riccati_map(z, sol.Pc);
  const RiccatiTerms th = riccati_hat_map(z, sol.Pc, sol.Pchat);
  FeedbackStrategy st;
  st.Theta = detail::synthesize_gain(t.Sigma, t.K, free ? &free->theta : nullptr);
  st.ThetaBar = detail::synthesize_gain(th.Sigma, th.K, free ? &free->theta_bar : nullptr);
  st.offset = solve_offsets(z, sol).v_star;
  return st;
}

FeedbackStrategy synthesize_strategy(const GameSpec& g, const OpenLoopNashSolution& sol,
                                     bool allow_unsolved) {
  require_solved(sol.status, allow_unsolved, "open-loop Nash");
  return {sol.ThetaStar2, sol.ThetaBarStar2, solve_offsets(g, sol).v_star};
}

FeedbackStrategy synthesize_strategy(const GameSpec& g, const ClosedLoopNashSolution& sol,
                                     bool allow_unsolved) {
  require_solved(sol.status, allow_unsolved, "closed-loop Nash");
  return {sol.ThetaStar, sol.ThetaBarStar, solve_offsets(g, sol).v_star};
}

OffsetSolution solve_offsets(const ControlSpec& s, const ControlAreSolution& sol) {
  return lq_offsets(s, sol.P, sol.Phat);
}

OffsetSolution solve_offsets(const ZeroSumSpec& z, const ZeroSumSolution& sol) {
  return lq_offsets(z, sol.Pc, sol.Pchat);
}

OffsetSolution solve_offsets(const GameSpec& g, const OpenLoopNashSolution& sol) {
  const HatCoefficients h = hat(g);
  GameOffsetData d;
  d.F = h.A;
  d.Cf = h.C;
  d.ThetaBar = Mat::Zero(g.m(), g.n);
  d.P = {sol.P1, sol.P2};
  d.Phat = {sol.P1hat, sol.P2hat};
  for (int i = 0; i < 2; ++i)
    d.N[i] = d.Phat[i] * h.B + h.C.transpose() * d.P[i] * h.D + h.player[i].S.transpose();
  d.SigmaBar = stacked_hat_blocks(g, sol.P1, sol.P2, sol.P1hat, sol.P2hat).Sigma;
  return game_offsets(g, d);
}

OffsetSolution solve_offsets(const GameSpec& g, const ClosedLoopNashSolution& sol) {
  const HatCoefficients h = hat(g);
  const Mat& Tb = sol.ThetaBarStar;
  GameOffsetData d;
  d.F = h.A + h.B * Tb;
  d.Cf = h.C + h.D * Tb;
  d.ThetaBar = Tb;
  d.P = {sol.P1, sol.P2};
  d.Phat = {sol.P1hat, sol.P2hat};
  for (int i = 0; i < 2; ++i) {
    const Mat Khat = h.B.transpose() * d.Phat[i] + h.D.transpose() * d.P[i] * h.C + h.player[i].S;
    const Mat M = Khat + (h.player[i].R + h.D.transpose() * d.P[i] * h.D) * Tb;
    d.N[i] = M.transpose();
  }
  d.SigmaBar = stacked_hat_blocks(g, sol.P1, sol.P2, sol.P1hat, sol.P2hat).Sigma;
  return game_offsets(g, d);
}

namespace {

ValueReport lq_value(const LqSpec& s, const Mat& P, const Mat& Phat, const OffsetSolution& off,
                     const Vec& x) {
  if (x.size() != s.n) throw Error(Errc::DimensionMismatch, "x0 must have length n");
  const RiccatiTerms th = riccati_hat_map(s, P, Phat);
  const std::vector<ExpTerm>& eta = off.eta_bar[0];
  const std::vector<ExpTerm>& phi = off.v_star;
  ValueReport v;
  v.quadratic = x.dot(Phat * x);
  Vec eta0 = Vec::Zero(s.n);
  for (const ExpTerm& e : eta) eta0 += e.v;
  v.linear = 2.0 * eta0.dot(x);
  for (std::size_t i = 0; i < eta.size(); ++i) {
    for (std::size_t j = 0; j < eta.size(); ++j) {
      const double li = eta[i].rate, lj = eta[j].rate;
      const Vec si = forcing_at(s.forcing, ForcingKind::sigma, li, s.n);
      const Vec sj = forcing_at(s.forcing, ForcingKind::sigma, lj, s.n);
      const Vec bj = forcing_at(s.forcing, ForcingKind::b, lj, s.n);
      v.constant += (si.dot(P * sj) + 2.0 * eta[i].v.dot(bj) -
                     phi[i].v.dot(th.Sigma * phi[j].v)) /
                    (li + lj);
    }
  }
  v.total = v.quadratic + v.linear + v.constant;
  return v;
}

}  // namespace

ValueReport value_function(const ControlSpec& s, const ControlAreSolution& sol,
                           const OffsetSolution& off, const Vec& x) {
  return lq_value(s, sol.P, sol.Phat, off, x);
}

ValueReport value_function(const ZeroSumSpec& z, const ZeroSumSolution& sol,
                           const OffsetSolution& off, const Vec& x) {
  return lq_value(z, sol.Pc, sol.Pchat, off, x);
}

}  // namespace mflq
