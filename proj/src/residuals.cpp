#include "mflq/errors.hpp"
#include "mflq/riccati.hpp"

namespace mflq {

namespace {

void require_square(const Mat& X, Eigen::Index n, const char* name) {
  if (X.rows() != n || X.cols() != n)
    throw Error(Errc::DimensionMismatch, std::string(name) + " must be " + std::to_string(n) + "x" +
                                             std::to_string(n));
}

void require_gain(const Mat& X, Eigen::Index m, Eigen::Index n, const char* name) {
  if (X.rows() != m || X.cols() != n)
    throw Error(Errc::DimensionMismatch, std::string(name) + " must be m x n");
}

ResidualMap lq_residuals(const LqSpec& s, const Mat& P, const Mat& Phat) {
  require_square(P, s.n, "P");
  require_square(Phat, s.n, "Phat");
  const RiccatiTerms t = riccati_map(s, P);
  const RiccatiTerms th = riccati_hat_map(s, P, Phat);
  return {{"are1", t.value.norm()},
          {"are2", th.value.norm()},
          {"range1", range_contains(t.Sigma, t.K).residual},
          {"range2", range_contains(th.Sigma, th.K).residual}};
}

}  // namespace

ResidualMap are_residuals(const ControlAreSolution& sol, const ControlSpec& s) {
  return lq_residuals(s, sol.P, sol.Phat);
}

ResidualMap are_residuals(const ZeroSumSolution& sol, const ZeroSumSpec& z) {
  return lq_residuals(z, sol.Pc, sol.Pchat);
}

ResidualMap are_residuals(const OpenLoopNashSolution& sol, const GameSpec& g) {
  const Eigen::Index n = g.n, m = g.m();
  for (const Mat* P : {&sol.P1, &sol.P2, &sol.P1hat, &sol.P2hat}) require_square(*P, n, "P");
  require_gain(sol.ThetaStar2, m, n, "Theta**");
  require_gain(sol.ThetaBarStar2, m, n, "ThetaBar**");
  const HatCoefficients h = hat(g);
  const Mat* Ps[] = {&sol.P1, &sol.P2};
  const Mat* Phs[] = {&sol.P1hat, &sol.P2hat};
  ResidualMap r;
  for (int i = 0; i < 2; ++i) {
    const Mat& P = *Ps[i];
    const Mat& Ph = *Phs[i];
    const PlayerCost& c = g.cost[i];
    const std::string tag = "_p" + std::to_string(i + 1);
    r["are1" + tag] = (P * g.A + g.A.transpose() * P + g.C.transpose() * P * g.C + c.Q +
                       (P * g.B + g.C.transpose() * P * g.D + c.S.transpose()) * sol.ThetaStar2)
                          .norm();
    r["are2" + tag] = (Ph * h.A + h.A.transpose() * Ph + h.C.transpose() * P * h.C + h.player[i].Q +
                       (Ph * h.B + h.C.transpose() * P * h.D + h.player[i].S.transpose()) *
                           sol.ThetaBarStar2)
                          .norm();
  }
  const StackedBlocks b = stacked_blocks(g, sol.P1, sol.P2);
  const StackedBlocks hb = stacked_hat_blocks(g, sol.P1, sol.P2, sol.P1hat, sol.P2hat);
  r["stationarity"] = (b.Sigma * sol.ThetaStar2 + b.K).norm();
  r["stationarity_hat"] = (hb.Sigma * sol.ThetaBarStar2 + hb.K).norm();
  return r;
}

ResidualMap are_residuals(const ClosedLoopNashSolution& sol, const GameSpec& g) {
  const Eigen::Index n = g.n, m = g.m();
  for (const Mat* P : {&sol.P1, &sol.P2, &sol.P1hat, &sol.P2hat}) require_square(*P, n, "P");
  require_gain(sol.ThetaStar, m, n, "Theta*");
  require_gain(sol.ThetaBarStar, m, n, "ThetaBar*");
  const HatCoefficients h = hat(g);
  const Mat& Th = sol.ThetaStar;
  const Mat& Tb = sol.ThetaBarStar;
  const Mat* Ps[] = {&sol.P1, &sol.P2};
  const Mat* Phs[] = {&sol.P1hat, &sol.P2hat};
  ResidualMap r;
  double asym = 0;
  for (int i = 0; i < 2; ++i) {
    const Mat& P = *Ps[i];
    const Mat& Ph = *Phs[i];
    const PlayerCost& c = g.cost[i];
    const LqHat& hp = h.player[i];
    const std::string tag = "_p" + std::to_string(i + 1);
    const Mat L = P * g.B + g.C.transpose() * P * g.D + c.S.transpose();
    r["are1" + tag] = (P * g.A + g.A.transpose() * P + g.C.transpose() * P * g.C + c.Q +
                       Th.transpose() * (c.R + g.D.transpose() * P * g.D) * Th + L * Th +
                       Th.transpose() * L.transpose())
                          .norm();
    const Mat Lh = Ph * h.B + h.C.transpose() * P * h.D + hp.S.transpose();
    r["are2" + tag] = (Ph * h.A + h.A.transpose() * Ph + h.C.transpose() * P * h.C + hp.Q +
                       Tb.transpose() * (hp.R + h.D.transpose() * P * h.D) * Tb + Lh * Tb +
                       Tb.transpose() * Lh.transpose())
                          .norm();
    asym = std::max({asym, (P - P.transpose()).norm(), (Ph - Ph.transpose()).norm()});
  }
  const StackedBlocks b = stacked_blocks(g, sol.P1, sol.P2);
  const StackedBlocks hb = stacked_hat_blocks(g, sol.P1, sol.P2, sol.P1hat, sol.P2hat);
  r["stationarity"] = (b.Sigma * Th + b.K).norm();
  r["stationarity_hat"] = (hb.Sigma * Tb + hb.K).norm();
  r["symmetry"] = asym;
  return r;
}

}  // namespace mflq
