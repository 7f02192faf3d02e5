#include <cmath>

#include "mflq/equilibrium.hpp"
#include "mflq/errors.hpp"
#include "mflq/simulate.hpp"
#include "test_support.hpp"

namespace mflq {
namespace {

using testing::load_game;
using testing::load_zero_sum;
using testing::mat2;
using testing::vec2;

// A stable two-dimensional control problem with every mean-field block and forcing kind.
ControlSpec forced_control() {
  ControlSpec s;
  s.n = 2;
  s.m1 = 1;
  s.A = mat2(-0.5, 1.0, 0.0, 0.3);
  s.Abar = mat2(0.2, 0.0, 0.1, -0.4);
  s.C = mat2(0.2, 0.0, 0.1, 0.3);
  s.Cbar = mat2(0.0, 0.1, 0.0, 0.0);
  s.B = Mat(2, 1);
  s.B << 0.0, 1.0;
  s.Bbar = Mat(2, 1);
  s.Bbar << 0.3, 0.0;
  s.D = Mat(2, 1);
  s.D << 0.2, 0.0;
  s.Dbar = Mat::Zero(2, 1);
  s.Q = mat2(1.0, 0.2, 0.2, 2.0);
  s.Qbar = mat2(0.5, 0.0, 0.0, 0.0);
  s.S = Mat(1, 2);
  s.S << 0.1, 0.0;
  s.Sbar = Mat::Zero(1, 2);
  s.R = Mat::Constant(1, 1, 1.0);
  s.Rbar = Mat::Constant(1, 1, 0.5);
  s.forcing = {{ForcingKind::b, vec2(0.4, -0.2), 1.0},
               {ForcingKind::sigma, vec2(0.3, 0.1), 1.0},
               {ForcingKind::q1, vec2(0.2, 0.5), 0.5},
               {ForcingKind::rho1, Vec::Constant(1, -0.3), 2.0}};
  return s;
}

TEST(ValueFunction, ControlMatchesMomentCost) {
  const ControlSpec s = forced_control();
  const ControlAreSolution sol = solve_control_are(s);
  ASSERT_EQ(sol.status, Status::solved);
  const OffsetSolution off = solve_offsets(s, sol);
  EXPECT_EQ(off.v_star.size(), 3u);
  const FeedbackStrategy st = synthesize_strategy(s, sol);
  const Vec x0 = vec2(1.0, -0.5);
  const ValueReport v = value_function(s, sol, off, x0);
  EXPECT_NE(v.linear, 0.0);
  EXPECT_NE(v.constant, 0.0);
  const double J = moment_cost(s, st, x0, 40.0, 2e-3);
  EXPECT_NEAR(J, v.total, 1e-7 * (1.0 + std::abs(v.total)));
}

TEST(ValueFunction, ControlStrategyIsOptimal) {
  const ControlSpec s = forced_control();
  const ControlAreSolution sol = solve_control_are(s);
  const FeedbackStrategy st = synthesize_strategy(s, sol);
  const Vec x0 = vec2(0.5, 0.5);
  const double J0 = moment_cost(s, st, x0, 40.0, 2e-3);
  for (double amp : {0.2, -0.2}) {
    FeedbackStrategy off = st;
    off.offset.push_back({Vec::Constant(1, amp), 0.7});
    EXPECT_GT(moment_cost(s, off, x0, 40.0, 2e-3), J0);
    FeedbackStrategy gain = st;
    gain.Theta(0, 1) += amp;
    EXPECT_GT(moment_cost(s, gain, x0, 40.0, 2e-3), J0);
    FeedbackStrategy mean_gain = st;
    mean_gain.ThetaBar(0, 0) += amp;
    EXPECT_GT(moment_cost(s, mean_gain, x0, 40.0, 2e-3), J0);
  }
}

TEST(ValueFunction, SaddleValueWithoutForcing) {
  const ZeroSumSpec z = load_zero_sum("example5.json");
  const ZeroSumSolution sol = solve_zerosum_are(z);
  const OffsetSolution off = solve_offsets(z, sol);
  const ValueReport v = value_function(z, sol, off, vec2(1, 1));
  EXPECT_NEAR(v.total, 1.5, 1e-10);
  EXPECT_EQ(v.linear, 0.0);
  EXPECT_EQ(v.constant, 0.0);
}

TEST(ValueFunction, ForcedSaddleIsASaddle) {
  ZeroSumSpec z = load_zero_sum("example5.json");
  z.forcing = {{ForcingKind::b, vec2(0.5, -0.5), 1.0},
               {ForcingKind::sigma, vec2(0.2, 0.0), 1.5},
               {ForcingKind::q1, vec2(0.3, 0.1), 0.8},
               {ForcingKind::rho1, vec2(0.1, -0.2), 1.0}};
  const ZeroSumSolution sol = solve_zerosum_are(z);
  ASSERT_EQ(sol.status, Status::solved);
  const FeedbackStrategy st = synthesize_strategy(z, sol);
  const Vec x0 = vec2(1.0, -1.0);
  const double J0 = moment_cost(z, st, x0, 40.0, 2e-3);
  EXPECT_NEAR(J0, value_function(z, sol, solve_offsets(z, sol), x0).total, 1e-7 * (1 + std::abs(J0)));
  for (double amp : {0.4, -0.4}) {
    FeedbackStrategy p1 = st, p2 = st;
    p1.offset.push_back({vec2(amp, 0.0), 1.0});
    p2.offset.push_back({vec2(0.0, amp), 1.0});
    EXPECT_GT(moment_cost(z, p1, x0, 40.0, 2e-3), J0);  // the minimizer cannot gain
    EXPECT_LT(moment_cost(z, p2, x0, 40.0, 2e-3), J0);  // the maximizer cannot gain
  }
}

TEST(Offsets, UnforcedProblemHasNoTerms) {
  const ZeroSumSpec z = load_zero_sum("example5.json");
  const OffsetSolution off = solve_offsets(z, solve_zerosum_are(z));
  EXPECT_TRUE(off.v_star.empty());
  EXPECT_TRUE(off.eta_bar[0].empty());
}

TEST(Offsets, RangeConditionCanFail) {
  // Sigma_bar = diag(0, -1): a rho component along the kernel cannot be absorbed.
  ZeroSumSpec z = load_zero_sum("example2.json");
  z.forcing = {{ForcingKind::rho1, vec2(1.0, 0.0), 1.0}};
  const ZeroSumSolution sol = solve_zerosum_are(z);
  try {
    solve_offsets(z, sol);
    FAIL() << "expected RangeConditionFailed";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RangeConditionFailed);
  }
  z.forcing = {{ForcingKind::rho1, vec2(0.0, 1.0), 1.0}};
  const OffsetSolution off = solve_offsets(z, solve_zerosum_are(z));
  EXPECT_LE(off.range_residuals.begin()->second, 1e-10);
}

TEST(Offsets, ResolventSingularAtClosedLoopEigenvalue) {
  // Deterministic scalar problem with an unstable uncontrolled mode and no control.
  ControlSpec s;
  s.n = 1;
  s.m1 = 1;
  s.A = Mat::Constant(1, 1, 0.5);
  s.B = s.D = s.Abar = s.Bbar = s.C = s.Cbar = s.Dbar = s.Qbar = s.S = s.Sbar = s.Rbar =
      Mat::Zero(1, 1);
  s.Q = s.R = Mat::Constant(1, 1, 1.0);
  s.forcing = {{ForcingKind::q1, Vec::Ones(1), 0.5}};
  ControlAreSolution sol;
  sol.P = sol.Phat = Mat::Constant(1, 1, -1.0);  // any value: B = 0 leaves Acl = 0.5
  try {
    solve_offsets(s, sol);
    FAIL() << "expected ResolventSingular";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ResolventSingular);
  }
}

GameSpec forced_game(const std::string& name) {
  GameSpec g = load_game(name);
  g.forcing = {{ForcingKind::b, vec2(0.3, -0.2), 1.0},
               {ForcingKind::sigma, vec2(0.1, 0.2), 1.0},
               {ForcingKind::q1, vec2(0.5, 0.0), 0.5},
               {ForcingKind::q2, vec2(0.0, -0.4), 0.5},
               {ForcingKind::rho1, vec2(0.2, 0.0), 2.0},
               {ForcingKind::rho2, vec2(0.0, 0.3), 2.0}};
  return g;
}

TEST(Offsets, ClosedLoopNashUnilateralDeviations) {
  const GameSpec g = forced_game("example6.json");
  const ClosedLoopNashSolution sol = solve_closedloop_nash_are(g);
  ASSERT_EQ(sol.status, Status::solved);
  const OffsetSolution off = solve_offsets(g, sol);
  for (const auto& [k, r] : off.range_residuals) EXPECT_LE(r, 1e-10) << k;
  const FeedbackStrategy st = synthesize_strategy(g, sol);
  const Vec x0 = vec2(1.0, 0.5);
  for (int i = 1; i <= 2; ++i) {
    const LqSpec view = player_view(g, i);
    const double J0 = moment_cost(view, st, x0, 40.0, 2e-3);
    for (double amp : {0.3, -0.3}) {
      FeedbackStrategy dev = st;
      dev.offset.push_back({i == 1 ? vec2(amp, 0.0) : vec2(0.0, amp), 0.9});
      EXPECT_GT(moment_cost(view, dev, x0, 40.0, 2e-3), J0) << "player " << i;
      FeedbackStrategy gain = st;
      gain.Theta.row(i - 1).array() += amp;
      EXPECT_GT(moment_cost(view, gain, x0, 40.0, 2e-3), J0) << "player " << i;
    }
  }
}

TEST(Offsets, OpenLoopNashSystemIsConsistent) {
  const GameSpec g = forced_game("example7.json");
  const OpenLoopNashSolution sol = solve_openloop_nash_are(g);
  ASSERT_EQ(sol.status, Status::solved);
  const OffsetSolution off = solve_offsets(g, sol);
  EXPECT_EQ(off.players, 2);
  EXPECT_EQ(off.v_star.size(), 3u);
  for (const auto& [k, r] : off.range_residuals) EXPECT_LE(r, 1e-10) << k;
}

TEST(Synthesize, RefusesUnsolvedUnlessAllowed) {
  const ZeroSumSpec z = load_zero_sum("example1.json");
  const ZeroSumSolution sol = solve_zerosum_are(z);
  try {
    synthesize_strategy(z, sol);
    FAIL() << "expected NotSolved";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotSolved);
  }
  const FeedbackStrategy st = synthesize_strategy(z, sol, std::nullopt, true);
  EXPECT_NEAR(st.Theta(0, 0), -5.0 / 3.0, 1e-10);
}

TEST(Synthesize, FreeComponentSelectsStabilizer) {
  const ZeroSumSpec z = load_zero_sum("example2.json");
  const ZeroSumSolution sol = solve_zerosum_are(z);
  const FeedbackStrategy zero = synthesize_strategy(z, sol, std::nullopt, true);
  EXPECT_MAT_NEAR(zero.Theta, Mat::Zero(2, 1), 1e-12);
  EXPECT_FALSE(check_stabilizer(z, zero.Theta, zero.ThetaBar).is_stabilizer);
  FreeComponents fc{Mat(2, 1), Mat::Zero(2, 1)};
  fc.theta << 1.0, 0.0;
  const FeedbackStrategy chosen = synthesize_strategy(z, sol, fc, true);
  EXPECT_MAT_NEAR(chosen.Theta, fc.theta, 1e-12);
  EXPECT_TRUE(check_stabilizer(z, chosen.Theta, chosen.ThetaBar).is_stabilizer);
}

TEST(Convexity, ScalarControlBoundedBelowByWeight) {
  // J(u) >= int u^2 and each basis function has squared norm h, so H >= 2 h I.
  ControlSpec s;
  s.n = 1;
  s.m1 = 1;
  s.A = Mat::Constant(1, 1, -1.0);
  s.B = Mat::Constant(1, 1, 1.0);
  s.C = Mat::Constant(1, 1, 0.3);
  s.D = Mat::Constant(1, 1, 0.5);
  s.Abar = s.Bbar = s.Cbar = s.Dbar = s.Qbar = s.S = s.Sbar = s.Rbar = Mat::Zero(1, 1);
  s.Q = s.R = Mat::Constant(1, 1, 1.0);
  const ConvexityGrid grid{5.0, 50};
  const ConvexityReport r = convexity_check(s, 1, grid);
  EXPECT_EQ(r.verdict, ConvexityVerdict::convex);
  EXPECT_EQ(r.basis_size, 100);
  EXPECT_GE(r.min_eigenvalue, 2.0 * grid.T / grid.N * (1.0 - 1e-9));
  EXPECT_TRUE(r.necessary_only);
}

TEST(Convexity, ZeroSumPlayersConvexConcave) {
  const ZeroSumSpec z = load_zero_sum("example5.json");
  const ConvexityGrid grid{10.0, 60};
  EXPECT_EQ(convexity_check(z, 1, grid).verdict, ConvexityVerdict::convex);
  EXPECT_EQ(convexity_check(z, 2, grid).verdict, ConvexityVerdict::concave);
}

TEST(Convexity, UnstableHomogeneousSystemRejected) {
  const ZeroSumSpec z = load_zero_sum("example4.json");
  try {
    convexity_check(z, 1, {5.0, 20});
    FAIL() << "expected UnstableHomogeneousSystem";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnstableHomogeneousSystem);
  }
}

TEST(Certificate, ClosedSaddle) {
  const ZeroSumSpec z = load_zero_sum("example5.json");
  const NashCertificate c = nash_certificate(z, solve_zerosum_are(z));
  EXPECT_EQ(c.kind, CertificateKind::zerosum_closed);
  EXPECT_TRUE(c.convexity.empty());
  ASSERT_EQ(c.sign_margins.size(), 4u);
  EXPECT_NEAR(c.sign_margins[0], 3.0, 1e-10);
  EXPECT_NEAR(c.sign_margins[2], -1.9, 1e-10);
  EXPECT_LE(c.stationarity_residuals.at("are1"), 1e-8);
  EXPECT_LE(c.range_residuals.at("range2"), 1e-8);
  EXPECT_TRUE(c.stabilizer.is_stabilizer);
}

TEST(Certificate, OpenRepresentationSaddleAttachesConvexity) {
  const ZeroSumSpec z = load_zero_sum("example5.json");
  const NashCertificate c = nash_certificate(z, solve_zerosum_openrep_are(z), ConvexityGrid{10.0, 40});
  EXPECT_EQ(c.kind, CertificateKind::zerosum_open_rep);
  ASSERT_EQ(c.convexity.size(), 2u);
  EXPECT_EQ(c.convexity[0].verdict, ConvexityVerdict::convex);
  EXPECT_EQ(c.convexity[1].verdict, ConvexityVerdict::concave);
}

TEST(Certificate, NashKinds) {
  const GameSpec g = load_game("example6.json");
  const NashCertificate ol = nash_certificate(g, solve_openloop_nash_are(g), ConvexityGrid{10.0, 40});
  EXPECT_EQ(ol.kind, CertificateKind::open_rep);
  ASSERT_EQ(ol.convexity.size(), 2u);
  for (const ConvexityReport& r : ol.convexity) EXPECT_EQ(r.verdict, ConvexityVerdict::convex);
  const NashCertificate cl = nash_certificate(g, solve_closedloop_nash_are(g));
  EXPECT_EQ(cl.kind, CertificateKind::closed_nash);
  ASSERT_EQ(cl.sign_margins.size(), 4u);
  for (double s : cl.sign_margins) EXPECT_GT(s, 0.0);
  EXPECT_LE(cl.stationarity_residuals.at("stationarity"), 1e-8);
}

TEST(Certificate, OpenAndClosedNashAreIntrinsicallyDifferent) {
  const GameSpec g = load_game("example6.json");
  const FeedbackStrategy ol = synthesize_strategy(g, solve_openloop_nash_are(g));
  const FeedbackStrategy cl = synthesize_strategy(g, solve_closedloop_nash_are(g));
  EXPECT_FALSE(intrinsically_same(ol, cl, g));
  EXPECT_TRUE(intrinsically_same(cl, cl, g));
  const double gap = (g.B * (cl.Theta - ol.Theta)).norm();
  EXPECT_GE(gap, 0.005);
  EXPECT_LE(gap, 0.03);
}

}  // namespace
}  // namespace mflq
