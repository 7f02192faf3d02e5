#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mflq/stabilizability.hpp"

namespace mflq {

inline constexpr double kTauPsd = 1e-9;

// range_violated is not one of the four classic outcomes; it separates a failed
// range-inclusion gate from a failed semidefiniteness gate.
enum class Status { solved, not_static_stabilizing, psd_violated, range_violated, max_iterations, diverged };
const char* to_string(Status s);
Status status_from(const std::string& s);

// Free components of the pseudo-inverse synthesis, both m x n.
struct FreeComponents {
  Mat theta, theta_bar;
};

struct SolveOptions {
  double are_tol = 1e-8;
  double ode_tol = 1e-11;
  double eps_min = 1e-8;
  double eps_chain_tol = 1e-7;
  double damping = 0.5;
  int max_iter = 500;
  std::optional<FreeComponents> free_components;
};

using ResidualMap = std::map<std::string, double>;

struct SolverMeta {
  int iterations = 0;
  double wall_time_ms = 0.0;
  std::vector<double> eps_chain;
  std::string diagnostic;
};

struct ControlAreSolution {
  Mat P, Phat, Sigma, SigmaBar, Theta, ThetaBar;
  ResidualMap residuals;  // are1, are2, range1, range2
  Status status = Status::diverged;
  StabilizerCertificate stabilizer;
  SolverMeta meta;
};

struct OpenLoopNashSolution {
  Mat P1, P2, P1hat, P2hat;  // not symmetric in general
  Mat ThetaStar2, ThetaBarStar2, SigmaStack, SigmaBarStack;
  ResidualMap residuals;
  Status status = Status::diverged;
  StabilizerCertificate stabilizer;
  SolverMeta meta;
};

struct ClosedLoopNashSolution {
  Mat P1, P2, P1hat, P2hat;
  Mat ThetaStar, ThetaBarStar;
  Mat Sigma1, Sigma2, SigmaBar1, SigmaBar2;
  ResidualMap residuals;
  Status status = Status::diverged;
  StabilizerCertificate stabilizer;
  SolverMeta meta;
};

struct ZeroSumSolution {
  bool open_rep = false;  // true: representation equations, no sign gate
  Mat Pc, Pchat, SigmaC, SigmaBarC, ThetaStar, ThetaBarStar;
  // R11 + D1'PD1 >= 0, its hatted form >= 0, R22 + D2'PD2 <= 0, its hatted form <= 0.
  std::array<bool, 4> sign_checks{};
  std::array<double, 4> sign_margins{};  // min, min, max, max eigenvalue of the four blocks
  ResidualMap residuals;
  Status status = Status::diverged;
  StabilizerCertificate stabilizer;
  std::vector<Mat> roots;  // distinct P roots found across the start set
  SolverMeta meta;
};

ControlAreSolution solve_control_are(const ControlSpec& s, const SolveOptions& opts = {});
OpenLoopNashSolution solve_openloop_nash_are(const GameSpec& g, const SolveOptions& opts = {});
ClosedLoopNashSolution solve_closedloop_nash_are(const GameSpec& g, const SolveOptions& opts = {});
ZeroSumSolution solve_zerosum_are(const ZeroSumSpec& z, const SolveOptions& opts = {});
ZeroSumSolution solve_zerosum_openrep_are(const ZeroSumSpec& z, const SolveOptions& opts = {});

// Reverse-time integration of the differential Riccati pair from zero terminal data over
// a horizon T, with R and Rhat shifted by eps I. Returns false if Sigma loses definiteness.
struct FiniteHorizonResult {
  Mat P, Phat;
  bool ok = false;
};
FiniteHorizonResult finite_horizon_control(const ControlSpec& s, double T, double eps = 0.0,
                                           double step_tol = 1e-10);

// Recomputes every equation of the corresponding system at the stored matrices.
ResidualMap are_residuals(const ControlAreSolution& sol, const ControlSpec& s);
ResidualMap are_residuals(const ZeroSumSolution& sol, const ZeroSumSpec& z);
ResidualMap are_residuals(const OpenLoopNashSolution& sol, const GameSpec& g);
ResidualMap are_residuals(const ClosedLoopNashSolution& sol, const GameSpec& g);

// Riccati maps shared by the control and zero-sum systems. Theta = -Sigma^+ K.
struct RiccatiTerms {
  Mat value, Sigma, K, Theta;
};
RiccatiTerms riccati_map(const LqSpec& s, const Mat& P);
RiccatiTerms riccati_hat_map(const LqSpec& s, const Mat& P, const Mat& Phat);

// Stacked blocks of the two-player systems: row block i uses player i's cost and P_i.
struct StackedBlocks {
  Mat Sigma, K;
};
StackedBlocks stacked_blocks(const GameSpec& g, const Mat& P1, const Mat& P2);
StackedBlocks stacked_hat_blocks(const GameSpec& g, const Mat& P1, const Mat& P2, const Mat& P1hat,
                                 const Mat& P2hat);

// Sign blocks R_ii + D_i' P D_i and the hatted analogs for a zero-sum P.
std::array<Mat, 4> zero_sum_sign_blocks(const ZeroSumSpec& z, const Mat& P);

}  // namespace mflq
