#pragma once

#include <array>
#include <optional>

#include "mflq/riccati.hpp"

namespace mflq {

// Under deterministic exponential forcing the backward equations reduce to one linear
// solve per forcing rate; every profile below is a list of (amplitude, rate) pairs.
struct OffsetSolution {
  int players = 1;
  std::array<std::vector<ExpTerm>, 2> eta_bar;
  std::vector<ExpTerm> v_star;
  ResidualMap range_residuals;  // keyed "rate=<lambda>"
};

struct ValueReport {
  double quadratic = 0.0;
  double linear = 0.0;
  double constant = 0.0;
  double total = 0.0;
};

enum class ConvexityVerdict { convex, concave, indefinite };
const char* to_string(ConvexityVerdict v);

struct ConvexityGrid {
  double T = 20.0;
  int N = 200;
};

// Restricted to deterministic plus zero-mean piecewise-constant controls: a necessary
// condition only.
struct ConvexityReport {
  double min_eigenvalue = 0.0, max_eigenvalue = 0.0, hessian_norm = 0.0;
  ConvexityGrid grid;
  int basis_size = 0;
  ConvexityVerdict verdict = ConvexityVerdict::indefinite;
  double margin = 0.0;
  bool necessary_only = true;
};

enum class CertificateKind { open_rep, closed_nash, zerosum_open_rep, zerosum_closed };
const char* to_string(CertificateKind k);

struct NashCertificate {
  CertificateKind kind = CertificateKind::closed_nash;
  ResidualMap stationarity_residuals;
  std::vector<double> sign_margins;
  ResidualMap range_residuals;
  StabilizerCertificate stabilizer;
  std::vector<ConvexityReport> convexity;  // one per player when the kind requires it
};

// Throw NotSolved unless the solution is solved or allow_unsolved is set.
FeedbackStrategy synthesize_strategy(const ControlSpec& s, const ControlAreSolution& sol,
                                     const std::optional<FreeComponents>& free = {},
                                     bool allow_unsolved = false);
FeedbackStrategy synthesize_strategy(const ZeroSumSpec& z, const ZeroSumSolution& sol,
                                     const std::optional<FreeComponents>& free = {},
                                     bool allow_unsolved = false);
FeedbackStrategy synthesize_strategy(const GameSpec& g, const OpenLoopNashSolution& sol,
                                     bool allow_unsolved = false);
FeedbackStrategy synthesize_strategy(const GameSpec& g, const ClosedLoopNashSolution& sol,
                                     bool allow_unsolved = false);

OffsetSolution solve_offsets(const ControlSpec& s, const ControlAreSolution& sol);
OffsetSolution solve_offsets(const ZeroSumSpec& z, const ZeroSumSolution& sol);
OffsetSolution solve_offsets(const GameSpec& g, const OpenLoopNashSolution& sol);
OffsetSolution solve_offsets(const GameSpec& g, const ClosedLoopNashSolution& sol);

ValueReport value_function(const ControlSpec& s, const ControlAreSolution& sol,
                           const OffsetSolution& off, const Vec& x);
ValueReport value_function(const ZeroSumSpec& z, const ZeroSumSolution& sol,
                           const OffsetSolution& off, const Vec& x);

NashCertificate nash_certificate(const GameSpec& g, const OpenLoopNashSolution& sol,
                                 std::optional<ConvexityGrid> convexity = ConvexityGrid{});
NashCertificate nash_certificate(const GameSpec& g, const ClosedLoopNashSolution& sol);
// Kind follows sol.open_rep; the open-representation kind attaches convexity reports.
NashCertificate nash_certificate(const ZeroSumSpec& z, const ZeroSumSolution& sol,
                                 std::optional<ConvexityGrid> convexity = ConvexityGrid{});

// Quadratic form u_i -> J_i^0 of the homogeneous system driven by player i alone.
ConvexityReport convexity_check(const GameSpec& g, int player, const ConvexityGrid& grid = {});
// Zero-sum form: the shared cost as a function of player's control.
ConvexityReport convexity_check(const ZeroSumSpec& z, int player, const ConvexityGrid& grid = {});

}  // namespace mflq
