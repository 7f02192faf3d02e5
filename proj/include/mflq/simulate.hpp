#pragma once

#include <cstdint>
#include <vector>

#include "mflq/model.hpp"

namespace mflq {

struct SimOptions {
  double T = 20.0;
  double dt = 1e-3;
  int paths = 1000;
  std::uint64_t seed = 0;
  bool antithetic = true;
  int threads = 0;        // 0: MFLQ_THREADS, else hardware concurrency
  int record_points = 101;  // states kept per path on a uniform sub-grid of [0, T]
};

// Costs are accumulated along each path at full step resolution; states are kept only on
// the record grid. costs[i][k] is player i's truncated cost on path k.
struct PathEnsemble {
  SimOptions opts;
  int steps = 0;
  std::vector<double> t;                   // record grid
  std::vector<Vec> mean;                   // deterministic mean on the record grid
  std::vector<std::vector<Vec>> states;    // [path][record]
  std::vector<std::vector<double>> costs;  // [player][path]
  std::vector<std::vector<double>> tail;   // [player][path], contribution of t >= 0.9 T
  Eigen::Index n = 0, m = 0;
  bool zero_sum = false;  // single shared cost: player 2's cost is minus player 1's
};

struct CostEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  double T = 0.0, dt = 0.0;
  int paths = 0;
  bool tail_flag = false;
};

// LqSpec: one shared cost (control, or zero-sum with player 2 maximizing).
PathEnsemble simulate_closed_loop(const LqSpec& s, const FeedbackStrategy& st, const Vec& x0,
                                  const SimOptions& opts);
PathEnsemble simulate_closed_loop(const GameSpec& g, const FeedbackStrategy& st, const Vec& x0,
                                  const SimOptions& opts);

CostEstimate estimate_cost(const PathEnsemble& e, int player = 1);
// Checks that the ensemble matches the spec and strategy dimensions first.
CostEstimate estimate_cost(const PathEnsemble& e, const LqSpec& s, const FeedbackStrategy& st,
                           int player = 1);
CostEstimate estimate_cost(const PathEnsemble& e, const GameSpec& g, const FeedbackStrategy& st,
                           int player);

// Exact truncated cost on [0, T] from the closed moment equations (mean and covariance).
double moment_cost(const LqSpec& s, const FeedbackStrategy& st, const Vec& x0, double T,
                   double dt = 1e-3);

enum class DeviationKind { nash, saddle };

struct Perturbation {
  int player = 1;
  Vec amplitude;  // length m_player
  double rate = 1.0;
};

struct DeviationOutcome {
  Perturbation delta;
  double delta_J = 0.0;
  double stderr_ = 0.0;
  bool pass = false;
};

struct DeviationReport {
  DeviationKind kind = DeviationKind::nash;
  std::vector<DeviationOutcome> outcomes;
  bool pass = false;
};

// Per player: amplitude +-0.5 (all coordinates) at rates 0.5, 1 and 2.
std::vector<Perturbation> default_perturbations(int m1, int m2);

// Common random numbers: each perturbed run reuses the baseline seed.
DeviationReport deviation_test(const LqSpec& s, const FeedbackStrategy& st, const Vec& x0,
                               DeviationKind kind, const std::vector<Perturbation>& perturbations,
                               const SimOptions& opts);
DeviationReport deviation_test(const GameSpec& g, const FeedbackStrategy& st, const Vec& x0,
                               DeviationKind kind, const std::vector<Perturbation>& perturbations,
                               const SimOptions& opts);

}  // namespace mflq
