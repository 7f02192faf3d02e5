#pragma once

#include <optional>

#include "mflq/model.hpp"

namespace mflq {

inline constexpr double kEpsMargin = 1e-10;

enum class FailureReason { none, mean_system_unstable, variance_system_unstable, certificate_not_positive };
const char* to_string(FailureReason r);

// is_stabilizer holds iff both witnesses are present and positive definite and both
// abscissas are negative.
struct StabilizerCertificate {
  bool is_stabilizer = false;
  std::optional<Mat> P0, P0bar;
  double min_eig_P0 = 0.0, min_eig_P0bar = 0.0;
  double hurwitz_abscissa = 0.0;     // of Ahat + Bhat ThetaBar
  double stochastic_abscissa = 0.0;  // of X -> A_Th X + X A_Th^T + C_Th X C_Th^T
  FailureReason failure_reason = FailureReason::none;
};

struct Dynamics {
  Mat A, Abar, C, Cbar, B, Bbar, D, Dbar;
};
Dynamics dynamics_of(const LqSpec& s);
Dynamics dynamics_of(const GameSpec& g);

StabilizerCertificate check_stabilizer(const Dynamics& d, const Mat& Theta, const Mat& ThetaBar);
StabilizerCertificate check_stabilizer(const LqSpec& s, const Mat& Theta, const Mat& ThetaBar);
StabilizerCertificate check_stabilizer(const GameSpec& g, const Mat& Theta, const Mat& ThetaBar);

StabilizerCertificate check_uncontrolled_stability(const LqSpec& s);
StabilizerCertificate check_uncontrolled_stability(const GameSpec& g);

// How far a feedback pair is from stabilizing: counts eigenvalues with real part >= -eps in
// the stochastic operator of (A_Th, C_Th) and in Ahat + Bhat ThetaBar, and sums the
// positive real parts. Used to rank candidates that all fail the stabilizer gate.
struct InstabilityProfile {
  int unstable_modes = 0;
  double excess = 0.0;
};
InstabilityProfile instability_profile(const Dynamics& d, const Mat& Theta, const Mat& ThetaBar);

}  // namespace mflq
