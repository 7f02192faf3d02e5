#include "mflq/stabilizability.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>

#include "mflq/errors.hpp"

namespace mflq {

const char* to_string(FailureReason r) {
  switch (r) {
    case FailureReason::none: return "none";
    case FailureReason::mean_system_unstable: return "mean_system_unstable";
    case FailureReason::variance_system_unstable: return "variance_system_unstable";
    case FailureReason::certificate_not_positive: return "certificate_not_positive";
  }
  return "?";
}

Dynamics dynamics_of(const LqSpec& s) {
  return Dynamics{s.A, s.Abar, s.C, s.Cbar, s.B, s.Bbar, s.D, s.Dbar};
}

Dynamics dynamics_of(const GameSpec& g) {
  return Dynamics{g.A, g.Abar, g.C, g.Cbar, g.B, g.Bbar, g.D, g.Dbar};
}

StabilizerCertificate check_stabilizer(const Dynamics& d, const Mat& Theta, const Mat& ThetaBar) {
  const Eigen::Index n = d.A.rows(), m = d.B.cols();
  if (Theta.rows() != m || Theta.cols() != n || ThetaBar.rows() != m || ThetaBar.cols() != n)
    throw Error(Errc::DimensionMismatch, "feedback gains must be m x n");
  const Mat I = Mat::Identity(n, n);
  const Mat Acl = d.A + d.Abar + (d.B + d.Bbar) * ThetaBar;
  const Mat Ccl = d.C + d.Cbar + (d.D + d.Dbar) * ThetaBar;
  const Mat At = d.A + d.B * Theta;
  const Mat Ct = d.C + d.D * Theta;

  StabilizerCertificate cert;
  cert.hurwitz_abscissa = spectral_abscissa(Acl);
  cert.stochastic_abscissa = spectral_abscissa(stochastic_operator(At, Ct));

  if (cert.hurwitz_abscissa >= -kEpsMargin) {
    cert.failure_reason = FailureReason::mean_system_unstable;
    return cert;
  }
  const Mat P0bar = solve_lyapunov(Acl, I);
  cert.P0bar = P0bar;
  cert.min_eig_P0bar = min_eig_sym(P0bar);

  if (cert.stochastic_abscissa >= -kEpsMargin) {
    cert.failure_reason = FailureReason::variance_system_unstable;
    return cert;
  }
  const Mat P0 = solve_stochastic_lyapunov(At, Ct, I + Ccl * P0bar * Ccl.transpose(), true);
  cert.P0 = P0;
  cert.min_eig_P0 = min_eig_sym(P0);

  const bool pos = cert.min_eig_P0 > 1e-9 * (1.0 + P0.norm()) &&
                   cert.min_eig_P0bar > 1e-9 * (1.0 + P0bar.norm());
  cert.failure_reason = pos ? FailureReason::none : FailureReason::certificate_not_positive;
  cert.is_stabilizer = pos;
  return cert;
}

StabilizerCertificate check_stabilizer(const LqSpec& s, const Mat& Theta, const Mat& ThetaBar) {
  return check_stabilizer(dynamics_of(s), Theta, ThetaBar);
}

StabilizerCertificate check_stabilizer(const GameSpec& g, const Mat& Theta, const Mat& ThetaBar) {
  return check_stabilizer(dynamics_of(g), Theta, ThetaBar);
}

StabilizerCertificate check_uncontrolled_stability(const LqSpec& s) {
  return check_stabilizer(s, Mat::Zero(s.m(), s.n), Mat::Zero(s.m(), s.n));
}

StabilizerCertificate check_uncontrolled_stability(const GameSpec& g) {
  return check_stabilizer(g, Mat::Zero(g.m(), g.n), Mat::Zero(g.m(), g.n));
}

InstabilityProfile instability_profile(const Dynamics& d, const Mat& Theta, const Mat& ThetaBar) {
  InstabilityProfile p;
  auto tally = [&](const Mat& M) {
    Eigen::EigenSolver<Mat> es(M, false);
    for (const auto& ev : es.eigenvalues()) {
      if (ev.real() >= -kEpsMargin) ++p.unstable_modes;
      p.excess += std::max(0.0, ev.real());
    }
  };
  tally(stochastic_operator(d.A + d.B * Theta, d.C + d.D * Theta));
  tally(d.A + d.Abar + (d.B + d.Bbar) * ThetaBar);
  return p;
}

}  // namespace mflq
