#include "mflq/equilibrium.hpp"

namespace mflq {

const char* to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::open_rep: return "open_rep";
    case CertificateKind::closed_nash: return "closed_nash";
    case CertificateKind::zerosum_open_rep: return "zerosum_open_rep";
    case CertificateKind::zerosum_closed: return "zerosum_closed";
  }
  return "?";
}

NashCertificate nash_certificate(const GameSpec& g, const OpenLoopNashSolution& sol,
                                 std::optional<ConvexityGrid> convexity) {
  NashCertificate c;
  c.kind = CertificateKind::open_rep;
  c.stationarity_residuals = are_residuals(sol, g);
  c.stabilizer = sol.stabilizer;
  if (convexity)
    for (int i = 1; i <= 2; ++i) c.convexity.push_back(convexity_check(g, i, *convexity));
  return c;
}

NashCertificate nash_certificate(const GameSpec& g, const ClosedLoopNashSolution& sol) {
  NashCertificate c;
  c.kind = CertificateKind::closed_nash;
  c.stationarity_residuals = are_residuals(sol, g);
  // Each player's own block must be positive semidefinite for a closed-loop best response.
  c.sign_margins = {min_eig_sym(sol.Sigma1), min_eig_sym(sol.Sigma2), min_eig_sym(sol.SigmaBar1),
                    min_eig_sym(sol.SigmaBar2)};
  c.stabilizer = sol.stabilizer;
  return c;
}

NashCertificate nash_certificate(const ZeroSumSpec& z, const ZeroSumSolution& sol,
                                 std::optional<ConvexityGrid> convexity) {
  NashCertificate c;
  c.kind = sol.open_rep ? CertificateKind::zerosum_open_rep : CertificateKind::zerosum_closed;
  const ResidualMap r = are_residuals(sol, z);
  c.stationarity_residuals = {{"are1", r.at("are1")}, {"are2", r.at("are2")}};
  c.range_residuals = {{"range1", r.at("range1")}, {"range2", r.at("range2")}};
  c.sign_margins.assign(sol.sign_margins.begin(), sol.sign_margins.end());
  c.stabilizer = sol.stabilizer;
  if (sol.open_rep && convexity)
    for (int i = 1; i <= 2; ++i) c.convexity.push_back(convexity_check(z, i, *convexity));
  return c;
}

}  // namespace mflq
