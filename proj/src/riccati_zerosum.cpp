#include <algorithm>
#include <tuple>

#include "riccati_internal.hpp"

namespace mflq {

namespace {

struct Candidate {
  std::size_t p_index = 0, phat_index = 0;
  Mat P, Phat;
  RiccatiTerms terms, hat_terms;
  Mat Theta, ThetaBar;
  std::array<Mat, 4> sign_blocks;
  RangeCheck range_p, range_phat;
  StabilizerCertificate cert;
  InstabilityProfile profile;
  int gates = 0;  // consecutive gates passed: sign, range P, range Phat, stabilizer
  Status status = Status::diverged;
};

bool signs_ok(const std::array<Mat, 4>& b) {
  return min_eig_sym(b[0]) >= -kTauPsd && min_eig_sym(b[1]) >= -kTauPsd &&
         max_eig_sym(b[2]) <= kTauPsd && max_eig_sym(b[3]) <= kTauPsd;
}

void grade(Candidate& c, bool open_rep) {
  const bool sign = open_rep || signs_ok(c.sign_blocks);
  const bool gates[] = {sign, c.range_p.contained, c.range_phat.contained, c.cert.is_stabilizer};
  const Status fail[] = {Status::psd_violated, Status::range_violated, Status::range_violated,
                         Status::not_static_stabilizing};
  c.gates = 0;
  c.status = Status::solved;
  for (int k = 0; k < 4; ++k) {
    if (!gates[k]) {
      c.status = fail[k];
      break;
    }
    ++c.gates;
  }
}

// Lexicographic: more gates passed, fewer unstable modes, smaller excess, earlier roots.
bool better(const Candidate& a, const Candidate& b) {
  return std::make_tuple(-a.gates, a.profile.unstable_modes, a.profile.excess, a.p_index,
                         a.phat_index) < std::make_tuple(-b.gates, b.profile.unstable_modes,
                                                         b.profile.excess, b.p_index, b.phat_index);
}

ZeroSumSolution solve_zero_sum(const ZeroSumSpec& z, const SolveOptions& opts, bool open_rep) {
  detail::Stopwatch clock;
  ZeroSumSolution out;
  out.open_rep = open_rep;
  const Eigen::Index n = z.n;
  const std::vector<Mat> starts = detail::multistart_set(n);
  const Mat* theta = opts.free_components ? &opts.free_components->theta : nullptr;
  const Mat* theta_bar = opts.free_components ? &opts.free_components->theta_bar : nullptr;
  const int newton_iter = std::max(50, std::min(opts.max_iter, 200));

  for (const Mat& s0 : starts) {
    const auto r = detail::newton_riccati(z, s0, newton_iter);
    out.meta.iterations += r.iterations;
    if (r.converged && r.residual <= opts.are_tol) detail::add_distinct(out.roots, sym(r.X));
  }
  if (out.roots.empty()) {
    out.status = Status::diverged;
    out.meta.diagnostic = "no root of the P equation reached from the start set";
    out.meta.wall_time_ms = clock.ms();
    return out;
  }

  std::optional<Candidate> best;
  int hat_roots_total = 0;
  for (std::size_t i = 0; i < out.roots.size(); ++i) {
    const Mat& P = out.roots[i];
    std::vector<Mat> hat_roots;
    for (const Mat& s0 : starts) {
      const auto r = detail::newton_riccati_hat(z, P, s0, newton_iter);
      out.meta.iterations += r.iterations;
      if (r.converged && r.residual <= opts.are_tol) detail::add_distinct(hat_roots, sym(r.X));
    }
    hat_roots_total += static_cast<int>(hat_roots.size());
    for (std::size_t j = 0; j < hat_roots.size(); ++j) {
      Candidate c;
      c.p_index = i;
      c.phat_index = j;
      c.P = P;
      c.Phat = hat_roots[j];
      c.terms = riccati_map(z, P);
      c.hat_terms = riccati_hat_map(z, P, c.Phat);
      c.Theta = detail::synthesize_gain(c.terms.Sigma, c.terms.K, theta);
      c.ThetaBar = detail::synthesize_gain(c.hat_terms.Sigma, c.hat_terms.K, theta_bar);
      c.sign_blocks = zero_sum_sign_blocks(z, P);
      c.range_p = range_contains(c.terms.Sigma, c.terms.K);
      c.range_phat = range_contains(c.hat_terms.Sigma, c.hat_terms.K);
      c.cert = check_stabilizer(z, c.Theta, c.ThetaBar);
      c.profile = instability_profile(dynamics_of(z), c.Theta, c.ThetaBar);
      grade(c, open_rep);
      if (!best || better(c, *best)) best = std::move(c);
    }
  }
  if (!best) {
    out.Pc = out.roots.front();
    out.status = Status::diverged;
    out.meta.diagnostic = "no root of the Phat equation for any P root";
    out.meta.wall_time_ms = clock.ms();
    return out;
  }

  out.Pc = best->P;
  out.Pchat = best->Phat;
  out.SigmaC = best->terms.Sigma;
  out.SigmaBarC = best->hat_terms.Sigma;
  out.ThetaStar = best->Theta;
  out.ThetaBarStar = best->ThetaBar;
  for (int k = 0; k < 4; ++k) {
    out.sign_margins[k] = k < 2 ? min_eig_sym(best->sign_blocks[k]) : max_eig_sym(best->sign_blocks[k]);
    out.sign_checks[k] = k < 2 ? out.sign_margins[k] >= -kTauPsd : out.sign_margins[k] <= kTauPsd;
  }
  out.stabilizer = best->cert;
  out.status = best->status;
  out.residuals = are_residuals(out, z);
  out.meta.diagnostic = std::to_string(out.roots.size()) + " P roots, " +
                        std::to_string(hat_roots_total) + " Phat roots examined";
  out.meta.wall_time_ms = clock.ms();
  return out;
}

}  // namespace

ZeroSumSolution solve_zerosum_are(const ZeroSumSpec& z, const SolveOptions& opts) {
  return solve_zero_sum(z, opts, false);
}

ZeroSumSolution solve_zerosum_openrep_are(const ZeroSumSpec& z, const SolveOptions& opts) {
  return solve_zero_sum(z, opts, true);
}

}  // namespace mflq
