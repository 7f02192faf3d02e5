#include <Eigen/Cholesky>
#include <algorithm>
#include <optional>
#include <cmath>

#include "riccati_internal.hpp"

namespace mflq {

namespace {

struct Pair {
  Mat P, Phat;
  double norm() const { return P.norm() + Phat.norm(); }
};

// Right-hand side of the reverse-time differential Riccati pair with R, Rhat shifted by eps.
// Returns false when either Sigma fails to be positive definite.
bool drift(const LqSpec& s, const LqHat& h, double eps, const Pair& y, Pair& dy) {
  const Eigen::Index m = s.m();
  const Mat Im = Mat::Identity(m, m);
  const Mat K = s.B.transpose() * y.P + s.D.transpose() * y.P * s.C + s.S;
  const Mat Sig = s.R + eps * Im + s.D.transpose() * y.P * s.D;
  Eigen::LLT<Mat> llt(sym(Sig));
  if (llt.info() != Eigen::Success) return false;
  dy.P = sym(y.P * s.A + s.A.transpose() * y.P + s.C.transpose() * y.P * s.C + s.Q -
             K.transpose() * llt.solve(K));
  const Mat Kh = h.B.transpose() * y.Phat + h.D.transpose() * y.P * h.C + h.S;
  const Mat SigH = h.R + eps * Im + h.D.transpose() * y.P * h.D;
  Eigen::LLT<Mat> lltH(sym(SigH));
  if (lltH.info() != Eigen::Success) return false;
  dy.Phat = sym(y.Phat * h.A + h.A.transpose() * y.Phat + h.C.transpose() * y.P * h.C + h.Q -
                Kh.transpose() * lltH.solve(Kh));
  return dy.P.allFinite() && dy.Phat.allFinite();
}

bool rk4(const LqSpec& s, const LqHat& h, double eps, const Pair& y, double dt, Pair& out) {
  Pair k1, k2, k3, k4;
  auto shift = [](const Pair& a, const Pair& k, double c) { return Pair{a.P + c * k.P, a.Phat + c * k.Phat}; };
  if (!drift(s, h, eps, y, k1)) return false;
  if (!drift(s, h, eps, shift(y, k1, dt / 2), k2)) return false;
  if (!drift(s, h, eps, shift(y, k2, dt / 2), k3)) return false;
  if (!drift(s, h, eps, shift(y, k3, dt), k4)) return false;
  out.P = y.P + dt / 6 * (k1.P + 2 * k2.P + 2 * k3.P + k4.P);
  out.Phat = y.Phat + dt / 6 * (k1.Phat + 2 * k2.Phat + 2 * k3.Phat + k4.Phat);
  return true;
}

enum class Stop { horizon, steady };

// Adaptive RK4 with step doubling. Stops at s = T (horizon) or once the drift norm is at
// most steady_tol (steady). Returns false on loss of definiteness or step collapse.
bool integrate(const LqSpec& s, double eps, Stop mode, double T, double steady_tol, double step_tol,
               Pair& y, int& steps) {
  const LqHat h = hat(s);
  y = Pair{Mat::Zero(s.n, s.n), Mat::Zero(s.n, s.n)};
  double t = 0.0, dt = 1e-2;
  const double t_max = mode == Stop::horizon ? T : 1e5;
  for (steps = 0; steps < 5'000'000; ++steps) {
    if (mode == Stop::steady) {
      Pair dy;
      if (!drift(s, h, eps, y, dy)) return false;
      if (dy.norm() <= steady_tol) return true;
    }
    if (t >= t_max) return mode == Stop::horizon;
    dt = std::min(dt, t_max - t);
    Pair full, half, two;
    if (!rk4(s, h, eps, y, dt, full) || !rk4(s, h, eps, y, dt / 2, half) ||
        !rk4(s, h, eps, half, dt / 2, two)) {
      dt *= 0.25;
      if (dt < 1e-12) return false;
      continue;
    }
    const double err = (Pair{two.P - full.P, two.Phat - full.Phat}.norm()) / 15.0;
    const double tol = step_tol * (1.0 + two.norm());
    const double fac = err > 0 ? 0.9 * std::pow(tol / err, 0.2) : 4.0;
    if (err <= tol) {
      y.P = two.P + (two.P - full.P) / 15.0;
      y.Phat = two.Phat + (two.Phat - full.Phat) / 15.0;
      t += dt;
      dt *= std::clamp(fac, 1.0, 4.0);
    } else {
      dt *= std::clamp(fac, 0.1, 0.9);
      if (dt < 1e-12) return false;
    }
  }
  return false;
}

// Adding eps to R shifts both Sigma and Sigma-bar by eps, as in drift().
LqSpec regularized(const LqSpec& s, double eps) {
  LqSpec r = s;
  r.R += eps * Mat::Identity(s.m(), s.m());
  return r;
}

// Newton on the regularized pair from a point inside the basin. Keeps y unless the
// residuals drop to tol with both Sigmas still positive definite.
void settle(const LqSpec& r, Pair& y, double tol) {
  const auto np = detail::newton_riccati(r, y.P, 20);
  if (!(np.residual <= tol)) return;
  const Mat P = sym(np.X);
  const auto nh = detail::newton_riccati_hat(r, P, y.Phat, 20);
  if (!(nh.residual <= tol)) return;
  const Mat Phat = sym(nh.X);
  if (min_eig_sym(riccati_map(r, P).Sigma) <= 0.0 || min_eig_sym(riccati_hat_map(r, P, Phat).Sigma) <= 0.0) return;
  y = Pair{P, Phat};
}

}  // namespace

FiniteHorizonResult finite_horizon_control(const ControlSpec& s, double T, double eps,
                                           double step_tol) {
  FiniteHorizonResult r;
  Pair y;
  int steps = 0;
  r.ok = integrate(s, eps, Stop::horizon, T, 0.0, step_tol, y, steps);
  r.P = y.P;
  r.Phat = y.Phat;
  return r;
}

ControlAreSolution solve_control_are(const ControlSpec& s, const SolveOptions& opts) {
  detail::Stopwatch clock;
  ControlAreSolution out;
  std::optional<Pair> prev;
  Pair y;
  bool chained = false;
  for (double eps = 1e-1; eps >= opts.eps_min * (1 - 1e-9); eps *= 0.1) {
    int steps = 0;
    // Near equilibrium adaptive RK4 hovers at its stability limit, so the flow only has to
    // enter the basin; Newton on the regularized pair then settles it to ode_tol.
    const double enter_tol = std::max(opts.ode_tol, 1e-7);
    if (!integrate(s, eps, Stop::steady, 0.0, enter_tol, 1e-10, y, steps)) {
      out.status = Status::diverged;
      out.meta.diagnostic = "regularized Riccati flow lost definiteness or did not settle at eps=" +
                            std::to_string(eps);
      out.meta.wall_time_ms = clock.ms();
      return out;
    }
    if (enter_tol > opts.ode_tol) settle(regularized(s, eps), y, opts.ode_tol);
    out.meta.iterations += steps;
    out.meta.eps_chain.push_back(eps);
    if (prev && (y.P - prev->P).norm() + (y.Phat - prev->Phat).norm() <= opts.eps_chain_tol) {
      chained = true;
      break;
    }
    prev = y;
  }
  if (!chained) out.meta.diagnostic = "eps chain reached eps_min before settling";

  // The chain leaves an O(eps) bias; Newton on the unregularized pair removes it.
  Mat P = y.P, Phat = y.Phat;
  const auto np = detail::newton_riccati(s, P, 50);
  if (np.residual < riccati_map(s, P).value.norm()) P = sym(np.X);
  const auto nh = detail::newton_riccati_hat(s, P, Phat, 50);
  if (nh.residual < riccati_hat_map(s, P, Phat).value.norm()) Phat = sym(nh.X);

  const RiccatiTerms t = riccati_map(s, P);
  const RiccatiTerms th = riccati_hat_map(s, P, Phat);
  out.P = P;
  out.Phat = Phat;
  out.Sigma = t.Sigma;
  out.SigmaBar = th.Sigma;
  const Mat* theta = opts.free_components ? &opts.free_components->theta : nullptr;
  const Mat* theta_bar = opts.free_components ? &opts.free_components->theta_bar : nullptr;
  out.Theta = detail::synthesize_gain(t.Sigma, t.K, theta);
  out.ThetaBar = detail::synthesize_gain(th.Sigma, th.K, theta_bar);
  out.residuals = are_residuals(out, s);
  out.stabilizer = check_stabilizer(s, out.Theta, out.ThetaBar);

  if (std::max(out.residuals["are1"], out.residuals["are2"]) > opts.are_tol)
    out.status = Status::max_iterations;
  else if (min_eig_sym(out.Sigma) < -kTauPsd || min_eig_sym(out.SigmaBar) < -kTauPsd)
    out.status = Status::psd_violated;
  else if (!range_contains(out.Sigma, t.K).contained || !range_contains(out.SigmaBar, th.K).contained)
    out.status = Status::range_violated;
  else if (!out.stabilizer.is_stabilizer)
    out.status = Status::not_static_stabilizing;
  else
    out.status = Status::solved;
  out.meta.wall_time_ms = clock.ms();
  return out;
}

}  // namespace mflq
