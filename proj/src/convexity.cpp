#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mflq/equilibrium.hpp"
#include "mflq/errors.hpp"

namespace mflq {

// Discretized second variation of u_i -> J_i^0 on [0, T].
//
// Basis on each grid interval [t_k, t_k + h): a deterministic constant w_k and a zero-mean
// part c_k sqrt(2/h) (W(t) - W(t_k)); both have unit L2(Omega x [t_k, t_k+h)) norm per unit
// coefficient. For such controls the second moment E[X X'] is driven by
//   m = E[X],   r = E[X (W(t) - W(t_k))] (reset to 0 at every t_k),
// and the adjoint Psi of the stochastic Lyapunov flow turns E<QX,X> into a quadratic form
// in (m, r, w, c). So J = int xi(t)' G(t) xi(t) dt with xi linear in the coefficients.

namespace {

struct Homogeneous {
  Mat A, Abar, C, Cbar;
  Mat B, Bbar, D, Dbar;  // player columns only
  Mat Q, Qbar, S, Sbar, R, Rbar;  // S: p x n player rows, R: p x p
};

Homogeneous restrict(const LqSpec& s, Eigen::Index col, Eigen::Index p) {
  Homogeneous h;
  h.A = s.A;
  h.Abar = s.Abar;
  h.C = s.C;
  h.Cbar = s.Cbar;
  h.B = s.B.middleCols(col, p);
  h.Bbar = s.Bbar.middleCols(col, p);
  h.D = s.D.middleCols(col, p);
  h.Dbar = s.Dbar.middleCols(col, p);
  h.Q = s.Q;
  h.Qbar = s.Qbar;
  h.S = s.S.middleRows(col, p);
  h.Sbar = s.Sbar.middleRows(col, p);
  h.R = s.R.block(col, col, p, p);
  h.Rbar = s.Rbar.block(col, col, p, p);
  return h;
}

// Integrand as a function of xi = (m, r, w, c) at elapsed interval time tau.
double integrand(const Homogeneous& s, const Mat& Psi, double tau, const Vec& xi) {
  const Eigen::Index n = s.A.rows(), p = s.B.cols();
  const Vec m = xi.segment(0, n), r = xi.segment(n, n), w = xi.segment(2 * n, p),
            c = xi.segment(2 * n + p, p);
  const Mat Exu = m * w.transpose() + r * c.transpose();
  const Mat Euu = w * w.transpose() + tau * c * c.transpose();
  const Vec h = s.Cbar * m + s.Dbar * w;
  const Vec a = s.C * m + s.D * w;
  const Mat mm = m * m.transpose();
  const Mat wm = w * m.transpose();
  Mat F = s.Abar * mm + s.B * Exu.transpose() + s.Bbar * wm + s.C * Exu * s.D.transpose() +
          a * h.transpose();
  F += F.transpose().eval();
  F += s.D * Euu * s.D.transpose() + h * h.transpose();
  return (Psi * F).trace() + 2.0 * (s.S * Exu).trace() + (s.R * Euu).trace() + m.dot(s.Qbar * m) +
         2.0 * w.dot(s.Sbar * m) + w.dot(s.Rbar * w);
}

Mat gram(const Homogeneous& s, const Mat& Psi, double tau, Eigen::Index k) {
  Mat G(k, k);
  Vec diag(k);
  for (Eigen::Index a = 0; a < k; ++a) diag(a) = integrand(s, Psi, tau, Vec::Unit(k, a));
  for (Eigen::Index a = 0; a < k; ++a) {
    G(a, a) = diag(a);
    for (Eigen::Index b = a + 1; b < k; ++b) {
      const double lab = integrand(s, Psi, tau, Vec::Unit(k, a) + Vec::Unit(k, b));
      G(a, b) = G(b, a) = 0.5 * (lab - diag(a) - diag(b));
    }
  }
  return G;
}

Mat psi_drift(const Homogeneous& s, const Mat& Psi) {
  return s.A.transpose() * Psi + Psi * s.A + s.C.transpose() * Psi * s.C + s.Q;
}

ConvexityReport check(const Homogeneous& s, const ConvexityGrid& grid) {
  if (!(grid.T > 0) || grid.N < 1) throw Error(Errc::DimensionMismatch, "convexity grid needs T > 0, N >= 1");
  const Eigen::Index n = s.A.rows(), p = s.B.cols();
  const Mat Ahat = s.A + s.Abar, Bhat = s.B + s.Bbar, Chat = s.C + s.Cbar, Dhat = s.D + s.Dbar;
  const double growth = std::max(spectral_abscissa(Ahat), spectral_abscissa(stochastic_operator(s.A, s.C)));
  if (growth > 0)
    throw Error(Errc::UnstableHomogeneousSystem,
                "homogeneous moments grow at rate " + std::to_string(growth));

  constexpr int kSub = 4;  // RK4 substeps per interval; Simpson on 5 nodes
  const int N = grid.N;
  const double h = grid.T / N, dt = h / kSub, scale = std::sqrt(2.0 / h);
  const Eigen::Index d = 2 * p * N, k = 2 * n + 2 * p;

  // Psi at every node, backward from Psi(T) = 0.
  std::vector<Mat> psi(kSub * N + 1);
  psi.back() = Mat::Zero(n, n);
  for (int j = kSub * N; j > 0; --j) {
    const Mat& y = psi[j];
    const Mat k1 = psi_drift(s, y);
    const Mat k2 = psi_drift(s, y + 0.5 * dt * k1);
    const Mat k3 = psi_drift(s, y + 0.5 * dt * k2);
    const Mat k4 = psi_drift(s, y + dt * k3);
    psi[j - 1] = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }

  Mat Ym = Mat::Zero(n, d), Yr = Mat::Zero(n, d);
  Mat H = Mat::Zero(d, d);
  const double wts[] = {1, 4, 2, 4, 1};
  for (int iv = 0; iv < N; ++iv) {
    const Eigen::Index act = 2 * p * (iv + 1);
    const Eigen::Index wcol = 2 * p * iv, ccol = wcol + p;
    Mat W = Mat::Zero(p, act), Cs = Mat::Zero(p, act);
    W.middleCols(wcol, p).setIdentity();
    Cs.middleCols(ccol, p) = scale * Mat::Identity(p, p);
    Yr.setZero();
    auto f = [&](const Mat& m, const Mat& r, double tau, Mat& dm, Mat& dr) {
      dm = Ahat * m + Bhat * W;
      dr = s.A * r + tau * s.B * Cs + Chat * m + Dhat * W;
    };
    auto accumulate = [&](int node, double tau, double wt) {
      Mat Y(k, act);
      Y << Ym.leftCols(act), Yr.leftCols(act), W, Cs;
      const Mat G = gram(s, psi[kSub * iv + node], tau, k);
      H.topLeftCorner(act, act).noalias() += wt * (h / 12.0) * (Y.transpose() * (G * Y));
    };
    accumulate(0, 0.0, wts[0]);
    for (int j = 0; j < kSub; ++j) {
      const double tau = j * dt;
      Mat m = Ym.leftCols(act), r = Yr.leftCols(act);
      Mat m1, r1, m2, r2, m3, r3, m4, r4;
      f(m, r, tau, m1, r1);
      f(m + 0.5 * dt * m1, r + 0.5 * dt * r1, tau + 0.5 * dt, m2, r2);
      f(m + 0.5 * dt * m2, r + 0.5 * dt * r2, tau + 0.5 * dt, m3, r3);
      f(m + dt * m3, r + dt * r3, tau + dt, m4, r4);
      Ym.leftCols(act) = m + dt / 6.0 * (m1 + 2 * m2 + 2 * m3 + m4);
      Yr.leftCols(act) = r + dt / 6.0 * (r1 + 2 * r2 + 2 * r3 + r4);
      accumulate(j + 1, tau + dt, wts[j + 1]);
    }
    if (!Ym.allFinite() || !Yr.allFinite())
      throw Error(Errc::UnstableHomogeneousSystem, "homogeneous moments diverged before T");
  }
  H = 2.0 * 0.5 * (H + H.transpose());  // Hessian of the quadratic form

  Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
  ConvexityReport out;
  out.grid = grid;
  out.basis_size = static_cast<int>(d);
  out.min_eigenvalue = es.eigenvalues().minCoeff();
  out.max_eigenvalue = es.eigenvalues().maxCoeff();
  out.hessian_norm = std::max(std::abs(out.min_eigenvalue), std::abs(out.max_eigenvalue));
  const double tol = 1e-7 * out.hessian_norm;
  if (out.min_eigenvalue >= -tol) {
    out.verdict = ConvexityVerdict::convex;
    out.margin = out.min_eigenvalue;
  } else if (out.max_eigenvalue <= tol) {
    out.verdict = ConvexityVerdict::concave;
    out.margin = -out.max_eigenvalue;
  } else {
    out.verdict = ConvexityVerdict::indefinite;
    out.margin = -std::min(-out.min_eigenvalue, out.max_eigenvalue);
  }
  return out;
}

void require_player(int player) {
  if (player != 1 && player != 2) throw Error(Errc::DimensionMismatch, "player must be 1 or 2");
}

}  // namespace

const char* to_string(ConvexityVerdict v) {
  switch (v) {
    case ConvexityVerdict::convex: return "convex";
    case ConvexityVerdict::concave: return "concave";
    case ConvexityVerdict::indefinite: return "indefinite";
  }
  return "?";
}

ConvexityReport convexity_check(const GameSpec& g, int player, const ConvexityGrid& grid) {
  require_player(player);
  const LqSpec v = player_view(g, player);
  return player == 1 ? check(restrict(v, 0, g.m1), grid) : check(restrict(v, g.m1, g.m2), grid);
}

ConvexityReport convexity_check(const ZeroSumSpec& z, int player, const ConvexityGrid& grid) {
  require_player(player);
  return player == 1 ? check(restrict(z, 0, z.m1), grid) : check(restrict(z, z.m1, z.m2), grid);
}

}  // namespace mflq
