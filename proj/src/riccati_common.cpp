#include <unsupported/Eigen/KroneckerProduct>

#include "riccati_internal.hpp"
#include "mflq/errors.hpp"

namespace mflq {

const char* to_string(Status s) {
  switch (s) {
    case Status::solved: return "solved";
    case Status::not_static_stabilizing: return "not_static_stabilizing";
    case Status::psd_violated: return "psd_violated";
    case Status::range_violated: return "range_violated";
    case Status::max_iterations: return "max_iterations";
    case Status::diverged: return "diverged";
  }
  return "?";
}

Status status_from(const std::string& s) {
  for (Status st : {Status::solved, Status::not_static_stabilizing, Status::psd_violated,
                    Status::range_violated, Status::max_iterations, Status::diverged})
    if (s == to_string(st)) return st;
  throw Error(Errc::Schema, "unknown status '" + s + "'");
}

RiccatiTerms riccati_map(const LqSpec& s, const Mat& P) {
  RiccatiTerms t;
  t.K = s.B.transpose() * P + s.D.transpose() * P * s.C + s.S;
  t.Sigma = sym(s.R + s.D.transpose() * P * s.D);
  t.Theta = -pinv(t.Sigma).pinv * t.K;
  t.value = sym(P * s.A + s.A.transpose() * P + s.C.transpose() * P * s.C + s.Q +
                t.K.transpose() * t.Theta);
  return t;
}

RiccatiTerms riccati_hat_map(const LqSpec& s, const Mat& P, const Mat& Phat) {
  const LqHat h = hat(s);
  RiccatiTerms t;
  t.K = h.B.transpose() * Phat + h.D.transpose() * P * h.C + h.S;
  t.Sigma = sym(h.R + h.D.transpose() * P * h.D);
  t.Theta = -pinv(t.Sigma).pinv * t.K;
  t.value = sym(Phat * h.A + h.A.transpose() * Phat + h.C.transpose() * P * h.C + h.Q +
                t.K.transpose() * t.Theta);
  return t;
}

StackedBlocks stacked_blocks(const GameSpec& g, const Mat& P1, const Mat& P2) {
  const int m1 = g.m1, m2 = g.m2, m = g.m();
  StackedBlocks b{Mat(m, m), Mat(m, g.n)};
  const Mat D1 = g.D.leftCols(m1), D2 = g.D.rightCols(m2);
  const Mat B1 = g.B.leftCols(m1), B2 = g.B.rightCols(m2);
  b.Sigma.topRows(m1) = g.cost[0].R.topRows(m1) + D1.transpose() * P1 * g.D;
  b.Sigma.bottomRows(m2) = g.cost[1].R.bottomRows(m2) + D2.transpose() * P2 * g.D;
  b.K.topRows(m1) = B1.transpose() * P1 + D1.transpose() * P1 * g.C + g.cost[0].S.topRows(m1);
  b.K.bottomRows(m2) = B2.transpose() * P2 + D2.transpose() * P2 * g.C + g.cost[1].S.bottomRows(m2);
  return b;
}

StackedBlocks stacked_hat_blocks(const GameSpec& g, const Mat& P1, const Mat& P2, const Mat& P1hat,
                                 const Mat& P2hat) {
  const HatCoefficients h = hat(g);
  const int m1 = g.m1, m2 = g.m2, m = g.m();
  StackedBlocks b{Mat(m, m), Mat(m, g.n)};
  const Mat D1 = h.D.leftCols(m1), D2 = h.D.rightCols(m2);
  const Mat B1 = h.B.leftCols(m1), B2 = h.B.rightCols(m2);
  b.Sigma.topRows(m1) = h.player[0].R.topRows(m1) + D1.transpose() * P1 * h.D;
  b.Sigma.bottomRows(m2) = h.player[1].R.bottomRows(m2) + D2.transpose() * P2 * h.D;
  b.K.topRows(m1) = B1.transpose() * P1hat + D1.transpose() * P1 * h.C + h.player[0].S.topRows(m1);
  b.K.bottomRows(m2) =
      B2.transpose() * P2hat + D2.transpose() * P2 * h.C + h.player[1].S.bottomRows(m2);
  return b;
}

std::array<Mat, 4> zero_sum_sign_blocks(const ZeroSumSpec& z, const Mat& P) {
  const LqHat h = hat(z);
  const int m1 = z.m1, m2 = z.m2;
  const Mat D1 = z.D.leftCols(m1), D2 = z.D.rightCols(m2);
  const Mat Dh1 = h.D.leftCols(m1), Dh2 = h.D.rightCols(m2);
  return {sym(z.R.topLeftCorner(m1, m1) + D1.transpose() * P * D1),
          sym(h.R.topLeftCorner(m1, m1) + Dh1.transpose() * P * Dh1),
          sym(z.R.bottomRightCorner(m2, m2) + D2.transpose() * P * D2),
          sym(h.R.bottomRightCorner(m2, m2) + Dh2.transpose() * P * Dh2)};
}

namespace detail {

Mat linearized_solve(const Mat& Fl, const Mat& Fr, const Mat& G1, const Mat& G2, const Mat& W) {
  Mat X;
  if (solve_sylvester_like(Fl, Fr, G1, G2, W, X)) return X;
  const Eigen::Index n = W.rows();
  const Mat I = Mat::Identity(n, n);
  Mat M = Eigen::kroneckerProduct(Fr.transpose(), I);
  M += Eigen::kroneckerProduct(I, Fl.transpose());
  if (G1.size() && G2.size()) M += Eigen::kroneckerProduct(G2.transpose(), G1.transpose());
  const Vec rhs = -Eigen::Map<const Vec>(W.data(), W.size());
  const Vec x = M.completeOrthogonalDecomposition().solve(rhs);
  return Eigen::Map<const Mat>(x.data(), n, n);
}

Mat synthesize_gain(const Mat& Sigma, const Mat& K, const Mat* theta) {
  const Mat Sp = pinv(Sigma).pinv;
  Mat G = -Sp * K;
  if (theta && theta->size()) {
    const Mat I = Mat::Identity(Sigma.rows(), Sigma.rows());
    G += (I - Sp * Sigma) * (*theta);
  }
  return G;
}

namespace {

// Damped Newton with an extra trial at twice the step. For a double root the plain step
// only halves the error; the doubled step lands on the root of a quadratic exactly.
template <typename MapFn, typename StepFn>
NewtonOutcome newton_generic(const Mat& start, int max_iter, MapFn&& value_of, StepFn&& step_of) {
  NewtonOutcome out;
  out.X = start;
  out.residual = value_of(out.X).norm();
  const double scale_floor = 1e-14;
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    if (!std::isfinite(out.residual) || out.X.norm() > 1e10) return out;
    if (out.residual <= scale_floor * (1.0 + out.X.norm())) break;
    const Mat step = sym(step_of(out.X));
    if (!step.allFinite()) return out;
    Mat best = out.X;
    double best_r = out.residual;
    for (double a : {1.0, 2.0}) {
      const Mat trial = out.X + a * step;
      const double r = value_of(trial).norm();
      if (r < best_r) {
        best = trial;
        best_r = r;
      }
    }
    for (double a = 0.5; best_r >= out.residual && a > 1e-4; a *= 0.5) {
      const Mat trial = out.X + a * step;
      const double r = value_of(trial).norm();
      if (r < best_r) {
        best = trial;
        best_r = r;
      }
    }
    if (best_r >= out.residual) break;  // stagnation
    out.X = best;
    out.residual = best_r;
  }
  out.converged = out.residual <= 1e-9 * (1.0 + out.X.norm());
  return out;
}

}  // namespace

NewtonOutcome newton_riccati(const LqSpec& s, const Mat& start, int max_iter) {
  return newton_generic(
      start, max_iter, [&](const Mat& P) { return riccati_map(s, P).value; },
      [&](const Mat& P) {
        const RiccatiTerms t = riccati_map(s, P);
        const Mat At = s.A + s.B * t.Theta;
        const Mat Ct = s.C + s.D * t.Theta;
        return linearized_solve(At, At, Ct, Ct, t.value);
      });
}

NewtonOutcome newton_riccati_hat(const LqSpec& s, const Mat& P, const Mat& start, int max_iter) {
  const LqHat h = hat(s);
  return newton_generic(
      start, max_iter, [&](const Mat& Ph) { return riccati_hat_map(s, P, Ph).value; },
      [&](const Mat& Ph) {
        const RiccatiTerms t = riccati_hat_map(s, P, Ph);
        const Mat Acl = h.A + h.B * t.Theta;
        return linearized_solve(Acl, Acl, Mat(), Mat(), t.value);
      });
}

std::vector<Mat> multistart_set(Eigen::Index n) {
  const Mat I = Mat::Identity(n, n);
  std::vector<Mat> starts{Mat::Zero(n, n)};
  for (double a : {0.1, 1.0, 10.0}) {
    starts.push_back(a * I);
    starts.push_back(-a * I);
  }
  return starts;
}

std::size_t add_distinct(std::vector<Mat>& roots, const Mat& X) {
  for (std::size_t k = 0; k < roots.size(); ++k)
    if ((roots[k] - X).norm() <= 1e-6 * (1.0 + X.norm())) return k;
  roots.push_back(X);
  return roots.size() - 1;
}

}  // namespace detail
}  // namespace mflq
