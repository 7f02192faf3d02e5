#include "mflq/linops.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>
#include <unsupported/Eigen/KroneckerProduct>
#include <cmath>
#include <limits>

#include "mflq/errors.hpp"

namespace mflq {

namespace {

constexpr double kRcondFloor = 1e-13;

Mat unvec(const Vec& v, Eigen::Index n) { return Eigen::Map<const Mat>(v.data(), n, n); }

Vec vec(const Mat& X) { return Eigen::Map<const Vec>(X.data(), X.size()); }

// Solves M x = b with one step of iterative refinement; false if M is numerically singular.
bool dense_solve(const Mat& M, const Vec& b, Vec& x) {
  Eigen::PartialPivLU<Mat> lu(M);
  // rcond() misses exact zero pivots, so the pivot ratio is checked as well.
  const Vec piv = lu.matrixLU().diagonal().cwiseAbs();
  if (piv.size() && !(piv.minCoeff() > kRcondFloor * piv.maxCoeff())) return false;
  if (!(lu.rcond() > kRcondFloor)) return false;
  x = lu.solve(b);
  x += lu.solve(b - M * x);
  return x.allFinite();
}

}  // namespace

PinvResult pinv(const Mat& M, double rel_tol) {
  PinvResult out;
  out.pinv = Mat::Zero(M.cols(), M.rows());
  if (M.size() == 0) return out;
  Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.singular_values = svd.singularValues();
  const double smax = out.singular_values.size() ? out.singular_values(0) : 0.0;
  out.tol_used = rel_tol * smax;
  for (Eigen::Index k = 0; k < out.singular_values.size(); ++k) {
    const double s = out.singular_values(k);
    if (s > out.tol_used && s > 0.0) {
      out.pinv += svd.matrixV().col(k) * (1.0 / s) * svd.matrixU().col(k).transpose();
      ++out.rank;
    }
  }
  return out;
}

RangeCheck range_contains(const Mat& Sigma, const Mat& V, double tol) {
  RangeCheck rc;
  if (V.size() == 0) return rc;
  const Mat P = Sigma * pinv(Sigma).pinv;
  rc.residual = (V - P * V).norm();
  rc.contained = rc.residual <= tol * std::max(1.0, V.norm());
  return rc;
}

Mat stochastic_operator(const Mat& F, const Mat& G) {
  const Eigen::Index n = F.rows();
  const Mat I = Mat::Identity(n, n);
  Mat M = Eigen::kroneckerProduct(I, F);
  M += Eigen::kroneckerProduct(F, I);
  if (G.size()) M += Eigen::kroneckerProduct(G, G);
  return M;
}

Mat solve_lyapunov(const Mat& F, const Mat& W) {
  const Eigen::Index n = F.rows();
  if (F.cols() != n || W.rows() != n || W.cols() != n)
    throw Error(Errc::DimensionMismatch, "solve_lyapunov: F and W must be square of equal size");
  Vec x;
  if (!dense_solve(stochastic_operator(F, Mat()), -vec(W), x))
    throw Error(Errc::SingularLyapunov, "F has an eigenvalue pair summing to zero");
  Mat X = sym(unvec(x, n));
  const double res = (F * X + X * F.transpose() + W).norm();
  if (!(res <= 1e-10 * (1.0 + W.norm()) * std::max(1.0, F.norm())))
    throw Error(Errc::SingularLyapunov, "residual " + std::to_string(res) + " after refinement");
  return X;
}

Mat solve_stochastic_lyapunov(const Mat& F, const Mat& G, const Mat& W, bool require_stable) {
  const Eigen::Index n = F.rows();
  if (F.cols() != n || G.rows() != n || G.cols() != n || W.rows() != n || W.cols() != n)
    throw Error(Errc::DimensionMismatch, "solve_stochastic_lyapunov: shapes disagree");
  const Mat L = stochastic_operator(F, G);
  if (require_stable && spectral_abscissa(L) >= 0.0)
    throw Error(Errc::UnstableOperator, "stochastic Lyapunov operator is not Hurwitz");
  Vec x;
  if (!dense_solve(L, -vec(W), x))
    throw Error(Errc::SingularOperator, "stochastic Lyapunov operator is singular");
  return sym(unvec(x, n));
}

bool solve_sylvester_like(const Mat& Fl, const Mat& Fr, const Mat& G1, const Mat& G2, const Mat& W,
                          Mat& X) {
  const Eigen::Index n = W.rows();
  const Mat I = Mat::Identity(n, n);
  Mat M = Eigen::kroneckerProduct(Fr.transpose(), I);
  M += Eigen::kroneckerProduct(I, Fl.transpose());
  if (G1.size() && G2.size()) M += Eigen::kroneckerProduct(G2.transpose(), G1.transpose());
  Vec x;
  if (!dense_solve(M, -vec(W), x)) return false;
  X = unvec(x, n);
  return true;
}

double spectral_abscissa(const Mat& F) {
  if (F.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Mat> es(F, false);
  return es.eigenvalues().real().maxCoeff();
}

double min_eig_sym(const Mat& X) {
  if (X.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(X), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eig_sym(const Mat& X) {
  if (X.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(X), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

const char* to_string(Errc c) {
  switch (c) {
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonFinite: return "NonFinite";
    case Errc::AsymmetryExceedsTolerance: return "AsymmetryExceedsTolerance";
    case Errc::NotZeroSum: return "NotZeroSum";
    case Errc::SingularLyapunov: return "SingularLyapunov";
    case Errc::SingularOperator: return "SingularOperator";
    case Errc::UnstableOperator: return "UnstableOperator";
    case Errc::NotSolved: return "NotSolved";
    case Errc::ResolventSingular: return "ResolventSingular";
    case Errc::RangeConditionFailed: return "RangeConditionFailed";
    case Errc::UnstableHomogeneousSystem: return "UnstableHomogeneousSystem";
    case Errc::NonFiniteState: return "NonFiniteState";
    case Errc::Schema: return "Schema";
  }
  return "Unknown";
}

}  // namespace mflq
