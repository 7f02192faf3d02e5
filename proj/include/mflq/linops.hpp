#pragma once

#include <Eigen/Dense>

namespace mflq {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct PinvResult {
  Mat pinv;
  int rank = 0;
  Vec singular_values;
  double tol_used = 0.0;
};

// Singular values below rel_tol * sigma_max are dropped. An exactly zero matrix has rank 0.
PinvResult pinv(const Mat& M, double rel_tol = 1e-10);

struct RangeCheck {
  bool contained = true;
  double residual = 0.0;
};

// ||(I - Sigma Sigma^+) V||_F <= tol * max(1, ||V||_F).
RangeCheck range_contains(const Mat& Sigma, const Mat& V, double tol = 1e-8);

// F X + X F^T = -W. Throws SingularLyapunov when lambda_i + lambda_j = 0 for some pair.
Mat solve_lyapunov(const Mat& F, const Mat& W);

// F X + X F^T + G X G^T = -W. With require_stable the operator must be Hurwitz,
// which is the certificate use; otherwise only invertibility is needed.
Mat solve_stochastic_lyapunov(const Mat& F, const Mat& G, const Mat& W, bool require_stable = false);

// Matrix of X -> F X + X F^T + G X G^T acting on column-major vec(X).
Mat stochastic_operator(const Mat& F, const Mat& G);

// X Fr + Fl^T X + G1^T X G2 + W = 0 for a general (possibly non-symmetric) X.
// Returns false if the n^2 x n^2 system is numerically singular.
bool solve_sylvester_like(const Mat& Fl, const Mat& Fr, const Mat& G1, const Mat& G2, const Mat& W,
                          Mat& X);

double spectral_abscissa(const Mat& F);

inline Mat sym(const Mat& X) { return 0.5 * (X + X.transpose()); }
double min_eig_sym(const Mat& X);
double max_eig_sym(const Mat& X);

}  // namespace mflq
