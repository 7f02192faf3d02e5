#pragma once

#include <chrono>
#include <vector>

#include "mflq/riccati.hpp"

namespace mflq::detail {

class Stopwatch {
 public:
  Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
  double ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

struct NewtonOutcome {
  Mat X;
  double residual = 0.0;
  bool converged = false;
  int iterations = 0;
};

// Newton on the symmetric Riccati map for P, from a given start.
NewtonOutcome newton_riccati(const LqSpec& s, const Mat& start, int max_iter);
// Newton on the hatted map for Phat with P frozen.
NewtonOutcome newton_riccati_hat(const LqSpec& s, const Mat& P, const Mat& start, int max_iter);

// Start set {0, +a I, -a I} for a in {0.1, 1, 10}, in that order.
std::vector<Mat> multistart_set(Eigen::Index n);

// Appends X unless within 1e-6 (1 + ||X||) of an existing entry; returns its index.
std::size_t add_distinct(std::vector<Mat>& roots, const Mat& X);

// Solves X Fr + Fl' X + G1' X G2 = -W, falling back to least squares when singular.
Mat linearized_solve(const Mat& Fl, const Mat& Fr, const Mat& G1, const Mat& G2, const Mat& W);

// -Sigma^+ K + (I - Sigma^+ Sigma) theta.
Mat synthesize_gain(const Mat& Sigma, const Mat& K, const Mat* theta);

}  // namespace mflq::detail
