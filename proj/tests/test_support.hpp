#pragma once

#include <gtest/gtest.h>

#include <random>
#include <string>

#include "mflq/io.hpp"

namespace mflq::testing {

inline std::string fixture(const std::string& name) { return std::string(MFLQ_FIXTURES) + "/" + name; }

inline GameSpec load_game(const std::string& name) { return load_problem(fixture(name)).spec; }
inline ZeroSumSpec load_zero_sum(const std::string& name) { return zero_sum_reduce(load_game(name)); }

inline Mat random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> N(0.0, scale);
  Mat M(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) M(i, j) = N(rng);
  return M;
}

inline double max_abs_diff(const Mat& A, const Mat& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) return 1e300;
  return A.size() ? (A - B).cwiseAbs().maxCoeff() : 0.0;
}

inline Mat mat2(double a, double b, double c, double d) {
  Mat M(2, 2);
  M << a, b, c, d;
  return M;
}

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace mflq::testing

#define EXPECT_MAT_NEAR(A, B, tol) EXPECT_LE(::mflq::testing::max_abs_diff((A), (B)), (tol)) << #A " vs " #B
