#pragma once

// Scalar-generic kernels for linear rate systems dL/dt = M L. These carry no
// model knowledge; the dynamics module wraps them with the domain types.

#include "nvdyn/types.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace nvdyn::linalg {

/// exp(M t) via Pade scaling-and-squaring.
template <typename Derived>
auto transition_matrix(const Eigen::MatrixBase<Derived>& generator, typename Derived::Scalar t) {
  using Scalar = typename Derived::Scalar;
  using Mat = Eigen::Matrix<Scalar, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>;
  if (t == Scalar(0)) return Mat(Mat::Identity(generator.rows(), generator.cols()));
  return Mat((generator * t).exp());
}

/// Normalized null vector of a column-stochastic generator or, with
/// `shift_identity`, the fixed point of a transition matrix (solves (U - I) v = 0).
/// The last balance row is replaced by the normalization constraint sum(v) = 1.
/// Returns false when the bordered system is singular.
template <typename Scalar, int N>
bool stationary_vector(const Eigen::Matrix<Scalar, N, N>& m, Eigen::Matrix<Scalar, N, 1>& out,
                       bool shift_identity = false, Scalar rcond_floor = Scalar(1e-16)) {
  using Mat = Eigen::Matrix<Scalar, N, N>;
  using Vec = Eigen::Matrix<Scalar, N, 1>;
  Mat a = m;
  if (shift_identity) a -= Mat::Identity();
  // Scale rows so the matrix is O(1) before adding the normalization row.
  const Scalar scale = a.cwiseAbs().maxCoeff();
  if (!(scale > Scalar(0)) || !std::isfinite(static_cast<double>(scale))) return false;
  a /= scale;
  a.row(N - 1).setOnes();
  Vec rhs = Vec::Zero();
  rhs(N - 1) = Scalar(1);
  Eigen::FullPivLU<Mat> lu(a);
  if (static_cast<double>(lu.rcond()) < static_cast<double>(rcond_floor)) return false;
  out = lu.solve(rhs);
  return out.allFinite();
}

} // namespace nvdyn::linalg
