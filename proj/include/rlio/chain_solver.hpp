#pragma once

#include <vector>

#include <Eigen/Core>

#include "rlio/types.hpp"

namespace rlio {

using Mat15 = Eigen::Matrix<double, 15, 15>;
using Mat15x2 = Eigen::Matrix<double, 15, 2>;
using Mat2 = Eigen::Matrix2d;

/// Normal equations of a sliding window: block-tridiagonal over the node
/// states (15 dims each) bordered by the 2-dim gravity variable.
///
///   [ T   C ] [dx]   [ b  ]
///   [ C^T G ] [dg] = [ bg ]
///
/// T has diagonal blocks D[i] and subdiagonal blocks B[i] = H(i+1, i).
struct ChainSystem {
  std::vector<Mat15> D;
  std::vector<Mat15> B;     // size D.size() - 1
  std::vector<Mat15x2> C;   // size D.size()
  Mat2 G = Mat2::Zero();
  std::vector<Vec15> b;     // size D.size()
  Vec2 bg = Vec2::Zero();

  void resize(size_t n);
  size_t size() const { return D.size(); }
};

/// Solve the Levenberg-Marquardt step (H + lambda * diag(H)) x = b by block
/// Cholesky on the tridiagonal part and Schur elimination of the border.
/// Returns false if a block factorization fails (caller raises damping).
bool solve_chain(const ChainSystem& sys, double lambda,
                 std::vector<Vec15>* dx, Vec2* dg);

/// Marginalize the leading head_dim variables of the quadratic
/// cost(d) = 1/2 d^T H d - b^T d, returning the reduced (H, b).
void schur_marginalize(const Eigen::MatrixXd& H, const Eigen::VectorXd& b,
                       int head_dim, Eigen::MatrixXd* H_out,
                       Eigen::VectorXd* b_out);

}  // namespace rlio
