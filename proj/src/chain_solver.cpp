#include "rlio/chain_solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace rlio {

void ChainSystem::resize(size_t n) {
  D.assign(n, Mat15::Zero());
  B.assign(n > 0 ? n - 1 : 0, Mat15::Zero());
  C.assign(n, Mat15x2::Zero());
  G.setZero();
  b.assign(n, Vec15::Zero());
  bg.setZero();
}

bool solve_chain(const ChainSystem& sys, double lambda,
                 std::vector<Vec15>* dx, Vec2* dg) {
  const size_t n = sys.size();
  if (n == 0) return false;

  // Damped diagonal blocks (Marquardt scaling with an absolute floor so
  // unconstrained directions stay solvable).
  auto damped = [&](const auto& M) {
    auto out = M.eval();
    for (int k = 0; k < out.rows(); ++k) {
      out(k, k) += lambda * std::max(out(k, k), 1e-9);
    }
    return out;
  };

  std::vector<Eigen::LLT<Mat15>> L(n);
  std::vector<Mat15> M(n > 1 ? n - 1 : 0);      // subdiagonal of the factor
  std::vector<Mat15x2> Y(n);                    // forward-solved border
  std::vector<Vec15> y(n);                      // forward-solved rhs

  Mat15 Deff = damped(sys.D[0]);
  for (size_t i = 0; i < n; ++i) {
    L[i].compute(Deff);
    if (L[i].info() != Eigen::Success) return false;
    const auto& Li = L[i].matrixL();
    Y[i] = Li.solve(i == 0 ? sys.C[i].eval() : (sys.C[i] - M[i - 1] * Y[i - 1]).eval());
    y[i] = Li.solve(i == 0 ? sys.b[i].eval() : (sys.b[i] - M[i - 1] * y[i - 1]).eval());
    if (i + 1 < n) {
      // M_i = B_i L_i^{-T}, i.e. M_i L_i^T = B_i
      M[i] = L[i].matrixL().solve(sys.B[i].transpose()).transpose();
      Deff = damped(sys.D[i + 1]) - M[i] * M[i].transpose();
    }
  }

  Mat2 S = damped(sys.G);
  Vec2 t = sys.bg;
  for (size_t i = 0; i < n; ++i) {
    S -= Y[i].transpose() * Y[i];
    t -= Y[i].transpose() * y[i];
  }
  Eigen::LDLT<Mat2> Sf(S);
  if (Sf.info() != Eigen::Success) return false;
  *dg = Sf.solve(t);
  if (!dg->allFinite()) return false;

  dx->assign(n, Vec15::Zero());
  for (size_t k = n; k-- > 0;) {
    Vec15 rhs = y[k] - Y[k] * (*dg);
    if (k + 1 < n) rhs -= M[k].transpose() * (*dx)[k + 1];
    (*dx)[k] = L[k].matrixU().solve(rhs);
    if (!(*dx)[k].allFinite()) return false;
  }
  return true;
}

void schur_marginalize(const Eigen::MatrixXd& H, const Eigen::VectorXd& b,
                       int head_dim, Eigen::MatrixXd* H_out,
                       Eigen::VectorXd* b_out) {
  const int m = static_cast<int>(H.rows()) - head_dim;
  const Eigen::MatrixXd Hee = H.topLeftCorner(head_dim, head_dim);
  const Eigen::MatrixXd Heo = H.topRightCorner(head_dim, m);
  const Eigen::MatrixXd Hoo = H.bottomRightCorner(m, m);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(Hee);
  Eigen::MatrixXd Hee_inv_Heo;
  Eigen::VectorXd Hee_inv_be;
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    Hee_inv_Heo = ldlt.solve(Heo);
    Hee_inv_be = ldlt.solve(b.head(head_dim));
  } else {
    // rank-deficient corner: pseudo-inverse via eigendecomposition
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Hee);
    Eigen::VectorXd inv = eig.eigenvalues();
    const double floor = 1e-12 * std::max(1.0, inv.cwiseAbs().maxCoeff());
    for (int i = 0; i < inv.size(); ++i) {
      inv[i] = (inv[i] > floor) ? 1.0 / inv[i] : 0.0;
    }
    const Eigen::MatrixXd pinv = eig.eigenvectors() * inv.asDiagonal() *
                                 eig.eigenvectors().transpose();
    Hee_inv_Heo = pinv * Heo;
    Hee_inv_be = pinv * b.head(head_dim);
  }

  *H_out = Hoo - Heo.transpose() * Hee_inv_Heo;
  *H_out = 0.5 * (*H_out + H_out->transpose());
  *b_out = b.tail(m) - Heo.transpose() * Hee_inv_be;
}

}  // namespace rlio
