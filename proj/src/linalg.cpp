#include "lisvar/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace lisvar {

Eigen::MatrixXd cholesky_lower(const Eigen::MatrixXd& sigma, double tol) {
  if (sigma.rows() != sigma.cols())
    throw DimensionMismatch("cholesky_lower: matrix is not square");
  const int n = static_cast<int>(sigma.rows());
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > tol * scale)
    throw NotPositiveSemiDefinite("cholesky_lower: matrix is not symmetric");

  Eigen::MatrixXd sym = 0.5 * (sigma + sigma.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(sym);
  if (llt.info() == Eigen::Success) {
    Eigen::MatrixXd l = llt.matrixL();
    return l;
  }

  // Semidefinite path: clip small negative eigenvalues, rebuild a factor from
  // the LQ of the square root so the result stays lower triangular.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues();
  if (ev.minCoeff() < -tol * scale)
    throw NotPositiveSemiDefinite("cholesky_lower: eigenvalue " + std::to_string(ev.minCoeff()) +
                                  " below tolerance");
  Eigen::VectorXd clipped = ev.cwiseMax(0.0);
  Eigen::MatrixXd root = es.eigenvectors() * clipped.cwiseSqrt().asDiagonal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(root.transpose());
  Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  Eigen::MatrixXd l = r.transpose();
  for (int j = 0; j < n; ++j)
    if (l(j, j) < 0.0) l.col(j) = -l.col(j);
  return l;
}

int numerical_rank(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double thresh = static_cast<double>(std::max(m.rows(), m.cols())) *
                        std::numeric_limits<double>::epsilon() * sv(0);
  int r = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++r;
  return r;
}

Eigen::MatrixXd dtilde(int n) {
  if (n < 2) throw DimensionMismatch("dtilde: n must be at least 2");
  const int cols = n * (n - 1) / 2;
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n * n, cols);
  int k = 0;
  for (int c = 0; c < n; ++c) {
    for (int r = c + 1; r < n; ++r) {
      d(c * n + r, k) = 1.0;   // H(r, c) = +v_k
      d(r * n + c, k) = -1.0;  // H(c, r) = -v_k
      ++k;
    }
  }
  return d;
}

Eigen::MatrixXd commutation(int m, int n) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m * n, m * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) k(j + i * n, i + j * m) = 1.0;
  return k;
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& m) {
  if (m.rows() == 0) {
    return Eigen::MatrixXd::Identity(m.cols(), m.cols());
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const int r = numerical_rank(m);
  const int n = static_cast<int>(m.cols());
  Eigen::MatrixXd basis = svd.matrixV().rightCols(n - r);
  for (int j = 0; j < basis.cols(); ++j) {
    int imax = 0;
    basis.col(j).cwiseAbs().maxCoeff(&imax);
    if (basis(imax, j) < 0.0) basis.col(j) = -basis.col(j);
  }
  return basis;
}

Eigen::MatrixXd polar_factor(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

double spectral_radius(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return m.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_orthogonal(const Eigen::MatrixXd& q, double tol) {
  if (q.rows() != q.cols()) return false;
  const int n = static_cast<int>(q.rows());
  return (q.transpose() * q - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace lisvar
