#include "lisvar/types.hpp"

#include <sstream>

#include "lisvar/linalg.hpp"

namespace lisvar {

Eigen::MatrixXd ReducedForm::lag(int l) const {
  if (l < 1 || l > p) throw DimensionMismatch("ReducedForm::lag: lag out of range");
  return coeffs.block(0, 1 + (l - 1) * n, n, n);
}

void ReducedForm::validate() const {
  if (n < 1) throw DimensionMismatch("ReducedForm: n must be positive");
  if (p < 0) throw DimensionMismatch("ReducedForm: p must be nonnegative");
  if (coeffs.rows() != n || coeffs.cols() != n * p + 1)
    throw DimensionMismatch("ReducedForm: coeffs must be n x (n*p+1)");
  if (sigma.rows() != n || sigma.cols() != n)
    throw DimensionMismatch("ReducedForm: sigma must be n x n");
  cholesky_lower(sigma);  // throws if not PSD
}

ReducedForm HsvarReducedForm::regime(int r) const {
  ReducedForm rf;
  rf.n = n;
  rf.p = p;
  rf.coeffs = coeffs;
  rf.sigma = (r == 1) ? sigma1 : sigma2;
  return rf;
}

void HsvarReducedForm::validate() const {
  regime(1).validate();
  regime(2).validate();
  if (t_break < 1) throw DimensionMismatch("HsvarReducedForm: t_break must be positive");
}

int StructuralParams::p() const {
  const int k = static_cast<int>(aplus.cols());
  if (k < 1 || (k - 1) % n() != 0)
    throw DimensionMismatch("StructuralParams: aplus must be n x (n*p+1)");
  return (k - 1) / n();
}

void StructuralParams::validate() const {
  if (a0.rows() != a0.cols() || a0.rows() < 1)
    throw DimensionMismatch("StructuralParams: a0 must be square");
  if (aplus.rows() != a0.rows())
    throw DimensionMismatch("StructuralParams: aplus row count must match a0");
  p();  // layout check
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a0);
  if (!lu.isInvertible()) throw DimensionMismatch("StructuralParams: a0 is singular");
}

OrthogonalMatrix::OrthogonalMatrix(Eigen::MatrixXd q, double tol) : m(std::move(q)) {
  if (!is_orthogonal(m, tol)) throw NotOrthogonal("OrthogonalMatrix: Q'Q deviates from identity");
}

void LambdaDiag::validate() const {
  if (values.size() < 1) throw DimensionMismatch("LambdaDiag: empty");
  if (values.minCoeff() <= 0.0) throw DimensionMismatch("LambdaDiag: entries must be positive");
}

std::string format_matrix(const Eigen::MatrixXd& m) {
  std::ostringstream os;
  os << m;
  return os.str();
}

}  // namespace lisvar
