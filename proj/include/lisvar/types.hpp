#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lisvar {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};
struct NotPositiveSemiDefinite : Error {
  using Error::Error;
};
struct NotOrthogonal : Error {
  using Error::Error;
};
struct UnstableProcess : Error {
  using Error::Error;
};
struct RankDeficientRegressors : Error {
  using Error::Error;
};
struct ImproperPosterior : Error {
  using Error::Error;
};
struct ShortRegime : Error {
  using Error::Error;
};
struct InvalidSpec : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct NotTriangular : Error {
  using Error::Error;
};
struct NotRecursive : Error {
  using Error::Error;
};
struct NotPartitioned : Error {
  using Error::Error;
};
struct RankDeficientLevel : Error {
  int level;
  RankDeficientLevel(int lvl, const std::string& msg) : Error(msg), level(lvl) {}
};
struct EmptyIdentifiedSet : Error {
  using Error::Error;
};
struct TooFewSamples : Error {
  using Error::Error;
};
struct AllDrawsEmpty : Error {
  using Error::Error;
};

// Relative comparison scale used throughout: tol_scale * max|entry|.
inline constexpr double kRelTol = 1e-8;

// Reduced-form VAR with intercept: y_t = a + B_1 y_{t-1} + ... + B_p y_{t-p} + u_t.
// coeffs is n x (n*p + 1); column 0 is the intercept, then B_1,...,B_p as n x n blocks.
struct ReducedForm {
  int n = 0;
  int p = 0;
  Eigen::MatrixXd coeffs;
  Eigen::MatrixXd sigma;

  Eigen::MatrixXd lag(int l) const;           // B_l, 1-based
  Eigen::VectorXd intercept() const { return coeffs.col(0); }
  void validate() const;
};

// Same autoregression in both regimes, distinct error covariances.
struct HsvarReducedForm {
  int n = 0;
  int p = 0;
  Eigen::MatrixXd coeffs;
  Eigen::MatrixXd sigma1;
  Eigen::MatrixXd sigma2;
  int t_break = 0;  // last sample index (1-based, in data rows) belonging to regime 1

  ReducedForm regime(int r) const;
  void validate() const;
};

// Structural parametrization (A0, A+): A0 y_t = a + A_1 y_{t-1} + ... + A_p y_{t-p} + eps_t.
// aplus is n x (n*p + 1) laid out like ReducedForm::coeffs.
struct StructuralParams {
  Eigen::MatrixXd a0;
  Eigen::MatrixXd aplus;

  int n() const { return static_cast<int>(a0.rows()); }
  int p() const;
  void validate() const;
};

// Orthogonal matrix with construction-time validation.
struct OrthogonalMatrix {
  Eigen::MatrixXd m;

  OrthogonalMatrix() = default;
  explicit OrthogonalMatrix(Eigen::MatrixXd q, double tol = kRelTol);

  struct unchecked_t {};
  OrthogonalMatrix(Eigen::MatrixXd q, unchecked_t) : m(std::move(q)) {}

  int n() const { return static_cast<int>(m.rows()); }
};

// Diagonal of relative second-regime shock variances, all positive.
struct LambdaDiag {
  Eigen::VectorXd values;

  void validate() const;
};

std::string format_matrix(const Eigen::MatrixXd& m);

}  // namespace lisvar
