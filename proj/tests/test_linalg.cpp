#include "doctest.h"

#include <Eigen/Dense>

#include "lisvar/linalg.hpp"
#include "lisvar/rng.hpp"
#include "lisvar/types.hpp"

using namespace lisvar;

namespace {

Eigen::MatrixXd random_spd(int n, Rng& rng) {
  Eigen::MatrixXd g = rng.normal_matrix(n, n);
  return g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

Eigen::MatrixXd random_skew(int n, Rng& rng) {
  Eigen::MatrixXd g = rng.normal_matrix(n, n);
  return g - g.transpose();
}

}  // namespace

TEST_SUITE("linalg") {

TEST_CASE("cholesky factors positive definite input") {
  Rng rng(11);
  for (int n : {1, 2, 4, 6}) {
    Eigen::MatrixXd sigma = random_spd(n, rng);
    Eigen::MatrixXd l = cholesky_lower(sigma);
    CHECK(l.rows() == n);
    CHECK(l.triangularView<Eigen::StrictlyUpper>().toDenseMatrix().norm() == 0.0);
    CHECK(l.diagonal().minCoeff() > 0.0);
    CHECK((l * l.transpose() - sigma).norm() < 1e-10 * sigma.norm());
  }
}

TEST_CASE("cholesky accepts semidefinite input") {
  Rng rng(12);
  Eigen::VectorXd v = rng.normal_vector(4);
  Eigen::MatrixXd sigma = v * v.transpose();
  Eigen::MatrixXd l = cholesky_lower(sigma);
  CHECK((l * l.transpose() - sigma).norm() < 1e-8 * (1.0 + sigma.norm()));

  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(3, 3);
  CHECK(cholesky_lower(z).norm() == 0.0);
}

TEST_CASE("cholesky rejects indefinite input") {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(cholesky_lower(m), NotPositiveSemiDefinite);
}

TEST_CASE("numerical rank counts significant singular values") {
  Rng rng(13);
  Eigen::MatrixXd a = rng.normal_matrix(5, 2);
  Eigen::MatrixXd b = rng.normal_matrix(2, 5);
  CHECK(numerical_rank(a * b) == 2);
  CHECK(numerical_rank(Eigen::MatrixXd::Zero(4, 3)) == 0);
  CHECK(numerical_rank(random_spd(5, rng)) == 5);

  Eigen::MatrixXd c = rng.normal_matrix(4, 4);
  c.col(3) = c.col(0) + c.col(1);
  CHECK(numerical_rank(c) == 3);
}

TEST_CASE("skew expansion matrix matches the stacked below-diagonal convention") {
  Eigen::MatrixXd d2 = dtilde(2);
  Eigen::MatrixXd e2(4, 1);
  e2 << 0, 1, -1, 0;
  CHECK((d2 - e2).norm() == 0.0);

  Eigen::MatrixXd d3 = dtilde(3);
  Eigen::MatrixXd e3 = Eigen::MatrixXd::Zero(9, 3);
  e3(1, 0) = 1;
  e3(2, 1) = 1;
  e3(3, 0) = -1;
  e3(5, 2) = 1;
  e3(6, 1) = -1;
  e3(7, 2) = -1;
  CHECK((d3 - e3).norm() == 0.0);

  CHECK_THROWS_AS(dtilde(1), DimensionMismatch);
}

TEST_CASE("skew expansion matrix has orthogonal columns and full rank") {
  Rng rng(14);
  for (int n = 2; n <= 6; ++n) {
    const int m = n * (n - 1) / 2;
    Eigen::MatrixXd d = dtilde(n);
    CHECK(d.rows() == n * n);
    CHECK(d.cols() == m);
    CHECK((d.transpose() * d - 2.0 * Eigen::MatrixXd::Identity(m, m)).norm() == 0.0);
    CHECK(numerical_rank(d) == m);

    Eigen::MatrixXd h = random_skew(n, rng);
    Eigen::VectorXd v(m);
    int k = 0;
    for (int c = 0; c < n; ++c)
      for (int r = c + 1; r < n; ++r) v(k++) = h(r, c);
    Eigen::VectorXd vec_h = Eigen::Map<Eigen::VectorXd>(h.data(), n * n);
    CHECK((d * v - vec_h).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("commutation matrix transposes vectorizations") {
  Rng rng(15);
  Eigen::MatrixXd a = rng.normal_matrix(3, 4);
  Eigen::MatrixXd at = a.transpose();
  Eigen::VectorXd va = Eigen::Map<Eigen::VectorXd>(a.data(), 12);
  Eigen::VectorXd vat = Eigen::Map<Eigen::VectorXd>(at.data(), 12);
  Eigen::MatrixXd k = commutation(3, 4);
  CHECK((k * va - vat).norm() == 0.0);

  Eigen::MatrixXd knn = commutation(3, 3);
  CHECK((knn * knn - Eigen::MatrixXd::Identity(9, 9)).norm() == 0.0);
}

TEST_CASE("null space basis is orthonormal with deterministic signs") {
  Eigen::MatrixXd m(2, 3);
  m << 1, 0, 0, 0, 1, 0;
  Eigen::MatrixXd ns = null_space(m);
  REQUIRE(ns.cols() == 1);
  CHECK(std::abs(ns(2, 0) - 1.0) < 1e-12);

  Rng rng(16);
  Eigen::MatrixXd w = rng.normal_matrix(3, 5);
  Eigen::MatrixXd base = null_space(w);
  REQUIRE(base.cols() == 2);
  CHECK((base.transpose() * base - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
  CHECK((w * base).norm() < 1e-12 * w.norm());
  for (int j = 0; j < base.cols(); ++j) {
    int idx = 0;
    base.col(j).cwiseAbs().maxCoeff(&idx);
    CHECK(base(idx, j) > 0.0);
  }
  CHECK((base - null_space(w)).norm() == 0.0);

  CHECK(null_space(random_spd(3, rng)).cols() == 0);
}

TEST_CASE("polar factor extracts the orthogonal part") {
  Rng rng(17);
  Eigen::MatrixXd q = rng.haar_orthogonal(4);
  Eigen::MatrixXd s = random_spd(4, rng);
  Eigen::MatrixXd u = polar_factor(q * s);
  CHECK(is_orthogonal(u));
  CHECK((u - q).norm() < 1e-10);
}

TEST_CASE("spectral radius of a triangular example") {
  Eigen::MatrixXd m(2, 2);
  m << 0.5, 0.2, 0.0, -0.9;
  CHECK(spectral_radius(m) == doctest::Approx(0.9).epsilon(1e-12));

  double c = std::cos(0.7), s = std::sin(0.7);
  Eigen::MatrixXd rot(2, 2);
  rot << c, -s, s, c;
  CHECK(spectral_radius(0.8 * rot) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("orthogonality predicate") {
  Rng rng(18);
  Eigen::MatrixXd q = rng.haar_orthogonal(5);
  CHECK(is_orthogonal(q));
  CHECK_FALSE(is_orthogonal(1.01 * q));
}

}  // TEST_SUITE
