#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "lisvar/types.hpp"

namespace lisvar {

// Moving-average coefficients C_0..C_hmax of the reduced form; C_0 = I and
// C_h = sum_{j=1..min(h,p)} B_j C_{h-j}.
std::vector<Eigen::MatrixXd> vma_coefficients(const ReducedForm& rf, int h_max);

// Structural impulse responses C_h * chol(Sigma) * Q for h = 0..h_max.
std::vector<Eigen::MatrixXd> impulse_response(const ReducedForm& rf, const Eigen::MatrixXd& q,
                                              int h_max);

// Running sums of the impulse responses up to each horizon.
std::vector<Eigen::MatrixXd> cumulative_ir(const ReducedForm& rf, const Eigen::MatrixXd& q,
                                           int h_max);

// Long-run cumulative response (I - B_1 - ... - B_p)^{-1} chol(Sigma) Q.
// Throws UnstableProcess when the companion spectral radius reaches 1.
Eigen::MatrixXd cumulative_ir_infinite(const ReducedForm& rf, const Eigen::MatrixXd& q);

Eigen::MatrixXd companion_matrix(const ReducedForm& rf);
bool is_stable(const ReducedForm& rf, double margin = 0.0);

// (A0, A+) -> (B, Sigma, Q): B = A0^{-1} A+, Sigma = A0^{-1} A0^{-1}',
// Q = chol(Sigma)' A0'.
std::pair<ReducedForm, OrthogonalMatrix> map_g(const StructuralParams& sp);

// (B, Sigma, Q) -> (A0, A+): A0 = Q' chol(Sigma)^{-1}, A+ = A0 B.
StructuralParams map_g_inverse(const ReducedForm& rf, const OrthogonalMatrix& q);

struct SignNormalized {
  Eigen::MatrixXd q;
  std::vector<int> ambiguous;  // columns whose diagonal entry was within tol of zero
};

// Flips columns of Q so that diag(Q' chol(Sigma)^{-1}) is nonnegative,
// i.e. the implied A0 has a nonnegative diagonal.
SignNormalized sign_normalize(const Eigen::MatrixXd& q, const Eigen::MatrixXd& sigma_tr,
                              double tol = 1e-10);

// Least-squares fit with intercept. Residual covariance divisor is
// (rows regressed) - n*p - 1. Throws RankDeficientRegressors on collinear X.
ReducedForm fit_ols(const Eigen::MatrixXd& data, int p);

// Sufficient statistics of the same regression, for posterior samplers.
struct OlsStats {
  int n = 0, p = 0, t_eff = 0;
  Eigen::MatrixXd xtx;       // (np+1) x (np+1)
  Eigen::MatrixXd bhat;      // (np+1) x n, coefficients column-per-equation
  Eigen::MatrixXd resid_ss;  // n x n residual sum of squares
  Eigen::MatrixXd x;         // t_eff x (np+1)
  Eigen::MatrixXd y;         // t_eff x n
};
OlsStats fit_ols_stats(const Eigen::MatrixXd& data, int p);

// Two-regime feasible GLS: common coefficients, per-regime covariance,
// iterated until the coefficient update falls below 1e-8 (sup norm).
// t_break is the 1-based index of the last data row in regime 1.
HsvarReducedForm fit_hsvar_fgls(const Eigen::MatrixXd& data, int p, int t_break,
                                int max_iter = 100, double tol = 1e-8);

struct SimResult {
  Eigen::MatrixXd data;  // T x n
  bool stable = true;    // companion spectral radius < 1; unstable paths still simulate
};

// Gaussian structural simulation, zero initial conditions, burn-in discarded.
SimResult simulate(const StructuralParams& sp, int t_obs, std::uint64_t seed, int burn_in = 1000);

// Regime-2 structural shocks are scaled by sqrt(lambda_i); burn-in runs under regime 1.
SimResult simulate_hsvar(const StructuralParams& sp, const LambdaDiag& lambda, int t_break,
                         int t_obs, std::uint64_t seed, int burn_in = 1000);

}  // namespace lisvar
