#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lisvar/restrictions.hpp"
#include "lisvar/types.hpp"

namespace lisvar {

// All observationally-equivalent rotations at one reduced form, after sign
// filtering and deduplication. Empty means the restrictions are incompatible
// with the reduced form (not an error).
struct IdentifiedSet {
  std::vector<Eigen::MatrixXd> q;
  std::vector<std::uint32_t> bit_labels;  // triangular route: root choice per level
  std::vector<double> residuals;          // sup-norm equality+orthogonality residual
  std::optional<LambdaDiag> lambda;       // heteroskedasticity route
  std::vector<int> admissible_shocks;     // heteroskedasticity route: eigen positions kept
  std::string route;
  int discarded = 0;  // candidates dropped by sign normalization or sign restrictions
  int starts = 0;
  int converged = 0;
  bool near_degenerate = false;  // eigenvalue gap below 1e-6

  bool empty() const { return q.empty(); }
  int count() const { return static_cast<int>(q.size()); }
};

// Multi-start damped Newton on the stacked equality and orthogonality system.
// Requires an exactly-counted spec (f = n(n-1)/2). starts <= 0 picks the
// default 50 * 2^{n(n+1)/2}.
IdentifiedSet solve_general(const RestrictionSpec& spec, const ReducedForm& rf,
                            std::uint64_t seed = 1, int starts = 0);

// Depth-first construction for triangular specs: each level solves a
// quadratic in the null direction; bit b of the label records which root.
// Throws RankDeficientLevel when some F-tilde loses row rank.
IdentifiedSet solve_triangular(const RestrictionSpec& spec, const ReducedForm& rf);

// n = 2, single restriction (A0^{-1})_{11} = c, in closed form.
IdentifiedSet solve_bivariate_closed_form(const ReducedForm& rf, double c);

// Heteroskedasticity route: eigendecomposition of
// chol(Sigma1)^{-1} Sigma2 chol(Sigma1)^{-T}, eigenvalues sorted descending,
// eigenvector signs made deterministic, candidate columns filtered by the
// spec's sign restrictions on the shock at shock_position.
IdentifiedSet solve_hsvar(const RestrictionSpec& spec, const HsvarReducedForm& rf,
                          int shock_position = 1);

// Route selection: triangular specs take the constructive route, everything
// else the multi-start solver.
IdentifiedSet solve_identified_set(const RestrictionSpec& spec, const ReducedForm& rf,
                                   std::uint64_t seed = 1);

// Exhaustive grid over O(n) (n <= 3) with an independent local polish;
// certifies completeness of the other routes in tests.
IdentifiedSet brute_force_oracle(const RestrictionSpec& spec, const ReducedForm& rf,
                                 int grid_density = 48);

// Weak admissibility: sign restrictions and (if active) nonnegative
// normalization margins, all at tolerance 1e-10.
bool is_admissible(const RestrictionSpec& spec, const CompiledRestrictions& cr,
                   const Eigen::MatrixXd& sigma_tr, const Eigen::MatrixXd& q);

// Deterministic representative for columns whose normalization margin
// vanishes; identical convention across every solver route.
Eigen::MatrixXd canonical_member(const RestrictionSpec& spec, const CompiledRestrictions& cr,
                                 const Eigen::MatrixXd& sigma_tr, const Eigen::MatrixXd& q);

// Impulse responses of every member: result[m][h] is n x n.
std::vector<std::vector<Eigen::MatrixXd>> identified_set_irf(const IdentifiedSet& set,
                                                             const ReducedForm& rf, int h_max);

}  // namespace lisvar
