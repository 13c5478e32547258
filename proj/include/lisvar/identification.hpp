#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "lisvar/restrictions.hpp"
#include "lisvar/types.hpp"

namespace lisvar {

// Recursive (triangular, homogeneous) specs: builds q_1..q_n sequentially and
// checks the n x n matrix [F_ii', q_1..q_{i-1}, sigma_tilde_i] at each step.
// Full rank at every step certifies a unique admissible solution.
struct GlobalCheck {
  bool globally_identified = false;
  std::vector<int> ranks;   // per step, expected n
  int first_failure = 0;    // 1-based step, 0 when none
  Eigen::MatrixXd q;        // the recursively constructed solution
};
GlobalCheck check_global_rwz(const RestrictionSpec& spec, const ReducedForm& rf);

// Local identification at an admissible Q: rank of F (I_n ⊗ Q) Dtilde_n
// against n(n-1)/2. order_condition is the row-count necessary condition.
struct LocalRankCheck {
  bool identified = false;
  int rank = 0;
  int required = 0;
  bool order_condition = false;
};
LocalRankCheck check_local_rank(const CompiledRestrictions& cr, const Eigen::MatrixXd& q);

// Same verdict computed from the structural side: restriction rows are
// rebuilt from (A0, A+) elements directly, with no Cholesky factor and no Q,
// and the same skew-symmetric reduction is applied.
LocalRankCheck check_local_structural(const RestrictionSpec& spec, const StructuralParams& sp);

// Identification of the first s shock columns when the spec has no
// restrictions linking the two groups: rank of F_11 stacked over the
// symmetrized orthogonality block, against n*s.
struct SubsetRankCheck {
  bool identified = false;
  int rank = 0;
  int required = 0;
};
SubsetRankCheck check_subset_rank(const RestrictionSpec& spec, const ReducedForm& rf,
                                  const Eigen::MatrixXd& q1);

// Triangular specs: per-level rank of [F_ii; q_1'..q_{i-1}'] at a given Q,
// expected n-1 everywhere. shock_prefix_ok[j-1] aggregates levels 1..j, the
// per-shock verdict.
struct TriangularCheck {
  bool identified = false;
  std::vector<int> ranks;
  std::vector<bool> level_ok;
  std::vector<bool> shock_prefix_ok;
};
TriangularCheck check_triangular_sequential(const RestrictionSpec& spec,
                                            const CompiledRestrictions& cr,
                                            const Eigen::MatrixXd& q);

// Stronger sufficient condition for global uniqueness: every stacked
// [F_ii Q; (I_i 0)] has rank n.
struct MiCheck {
  bool sufficient = false;
  std::vector<int> ranks;
};
MiCheck check_rwz_sufficient_mi(const CompiledRestrictions& cr, const Eigen::MatrixXd& q);

// Admissible-solution upper bound by spec class: 1 recursive, 2^n triangular,
// 2^{n(n+1)/2} otherwise.
std::uint64_t solution_count_bound(const RestrictionSpec& spec);
std::uint64_t subset_solution_count_bound(int s);

// Projected-gradient search with polar retraction for one admissible Q;
// success means equality residual and orthogonality deviation within 1e-10
// plus sign and normalization admissibility.
struct AdmissibleSearch {
  std::optional<Eigen::MatrixXd> q;
  int restarts_used = 0;
  double residual = 0.0;
};
AdmissibleSearch find_admissible_q(const RestrictionSpec& spec, const ReducedForm& rf,
                                   std::uint64_t seed, int max_restarts = 0 /* 0: 20n */,
                                   int max_iter = 500);

enum class Verdict { LocallyIdentifiedAlmostEverywhere, NotIdentified, Inconclusive };

// Monte-Carlo verdict over reduced-form draws: a single draw with an
// admissible Q passing the rank check settles it (the condition holds
// nowhere or almost everywhere). Draws with no admissible Q are neutral.
struct VerdictEvidence {
  Verdict verdict = Verdict::Inconclusive;
  int draws = 0;
  int admissible_found = 0;
  int rank_satisfied = 0;
  std::vector<bool> per_draw_found;
  std::vector<bool> per_draw_rank_ok;
};
VerdictEvidence identification_verdict(const RestrictionSpec& spec,
                                       const std::function<ReducedForm(int)>& rf_sampler,
                                       int n_draws = 10, bool stop_at_first_success = true,
                                       std::uint64_t seed = 1);

}  // namespace lisvar
