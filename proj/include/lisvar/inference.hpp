#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lisvar/restrictions.hpp"
#include "lisvar/solve.hpp"
#include "lisvar/types.hpp"

namespace lisvar {

// Posterior draws of the reduced form; exactly one of the two vectors is
// populated. log_density stores the posterior kernel up to an additive
// constant, for density-ranked retention.
struct PosteriorDrawSet {
  std::vector<ReducedForm> reduced;
  std::vector<HsvarReducedForm> hsvar;
  std::vector<double> log_density;
  std::uint64_t seed = 0;

  bool heteroskedastic() const { return !hsvar.empty(); }
  int count() const {
    return static_cast<int>(heteroskedastic() ? hsvar.size() : reduced.size());
  }
};

// Scalar impulse-response coordinate: response of `variable` to `shock` at
// `horizon`. All 1-based except horizon (0 = impact).
struct IrfCoordinate {
  int variable = 1;
  int shock = 1;
  int horizon = 0;
};

// Conjugate sampler under a diffuse prior: Sigma is inverse-Wishart with
// t_eff - n*p - 1 degrees of freedom and the OLS residual sum of squares as
// scale; coefficients are matrix-normal given Sigma.
PosteriorDrawSet sample_posterior_niw(const Eigen::MatrixXd& data, int p, int count,
                                      std::uint64_t seed);

// Two-block Gibbs for the regime-break model: coefficients from their GLS
// normal conditional, each regime covariance from its inverse-Wishart
// conditional. burn_in leading sweeps are discarded.
PosteriorDrawSet sample_posterior_hsvar(const Eigen::MatrixXd& data, int p, int t_break,
                                        int count, std::uint64_t seed, int burn_in = 500);

struct WeightedValue {
  double value = 0.0;
  double weight = 0.0;
};

// Posterior over impulse responses mixed across all identified-set members.
// cell(i,j,h) holds one weighted value per (draw, member); draws whose
// identified set is empty are dropped and counted.
struct PosteriorIrf {
  int n = 0;
  int h_max = 0;
  int used_draws = 0;
  int empty_draws = 0;
  std::vector<std::vector<WeightedValue>> cells;

  const std::vector<WeightedValue>& at(int variable, int shock, int horizon) const;
};

// member_weights: one weight per identified-set member in route order,
// normalized within each draw; empty means uniform 1/M. Throws AllDrawsEmpty
// when no draw admits any member.
PosteriorIrf posterior_irf(const PosteriorDrawSet& draws, const RestrictionSpec& spec, int h_max,
                           const std::vector<double>& member_weights = {},
                           std::uint64_t solve_seed = 1, int threads = 1);

// Gaussian-kernel density estimate with Silverman bandwidth, sliced at the
// threshold whose upper level set carries `level` probability mass. Weights
// optional (empty = uniform). Needs at least 100 samples.
std::vector<std::pair<double, double>> highest_density_region(
    const std::vector<double>& values, double level, const std::vector<double>& weights = {});

// Lower and upper posterior probabilities of eta in h0 over all member
// weightings: frequency of IS inside h0, frequency of IS touching h0.
std::pair<double, double> robust_bounds_probability(const PosteriorDrawSet& draws,
                                                    const RestrictionSpec& spec,
                                                    const IrfCoordinate& eta,
                                                    const std::pair<double, double>& h0,
                                                    std::uint64_t solve_seed = 1);

// Range of posterior means: averages of per-draw identified-set minima and
// maxima.
std::pair<double, double> posterior_mean_range(const PosteriorDrawSet& draws,
                                               const RestrictionSpec& spec,
                                               const IrfCoordinate& eta,
                                               std::uint64_t solve_seed = 1);

// Keeps the ceil(alpha * L) draws with the highest recorded log density.
PosteriorDrawSet credible_region_phi(const PosteriorDrawSet& draws, double alpha);

// Cluster bookkeeping at one coordinate. Draws are collapsed to distinct
// points (gap > 1e-9); assignment maps each point to a cluster, increasing
// and injective.
struct ClusteredDrawSet {
  int m_bar = 0;
  int k_tilde = 0;
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma2;
  bool variance_floored = false;
  std::vector<std::vector<double>> eta;        // per used draw, ascending distinct values
  std::vector<std::vector<int>> multiplicity;  // members collapsed into each value
  std::vector<std::vector<int>> assignment;    // 1-based cluster per value
  int empty_draws = 0;
};

// Cluster means and variances from the maximal-count draws; every other draw
// assigned by exhaustively minimizing the variance-weighted squared distance
// over increasing injective maps (first lexicographic map wins ties).
ClusteredDrawSet cluster_draws(const PosteriorDrawSet& retained, const RestrictionSpec& spec,
                               const IrfCoordinate& eta, std::uint64_t solve_seed = 1);

struct LabeledInterval {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<int> labels;  // clusters merged into this interval
};

struct ProjectionConfidenceSet {
  int n = 0;
  int h_max = 0;
  double alpha = 0.0;
  std::string mode;  // "switching" or "fixed"
  IrfCoordinate anchor;
  int m_bar = 0;
  int empty_draws = 0;
  bool variance_floored = false;
  std::vector<std::vector<LabeledInterval>> cells;

  const std::vector<LabeledInterval>& at(int variable, int shock, int horizon) const;
};

// Per-coordinate clustering: labels are local to each (variable, shock,
// horizon).
ProjectionConfidenceSet projection_cs_switching(const PosteriorDrawSet& retained,
                                                const RestrictionSpec& spec, double alpha,
                                                int h_max, std::uint64_t solve_seed = 1,
                                                int threads = 1);

// Anchored clustering: members are labeled once at the anchor coordinate and
// that labeling is reused at every variable and horizon.
ProjectionConfidenceSet projection_cs_fixed(const PosteriorDrawSet& retained,
                                            const RestrictionSpec& spec, double alpha, int h_max,
                                            const IrfCoordinate& anchor,
                                            std::uint64_t solve_seed = 1, int threads = 1);

}  // namespace lisvar
