#include "lisvar/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "lisvar/linalg.hpp"
#include "lisvar/rng.hpp"
#include "lisvar/var_core.hpp"

namespace lisvar {

namespace {

constexpr double kCollapseTol = 1e-9;

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

int cell_index(int n, int h_max, int variable, int shock, int horizon) {
  if (variable < 1 || variable > n || shock < 1 || shock > n || horizon < 0 || horizon > h_max)
    throw DimensionMismatch("impulse-response coordinate out of range");
  return (horizon * n + variable - 1) * n + shock - 1;
}

double chol_logdet(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd l = cholesky_lower(m);
  double out = 0.0;
  for (int i = 0; i < l.rows(); ++i) out += 2.0 * std::log(l(i, i));
  return out;
}

// log of the Gaussian likelihood kernel times the diffuse prior |Sigma|^{-(n+1)/2}
double log_kernel(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& rss, int t_rows) {
  const int n = static_cast<int>(sigma.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  double tr = llt.solve(rss).trace();
  return -0.5 * ((t_rows + n + 1) * chol_logdet(sigma) + tr);
}

Eigen::MatrixXd inverse_wishart(Rng& rng, const Eigen::MatrixXd& scale, int df) {
  const int n = static_cast<int>(scale.rows());
  if (df < n) throw ImproperPosterior("inverse-Wishart degrees of freedom below dimension");
  Eigen::MatrixXd ls = cholesky_lower(scale);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = std::sqrt(rng.chisq(static_cast<double>(df - i)));
    for (int j = 0; j < i; ++j) a(i, j) = rng.normal();
  }
  Eigen::MatrixXd m = a.triangularView<Eigen::Lower>().solve(ls.transpose());
  return m.transpose() * m;
}

struct DrawSolve {
  ReducedForm rf;
  IdentifiedSet set;
};

DrawSolve solve_draw(const PosteriorDrawSet& draws, int idx, const RestrictionSpec& spec,
                     std::uint64_t seed, int shock_position) {
  if (draws.heteroskedastic()) {
    const HsvarReducedForm& h = draws.hsvar[idx];
    return {h.regime(1), solve_hsvar(spec, h, shock_position)};
  }
  const ReducedForm& rf = draws.reduced[idx];
  return {rf, solve_identified_set(spec, rf, seed + static_cast<std::uint64_t>(idx))};
}

std::vector<double> eta_members(const ReducedForm& rf, const IdentifiedSet& set,
                                const IrfCoordinate& c) {
  cell_index(rf.n, c.horizon, c.variable, c.shock, c.horizon);
  auto cmats = vma_coefficients(rf, c.horizon);
  Eigen::RowVectorXd row =
      (cmats[static_cast<std::size_t>(c.horizon)] * cholesky_lower(rf.sigma)).row(c.variable - 1);
  std::vector<double> out;
  out.reserve(set.q.size());
  for (const auto& q : set.q) out.push_back(row.dot(q.col(c.shock - 1)));
  return out;
}

void collapse_sorted(std::vector<double> vals, std::vector<double>& distinct,
                     std::vector<int>& mult) {
  std::sort(vals.begin(), vals.end());
  distinct.clear();
  mult.clear();
  for (double v : vals) {
    if (!distinct.empty() && v - distinct.back() < kCollapseTol) {
      mult.back()++;
    } else {
      distinct.push_back(v);
      mult.push_back(1);
    }
  }
}

struct ClusterCore {
  int m_bar = 0;
  int k_tilde = 0;
  Eigen::VectorXd mu;
  Eigen::VectorXd sigma2;
  bool floored = false;
  std::vector<std::vector<int>> assignment;
};

// First lexicographic minimizer among increasing injective maps.
std::vector<int> best_map(const std::vector<double>& vals, const Eigen::VectorXd& mu,
                          const Eigen::VectorXd& s2) {
  const int m = static_cast<int>(vals.size());
  const int mb = static_cast<int>(mu.size());
  std::vector<int> comb(m);
  std::iota(comb.begin(), comb.end(), 0);
  std::vector<int> best = comb;
  double best_cost = std::numeric_limits<double>::infinity();
  for (;;) {
    double cost = 0.0;
    for (int t = 0; t < m; ++t) {
      const double d = vals[static_cast<std::size_t>(t)] - mu(comb[t]);
      cost += d * d / s2(comb[t]);
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = comb;
    }
    int i = m - 1;
    while (i >= 0 && comb[i] == mb - m + i) --i;
    if (i < 0) break;
    ++comb[i];
    for (int j = i + 1; j < m; ++j) comb[j] = comb[j - 1] + 1;
  }
  for (auto& v : best) ++v;
  return best;
}

ClusterCore cluster_values(const std::vector<std::vector<double>>& per_draw) {
  ClusterCore core;
  for (const auto& vals : per_draw)
    core.m_bar = std::max(core.m_bar, static_cast<int>(vals.size()));
  if (core.m_bar == 0) throw AllDrawsEmpty("clustering: no draw has identified-set points");

  core.mu = Eigen::VectorXd::Zero(core.m_bar);
  core.sigma2 = Eigen::VectorXd::Zero(core.m_bar);
  for (const auto& vals : per_draw)
    if (static_cast<int>(vals.size()) == core.m_bar) {
      core.k_tilde++;
      for (int m = 0; m < core.m_bar; ++m) core.mu(m) += vals[static_cast<std::size_t>(m)];
    }
  core.mu /= core.k_tilde;
  if (core.k_tilde > 1) {
    for (const auto& vals : per_draw)
      if (static_cast<int>(vals.size()) == core.m_bar)
        for (int m = 0; m < core.m_bar; ++m) {
          const double d = vals[static_cast<std::size_t>(m)] - core.mu(m);
          core.sigma2(m) += d * d;
        }
    core.sigma2 /= core.k_tilde - 1;
  }

  // Pooled-variance floor keeps the assignment criterion defined when a
  // cluster's sample variance degenerates.
  double pooled_mean = 0.0, pooled_sq = 0.0;
  int pooled_count = 0;
  for (const auto& vals : per_draw)
    for (double v : vals) {
      pooled_mean += v;
      pooled_sq += v * v;
      pooled_count++;
    }
  pooled_mean /= pooled_count;
  double pooled_var = pooled_sq / pooled_count - pooled_mean * pooled_mean;
  const double floor_val = std::max(pooled_var * 1e-6, 1e-12);
  for (int m = 0; m < core.m_bar; ++m)
    if (core.sigma2(m) < 1e-12) {
      core.sigma2(m) = floor_val;
      core.floored = true;
    }

  core.assignment.reserve(per_draw.size());
  for (const auto& vals : per_draw)
    core.assignment.push_back(best_map(vals, core.mu, core.sigma2));
  return core;
}

std::vector<LabeledInterval> merge_intervals(std::vector<LabeledInterval> raw) {
  std::sort(raw.begin(), raw.end(),
            [](const LabeledInterval& a, const LabeledInterval& b) { return a.lo < b.lo; });
  std::vector<LabeledInterval> out;
  for (auto& iv : raw) {
    if (!out.empty() && iv.lo <= out.back().hi) {
      out.back().hi = std::max(out.back().hi, iv.hi);
      out.back().labels.insert(out.back().labels.end(), iv.labels.begin(), iv.labels.end());
    } else {
      out.push_back(std::move(iv));
    }
  }
  return out;
}

std::vector<double> draw_weights(const std::vector<double>& member_weights, int m) {
  std::vector<double> w(static_cast<std::size_t>(m), 1.0 / m);
  if (!member_weights.empty()) {
    if (static_cast<int>(member_weights.size()) < m)
      throw DimensionMismatch("member weight vector shorter than the identified set");
    double total = 0.0;
    for (int i = 0; i < m; ++i) total += member_weights[static_cast<std::size_t>(i)];
    if (total <= 0.0) return {};
    for (int i = 0; i < m; ++i) w[static_cast<std::size_t>(i)] =
        member_weights[static_cast<std::size_t>(i)] / total;
  }
  return w;
}

double weighted_quantile(const std::vector<double>& sorted_vals,
                         const std::vector<double>& sorted_w, double q) {
  double acc = 0.0;
  for (std::size_t i = 0; i < sorted_vals.size(); ++i) {
    acc += sorted_w[i];
    if (acc >= q) return sorted_vals[i];
  }
  return sorted_vals.back();
}

}  // namespace

const std::vector<WeightedValue>& PosteriorIrf::at(int variable, int shock, int horizon) const {
  return cells[static_cast<std::size_t>(cell_index(n, h_max, variable, shock, horizon))];
}

const std::vector<LabeledInterval>& ProjectionConfidenceSet::at(int variable, int shock,
                                                                int horizon) const {
  return cells[static_cast<std::size_t>(cell_index(n, h_max, variable, shock, horizon))];
}

PosteriorDrawSet sample_posterior_niw(const Eigen::MatrixXd& data, int p, int count,
                                      std::uint64_t seed) {
  OlsStats s = fit_ols_stats(data, p);
  const int n = s.n, k = n * p + 1;
  const int df = s.t_eff - n * p - 1;
  if (df < n) throw ImproperPosterior("sample_posterior_niw: too few observations");

  Eigen::MatrixXd lxtx = cholesky_lower(s.xtx);
  // (X'X)^{-1} = U U' with U = lxtx^{-T}
  Eigen::MatrixXd u = lxtx.transpose()
                          .triangularView<Eigen::Upper>()
                          .solve(Eigen::MatrixXd::Identity(k, k));

  PosteriorDrawSet out;
  out.seed = seed;
  out.reduced.reserve(static_cast<std::size_t>(count));
  out.log_density.reserve(static_cast<std::size_t>(count));
  Rng rng(seed);
  for (int l = 0; l < count; ++l) {
    Eigen::MatrixXd sigma = inverse_wishart(rng, s.resid_ss, df);
    Eigen::MatrixXd lsig = cholesky_lower(sigma);
    Eigen::MatrixXd b = s.bhat + u * rng.normal_matrix(k, n) * lsig.transpose();

    ReducedForm rf;
    rf.n = n;
    rf.p = p;
    rf.coeffs = b.transpose();
    rf.sigma = sigma;
    rf.validate();

    Eigen::MatrixXd resid = s.y - s.x * b;
    out.log_density.push_back(log_kernel(sigma, resid.transpose() * resid, s.t_eff));
    out.reduced.push_back(std::move(rf));
  }
  return out;
}

PosteriorDrawSet sample_posterior_hsvar(const Eigen::MatrixXd& data, int p, int t_break,
                                        int count, std::uint64_t seed, int burn_in) {
  OlsStats s = fit_ols_stats(data, p);
  const int n = s.n, k = n * p + 1;
  const int rows1 = t_break - p;
  const int rows2 = s.t_eff - rows1;
  if (rows1 < k + 1 || rows2 < k + 1)
    throw ShortRegime("sample_posterior_hsvar: a regime is too short for a proper posterior");

  Eigen::MatrixXd x1 = s.x.topRows(rows1), y1 = s.y.topRows(rows1);
  Eigen::MatrixXd x2 = s.x.bottomRows(rows2), y2 = s.y.bottomRows(rows2);
  Eigen::MatrixXd x1tx1 = x1.transpose() * x1, x2tx2 = x2.transpose() * x2;
  Eigen::MatrixXd x1ty1 = x1.transpose() * y1, x2ty2 = x2.transpose() * y2;

  Eigen::MatrixXd b = s.bhat;
  Eigen::MatrixXd sigma1 = s.resid_ss / (s.t_eff - k);
  Eigen::MatrixXd sigma2 = sigma1;

  PosteriorDrawSet out;
  out.seed = seed;
  out.hsvar.reserve(static_cast<std::size_t>(count));
  Rng rng(seed);
  Eigen::MatrixXd h(n * k, n * k);
  for (int sweep = 0; sweep < burn_in + count; ++sweep) {
    Eigen::MatrixXd s1inv = sigma1.llt().solve(Eigen::MatrixXd::Identity(n, n));
    Eigen::MatrixXd s2inv = sigma2.llt().solve(Eigen::MatrixXd::Identity(n, n));
    for (int a = 0; a < n; ++a)
      for (int c = 0; c < n; ++c)
        h.block(a * k, c * k, k, k) = s1inv(a, c) * x1tx1 + s2inv(a, c) * x2tx2;
    Eigen::MatrixXd rhs_mat = x1ty1 * s1inv + x2ty2 * s2inv;
    Eigen::Map<Eigen::VectorXd> rhs(rhs_mat.data(), n * k);
    Eigen::LLT<Eigen::MatrixXd> hllt(h);
    Eigen::VectorXd mean = hllt.solve(rhs);
    Eigen::VectorXd z = rng.normal_vector(n * k);
    Eigen::VectorXd bvec =
        mean + hllt.matrixU().solve(z);  // chol(H)^{-T} z has covariance H^{-1}
    b = Eigen::Map<Eigen::MatrixXd>(bvec.data(), k, n);

    Eigen::MatrixXd r1 = y1 - x1 * b, r2 = y2 - x2 * b;
    Eigen::MatrixXd ss1 = r1.transpose() * r1, ss2 = r2.transpose() * r2;
    sigma1 = inverse_wishart(rng, ss1, rows1);
    sigma2 = inverse_wishart(rng, ss2, rows2);

    if (sweep < burn_in) continue;
    HsvarReducedForm hr;
    hr.n = n;
    hr.p = p;
    hr.t_break = t_break;
    hr.coeffs = b.transpose();
    hr.sigma1 = sigma1;
    hr.sigma2 = sigma2;
    hr.validate();
    out.log_density.push_back(log_kernel(sigma1, ss1, rows1) + log_kernel(sigma2, ss2, rows2));
    out.hsvar.push_back(std::move(hr));
  }
  return out;
}

PosteriorIrf posterior_irf(const PosteriorDrawSet& draws, const RestrictionSpec& spec, int h_max,
                           const std::vector<double>& member_weights, std::uint64_t solve_seed,
                           int threads) {
  const int count = draws.count();
  if (count == 0) throw AllDrawsEmpty("posterior_irf: no posterior draws");
  const int n = spec.n;

  PosteriorIrf out;
  out.n = n;
  out.h_max = h_max;
  out.cells.assign(static_cast<std::size_t>(n * n * (h_max + 1)), {});

  struct DrawIrf {
    std::vector<std::vector<Eigen::MatrixXd>> member_irfs;
    std::vector<double> weights;
    bool used = false;
  };
  std::vector<DrawIrf> per_draw(static_cast<std::size_t>(count));
  parallel_for(count, threads, [&](int idx) {
    DrawSolve ds = solve_draw(draws, idx, spec, solve_seed, 1);
    if (ds.set.empty()) return;
    auto w = draw_weights(member_weights, ds.set.count());
    if (w.empty()) return;
    DrawIrf& d = per_draw[static_cast<std::size_t>(idx)];
    d.weights = std::move(w);
    d.member_irfs = identified_set_irf(ds.set, ds.rf, h_max);
    d.used = true;
  });

  for (const auto& d : per_draw) {
    if (!d.used) {
      out.empty_draws++;
      continue;
    }
    out.used_draws++;
    for (std::size_t m = 0; m < d.member_irfs.size(); ++m)
      for (int h = 0; h <= h_max; ++h) {
        const Eigen::MatrixXd& ir = d.member_irfs[m][static_cast<std::size_t>(h)];
        for (int i = 1; i <= n; ++i)
          for (int j = 1; j <= n; ++j)
            out.cells[static_cast<std::size_t>(cell_index(n, h_max, i, j, h))].push_back(
                {ir(i - 1, j - 1), d.weights[m]});
      }
  }
  if (out.used_draws == 0)
    throw AllDrawsEmpty("posterior_irf: every draw has an empty identified set");
  return out;
}

std::vector<std::pair<double, double>> highest_density_region(const std::vector<double>& values,
                                                              double level,
                                                              const std::vector<double>& weights) {
  if (values.size() < 100)
    throw TooFewSamples("highest_density_region: need at least 100 samples");
  if (!(level > 0.0))
    throw InvalidSpec("highest_density_region: level must be positive");
  const std::size_t s = values.size();
  std::vector<double> w = weights;
  if (w.empty()) w.assign(s, 1.0);
  if (w.size() != s)
    throw DimensionMismatch("highest_density_region: weights size mismatch");
  double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= total;

  const double vmin = *std::min_element(values.begin(), values.end());
  const double vmax = *std::max_element(values.begin(), values.end());
  if (level >= 1.0) return {{vmin, vmax}};
  if (!(vmax > vmin)) return {{vmin, vmax}};

  double mean = 0.0, wsq = 0.0;
  for (std::size_t i = 0; i < s; ++i) {
    mean += w[i] * values[i];
    wsq += w[i] * w[i];
  }
  double var = 0.0;
  for (std::size_t i = 0; i < s; ++i) var += w[i] * (values[i] - mean) * (values[i] - mean);
  const double sd = std::sqrt(var);
  if (sd < 1e-12) return {{vmin, vmax}};

  std::vector<std::size_t> order(s);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> sv(s), sw(s);
  for (std::size_t i = 0; i < s; ++i) {
    sv[i] = values[order[i]];
    sw[i] = w[order[i]];
  }
  const double iqr = weighted_quantile(sv, sw, 0.75) - weighted_quantile(sv, sw, 0.25);
  const double neff = 1.0 / wsq;
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  double bw = 0.9 * spread * std::pow(neff, -0.2);
  if (bw < 1e-12) bw = sd;

  const int grid_n = 2048;
  const double lo = vmin - 4.0 * bw, hi = vmax + 4.0 * bw;
  const double dx = (hi - lo) / (grid_n - 1);
  std::vector<double> dens(grid_n, 0.0);
  const double inv_bw = 1.0 / bw;
  for (int g = 0; g < grid_n; ++g) {
    const double x = lo + g * dx;
    double f = 0.0;
    for (std::size_t i = 0; i < s; ++i) {
      const double z = (x - sv[i]) * inv_bw;
      if (std::abs(z) > 8.0) continue;
      f += sw[i] * std::exp(-0.5 * z * z);
    }
    dens[static_cast<std::size_t>(g)] = f * inv_bw * 0.3989422804014327;
  }
  double mass_total = std::accumulate(dens.begin(), dens.end(), 0.0) * dx;
  std::vector<int> gorder(grid_n);
  std::iota(gorder.begin(), gorder.end(), 0);
  std::sort(gorder.begin(), gorder.end(), [&](int a, int b) {
    return dens[static_cast<std::size_t>(a)] > dens[static_cast<std::size_t>(b)];
  });
  double acc = 0.0;
  double threshold = dens[static_cast<std::size_t>(gorder.front())];
  for (int g : gorder) {
    acc += dens[static_cast<std::size_t>(g)] * dx / mass_total;
    threshold = dens[static_cast<std::size_t>(g)];
    if (acc >= level) break;
  }

  std::vector<std::pair<double, double>> out;
  bool open = false;
  double start = 0.0;
  for (int g = 0; g < grid_n; ++g) {
    const bool in = dens[static_cast<std::size_t>(g)] >= threshold * (1.0 - 1e-12);
    if (in && !open) {
      start = lo + g * dx;
      open = true;
    } else if (!in && open) {
      out.emplace_back(start, lo + (g - 1) * dx);
      open = false;
    }
  }
  if (open) out.emplace_back(start, hi);
  return out;
}

namespace {

// Sorted eta values per non-empty draw; empties counted.
std::vector<std::vector<double>> per_draw_eta(const PosteriorDrawSet& draws,
                                              const RestrictionSpec& spec,
                                              const IrfCoordinate& eta, std::uint64_t solve_seed,
                                              int& empty_draws) {
  const int count = draws.count();
  if (count == 0) throw AllDrawsEmpty("no posterior draws");
  std::vector<std::vector<double>> out;
  empty_draws = 0;
  for (int idx = 0; idx < count; ++idx) {
    DrawSolve ds = solve_draw(draws, idx, spec, solve_seed, eta.shock);
    if (ds.set.empty()) {
      empty_draws++;
      continue;
    }
    auto vals = eta_members(ds.rf, ds.set, eta);
    std::sort(vals.begin(), vals.end());
    out.push_back(std::move(vals));
  }
  if (out.empty()) throw AllDrawsEmpty("every draw has an empty identified set");
  return out;
}

}  // namespace

std::pair<double, double> robust_bounds_probability(const PosteriorDrawSet& draws,
                                                    const RestrictionSpec& spec,
                                                    const IrfCoordinate& eta,
                                                    const std::pair<double, double>& h0,
                                                    std::uint64_t solve_seed) {
  int empty = 0;
  auto per_draw = per_draw_eta(draws, spec, eta, solve_seed, empty);
  int inside = 0, touching = 0;
  for (const auto& vals : per_draw) {
    bool all_in = true, any_in = false;
    for (double v : vals) {
      const bool in = v >= h0.first && v <= h0.second;
      all_in = all_in && in;
      any_in = any_in || in;
    }
    inside += all_in ? 1 : 0;
    touching += any_in ? 1 : 0;
  }
  const double used = static_cast<double>(per_draw.size());
  return {inside / used, touching / used};
}

std::pair<double, double> posterior_mean_range(const PosteriorDrawSet& draws,
                                               const RestrictionSpec& spec,
                                               const IrfCoordinate& eta,
                                               std::uint64_t solve_seed) {
  int empty = 0;
  auto per_draw = per_draw_eta(draws, spec, eta, solve_seed, empty);
  double lo = 0.0, hi = 0.0;
  for (const auto& vals : per_draw) {
    lo += vals.front();
    hi += vals.back();
  }
  const double used = static_cast<double>(per_draw.size());
  return {lo / used, hi / used};
}

PosteriorDrawSet credible_region_phi(const PosteriorDrawSet& draws, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw InvalidSpec("credible_region_phi: alpha must be in (0, 1]");
  const int count = draws.count();
  if (count == 0) return draws;
  const int keep = static_cast<int>(std::ceil(alpha * count));

  std::vector<int> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double da = draws.log_density[static_cast<std::size_t>(a)];
    const double db = draws.log_density[static_cast<std::size_t>(b)];
    return da != db ? da > db : a < b;
  });
  std::vector<char> keep_mask(static_cast<std::size_t>(count), 0);
  for (int i = 0; i < keep; ++i) keep_mask[static_cast<std::size_t>(order[i])] = 1;

  PosteriorDrawSet out;
  out.seed = draws.seed;
  for (int i = 0; i < count; ++i) {
    if (!keep_mask[static_cast<std::size_t>(i)]) continue;
    out.log_density.push_back(draws.log_density[static_cast<std::size_t>(i)]);
    if (draws.heteroskedastic())
      out.hsvar.push_back(draws.hsvar[static_cast<std::size_t>(i)]);
    else
      out.reduced.push_back(draws.reduced[static_cast<std::size_t>(i)]);
  }
  return out;
}

ClusteredDrawSet cluster_draws(const PosteriorDrawSet& retained, const RestrictionSpec& spec,
                               const IrfCoordinate& eta, std::uint64_t solve_seed) {
  ClusteredDrawSet out;
  const int count = retained.count();
  if (count == 0) throw AllDrawsEmpty("cluster_draws: no retained draws");
  for (int idx = 0; idx < count; ++idx) {
    DrawSolve ds = solve_draw(retained, idx, spec, solve_seed, eta.shock);
    if (ds.set.empty()) {
      out.empty_draws++;
      continue;
    }
    std::vector<double> distinct;
    std::vector<int> mult;
    collapse_sorted(eta_members(ds.rf, ds.set, eta), distinct, mult);
    out.eta.push_back(std::move(distinct));
    out.multiplicity.push_back(std::move(mult));
  }
  ClusterCore core = cluster_values(out.eta);
  out.m_bar = core.m_bar;
  out.k_tilde = core.k_tilde;
  out.mu = core.mu;
  out.sigma2 = core.sigma2;
  out.variance_floored = core.floored;
  out.assignment = std::move(core.assignment);
  return out;
}

namespace {

std::vector<LabeledInterval> cluster_intervals(const std::vector<std::vector<double>>& per_draw,
                                               const ClusterCore& core) {
  std::vector<LabeledInterval> raw;
  for (int m = 1; m <= core.m_bar; ++m) {
    bool seen = false;
    double lo = 0.0, hi = 0.0;
    for (std::size_t d = 0; d < per_draw.size(); ++d) {
      const auto& assign = core.assignment[d];
      for (std::size_t t = 0; t < assign.size(); ++t) {
        if (assign[t] != m) continue;
        const double v = per_draw[d][t];
        if (!seen) {
          lo = hi = v;
          seen = true;
        } else {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
    }
    if (seen) raw.push_back({lo, hi, {m}});
  }
  return merge_intervals(std::move(raw));
}

}  // namespace

ProjectionConfidenceSet projection_cs_switching(const PosteriorDrawSet& retained,
                                                const RestrictionSpec& spec, double alpha,
                                                int h_max, std::uint64_t solve_seed,
                                                int threads) {
  const int count = retained.count();
  if (count == 0) throw AllDrawsEmpty("projection_cs_switching: no retained draws");
  const int n = spec.n;

  ProjectionConfidenceSet out;
  out.n = n;
  out.h_max = h_max;
  out.alpha = alpha;
  out.mode = "switching";
  out.cells.assign(static_cast<std::size_t>(n * n * (h_max + 1)), {});

  std::vector<std::vector<std::vector<Eigen::MatrixXd>>> irfs(
      static_cast<std::size_t>(count));
  parallel_for(count, threads, [&](int idx) {
    DrawSolve ds = solve_draw(retained, idx, spec, solve_seed, 1);
    if (ds.set.empty()) return;
    irfs[static_cast<std::size_t>(idx)] = identified_set_irf(ds.set, ds.rf, h_max);
  });
  std::vector<const std::vector<std::vector<Eigen::MatrixXd>>*> used;
  for (const auto& d : irfs) {
    if (d.empty())
      out.empty_draws++;
    else
      used.push_back(&d);
  }
  if (used.empty())
    throw AllDrawsEmpty("projection_cs_switching: every draw has an empty identified set");

  for (int h = 0; h <= h_max; ++h)
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        std::vector<std::vector<double>> per_draw;
        per_draw.reserve(used.size());
        for (const auto* d : used) {
          std::vector<double> vals;
          vals.reserve(d->size());
          for (const auto& member : *d)
            vals.push_back(member[static_cast<std::size_t>(h)](i - 1, j - 1));
          std::vector<double> distinct;
          std::vector<int> mult;
          collapse_sorted(std::move(vals), distinct, mult);
          per_draw.push_back(std::move(distinct));
        }
        ClusterCore core = cluster_values(per_draw);
        out.m_bar = std::max(out.m_bar, core.m_bar);
        out.variance_floored = out.variance_floored || core.floored;
        out.cells[static_cast<std::size_t>(cell_index(n, h_max, i, j, h))] =
            cluster_intervals(per_draw, core);
      }
  return out;
}

ProjectionConfidenceSet projection_cs_fixed(const PosteriorDrawSet& retained,
                                            const RestrictionSpec& spec, double alpha, int h_max,
                                            const IrfCoordinate& anchor,
                                            std::uint64_t solve_seed, int threads) {
  const int count = retained.count();
  if (count == 0) throw AllDrawsEmpty("projection_cs_fixed: no retained draws");
  const int n = spec.n;
  cell_index(n, std::max(h_max, anchor.horizon), anchor.variable, anchor.shock, anchor.horizon);

  ProjectionConfidenceSet out;
  out.n = n;
  out.h_max = h_max;
  out.alpha = alpha;
  out.mode = "fixed";
  out.anchor = anchor;
  out.cells.assign(static_cast<std::size_t>(n * n * (h_max + 1)), {});

  // Members sorted by their anchor response; ties collapse into one anchor
  // point whose group shares a cluster label.
  struct DrawFixed {
    std::vector<std::vector<Eigen::MatrixXd>> member_irfs;  // anchor-sorted
    std::vector<double> anchor_distinct;
    std::vector<int> group_of_member;
    bool used = false;
  };
  std::vector<DrawFixed> per_draw(static_cast<std::size_t>(count));
  parallel_for(count, threads, [&](int idx) {
    DrawSolve ds = solve_draw(retained, idx, spec, solve_seed, anchor.shock);
    if (ds.set.empty()) return;
    DrawFixed& d = per_draw[static_cast<std::size_t>(idx)];
    auto anchor_vals = eta_members(ds.rf, ds.set, anchor);
    std::vector<std::size_t> order(anchor_vals.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return anchor_vals[a] < anchor_vals[b]; });
    const int big_h = std::max(h_max, anchor.horizon);
    auto all_irfs = identified_set_irf(ds.set, ds.rf, big_h);
    for (std::size_t t = 0; t < order.size(); ++t) {
      const double v = anchor_vals[order[t]];
      if (d.anchor_distinct.empty() || v - d.anchor_distinct.back() >= kCollapseTol)
        d.anchor_distinct.push_back(v);
      d.group_of_member.push_back(static_cast<int>(d.anchor_distinct.size()) - 1);
      d.member_irfs.push_back(std::move(all_irfs[order[t]]));
    }
    d.used = true;
  });

  std::vector<const DrawFixed*> used;
  for (const auto& d : per_draw) {
    if (!d.used)
      out.empty_draws++;
    else
      used.push_back(&d);
  }
  if (used.empty())
    throw AllDrawsEmpty("projection_cs_fixed: every draw has an empty identified set");

  std::vector<std::vector<double>> anchor_sets;
  anchor_sets.reserve(used.size());
  for (const auto* d : used) anchor_sets.push_back(d->anchor_distinct);
  ClusterCore core = cluster_values(anchor_sets);
  out.m_bar = core.m_bar;
  out.variance_floored = core.floored;

  for (int h = 0; h <= h_max; ++h)
    for (int i = 1; i <= n; ++i)
      for (int j = 1; j <= n; ++j) {
        std::vector<LabeledInterval> raw;
        for (int m = 1; m <= core.m_bar; ++m) {
          bool seen = false;
          double lo = 0.0, hi = 0.0;
          for (std::size_t d = 0; d < used.size(); ++d) {
            const auto& assign = core.assignment[d];
            for (std::size_t mem = 0; mem < used[d]->member_irfs.size(); ++mem) {
              if (assign[static_cast<std::size_t>(used[d]->group_of_member[mem])] != m)
                continue;
              const double v =
                  used[d]->member_irfs[mem][static_cast<std::size_t>(h)](i - 1, j - 1);
              if (!seen) {
                lo = hi = v;
                seen = true;
              } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
              }
            }
          }
          if (seen) raw.push_back({lo, hi, {m}});
        }
        out.cells[static_cast<std::size_t>(cell_index(n, h_max, i, j, h))] =
            merge_intervals(std::move(raw));
      }
  return out;
}

}  // namespace lisvar
