#include "lisvar/var_core.hpp"

#include <cmath>

#include "lisvar/linalg.hpp"
#include "lisvar/rng.hpp"

namespace lisvar {

std::vector<Eigen::MatrixXd> vma_coefficients(const ReducedForm& rf, int h_max) {
  rf.validate();
  if (h_max < 0) throw DimensionMismatch("vma_coefficients: h_max must be nonnegative");
  std::vector<Eigen::MatrixXd> c;
  c.reserve(h_max + 1);
  c.push_back(Eigen::MatrixXd::Identity(rf.n, rf.n));
  for (int h = 1; h <= h_max; ++h) {
    Eigen::MatrixXd ch = Eigen::MatrixXd::Zero(rf.n, rf.n);
    for (int j = 1; j <= std::min(h, rf.p); ++j) ch += rf.lag(j) * c[h - j];
    c.push_back(std::move(ch));
  }
  return c;
}

std::vector<Eigen::MatrixXd> impulse_response(const ReducedForm& rf, const Eigen::MatrixXd& q,
                                              int h_max) {
  if (q.rows() != rf.n || q.cols() != rf.n)
    throw DimensionMismatch("impulse_response: Q must be n x n");
  Eigen::MatrixXd impact = cholesky_lower(rf.sigma) * q;
  auto c = vma_coefficients(rf, h_max);
  std::vector<Eigen::MatrixXd> ir;
  ir.reserve(c.size());
  for (const auto& ch : c) ir.push_back(ch * impact);
  return ir;
}

std::vector<Eigen::MatrixXd> cumulative_ir(const ReducedForm& rf, const Eigen::MatrixXd& q,
                                           int h_max) {
  auto ir = impulse_response(rf, q, h_max);
  for (std::size_t h = 1; h < ir.size(); ++h) ir[h] += ir[h - 1];
  return ir;
}

Eigen::MatrixXd companion_matrix(const ReducedForm& rf) {
  rf.validate();
  const int n = rf.n, p = rf.p;
  if (p == 0) return Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n * p, n * p);
  comp.topRows(n) = rf.coeffs.rightCols(n * p);
  if (p > 1) comp.block(n, 0, n * (p - 1), n * (p - 1)).setIdentity();
  return comp;
}

bool is_stable(const ReducedForm& rf, double margin) {
  return spectral_radius(companion_matrix(rf)) < 1.0 - margin;
}

Eigen::MatrixXd cumulative_ir_infinite(const ReducedForm& rf, const Eigen::MatrixXd& q) {
  if (q.rows() != rf.n || q.cols() != rf.n)
    throw DimensionMismatch("cumulative_ir_infinite: Q must be n x n");
  if (!is_stable(rf))
    throw UnstableProcess("cumulative_ir_infinite: companion spectral radius is not below 1");
  Eigen::MatrixXd lag_sum = Eigen::MatrixXd::Zero(rf.n, rf.n);
  for (int l = 1; l <= rf.p; ++l) lag_sum += rf.lag(l);
  Eigen::MatrixXd lr = (Eigen::MatrixXd::Identity(rf.n, rf.n) - lag_sum).inverse();
  return lr * cholesky_lower(rf.sigma) * q;
}

std::pair<ReducedForm, OrthogonalMatrix> map_g(const StructuralParams& sp) {
  sp.validate();
  Eigen::MatrixXd a0inv = sp.a0.inverse();
  ReducedForm rf;
  rf.n = sp.n();
  rf.p = sp.p();
  rf.coeffs = a0inv * sp.aplus;
  rf.sigma = a0inv * a0inv.transpose();
  Eigen::MatrixXd q = cholesky_lower(rf.sigma).transpose() * sp.a0.transpose();
  return {std::move(rf), OrthogonalMatrix(std::move(q))};
}

StructuralParams map_g_inverse(const ReducedForm& rf, const OrthogonalMatrix& q) {
  rf.validate();
  if (q.n() != rf.n) throw DimensionMismatch("map_g_inverse: Q dimension mismatch");
  Eigen::MatrixXd sigma_tr = cholesky_lower(rf.sigma);
  StructuralParams sp;
  sp.a0 = q.m.transpose() *
          sigma_tr.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(rf.n, rf.n));
  sp.aplus = sp.a0 * rf.coeffs;
  return sp;
}

SignNormalized sign_normalize(const Eigen::MatrixXd& q, const Eigen::MatrixXd& sigma_tr,
                              double tol) {
  const int n = static_cast<int>(q.rows());
  if (sigma_tr.rows() != n || sigma_tr.cols() != n)
    throw DimensionMismatch("sign_normalize: dimension mismatch");
  SignNormalized out;
  out.q = q;
  Eigen::MatrixXd a0 =
      q.transpose() * sigma_tr.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  for (int i = 0; i < n; ++i) {
    if (std::abs(a0(i, i)) <= tol)
      out.ambiguous.push_back(i + 1);
    else if (a0(i, i) < 0.0)
      out.q.col(i) = -out.q.col(i);
  }
  return out;
}

OlsStats fit_ols_stats(const Eigen::MatrixXd& data, int p) {
  const int t = static_cast<int>(data.rows());
  const int n = static_cast<int>(data.cols());
  if (n < 1) throw DimensionMismatch("fit_ols: data has no columns");
  if (p < 0) throw DimensionMismatch("fit_ols: negative lag order");
  const int k = n * p + 1;
  const int t_eff = t - p;
  if (t_eff < k + 1)
    throw DimensionMismatch("fit_ols: sample too short for " + std::to_string(k) + " regressors");

  OlsStats s;
  s.n = n;
  s.p = p;
  s.t_eff = t_eff;
  s.x.resize(t_eff, k);
  s.y = data.bottomRows(t_eff);
  for (int r = 0; r < t_eff; ++r) {
    s.x(r, 0) = 1.0;
    for (int l = 1; l <= p; ++l) s.x.block(r, 1 + (l - 1) * n, 1, n) = data.row(p + r - l);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(s.x);
  if (qr.rank() < k)
    throw RankDeficientRegressors("fit_ols: regressor matrix has rank " +
                                  std::to_string(qr.rank()) + " < " + std::to_string(k));
  s.bhat = qr.solve(s.y);
  s.xtx = s.x.transpose() * s.x;
  Eigen::MatrixXd resid = s.y - s.x * s.bhat;
  s.resid_ss = resid.transpose() * resid;
  return s;
}

ReducedForm fit_ols(const Eigen::MatrixXd& data, int p) {
  OlsStats s = fit_ols_stats(data, p);
  ReducedForm rf;
  rf.n = s.n;
  rf.p = s.p;
  rf.coeffs = s.bhat.transpose();
  rf.sigma = s.resid_ss / static_cast<double>(s.t_eff - s.n * s.p - 1);
  rf.validate();
  return rf;
}

namespace {

// Row ranges of the regressed sample belonging to each regime. Row r of the
// regression corresponds to data row p + r (0-based), i.e. sample index p+r+1.
struct RegimeSplit {
  int rows1 = 0;  // regression rows with sample index <= t_break
};

RegimeSplit split_regimes(int t, int p, int t_break) {
  if (t_break < 1 || t_break >= t)
    throw DimensionMismatch("t_break must split the sample into two nonempty regimes");
  RegimeSplit sp;
  sp.rows1 = std::max(0, t_break - p);
  return sp;
}

}  // namespace

HsvarReducedForm fit_hsvar_fgls(const Eigen::MatrixXd& data, int p, int t_break, int max_iter,
                                double tol) {
  OlsStats s = fit_ols_stats(data, p);
  const int n = s.n, k = n * p + 1;
  RegimeSplit split = split_regimes(static_cast<int>(data.rows()), p, t_break);
  const int t1 = split.rows1, t2 = s.t_eff - split.rows1;
  if (t1 < k + 1 || t2 < k + 1)
    throw ShortRegime("fit_hsvar_fgls: a regime has too few observations for the regression");

  Eigen::MatrixXd x1 = s.x.topRows(t1), x2 = s.x.bottomRows(t2);
  Eigen::MatrixXd y1 = s.y.topRows(t1), y2 = s.y.bottomRows(t2);
  Eigen::MatrixXd x1tx1 = x1.transpose() * x1, x2tx2 = x2.transpose() * x2;

  Eigen::MatrixXd bk = s.bhat;  // k x n
  Eigen::MatrixXd sigma1(n, n), sigma2(n, n);
  auto regime_cov = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int rows) {
    Eigen::MatrixXd u = y - x * bk;
    return Eigen::MatrixXd(u.transpose() * u / static_cast<double>(rows - n * p - 1));
  };
  sigma1 = regime_cov(x1, y1, t1);
  sigma2 = regime_cov(x2, y2, t2);

  for (int it = 0; it < max_iter; ++it) {
    Eigen::MatrixXd s1inv = sigma1.inverse(), s2inv = sigma2.inverse();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n * k, n * k);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        h.block(a * k, b * k, k, k) = s1inv(a, b) * x1tx1 + s2inv(a, b) * x2tx2;
    Eigen::MatrixXd rhs_mat = x1.transpose() * y1 * s1inv + x2.transpose() * y2 * s2inv;
    Eigen::VectorXd beta = h.ldlt().solve(Eigen::Map<Eigen::VectorXd>(rhs_mat.data(), n * k));
    Eigen::MatrixXd bk_new = Eigen::Map<Eigen::MatrixXd>(beta.data(), k, n);
    double step = (bk_new - bk).cwiseAbs().maxCoeff();
    bk = bk_new;
    sigma1 = regime_cov(x1, y1, t1);
    sigma2 = regime_cov(x2, y2, t2);
    if (step < tol) break;
  }

  HsvarReducedForm out;
  out.n = n;
  out.p = p;
  out.coeffs = bk.transpose();
  out.sigma1 = sigma1;
  out.sigma2 = sigma2;
  out.t_break = t_break;
  out.validate();
  return out;
}

namespace {

Eigen::MatrixXd simulate_impl(const StructuralParams& sp, const Eigen::VectorXd& shock_scale,
                              int t_break, int t_obs, std::uint64_t seed, int burn_in,
                              bool* stable_out) {
  sp.validate();
  const int n = sp.n(), p = sp.p();
  if (t_obs < 1) throw DimensionMismatch("simulate: t_obs must be positive");
  Eigen::MatrixXd a0inv = sp.a0.inverse();
  Eigen::MatrixXd coeffs = a0inv * sp.aplus;

  ReducedForm rf;
  rf.n = n;
  rf.p = p;
  rf.coeffs = coeffs;
  rf.sigma = a0inv * a0inv.transpose();
  if (stable_out) *stable_out = is_stable(rf);

  Rng rng(seed);
  Eigen::MatrixXd hist = Eigen::MatrixXd::Zero(p, n);  // most recent lag in row 0
  Eigen::MatrixXd out(t_obs, n);
  for (int t = -burn_in; t < t_obs; ++t) {
    Eigen::VectorXd eps = rng.normal_vector(n);
    if (t >= 0 && t + 1 > t_break) eps = eps.cwiseProduct(shock_scale);
    Eigen::VectorXd y = coeffs.col(0) + a0inv * eps;
    for (int l = 1; l <= p; ++l) y += coeffs.block(0, 1 + (l - 1) * n, n, n) * hist.row(l - 1).transpose();
    if (p > 0) {
      for (int l = p - 1; l >= 1; --l) hist.row(l) = hist.row(l - 1);
      hist.row(0) = y.transpose();
    }
    if (t >= 0) out.row(t) = y.transpose();
  }
  return out;
}

}  // namespace

SimResult simulate(const StructuralParams& sp, int t_obs, std::uint64_t seed, int burn_in) {
  SimResult r;
  r.data = simulate_impl(sp, Eigen::VectorXd::Ones(sp.n()), t_obs + 1, t_obs, seed, burn_in,
                         &r.stable);
  return r;
}

SimResult simulate_hsvar(const StructuralParams& sp, const LambdaDiag& lambda, int t_break,
                         int t_obs, std::uint64_t seed, int burn_in) {
  lambda.validate();
  if (lambda.values.size() != sp.n())
    throw DimensionMismatch("simulate_hsvar: lambda dimension mismatch");
  if (t_break < 1 || t_break >= t_obs)
    throw DimensionMismatch("simulate_hsvar: t_break must split the sample");
  SimResult r;
  r.data = simulate_impl(sp, lambda.values.cwiseSqrt(), t_break, t_obs, seed, burn_in, &r.stable);
  return r;
}

}  // namespace lisvar
