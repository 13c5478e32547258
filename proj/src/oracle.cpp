#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "lisvar/linalg.hpp"
#include "lisvar/solve.hpp"
#include "lisvar/var_core.hpp"

// Exhaustive certification route. The search here (dense grid over O(n) plus
// Levenberg-Marquardt refinement) shares no mechanics with the multi-start
// Newton solver or the level-by-level construction, so agreement between the
// routes is informative.

namespace lisvar {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::Matrix2d planar(double theta, bool reflect) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d m;
  if (reflect)
    m << c, s, s, -c;
  else
    m << c, -s, s, c;
  return m;
}

Eigen::Matrix3d euler_zyz(double a, double b, double c, bool reflect) {
  const double ca = std::cos(a), sa = std::sin(a);
  const double cb = std::cos(b), sb = std::sin(b);
  const double cc = std::cos(c), sc = std::sin(c);
  Eigen::Matrix3d za, yb, zc;
  za << ca, -sa, 0, sa, ca, 0, 0, 0, 1;
  yb << cb, 0, sb, 0, 1, 0, -sb, 0, cb;
  zc << cc, -sc, 0, sc, cc, 0, 0, 0, 1;
  Eigen::Matrix3d m = za * yb * zc;
  if (reflect) m.col(2) = -m.col(2);
  return m;
}

double equality_res2(const CompiledRestrictions& cr, const Eigen::MatrixXd& q) {
  Eigen::Map<const Eigen::VectorXd> v(q.data(), q.size());
  return (cr.fmat * v - cr.cvec).squaredNorm();
}

Eigen::VectorXd stacked_residual(const CompiledRestrictions& cr, const Eigen::MatrixXd& q) {
  const int n = cr.n;
  Eigen::VectorXd r(cr.f + n * (n + 1) / 2);
  Eigen::Map<const Eigen::VectorXd> v(q.data(), q.size());
  r.head(cr.f) = cr.fmat * v - cr.cvec;
  int row = cr.f;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      r(row++) = q.col(i).dot(q.col(j)) - (i == j ? 1.0 : 0.0);
  return r;
}

bool lm_refine(const CompiledRestrictions& cr, Eigen::MatrixXd& q) {
  const int n = cr.n;
  const int rows = cr.f + n * (n + 1) / 2;
  const int cols = n * n;
  Eigen::MatrixXd jac(rows, cols);
  jac.topRows(cr.f) = cr.fmat;
  double mu = 1e-3;
  for (int iter = 0; iter < 120; ++iter) {
    Eigen::VectorXd r = stacked_residual(cr, q);
    if (r.cwiseAbs().maxCoeff() < 1e-12) return true;
    int row = cr.f;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        jac.row(row).setZero();
        jac.block(row, i * n, 1, n) += q.col(j).transpose();
        jac.block(row, j * n, 1, n) += q.col(i).transpose();
        ++row;
      }
    Eigen::MatrixXd normal = jac.transpose() * jac;
    Eigen::VectorXd grad = jac.transpose() * r;
    bool stepped = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd damped = normal;
      damped.diagonal().array() += mu;
      Eigen::VectorXd delta = damped.ldlt().solve(-grad);
      Eigen::MatrixXd trial = q + Eigen::Map<const Eigen::MatrixXd>(delta.data(), n, n);
      if (stacked_residual(cr, trial).squaredNorm() < r.squaredNorm()) {
        q = trial;
        mu = std::max(mu * 0.3, 1e-12);
        stepped = true;
        break;
      }
      mu *= 10.0;
      if (mu > 1e12) return false;
    }
    if (!stepped) return false;
  }
  return stacked_residual(cr, q).cwiseAbs().maxCoeff() < 1e-12;
}

}  // namespace

IdentifiedSet brute_force_oracle(const RestrictionSpec& spec, const ReducedForm& rf,
                                 int grid_density) {
  spec.validate();
  CompiledRestrictions cr = compile(spec, rf);
  const int n = cr.n;
  if (n != 2 && n != 3)
    throw DimensionMismatch("brute_force_oracle: only n = 2 or 3 supported");
  if (cr.f < n * (n - 1) / 2)
    throw InvalidSpec("brute_force_oracle: under-determined spec has a continuum of solutions");
  if (grid_density < 8) grid_density = 8;

  Eigen::MatrixXd sigma_tr = cholesky_lower(rf.sigma);

  IdentifiedSet set;
  set.route = "grid-oracle";

  std::vector<Eigen::MatrixXd> candidates;
  const int keep_best = 256;

  if (n == 2) {
    const int m = grid_density * grid_density;
    for (int branch = 0; branch < 2; ++branch) {
      std::vector<double> res2(m);
      for (int i = 0; i < m; ++i)
        res2[i] = equality_res2(cr, planar(2.0 * kPi * i / m, branch == 1));
      std::vector<int> order(m);
      for (int i = 0; i < m; ++i) order[i] = i;
      std::partial_sort(order.begin(), order.begin() + std::min(keep_best, m), order.end(),
                        [&](int a, int b) { return res2[a] < res2[b]; });
      std::vector<char> mark(m, 0);
      for (int k = 0; k < std::min(keep_best, m); ++k) mark[order[k]] = 1;
      for (int i = 0; i < m; ++i) {
        const double v = res2[i];
        if (v <= res2[(i + 1) % m] && v <= res2[(i + m - 1) % m]) mark[i] = 1;
      }
      for (int i = 0; i < m; ++i)
        if (mark[i]) candidates.push_back(planar(2.0 * kPi * i / m, branch == 1));
    }
  } else {
    const int ga = grid_density, gb = grid_density / 2 + 1, gc = grid_density;
    const int m = ga * gb * gc;
    auto angle_a = [&](int ia) { return 2.0 * kPi * ia / ga; };
    auto angle_b = [&](int ib) { return kPi * ib / (gb - 1); };
    auto angle_c = [&](int ic) { return 2.0 * kPi * ic / gc; };
    auto idx = [&](int ia, int ib, int ic) { return (ia * gb + ib) * gc + ic; };
    for (int branch = 0; branch < 2; ++branch) {
      std::vector<double> res2(m);
      for (int ia = 0; ia < ga; ++ia)
        for (int ib = 0; ib < gb; ++ib)
          for (int ic = 0; ic < gc; ++ic)
            res2[idx(ia, ib, ic)] = equality_res2(
                cr, euler_zyz(angle_a(ia), angle_b(ib), angle_c(ic), branch == 1));
      std::vector<int> order(m);
      for (int i = 0; i < m; ++i) order[i] = i;
      std::partial_sort(order.begin(), order.begin() + std::min(keep_best, m), order.end(),
                        [&](int a, int b) { return res2[a] < res2[b]; });
      std::vector<char> mark(m, 0);
      for (int k = 0; k < std::min(keep_best, m); ++k) mark[order[k]] = 1;
      for (int ia = 0; ia < ga; ++ia)
        for (int ib = 0; ib < gb; ++ib)
          for (int ic = 0; ic < gc; ++ic) {
            const double v = res2[idx(ia, ib, ic)];
            if (v > res2[idx((ia + 1) % ga, ib, ic)]) continue;
            if (v > res2[idx((ia + ga - 1) % ga, ib, ic)]) continue;
            if (v > res2[idx(ia, ib, (ic + 1) % gc)]) continue;
            if (v > res2[idx(ia, ib, (ic + gc - 1) % gc)]) continue;
            if (ib + 1 < gb && v > res2[idx(ia, ib + 1, ic)]) continue;
            if (ib > 0 && v > res2[idx(ia, ib - 1, ic)]) continue;
            mark[idx(ia, ib, ic)] = 1;
          }
      for (int ia = 0; ia < ga; ++ia)
        for (int ib = 0; ib < gb; ++ib)
          for (int ic = 0; ic < gc; ++ic)
            if (mark[idx(ia, ib, ic)])
              candidates.push_back(
                  euler_zyz(angle_a(ia), angle_b(ib), angle_c(ic), branch == 1));
    }
  }

  set.starts = static_cast<int>(candidates.size());
  for (auto& q : candidates) {
    if (!lm_refine(cr, q)) continue;
    set.converged++;
    if (!is_admissible(spec, cr, sigma_tr, q)) {
      set.discarded++;
      continue;
    }
    Eigen::MatrixXd cand = canonical_member(spec, cr, sigma_tr, q);
    bool fresh = true;
    for (const auto& existing : set.q)
      if ((existing - cand).norm() <= 1e-6) {
        fresh = false;
        break;
      }
    if (!fresh) continue;
    set.q.push_back(cand);
    double orth =
        (cand.transpose() * cand - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
    set.residuals.push_back(std::max(orth, std::sqrt(equality_res2(cr, cand))));
  }
  return set;
}

}  // namespace lisvar
