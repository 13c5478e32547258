#include "lisvar/identification.hpp"

#include <cmath>

#include "lisvar/linalg.hpp"
#include "lisvar/rng.hpp"
#include "lisvar/var_core.hpp"

namespace lisvar {

namespace {

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// F (I_n ⊗ Q): block column bj becomes F_{.,bj} Q.
Eigen::MatrixXd apply_block_q(const Eigen::MatrixXd& fmat, const Eigen::MatrixXd& q) {
  const int n = static_cast<int>(q.rows());
  Eigen::MatrixXd out(fmat.rows(), fmat.cols());
  for (int b = 0; b < n; ++b)
    out.middleCols(b * n, n) = fmat.middleCols(b * n, n) * q;
  return out;
}

// M Dtilde_n without forming Dtilde: column for pair (r, c), r > c, equals
// M.col(c*n + r) - M.col(r*n + c).
Eigen::MatrixXd contract_skew(const Eigen::MatrixXd& m, int n) {
  Eigen::MatrixXd out(m.rows(), n * (n - 1) / 2);
  int k = 0;
  for (int c = 0; c < n; ++c)
    for (int r = c + 1; r < n; ++r) out.col(k++) = m.col(c * n + r) - m.col(r * n + c);
  return out;
}

LocalRankCheck rank_check_from_rows(const Eigen::MatrixXd& rows_times_q, int n) {
  LocalRankCheck out;
  out.required = n * (n - 1) / 2;
  out.order_condition = rows_times_q.rows() >= out.required;
  out.rank = numerical_rank(contract_skew(rows_times_q, n));
  out.identified = out.rank == out.required;
  return out;
}

}  // namespace

GlobalCheck check_global_rwz(const RestrictionSpec& spec, const ReducedForm& rf) {
  Classification cl = classify(spec);
  if (!cl.recursive)
    throw NotRecursive("check_global_rwz: spec is not triangular with zero values");
  CompiledRestrictions cr = compile(spec, rf);
  const int n = rf.n;
  Eigen::MatrixXd sigma_tr = cholesky_lower(rf.sigma);
  Eigen::MatrixXd sigma_tr_inv =
      sigma_tr.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));

  GlobalCheck out;
  out.q = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i <= n; ++i) {
    Eigen::MatrixXd fii = cr.block(i, i);
    Eigen::MatrixXd test(n, n);
    test.leftCols(n - i) = fii.transpose();
    for (int k = 1; k < i; ++k) test.col(n - i + k - 1) = out.q.col(k - 1);
    test.col(n - 1) = sigma_tr_inv.col(i - 1);
    out.ranks.push_back(numerical_rank(test));
    if (out.ranks.back() < n) {
      out.first_failure = i;
      return out;
    }
    Eigen::MatrixXd constraints(n - 1, n);
    constraints.topRows(n - i) = fii;
    for (int k = 1; k < i; ++k) constraints.row(n - i + k - 1) = out.q.col(k - 1).transpose();
    Eigen::MatrixXd ns = null_space(constraints);
    if (ns.cols() != 1) {
      out.first_failure = i;
      return out;
    }
    Eigen::VectorXd qi = ns.col(0);
    if (qi.dot(sigma_tr_inv.col(i - 1)) < 0.0) qi = -qi;
    out.q.col(i - 1) = qi;
  }
  out.globally_identified = true;
  return out;
}

LocalRankCheck check_local_rank(const CompiledRestrictions& cr, const Eigen::MatrixXd& q) {
  if (q.rows() != cr.n || q.cols() != cr.n)
    throw DimensionMismatch("check_local_rank: Q must be n x n");
  return rank_check_from_rows(apply_block_q(cr.fmat, q), cr.n);
}

LocalRankCheck check_local_structural(const RestrictionSpec& spec, const StructuralParams& sp) {
  spec.validate();
  sp.validate();
  const int n = sp.n();
  if (spec.n != n) throw DimensionMismatch("check_local_structural: dimension mismatch");
  Eigen::MatrixXd a0inv = sp.a0.inverse();

  ReducedForm rf;
  rf.n = n;
  rf.p = sp.p();
  rf.coeffs = a0inv * sp.aplus;
  rf.sigma = a0inv * a0inv.transpose();

  int max_h = 0;
  bool need_longrun = false;
  for (const auto& a : spec.equalities) {
    if (a.kind == TargetKind::Irh) max_h = std::max(max_h, a.horizon);
    if (a.kind == TargetKind::CirInf) need_longrun = true;
  }
  auto vma = vma_coefficients(rf, max_h);
  Eigen::MatrixXd longrun;
  if (need_longrun) {
    if (!is_stable(rf))
      throw UnstableProcess("check_local_structural: long-run restriction on unstable process");
    Eigen::MatrixXd lag_sum = Eigen::MatrixXd::Zero(n, n);
    for (int l = 1; l <= rf.p; ++l) lag_sum += rf.lag(l);
    longrun = (Eigen::MatrixXd::Identity(n, n) - lag_sum).inverse() * a0inv;
  }
  auto lag_of_aplus = [&](int l) { return sp.aplus.block(0, 1 + (l - 1) * n, n, n); };

  const int f = static_cast<int>(spec.equalities.size());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(f, n * n);
  int row = 0;
  for (int b = 1; b <= n; ++b) {
    for (const auto& a : spec.equalities) {
      if (block_row(a) != b) continue;
      auto put = [&](int col_block, const Eigen::RowVectorXd& w) {
        g.block(row, (col_block - 1) * n, 1, n) += w;
      };
      switch (a.kind) {
        case TargetKind::A0Inv:
          put(a.j, a0inv.row(a.i - 1));
          break;
        case TargetKind::A0:
          put(a.i, sp.a0.col(a.j - 1).transpose());
          break;
        case TargetKind::Al:
          put(a.i, lag_of_aplus(a.lag).col(a.j - 1).transpose());
          break;
        case TargetKind::CirInf:
          put(a.j, longrun.row(a.i - 1));
          break;
        case TargetKind::Irh:
          put(a.j, (vma[a.horizon] * a0inv).row(a.i - 1));
          break;
        case TargetKind::ComboA0Inv:
          put(a.j, a0inv.row(a.i - 1));
          put(a.j2, Eigen::RowVectorXd(-a.d * a0inv.row(a.i2 - 1)));
          break;
        case TargetKind::ComboA0:
          put(a.i, sp.a0.col(a.j - 1).transpose());
          put(a.i2, Eigen::RowVectorXd(-a.d * sp.a0.col(a.j2 - 1).transpose()));
          break;
      }
      ++row;
    }
  }
  return rank_check_from_rows(g, n);
}

SubsetRankCheck check_subset_rank(const RestrictionSpec& spec, const ReducedForm& rf,
                                  const Eigen::MatrixXd& q1) {
  const int n = rf.n;
  const int s = static_cast<int>(q1.cols());
  if (q1.rows() != n || s < 1 || s > n)
    throw DimensionMismatch("check_subset_rank: Q1 must be n x s with 1 <= s <= n");
  if ((q1.transpose() * q1 - Eigen::MatrixXd::Identity(s, s)).cwiseAbs().maxCoeff() > kRelTol)
    throw NotOrthogonal("check_subset_rank: Q1 columns are not orthonormal");
  CompiledRestrictions cr = compile(spec, rf);

  std::vector<int> group1_rows;
  for (int b = 1; b <= s; ++b)
    for (int r : cr.rows_of_block[b - 1]) group1_rows.push_back(r);
  for (int r = 0; r < cr.f; ++r) {
    bool in_group1 = false;
    for (int rr : group1_rows) in_group1 |= (rr == r);
    double lead = cr.fmat.block(r, 0, 1, n * s).cwiseAbs().maxCoeff();
    double tail = (n > s) ? cr.fmat.block(r, n * s, 1, n * (n - s)).cwiseAbs().maxCoeff() : 0.0;
    if ((in_group1 && tail > 0.0) || (!in_group1 && lead > 0.0))
      throw NotPartitioned("check_subset_rank: a restriction links the two shock groups");
  }

  Eigen::MatrixXd f11(static_cast<int>(group1_rows.size()), n * s);
  for (std::size_t k = 0; k < group1_rows.size(); ++k)
    f11.row(static_cast<int>(k)) = cr.fmat.block(group1_rows[k], 0, 1, n * s);

  Eigen::MatrixXd sym_block =
      0.5 * (Eigen::MatrixXd::Identity(s * s, s * s) + commutation(s, s)) *
      kron(Eigen::MatrixXd::Identity(s, s), Eigen::MatrixXd(q1.transpose()));

  Eigen::MatrixXd stacked(f11.rows() + sym_block.rows(), n * s);
  stacked << f11, sym_block;

  SubsetRankCheck out;
  out.required = n * s;
  out.rank = numerical_rank(stacked);
  out.identified = out.rank == out.required;
  return out;
}

TriangularCheck check_triangular_sequential(const RestrictionSpec& spec,
                                            const CompiledRestrictions& cr,
                                            const Eigen::MatrixXd& q) {
  if (!classify(spec).triangular)
    throw NotTriangular("check_triangular_sequential: spec is not triangular");
  const int n = cr.n;
  if (q.rows() != n || q.cols() != n)
    throw DimensionMismatch("check_triangular_sequential: Q must be n x n");
  TriangularCheck out;
  for (int i = 1; i <= n; ++i) {
    Eigen::MatrixXd ftilde(n - 1, n);
    ftilde.topRows(n - i) = cr.block(i, i);
    for (int k = 1; k < i; ++k) ftilde.row(n - i + k - 1) = q.col(k - 1).transpose();
    out.ranks.push_back(numerical_rank(ftilde));
    out.level_ok.push_back(out.ranks.back() == n - 1);
  }
  out.identified = true;
  for (bool ok : out.level_ok) out.identified = out.identified && ok;
  bool prefix = true;
  for (int j = 0; j < n; ++j) {
    prefix = prefix && out.level_ok[j];
    out.shock_prefix_ok.push_back(prefix);
  }
  return out;
}

MiCheck check_rwz_sufficient_mi(const CompiledRestrictions& cr, const Eigen::MatrixXd& q) {
  const int n = cr.n;
  if (q.rows() != n || q.cols() != n)
    throw DimensionMismatch("check_rwz_sufficient_mi: Q must be n x n");
  MiCheck out;
  out.sufficient = true;
  for (int i = 1; i <= n; ++i) {
    Eigen::MatrixXd fii = cr.block(i, i);
    Eigen::MatrixXd mi(fii.rows() + i, n);
    mi.topRows(fii.rows()) = fii * q;
    mi.bottomRows(i).setZero();
    mi.bottomLeftCorner(i, i).setIdentity();
    out.ranks.push_back(numerical_rank(mi));
    out.sufficient = out.sufficient && out.ranks.back() == n;
  }
  return out;
}

std::uint64_t solution_count_bound(const RestrictionSpec& spec) {
  Classification cl = classify(spec);
  if (cl.recursive) return 1;
  const int e = cl.triangular ? spec.n : spec.n * (spec.n + 1) / 2;
  if (e > 62) throw DimensionMismatch("solution_count_bound: bound exceeds 2^62");
  return std::uint64_t{1} << e;
}

std::uint64_t subset_solution_count_bound(int s) {
  const int e = s * (s + 1) / 2;
  if (e > 62) throw DimensionMismatch("subset_solution_count_bound: bound exceeds 2^62");
  return std::uint64_t{1} << e;
}

namespace {

struct SearchSystem {
  const CompiledRestrictions& cr;
  int n;
  std::vector<std::pair<int, int>> orth_pairs;  // (i, j), i <= j, 0-based

  explicit SearchSystem(const CompiledRestrictions& c) : cr(c), n(c.n) {
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) orth_pairs.emplace_back(i, j);
  }

  int rows() const { return cr.f + static_cast<int>(orth_pairs.size()); }

  Eigen::VectorXd residual(const Eigen::MatrixXd& q) const {
    Eigen::VectorXd r(rows());
    r.head(cr.f) = evaluate_equality(cr, q);
    for (std::size_t k = 0; k < orth_pairs.size(); ++k) {
      auto [i, j] = orth_pairs[k];
      r(cr.f + static_cast<int>(k)) = q.col(i).dot(q.col(j)) - (i == j ? 1.0 : 0.0);
    }
    return r;
  }

  Eigen::MatrixXd jacobian(const Eigen::MatrixXd& q) const {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(rows(), n * n);
    jac.topRows(cr.f) = cr.fmat;
    for (std::size_t k = 0; k < orth_pairs.size(); ++k) {
      auto [i, j] = orth_pairs[k];
      int row = cr.f + static_cast<int>(k);
      jac.block(row, i * n, 1, n) += q.col(j).transpose();
      jac.block(row, j * n, 1, n) += q.col(i).transpose();
    }
    return jac;
  }
};

// Levenberg-Marquardt on the stacked equality+orthogonality system.
bool lm_polish(const SearchSystem& sys, Eigen::MatrixXd& q, int max_iter = 60) {
  const int n = sys.n;
  double lambda = 1e-3;
  Eigen::VectorXd r = sys.residual(q);
  for (int it = 0; it < max_iter; ++it) {
    if (r.cwiseAbs().maxCoeff() < 1e-13) return true;
    Eigen::MatrixXd jac = sys.jacobian(q);
    Eigen::MatrixXd h = jac.transpose() * jac;
    h.diagonal().array() += lambda;
    Eigen::VectorXd delta = h.ldlt().solve(-jac.transpose() * r);
    Eigen::MatrixXd q_new = q + Eigen::Map<const Eigen::MatrixXd>(delta.data(), n, n);
    Eigen::VectorXd r_new = sys.residual(q_new);
    if (r_new.squaredNorm() < r.squaredNorm()) {
      q = q_new;
      r = r_new;
      lambda = std::max(lambda * 0.3, 1e-12);
    } else {
      lambda *= 10.0;
      if (lambda > 1e12) return r.cwiseAbs().maxCoeff() < 1e-10;
    }
  }
  return sys.residual(q).cwiseAbs().maxCoeff() < 1e-10;
}

double hinge_objective(const CompiledRestrictions& cr, const Eigen::MatrixXd& q,
                       Eigen::MatrixXd* grad) {
  double obj = 0.0;
  if (grad) grad->setZero(q.rows(), q.cols());
  for (int j = 0; j < cr.n; ++j) {
    const auto& s = cr.sign_mats[j];
    if (s.rows() == 0) continue;
    Eigen::VectorXd v = s * q.col(j);
    for (int r = 0; r < v.size(); ++r) {
      if (v(r) < 0.0) {
        obj += v(r) * v(r);
        if (grad) grad->col(j) += 2.0 * v(r) * s.row(r).transpose();
      }
    }
  }
  return obj;
}

}  // namespace

AdmissibleSearch find_admissible_q(const RestrictionSpec& spec, const ReducedForm& rf,
                                   std::uint64_t seed, int max_restarts, int max_iter) {
  CompiledRestrictions cr = compile(spec, rf);
  const int n = cr.n;
  if (max_restarts <= 0) max_restarts = 20 * n;
  Eigen::MatrixXd sigma_tr = cholesky_lower(rf.sigma);
  SearchSystem sys(cr);
  Rng rng(seed);
  const double sign_weight = 10.0;

  AdmissibleSearch out;
  for (int restart = 0; restart < max_restarts; ++restart) {
    out.restarts_used = restart + 1;
    Eigen::MatrixXd q = rng.haar_orthogonal(n);
    Eigen::Map<const Eigen::VectorXd> vq(q.data(), n * n);

    auto objective = [&](const Eigen::MatrixXd& qq, Eigen::MatrixXd* grad) {
      Eigen::Map<const Eigen::VectorXd> v(qq.data(), n * n);
      Eigen::VectorXd eq = cr.f > 0 ? Eigen::VectorXd(cr.fmat * v - cr.cvec)
                                    : Eigen::VectorXd::Zero(0);
      double obj = eq.squaredNorm();
      if (grad) {
        Eigen::VectorXd gv = cr.f > 0 ? Eigen::VectorXd(2.0 * cr.fmat.transpose() * eq)
                                      : Eigen::VectorXd::Zero(n * n);
        *grad = Eigen::Map<const Eigen::MatrixXd>(gv.data(), n, n);
      }
      Eigen::MatrixXd sg;
      double sobj = hinge_objective(cr, qq, grad ? &sg : nullptr);
      if (grad) *grad += sign_weight * sg;
      return obj + sign_weight * sobj;
    };

    double step = 1.0;
    for (int it = 0; it < max_iter; ++it) {
      Eigen::MatrixXd grad;
      double obj = objective(q, &grad);
      if (obj < 1e-16) break;
      // Riemannian gradient, then polar retraction of the trial point.
      Eigen::MatrixXd qtg = q.transpose() * grad;
      Eigen::MatrixXd rgrad = grad - q * (0.5 * (qtg + qtg.transpose()));
      double gnorm = rgrad.norm();
      if (gnorm < 1e-14) break;
      bool moved = false;
      for (int half = 0; half < 30; ++half) {
        Eigen::MatrixXd trial = polar_factor(q - step * rgrad);
        if (objective(trial, nullptr) < obj) {
          q = trial;
          step = std::min(step * 2.0, 1e3);
          moved = true;
          break;
        }
        step *= 0.5;
      }
      if (!moved) break;
    }

    if (!lm_polish(sys, q)) continue;

    // Column flips keep orthogonality; accept only the ones that keep the
    // equality rows satisfied.
    SignNormalized norm = sign_normalize(q, sigma_tr);
    auto eq_ok = [&](const Eigen::MatrixXd& qq) {
      return cr.f == 0 || evaluate_equality(cr, qq).cwiseAbs().maxCoeff() <= 1e-10;
    };
    if (eq_ok(norm.q))
      q = norm.q;
    else
      for (int j = 0; j < n; ++j) {
        if (norm.q.col(j) == q.col(j)) continue;
        Eigen::MatrixXd trial = q;
        trial.col(j) = norm.q.col(j);
        if (eq_ok(trial)) q = trial;
      }

    double resid = sys.residual(q).cwiseAbs().maxCoeff();
    if (resid <= 1e-10 && satisfies_signs(cr, q) &&
        satisfies_normalization(spec, q, sigma_tr)) {
      out.q = q;
      out.residual = resid;
      return out;
    }
  }
  return out;
}

VerdictEvidence identification_verdict(const RestrictionSpec& spec,
                                       const std::function<ReducedForm(int)>& rf_sampler,
                                       int n_draws, bool stop_at_first_success,
                                       std::uint64_t seed) {
  VerdictEvidence ev;
  for (int d = 0; d < n_draws; ++d) {
    ReducedForm rf = rf_sampler(d);
    AdmissibleSearch search = find_admissible_q(spec, rf, seed + static_cast<std::uint64_t>(d));
    ev.per_draw_found.push_back(search.q.has_value());
    bool rank_ok = false;
    if (search.q) {
      ++ev.admissible_found;
      CompiledRestrictions cr = compile(spec, rf);
      rank_ok = check_local_rank(cr, *search.q).identified;
      if (rank_ok) ++ev.rank_satisfied;
    }
    ev.per_draw_rank_ok.push_back(rank_ok);
    ev.draws = d + 1;
    if (rank_ok && stop_at_first_success) break;
  }
  if (ev.rank_satisfied > 0)
    ev.verdict = Verdict::LocallyIdentifiedAlmostEverywhere;
  else if (ev.admissible_found > 0)
    ev.verdict = Verdict::NotIdentified;
  else
    ev.verdict = Verdict::Inconclusive;
  return ev;
}

}  // namespace lisvar
