#include "lisvar/solve.hpp"

#include <cmath>

#include "lisvar/linalg.hpp"
#include "lisvar/rng.hpp"
#include "lisvar/var_core.hpp"

namespace lisvar {

namespace {

constexpr double kAdmissTol = 1e-10;
constexpr double kDedupTol = 1e-6;
constexpr double kTangencyTol = 1e-12;

Eigen::MatrixXd lower_inverse(const Eigen::MatrixXd& l) {
  const int n = static_cast<int>(l.rows());
  return l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
}

// Largest-magnitude entry positive: the deterministic representative used
// whenever the normalization rule leaves a column sign undetermined.
bool column_canonical(const Eigen::VectorXd& v) {
  int imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  return v(imax) >= 0.0;
}

struct Filter {
  const RestrictionSpec& spec;
  const CompiledRestrictions& cr;
  Eigen::MatrixXd sigma_tr_inv;

  Filter(const RestrictionSpec& s, const CompiledRestrictions& c, const Eigen::MatrixXd& sigma_tr)
      : spec(s), cr(c), sigma_tr_inv(lower_inverse(sigma_tr)) {}

  double norm_margin(const Eigen::VectorXd& qi, int i) const {
    return qi.dot(sigma_tr_inv.col(i));
  }

  bool admissible(const Eigen::MatrixXd& q) const {
    if (!satisfies_signs(cr, q, kAdmissTol)) return false;
    if (spec.normalization == NormalizationRule::None) return true;
    for (int i = 0; i < cr.n; ++i)
      if (norm_margin(q.col(i), i) < -kAdmissTol) return false;
    return true;
  }

  // Columns whose normalization margin vanishes carry a sign the rule cannot
  // pick; flip them to the canonical representative when the equality rows
  // and sign restrictions allow it.
  Eigen::MatrixXd canonicalize(const Eigen::MatrixXd& q) const {
    if (spec.normalization == NormalizationRule::None) return q;
    Eigen::MatrixXd out = q;
    for (int i = 0; i < cr.n; ++i) {
      if (std::abs(norm_margin(out.col(i), i)) > kAdmissTol) continue;
      if (column_canonical(out.col(i))) continue;
      Eigen::MatrixXd trial = out;
      trial.col(i) = -trial.col(i);
      bool eq_ok = cr.f == 0 || evaluate_equality(cr, trial).cwiseAbs().maxCoeff() <= kAdmissTol;
      if (eq_ok && satisfies_signs(cr, trial, kAdmissTol)) out = trial;
    }
    return out;
  }
};

bool push_unique(IdentifiedSet& set, const Eigen::MatrixXd& q, double residual,
                 std::uint32_t bits = 0, bool with_bits = false) {
  for (const auto& existing : set.q)
    if ((existing - q).norm() <= kDedupTol) return false;
  set.q.push_back(q);
  set.residuals.push_back(residual);
  if (with_bits) set.bit_labels.push_back(bits);
  return true;
}

double full_residual(const CompiledRestrictions& cr, const Eigen::MatrixXd& q) {
  const int n = static_cast<int>(q.rows());
  double orth =
      (q.transpose() * q - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  double eq = cr.f > 0 ? evaluate_equality(cr, q).cwiseAbs().maxCoeff() : 0.0;
  return std::max(orth, eq);
}

}  // namespace

bool is_admissible(const RestrictionSpec& spec, const CompiledRestrictions& cr,
                   const Eigen::MatrixXd& sigma_tr, const Eigen::MatrixXd& q) {
  return Filter(spec, cr, sigma_tr).admissible(q);
}

Eigen::MatrixXd canonical_member(const RestrictionSpec& spec, const CompiledRestrictions& cr,
                                 const Eigen::MatrixXd& sigma_tr, const Eigen::MatrixXd& q) {
  return Filter(spec, cr, sigma_tr).canonicalize(q);
}

IdentifiedSet solve_triangular(const RestrictionSpec& spec, const ReducedForm& rf) {
  if (!classify(spec).triangular)
    throw NotTriangular("solve_triangular: spec is not triangular");
  CompiledRestrictions cr = compile(spec, rf);
  const int n = cr.n;
  Eigen::MatrixXd sigma_tr = cholesky_lower(rf.sigma);
  Filter filter(spec, cr, sigma_tr);

  IdentifiedSet set;
  set.route = "triangular";

  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);

  // Levels are explored depth first; bit i-1 of the label records whether the
  // larger quadratic root was taken at level i.
  auto descend = [&](auto&& self, int level, std::uint32_t bits) -> void {
    if (level > n) {
      Eigen::MatrixXd cand = filter.canonicalize(q);
      if (push_unique(set, cand, full_residual(cr, cand), bits, true)) set.converged++;
      return;
    }
    const int fi = cr.block_counts[level - 1];
    Eigen::MatrixXd ftilde(n - 1, n);
    ftilde.topRows(fi) = cr.block(level, level);
    for (int k = 1; k < level; ++k) ftilde.row(fi + k - 1) = q.col(k - 1).transpose();
    if (numerical_rank(ftilde) < n - 1)
      throw RankDeficientLevel(level, "solve_triangular: F-tilde at level " +
                                          std::to_string(level) + " is rank deficient");

    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n - 1);
    rhs.head(fi) = cr.block_c(level);
    for (int j = 1; j < level; ++j) rhs.head(fi) -= cr.block(level, j) * q.col(j - 1);

    Eigen::MatrixXd gram = ftilde * ftilde.transpose();
    Eigen::VectorXd d = ftilde.transpose() * gram.ldlt().solve(rhs);
    Eigen::VectorXd alpha = null_space(ftilde).col(0);

    const double lam = d.squaredNorm() - 1.0;
    const double xi = d.dot(alpha);
    const double omega = alpha.squaredNorm();
    const double disc = xi * xi - lam * omega;

    std::vector<double> roots;
    if (std::abs(disc) < kTangencyTol)
      roots.push_back(-xi / omega);
    else if (disc > 0.0) {
      const double s = std::sqrt(disc);
      roots.push_back((-xi - s) / omega);
      roots.push_back((-xi + s) / omega);
    }
    for (std::size_t r = 0; r < roots.size(); ++r) {
      Eigen::VectorXd qi = d + roots[r] * alpha;
      bool norm_ok = spec.normalization == NormalizationRule::None ||
                     filter.norm_margin(qi, level - 1) >= -kAdmissTol;
      bool sign_ok = cr.sign_mats[level - 1].rows() == 0 ||
                     (cr.sign_mats[level - 1] * qi).minCoeff() >= -kAdmissTol;
      if (!norm_ok || !sign_ok) {
        set.discarded++;
        continue;
      }
      q.col(level - 1) = qi;
      self(self, level + 1, bits | (static_cast<std::uint32_t>(r) << (level - 1)));
    }
  };
  descend(descend, 1, 0);
  return set;
}

IdentifiedSet solve_bivariate_closed_form(const ReducedForm& rf, double c) {
  if (rf.n != 2) throw DimensionMismatch("solve_bivariate_closed_form: n must be 2");
  rf.validate();
  RestrictionSpec spec;
  spec.n = 2;
  spec.p = rf.p;
  spec.equalities.push_back({TargetKind::A0Inv, 1, 1, 0, 0, 0, 0, 1.0, c});
  CompiledRestrictions cr = compile(spec, rf);
  Eigen::MatrixXd sigma_tr = cholesky_lower(rf.sigma);
  Filter filter(spec, cr, sigma_tr);

  IdentifiedSet set;
  set.route = "bivariate-closed-form";

  const double s11 = sigma_tr(0, 0);
  const double ratio = c / s11;
  const double disc = 1.0 - ratio * ratio;

  std::vector<double> seconds;
  if (std::abs(disc) < kTangencyTol)
    seconds.push_back(0.0);
  else if (disc > 0.0) {
    seconds.push_back(std::sqrt(disc));
    seconds.push_back(-std::sqrt(disc));
  }

  for (double y : seconds) {
    Eigen::VectorXd q1(2), q2(2);
    q1 << ratio, y;
    if (filter.norm_margin(q1, 0) < -kAdmissTol) {
      set.discarded++;
      continue;
    }
    q2 << -y, ratio;  // unit orthogonal complement
    double m2 = filter.norm_margin(q2, 1);
    if (m2 < -kAdmissTol) {
      q2 = -q2;
      m2 = -m2;
    }
    Eigen::MatrixXd qmat(2, 2);
    qmat << q1, q2;
    qmat = filter.canonicalize(qmat);
    push_unique(set, qmat, full_residual(cr, qmat));
  }
  return set;
}

IdentifiedSet solve_general(const RestrictionSpec& spec, const ReducedForm& rf,
                            std::uint64_t seed, int starts) {
  spec.validate();
  CompiledRestrictions cr = compile(spec, rf);
  const int n = cr.n;
  const int n_orth = n * (n + 1) / 2;
  if (cr.f != n * (n - 1) / 2)
    throw InvalidSpec("solve_general: needs exactly n(n-1)/2 equality rows, got " +
                      std::to_string(cr.f));
  if (starts <= 0) {
    if (n_orth > 25) throw DimensionMismatch("solve_general: default start count overflows");
    starts = 50 * (1 << n_orth);
  }
  Eigen::MatrixXd sigma_tr = cholesky_lower(rf.sigma);
  Filter filter(spec, cr, sigma_tr);

  IdentifiedSet set;
  set.route = "general-newton";
  set.starts = starts;

  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) pairs.emplace_back(i, j);

  const int rows = cr.f + n_orth;  // == n^2
  Eigen::VectorXd r(rows), r_new(rows);
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(rows, n * n);
  jac.topRows(cr.f) = cr.fmat;

  auto residual_at = [&](const Eigen::MatrixXd& qm, Eigen::VectorXd& out) {
    Eigen::Map<const Eigen::VectorXd> v(qm.data(), n * n);
    out.head(cr.f) = cr.fmat * v - cr.cvec;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      auto [i, j] = pairs[k];
      out(cr.f + static_cast<int>(k)) = qm.col(i).dot(qm.col(j)) - (i == j ? 1.0 : 0.0);
    }
  };

  Rng rng(seed);
  for (int s = 0; s < starts; ++s) {
    Eigen::MatrixXd qm = rng.haar_orthogonal(n);
    residual_at(qm, r);
    bool converged = false;
    for (int it = 0; it < 200; ++it) {
      if (r.cwiseAbs().maxCoeff() < 1e-12) {
        converged = true;
        break;
      }
      for (std::size_t k = 0; k < pairs.size(); ++k) {
        auto [i, j] = pairs[k];
        int row = cr.f + static_cast<int>(k);
        jac.block(row, 0, 1, n * n).setZero();
        jac.block(row, i * n, 1, n) += qm.col(j).transpose();
        jac.block(row, j * n, 1, n) += qm.col(i).transpose();
      }
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
      Eigen::VectorXd delta = lu.solve(-r);
      if (!delta.allFinite() || delta.norm() > 1e4) break;
      double base = r.squaredNorm();
      double t = 1.0;
      bool moved = false;
      for (int half = 0; half < 25; ++half) {
        Eigen::MatrixXd trial = qm + t * Eigen::Map<const Eigen::MatrixXd>(delta.data(), n, n);
        residual_at(trial, r_new);
        if (r_new.squaredNorm() < base) {
          qm = trial;
          r = r_new;
          moved = true;
          break;
        }
        t *= 0.5;
      }
      if (!moved) break;
      if (r.cwiseAbs().maxCoeff() > 1e8) break;
    }
    if (!converged) continue;
    set.converged++;
    if (!filter.admissible(qm)) {
      set.discarded++;
      continue;
    }
    Eigen::MatrixXd cand = filter.canonicalize(qm);
    push_unique(set, cand, full_residual(cr, cand));
  }
  return set;
}

IdentifiedSet solve_hsvar(const RestrictionSpec& spec, const HsvarReducedForm& rf,
                          int shock_position) {
  spec.validate();
  rf.validate();
  if (!spec.equalities.empty())
    throw InvalidSpec("solve_hsvar: the heteroskedasticity route takes sign restrictions only");
  if (spec.n != rf.n) throw DimensionMismatch("solve_hsvar: dimension mismatch");
  if (shock_position < 1 || shock_position > rf.n)
    throw DimensionMismatch("solve_hsvar: shock position out of range");

  ReducedForm rf1 = rf.regime(1);
  CompiledRestrictions cr = compile(spec, rf1);
  Eigen::MatrixXd sigma_tr = cholesky_lower(rf.sigma1);
  Eigen::MatrixXd w_half = sigma_tr.triangularView<Eigen::Lower>().solve(rf.sigma2);
  Eigen::MatrixXd w = sigma_tr.triangularView<Eigen::Lower>().solve(w_half.transpose());
  w = 0.5 * (w + w.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w);
  if (es.info() != Eigen::Success) throw Error("solve_hsvar: eigendecomposition failed");
  const int n = rf.n;

  // Descending eigenvalues; deterministic eigenvector signs.
  Eigen::VectorXd lam(n);
  Eigen::MatrixXd qf(n, n);
  for (int i = 0; i < n; ++i) {
    lam(i) = es.eigenvalues()(n - 1 - i);
    Eigen::VectorXd v = es.eigenvectors().col(n - 1 - i);
    if (!column_canonical(v)) v = -v;
    qf.col(i) = v;
  }

  IdentifiedSet set;
  set.route = "hsvar-eigen";
  LambdaDiag ld;
  ld.values = lam;
  ld.validate();
  set.lambda = ld;
  for (int i = 0; i + 1 < n; ++i)
    if (lam(i) - lam(i + 1) < 1e-6) set.near_degenerate = true;

  Filter filter(spec, cr, sigma_tr);
  const Eigen::MatrixXd& smat = cr.sign_mats[shock_position - 1];
  const int pos = shock_position - 1;

  for (int i = 0; i < n; ++i) {
    double sign = 0.0;
    if (smat.rows() == 0 || (smat * qf.col(i)).minCoeff() >= -kAdmissTol)
      sign = 1.0;
    else if ((smat * (-qf.col(i))).minCoeff() >= -kAdmissTol)
      sign = -1.0;
    else {
      set.discarded++;
      continue;
    }
    Eigen::MatrixXd qm = qf;
    qm.col(i) = qm.col(pos);
    qm.col(pos) = sign * qf.col(i);
    // Columns other than the shock of interest keep the default normalization.
    if (spec.normalization == NormalizationRule::A0DiagNonNeg) {
      SignNormalized norm = sign_normalize(qm, sigma_tr, kAdmissTol);
      for (int j = 0; j < n; ++j)
        if (j != pos) qm.col(j) = norm.q.col(j);
      qm = filter.canonicalize(qm);
    }
    set.admissible_shocks.push_back(i + 1);
    push_unique(set, qm, full_residual(cr, qm));
  }
  return set;
}

IdentifiedSet solve_identified_set(const RestrictionSpec& spec, const ReducedForm& rf,
                                   std::uint64_t seed) {
  if (classify(spec).triangular) return solve_triangular(spec, rf);
  return solve_general(spec, rf, seed);
}

std::vector<std::vector<Eigen::MatrixXd>> identified_set_irf(const IdentifiedSet& set,
                                                             const ReducedForm& rf, int h_max) {
  if (set.empty())
    throw EmptyIdentifiedSet("identified_set_irf: the identified set has no members");
  std::vector<std::vector<Eigen::MatrixXd>> out;
  out.reserve(set.q.size());
  for (const auto& q : set.q) out.push_back(impulse_response(rf, q, h_max));
  return out;
}

}  // namespace lisvar
