#include "lisvar/restrictions.hpp"

#include <cmath>
#include <limits>

#include "lisvar/linalg.hpp"
#include "lisvar/var_core.hpp"

namespace lisvar {

namespace {

void check_index(int v, int n, const char* what) {
  if (v < 1 || v > n)
    throw InvalidSpec(std::string(what) + " index " + std::to_string(v) + " outside 1.." +
                      std::to_string(n));
}

}  // namespace

void RestrictionSpec::validate() const {
  if (n < 1) throw InvalidSpec("spec: n must be positive");
  if (p < 0) throw InvalidSpec("spec: negative lag order");
  for (const auto& a : equalities) {
    check_index(a.i, n, "equality row");
    check_index(a.j, n, "equality column");
    if (!std::isfinite(a.value)) throw InvalidSpec("equality value must be finite");
    switch (a.kind) {
      case TargetKind::Al:
        if (a.lag < 1 || a.lag > p)
          throw InvalidSpec("lag " + std::to_string(a.lag) + " outside 1.." + std::to_string(p));
        break;
      case TargetKind::Irh:
        if (a.horizon < 0) throw InvalidSpec("negative horizon");
        break;
      case TargetKind::ComboA0Inv:
      case TargetKind::ComboA0:
        check_index(a.i2, n, "combo second row");
        check_index(a.j2, n, "combo second column");
        if (!std::isfinite(a.d)) throw InvalidSpec("combo scale must be finite");
        break;
      default:
        break;
    }
  }
  for (const auto& s : signs) {
    check_index(s.variable, n, "sign variable");
    check_index(s.shock, n, "sign shock");
    if (s.h_from < 0 || s.h_to < s.h_from) throw InvalidSpec("sign horizon range is invalid");
  }
}

int block_row(const EqualityAtom& atom) {
  switch (atom.kind) {
    case TargetKind::A0:
    case TargetKind::Al:
    case TargetKind::ComboA0:
      return atom.i;
    default:
      return atom.j;
  }
}

Classification classify(const RestrictionSpec& spec) {
  spec.validate();
  Classification cl;
  cl.f.assign(spec.n, 0);
  cl.homogeneous = true;
  bool combos_ok = true;
  for (const auto& a : spec.equalities) {
    int b = block_row(a);
    ++cl.f[b - 1];
    if (a.value != 0.0) cl.homogeneous = false;
    if (a.kind == TargetKind::ComboA0Inv && a.j2 > b) combos_ok = false;
    if (a.kind == TargetKind::ComboA0 && a.i2 > b) combos_ok = false;
  }
  cl.triangular = combos_ok;
  for (int i = 0; i < spec.n; ++i)
    if (cl.f[i] != spec.n - 1 - i) cl.triangular = false;
  cl.recursive = cl.triangular && cl.homogeneous;
  cl.ordered_counts = true;
  for (int i = 1; i < spec.n; ++i)
    if (cl.f[i] > cl.f[i - 1]) cl.ordered_counts = false;
  return cl;
}

namespace {

// One equality atom as weight vectors on the columns of Q it touches.
struct AtomTerms {
  std::vector<std::pair<int, Eigen::VectorXd>> terms;  // (column block 1-based, weight)
};

struct CompileContext {
  const ReducedForm* rf = nullptr;
  Eigen::MatrixXd sigma_tr;
  Eigen::MatrixXd sigma_tr_inv;
  std::vector<Eigen::MatrixXd> vma;  // filled to the horizon actually needed
  Eigen::MatrixXd longrun;           // (I - sum B_l)^{-1} sigma_tr, when needed
};

AtomTerms atom_terms(const EqualityAtom& a, const CompileContext& cx) {
  AtomTerms out;
  auto a0inv_row = [&](int i) { return Eigen::VectorXd(cx.sigma_tr.row(i - 1).transpose()); };
  auto a0_col = [&](int j) { return Eigen::VectorXd(cx.sigma_tr_inv.col(j - 1)); };
  switch (a.kind) {
    case TargetKind::A0Inv:
      out.terms.emplace_back(a.j, a0inv_row(a.i));
      break;
    case TargetKind::A0:
      out.terms.emplace_back(a.i, a0_col(a.j));
      break;
    case TargetKind::Al:
      out.terms.emplace_back(a.i,
                             Eigen::VectorXd(cx.sigma_tr_inv * cx.rf->lag(a.lag).col(a.j - 1)));
      break;
    case TargetKind::CirInf:
      out.terms.emplace_back(a.j, Eigen::VectorXd(cx.longrun.row(a.i - 1).transpose()));
      break;
    case TargetKind::Irh:
      out.terms.emplace_back(a.j,
                             Eigen::VectorXd((cx.vma[a.horizon] * cx.sigma_tr).row(a.i - 1).transpose()));
      break;
    case TargetKind::ComboA0Inv:
      out.terms.emplace_back(a.j, a0inv_row(a.i));
      out.terms.emplace_back(a.j2, Eigen::VectorXd(-a.d * a0inv_row(a.i2)));
      break;
    case TargetKind::ComboA0:
      out.terms.emplace_back(a.i, a0_col(a.j));
      out.terms.emplace_back(a.i2, Eigen::VectorXd(-a.d * a0_col(a.j2)));
      break;
  }
  return out;
}

}  // namespace

CompiledRestrictions compile(const RestrictionSpec& spec, const ReducedForm& rf) {
  spec.validate();
  rf.validate();
  if (spec.n != rf.n)
    throw DimensionMismatch("compile: spec is for n=" + std::to_string(spec.n) +
                            ", reduced form has n=" + std::to_string(rf.n));

  CompileContext cx;
  cx.rf = &rf;
  cx.sigma_tr = cholesky_lower(rf.sigma);
  cx.sigma_tr_inv = cx.sigma_tr.triangularView<Eigen::Lower>().solve(
      Eigen::MatrixXd::Identity(rf.n, rf.n));

  int max_h = 0;
  bool need_longrun = false;
  for (const auto& a : spec.equalities) {
    if (a.kind == TargetKind::Irh) max_h = std::max(max_h, a.horizon);
    if (a.kind == TargetKind::CirInf) need_longrun = true;
    if (a.kind == TargetKind::Al && a.lag > rf.p)
      throw InvalidSpec("compile: atom references lag beyond the reduced form order");
  }
  for (const auto& s : spec.signs) max_h = std::max(max_h, s.h_to);
  cx.vma = vma_coefficients(rf, max_h);
  if (need_longrun) {
    if (!is_stable(rf))
      throw UnstableProcess("compile: long-run restriction on an unstable process");
    Eigen::MatrixXd lag_sum = Eigen::MatrixXd::Zero(rf.n, rf.n);
    for (int l = 1; l <= rf.p; ++l) lag_sum += rf.lag(l);
    cx.longrun =
        (Eigen::MatrixXd::Identity(rf.n, rf.n) - lag_sum).inverse() * cx.sigma_tr;
  }

  CompiledRestrictions cr;
  cr.n = rf.n;
  cr.f = static_cast<int>(spec.equalities.size());
  cr.fmat = Eigen::MatrixXd::Zero(cr.f, rf.n * rf.n);
  cr.cvec.resize(cr.f);
  cr.block_counts.assign(rf.n, 0);
  cr.rows_of_block.assign(rf.n, {});

  int row = 0;
  for (int b = 1; b <= rf.n; ++b) {
    for (const auto& a : spec.equalities) {
      if (block_row(a) != b) continue;
      AtomTerms terms = atom_terms(a, cx);
      for (const auto& [col_block, w] : terms.terms)
        cr.fmat.block(row, (col_block - 1) * rf.n, 1, rf.n) += w.transpose();
      cr.cvec(row) = a.value;
      cr.rows_of_block[b - 1].push_back(row);
      ++cr.block_counts[b - 1];
      ++row;
    }
  }

  cr.sign_mats.assign(rf.n, Eigen::MatrixXd::Zero(0, rf.n));
  for (int j = 1; j <= rf.n; ++j) {
    std::vector<Eigen::RowVectorXd> rows;
    for (const auto& s : spec.signs) {
      if (s.shock != j) continue;
      for (int h = s.h_from; h <= s.h_to; ++h) {
        Eigen::RowVectorXd r = (cx.vma[h] * cx.sigma_tr).row(s.variable - 1);
        rows.push_back(s.positive ? r : Eigen::RowVectorXd(-r));
      }
    }
    if (!rows.empty()) {
      Eigen::MatrixXd m(static_cast<int>(rows.size()), rf.n);
      for (std::size_t k = 0; k < rows.size(); ++k) m.row(static_cast<int>(k)) = rows[k];
      cr.sign_mats[j - 1] = std::move(m);
    }
  }
  return cr;
}

Eigen::MatrixXd CompiledRestrictions::block(int bi, int bj) const {
  const auto& rows = rows_of_block.at(bi - 1);
  Eigen::MatrixXd out(static_cast<int>(rows.size()), n);
  for (std::size_t k = 0; k < rows.size(); ++k)
    out.row(static_cast<int>(k)) = fmat.block(rows[k], (bj - 1) * n, 1, n);
  return out;
}

Eigen::VectorXd CompiledRestrictions::block_c(int bi) const {
  const auto& rows = rows_of_block.at(bi - 1);
  Eigen::VectorXd out(static_cast<int>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) out(static_cast<int>(k)) = cvec(rows[k]);
  return out;
}

Eigen::VectorXd evaluate_equality(const CompiledRestrictions& cr, const Eigen::MatrixXd& q) {
  if (q.rows() != cr.n || q.cols() != cr.n)
    throw DimensionMismatch("evaluate_equality: Q must be n x n");
  if (cr.f == 0) return Eigen::VectorXd::Zero(0);
  Eigen::Map<const Eigen::VectorXd> vec_q(q.data(), cr.n * cr.n);
  return cr.fmat * vec_q - cr.cvec;
}

double sign_margin(const CompiledRestrictions& cr, const Eigen::MatrixXd& q) {
  double margin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < cr.n; ++j) {
    const auto& s = cr.sign_mats[j];
    if (s.rows() == 0) continue;
    margin = std::min(margin, (s * q.col(j)).minCoeff());
  }
  return margin;
}

bool satisfies_signs(const CompiledRestrictions& cr, const Eigen::MatrixXd& q, double tol) {
  return sign_margin(cr, q) >= -tol;
}

bool satisfies_normalization(const RestrictionSpec& spec, const Eigen::MatrixXd& q,
                             const Eigen::MatrixXd& sigma_tr, double tol) {
  if (spec.normalization == NormalizationRule::None) return true;
  const int n = static_cast<int>(q.rows());
  Eigen::MatrixXd a0 = q.transpose() * sigma_tr.triangularView<Eigen::Lower>().solve(
                                            Eigen::MatrixXd::Identity(n, n));
  return a0.diagonal().minCoeff() >= -tol;
}

}  // namespace lisvar
