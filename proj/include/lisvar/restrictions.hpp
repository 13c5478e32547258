#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lisvar/types.hpp"

namespace lisvar {

// Equality targets. Element indices are 1-based.
//   A0Inv      (A0^{-1})_{ij} = c
//   A0         (A0)_{ij} = c
//   Al         (A_l)_{ij} = c, lag l
//   CirInf     long-run cumulative response (i,j) = c
//   Irh        horizon-h impulse response (i,j) = c
//   ComboA0Inv (A0^{-1})_{ij} - d (A0^{-1})_{i2 j2} = c
//   ComboA0    (A0)_{ij} - d (A0)_{i2 j2} = c
enum class TargetKind { A0Inv, A0, Al, CirInf, Irh, ComboA0Inv, ComboA0 };

struct EqualityAtom {
  TargetKind kind = TargetKind::A0Inv;
  int i = 0, j = 0;
  int lag = 0;      // Al only
  int horizon = 0;  // Irh only
  int i2 = 0, j2 = 0;
  double d = 1.0;
  double value = 0.0;
};

// Sign restriction on the response of `variable` to `shock` over a horizon
// range: >= 0 when positive, <= 0 otherwise.
struct SignAtom {
  int variable = 0;
  int shock = 0;
  int h_from = 0;
  int h_to = 0;
  bool positive = true;
};

enum class NormalizationRule { A0DiagNonNeg, None };

struct RestrictionSpec {
  int n = 0;
  int p = 0;
  std::vector<EqualityAtom> equalities;
  std::vector<SignAtom> signs;
  NormalizationRule normalization = NormalizationRule::A0DiagNonNeg;

  void validate() const;
};

// Shock column whose q the atom constrains; atoms on elements of A0 or A_l
// act on the row index of the structural matrix, the rest on the column.
// Two-element combos take the block of their first element.
int block_row(const EqualityAtom& atom);

struct Classification {
  bool triangular = false;
  bool homogeneous = false;
  bool recursive = false;     // triangular and homogeneous
  bool ordered_counts = false;  // f_1 >= ... >= f_n
  std::vector<int> f;           // atoms per block row
};

Classification classify(const RestrictionSpec& spec);

// Numeric form at a given reduced form: rows of fmat act on vec(Q) (columns of
// Q stacked), grouped by block row; fmat * vec(Q) = cvec. Sign atoms compile
// to per-shock matrices with rows s' such that admissibility means s'q_j >= 0.
struct CompiledRestrictions {
  int n = 0;
  int f = 0;
  Eigen::MatrixXd fmat;
  Eigen::VectorXd cvec;
  std::vector<int> block_counts;
  std::vector<std::vector<int>> rows_of_block;  // row indices per block (0-based)
  std::vector<Eigen::MatrixXd> sign_mats;       // index j-1 for shock j; may be 0 x n

  Eigen::MatrixXd block(int bi, int bj) const;  // F_{bi,bj}, 1-based blocks
  Eigen::VectorXd block_c(int bi) const;
};

CompiledRestrictions compile(const RestrictionSpec& spec, const ReducedForm& rf);

// fmat * vec(Q) - cvec.
Eigen::VectorXd evaluate_equality(const CompiledRestrictions& cr, const Eigen::MatrixXd& q);

// Smallest sign-restriction margin, +infinity when no sign atoms.
double sign_margin(const CompiledRestrictions& cr, const Eigen::MatrixXd& q);
bool satisfies_signs(const CompiledRestrictions& cr, const Eigen::MatrixXd& q, double tol = 1e-10);

// diag(Q' chol(Sigma)^{-1}) >= -tol, per the default normalization rule.
bool satisfies_normalization(const RestrictionSpec& spec, const Eigen::MatrixXd& q,
                             const Eigen::MatrixXd& sigma_tr, double tol = 1e-10);

// Line-oriented restriction file; throws ParseError with file:line context.
RestrictionSpec parse_spec_file(const std::string& path);
RestrictionSpec parse_spec_stream(std::istream& in, const std::string& name);

}  // namespace lisvar
