#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "lisvar/identification.hpp"
#include "lisvar/linalg.hpp"
#include "lisvar/restrictions.hpp"
#include "lisvar/rng.hpp"
#include "lisvar/solve.hpp"
#include "lisvar/var_core.hpp"

using namespace lisvar;

namespace {

ReducedForm random_stable_rf(int n, int p, Rng& rng) {
  ReducedForm rf;
  rf.n = n;
  rf.p = p;
  rf.coeffs = 0.3 * rng.normal_matrix(n, n * p + 1);
  Eigen::MatrixXd g = rng.normal_matrix(n, n);
  rf.sigma = g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
  while (spectral_radius(companion_matrix(rf)) >= 0.7) rf.coeffs.rightCols(n * p) *= 0.8;
  return rf;
}

EqualityAtom a0inv_atom(int i, int j, double value) {
  EqualityAtom a;
  a.kind = TargetKind::A0Inv;
  a.i = i;
  a.j = j;
  a.value = value;
  return a;
}

struct Planted {
  RestrictionSpec spec;
  ReducedForm rf;
  Eigen::MatrixXd qstar;
};

// Column j of Q receives n - j point restrictions taken from a reference
// rotation, so the instance is feasible by construction.
Planted plant_triangular(int n, Rng& rng) {
  Planted out;
  out.rf = random_stable_rf(n, 1, rng);
  out.qstar = rng.haar_orthogonal(n);
  Eigen::MatrixXd impact = cholesky_lower(out.rf.sigma) * out.qstar;
  out.spec.n = n;
  out.spec.p = 1;
  out.spec.normalization = NormalizationRule::None;
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n - j; ++i)
      out.spec.equalities.push_back(a0inv_atom(i, j, impact(i - 1, j - 1)));
  return out;
}

RestrictionSpec bivariate_spec(double c) {
  RestrictionSpec spec;
  spec.n = 2;
  spec.p = 1;
  spec.equalities.push_back(a0inv_atom(1, 1, c));
  return spec;
}

}  // namespace

TEST_SUITE("identification") {

TEST_CASE("order condition counts restriction rows") {
  Rng rng(41);
  ReducedForm rf = random_stable_rf(3, 1, rng);
  Eigen::MatrixXd q = rng.haar_orthogonal(3);

  RestrictionSpec two;
  two.n = 3;
  two.p = 1;
  two.equalities.push_back(a0inv_atom(1, 1, 0.0));
  two.equalities.push_back(a0inv_atom(1, 2, 0.0));
  LocalRankCheck under = check_local_rank(compile(two, rf), q);
  CHECK(under.required == 3);
  CHECK_FALSE(under.order_condition);
  CHECK_FALSE(under.identified);

  Planted full = plant_triangular(3, rng);
  LocalRankCheck ok = check_local_rank(compile(full.spec, full.rf), full.qstar);
  CHECK(ok.order_condition);
  CHECK(ok.rank == 3);
  CHECK(ok.identified);
}

TEST_CASE("rotation and structural rank routes agree") {
  Rng rng(42);
  for (int rep = 0; rep < 50; ++rep) {
    ReducedForm rf = random_stable_rf(3, 2, rng);
    Eigen::MatrixXd q = rng.haar_orthogonal(3);
    StructuralParams sp = map_g_inverse(rf, OrthogonalMatrix(q));
    Eigen::MatrixXd a0inv = sp.a0.inverse();
    auto vma = vma_coefficients(rf, 2);

    RestrictionSpec spec;
    spec.n = 3;
    spec.p = 2;
    spec.equalities.push_back(a0inv_atom(1, 1, a0inv(0, 0)));
    if (rep % 2 == 0) {
      EqualityAtom a;
      a.kind = TargetKind::A0;
      a.i = 2;
      a.j = 1;
      a.value = sp.a0(1, 0);
      spec.equalities.push_back(a);
      EqualityAtom b;
      b.kind = TargetKind::Irh;
      b.horizon = 2;
      b.i = 1;
      b.j = 3;
      b.value = (vma[2] * cholesky_lower(rf.sigma) * q)(0, 2);
      spec.equalities.push_back(b);
    } else {
      EqualityAtom a;
      a.kind = TargetKind::Al;
      a.lag = 2;
      a.i = 2;
      a.j = 3;
      a.value = sp.aplus.block(0, 1 + 3, 3, 3)(1, 2);
      spec.equalities.push_back(a);
      EqualityAtom b;
      b.kind = TargetKind::CirInf;
      b.i = 2;
      b.j = 3;
      Eigen::MatrixXd longrun =
          (Eigen::MatrixXd::Identity(3, 3) - rf.lag(1) - rf.lag(2)).inverse() *
          cholesky_lower(rf.sigma) * q;
      b.value = longrun(1, 2);
      spec.equalities.push_back(b);
    }

    LocalRankCheck via_q = check_local_rank(compile(spec, rf), q);
    LocalRankCheck via_sp = check_local_structural(spec, sp);
    CHECK(via_q.identified == via_sp.identified);
    CHECK(via_q.rank == via_sp.rank);
    CHECK(via_q.required == via_sp.required);
  }
}

TEST_CASE("recursive ordering certifies global uniqueness") {
  Rng rng(43);
  ReducedForm rf = random_stable_rf(3, 1, rng);

  RestrictionSpec rec;
  rec.n = 3;
  rec.p = 1;
  for (auto [i, j] : {std::pair{1, 2}, {1, 3}, {2, 3}}) {
    EqualityAtom a;
    a.kind = TargetKind::A0;
    a.i = i;
    a.j = j;
    a.value = 0.0;
    rec.equalities.push_back(a);
  }
  REQUIRE(classify(rec).recursive);

  GlobalCheck gc = check_global_rwz(rec, rf);
  CHECK(gc.globally_identified);
  CHECK(gc.first_failure == 0);
  CHECK(gc.ranks == std::vector<int>{3, 3, 3});
  // Zeros above the structural diagonal pick out the Cholesky rotation.
  CHECK((gc.q - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-8);

  RestrictionSpec shifted = rec;
  shifted.equalities[0].value = 0.4;
  CHECK_THROWS_AS(check_global_rwz(shifted, rf), NotRecursive);
}

TEST_CASE("subset rank isolates the leading shocks") {
  Rng rng(44);
  Planted inst = plant_triangular(3, rng);

  RestrictionSpec first_only = inst.spec;
  first_only.equalities.resize(2);  // the two block-1 atoms
  REQUIRE(block_row(first_only.equalities[0]) == 1);
  REQUIRE(block_row(first_only.equalities[1]) == 1);

  SubsetRankCheck sub = check_subset_rank(first_only, inst.rf, inst.qstar.col(0));
  CHECK(sub.required == 3);
  CHECK(sub.rank == 3);
  CHECK(sub.identified);

  RestrictionSpec none;
  none.n = 3;
  none.p = 1;
  SubsetRankCheck weak = check_subset_rank(none, inst.rf, inst.qstar.col(0));
  CHECK(weak.required == 3);
  CHECK_FALSE(weak.identified);

  SubsetRankCheck whole = check_subset_rank(inst.spec, inst.rf, inst.qstar);
  LocalRankCheck local = check_local_rank(compile(inst.spec, inst.rf), inst.qstar);
  CHECK(whole.required == 9);
  CHECK(whole.identified == local.identified);

  CHECK_THROWS_AS(check_subset_rank(inst.spec, inst.rf, Eigen::MatrixXd(inst.qstar.col(0) * 2.0)),
                  NotOrthogonal);

  RestrictionSpec linking = first_only;
  EqualityAtom combo;
  combo.kind = TargetKind::ComboA0Inv;
  combo.i = 1;
  combo.j = 1;
  combo.i2 = 1;
  combo.j2 = 2;
  combo.value = 0.0;
  linking.equalities.push_back(combo);
  CHECK_THROWS_AS(check_subset_rank(linking, inst.rf, inst.qstar.col(0)), NotPartitioned);
}

TEST_CASE("sequential check matches the local rank verdict") {
  Rng rng(45);
  for (int rep = 0; rep < 10; ++rep) {
    int n = 2 + rep % 3;
    Planted inst = plant_triangular(n, rng);
    CompiledRestrictions cr = compile(inst.spec, inst.rf);
    IdentifiedSet set = solve_triangular(inst.spec, inst.rf);
    REQUIRE(set.count() >= 1);
    for (const auto& q : set.q) {
      TriangularCheck tc = check_triangular_sequential(inst.spec, cr, q);
      LocalRankCheck lc = check_local_rank(cr, q);
      CHECK(tc.identified == lc.identified);
      if (tc.identified) {
        CHECK(tc.ranks == std::vector<int>(n, n - 1));
        for (bool ok : tc.shock_prefix_ok) CHECK(ok);
      }
    }
  }
}

TEST_CASE("stacked selection matrices certify uniqueness") {
  Rng rng(46);
  ReducedForm rf = random_stable_rf(3, 1, rng);
  RestrictionSpec rec;
  rec.n = 3;
  rec.p = 1;
  for (auto [i, j] : {std::pair{1, 2}, {1, 3}, {2, 3}}) {
    EqualityAtom a;
    a.kind = TargetKind::A0;
    a.i = i;
    a.j = j;
    a.value = 0.0;
    rec.equalities.push_back(a);
  }
  GlobalCheck gc = check_global_rwz(rec, rf);
  MiCheck mi = check_rwz_sufficient_mi(compile(rec, rf), gc.q);
  CHECK(mi.sufficient);
  CHECK(mi.ranks == std::vector<int>{3, 3, 3});

  // A pattern with two admissible rotations cannot pass the sufficiency test.
  RestrictionSpec nk;
  nk.n = 3;
  nk.p = 1;
  for (auto [i, j] : {std::pair{1, 3}, {2, 1}, {3, 2}}) {
    EqualityAtom a;
    a.kind = TargetKind::A0;
    a.i = i;
    a.j = j;
    a.value = 0.0;
    nk.equalities.push_back(a);
  }
  Eigen::MatrixXd a0(3, 3);
  a0 << 1.0, 0.5, 0.0, 0.0, 1.0, 0.4, -0.3, 0.0, 1.0;
  Eigen::MatrixXd a0inv = a0.inverse();
  ReducedForm nk_rf;
  nk_rf.n = 3;
  nk_rf.p = 1;
  nk_rf.coeffs = Eigen::MatrixXd::Zero(3, 4);
  nk_rf.coeffs.block(0, 1, 3, 3) = 0.4 * Eigen::MatrixXd::Identity(3, 3);
  nk_rf.sigma = a0inv * a0inv.transpose();
  Eigen::MatrixXd qstar = cholesky_lower(nk_rf.sigma).transpose() * a0.transpose();
  MiCheck nk_mi = check_rwz_sufficient_mi(compile(nk, nk_rf), polar_factor(qstar));
  CHECK_FALSE(nk_mi.sufficient);
}

TEST_CASE("admissible search finds a feasible rotation") {
  Rng rng(47);
  Planted inst = plant_triangular(3, rng);
  AdmissibleSearch found = find_admissible_q(inst.spec, inst.rf, 5);
  REQUIRE(found.q.has_value());
  CHECK(found.residual <= 1e-10);
  CompiledRestrictions cr = compile(inst.spec, inst.rf);
  CHECK(evaluate_equality(cr, *found.q).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK(is_orthogonal(*found.q, 1e-8));
  CHECK(is_admissible(inst.spec, cr, cholesky_lower(inst.rf.sigma), *found.q));

  ReducedForm rf2 = random_stable_rf(2, 1, rng);
  AdmissibleSearch missing = find_admissible_q(bivariate_spec(10.0), rf2, 5, 6);
  CHECK_FALSE(missing.q.has_value());
  CHECK(missing.restarts_used == 6);
}

TEST_CASE("verdict aggregates evidence across draws") {
  Rng rng(48);
  ReducedForm rf = random_stable_rf(2, 1, rng);
  auto sampler = [&](int) { return rf; };

  VerdictEvidence ev = identification_verdict(bivariate_spec(0.3), sampler, 10, false, 2);
  CHECK(ev.verdict == Verdict::LocallyIdentifiedAlmostEverywhere);
  CHECK(ev.draws == 10);
  CHECK(ev.admissible_found == 10);
  CHECK(ev.rank_satisfied == 10);

  VerdictEvidence early = identification_verdict(bivariate_spec(0.3), sampler, 10, true, 2);
  CHECK(early.verdict == Verdict::LocallyIdentifiedAlmostEverywhere);
  CHECK(early.draws == 1);

  RestrictionSpec loose;
  loose.n = 2;
  loose.p = 1;
  VerdictEvidence under = identification_verdict(loose, sampler, 5, false, 2);
  CHECK(under.verdict == Verdict::NotIdentified);
  CHECK(under.admissible_found == 5);
  CHECK(under.rank_satisfied == 0);

  VerdictEvidence barren = identification_verdict(bivariate_spec(10.0), sampler, 3, false, 2);
  CHECK(barren.verdict == Verdict::Inconclusive);
  CHECK(barren.admissible_found == 0);
}

TEST_CASE("solution count bounds by class") {
  RestrictionSpec rec;
  rec.n = 3;
  rec.p = 1;
  for (auto [i, j] : {std::pair{1, 2}, {1, 3}, {2, 3}}) {
    EqualityAtom a;
    a.kind = TargetKind::A0;
    a.i = i;
    a.j = j;
    a.value = 0.0;
    rec.equalities.push_back(a);
  }
  CHECK(solution_count_bound(rec) == 1);

  RestrictionSpec tri = rec;
  tri.equalities[0].value = 0.25;
  CHECK(solution_count_bound(tri) == 8);

  CHECK(solution_count_bound(bivariate_spec(0.5)) == 4);

  RestrictionSpec general;
  general.n = 3;
  general.p = 1;
  general.equalities.push_back(a0inv_atom(1, 1, 0.1));
  general.equalities.push_back(a0inv_atom(1, 2, 0.2));
  general.equalities.push_back(a0inv_atom(2, 3, 0.3));
  CHECK(solution_count_bound(general) == 64);

  CHECK(subset_solution_count_bound(1) == 2);
  CHECK(subset_solution_count_bound(3) == 64);
}

}  // TEST_SUITE
