#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "dunkl/bounds.hpp"
#include "dunkl/operators.hpp"
#include "dunkl/rng.hpp"

using namespace dunkl;

namespace {

WeightedGrid unit_line(int res) {
  return build_grid(catalog("trivial:1"), make_pt(0.0), make_pt(1.0), res);
}

std::vector<std::vector<int>> standard_interval_centers(int res, int kmax) {
  std::vector<std::vector<int>> rows;
  for (int k = 0; k <= kmax; ++k) {
    std::vector<int> row;
    for (int a = 0; a < (1 << k); ++a)
      row.push_back(res * (2 * a + 1) / (1 << (k + 1)) - 1);
    rows.push_back(row);
  }
  return rows;
}

DyadicSystem interval_system(const WeightedGrid& g, int kmax) {
  static std::vector<std::vector<int>> forced;
  forced = standard_interval_centers(g.res, kmax);
  DyadicOptions opt;
  opt.kmin = 0;
  opt.forced_centers = &forced;
  return build_dyadic_system(g, opt);
}

std::vector<double> ones_weight(const WeightedGrid& g) {
  return std::vector<double>(static_cast<std::size_t>(g.size()), 1.0);
}

std::vector<double> seeded_data(const WeightedGrid& g, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> f(static_cast<std::size_t>(g.size()));
  for (double& x : f) x = rng.uniform(-1.0, 1.0);
  return f;
}

}  // namespace

TEST_CASE("bounds: weighted norms satisfy the standard axioms") {
  WeightedGrid g = unit_line(64);
  std::vector<double> f = seeded_data(g, 3), h = seeded_data(g, 4);
  std::vector<double> u = weight_catalog(g, "dunkl_power:1");

  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    const double nf = weighted_norm(g, f, &u, p);
    CHECK(nf > 0);

    // absolute homogeneity
    std::vector<double> scaled = f;
    for (double& x : scaled) x *= -3.5;
    CHECK(weighted_norm(g, scaled, &u, p) ==
          doctest::Approx(3.5 * nf).epsilon(1e-12));

    // triangle inequality
    std::vector<double> sum = f;
    for (int i = 0; i < g.size(); ++i) sum[i] += h[i];
    CHECK(weighted_norm(g, sum, &u, p) <=
          (nf + weighted_norm(g, h, &u, p)) * (1 + 1e-12));

    // null weight means the plain omega norm
    std::vector<double> flat = ones_weight(g);
    CHECK(weighted_norm(g, f, nullptr, p) == weighted_norm(g, f, &flat, p));
  }

  // p = 2 with the flat weight is the plain l2(omega) norm
  double direct = 0;
  for (int i = 0; i < g.size(); ++i) direct += f[i] * f[i] * g.w[i];
  std::vector<double> flat = ones_weight(g);
  CHECK(weighted_norm(g, f, &flat, 2.0) ==
        doctest::Approx(std::sqrt(direct)).epsilon(1e-12));

  CHECK_THROWS_AS(weighted_norm(g, f, &u, 0.5), Error);
  std::vector<double> bad(3, 1.0);
  CHECK_THROWS_AS(weighted_norm(g, bad, nullptr, 2.0), Error);
}

TEST_CASE("bounds: trial draws are reproducible and sit inside their support") {
  WeightedGrid g = unit_line(128);
  DyadicSystem sys = interval_system(g, 6);

  std::set<std::string> kinds;
  for (std::uint64_t seed = 1; seed <= 24; ++seed) {
    Trial a = trial_function(g, &sys, seed);
    Trial b = trial_function(g, &sys, seed);
    CHECK(a.f == b.f);
    CHECK(a.kind == b.kind);
    CHECK(a.support.radius == b.support.radius);
    kinds.insert(a.kind);

    CHECK(std::any_of(a.f.begin(), a.f.end(), [](double x) { return x != 0; }));
    std::vector<int> inside = g.ball_members(a.support);
    for (int i = 0; i < g.size(); ++i)
      if (a.f[i] != 0) CHECK(std::binary_search(inside.begin(), inside.end(), i));
  }
  CHECK(kinds.size() == 3);

  // without a system the sign draw falls back to per-point signs
  bool saw_signs = false;
  for (std::uint64_t seed = 1; seed <= 24 && !saw_signs; ++seed) {
    Trial t = trial_function(g, nullptr, seed);
    if (t.kind != "signs") continue;
    saw_signs = true;
    for (double x : t.f) CHECK(std::abs(x) == 1.0);
  }
  CHECK(saw_signs);
}

TEST_CASE("bounds: single-cube averaging contracts in every plain norm") {
  WeightedGrid g = unit_line(64);
  DyadicSystem sys = interval_system(g, 5);
  const Cube& q = sys.cube({2, 1});
  SparseEntry entry{{2, 1}, q.members, q.members, q.omega, q.omega};
  std::vector<SparseEntry> fam{entry};
  std::vector<double> flat = ones_weight(g);

  // averaging over one cube can only lose mass against any exponent
  std::vector<double> f = seeded_data(g, 9);
  for (double p : {1.5, 2.0, 3.0}) {
    std::vector<double> af = sparse_operator(g, fam, f);
    CHECK(weighted_norm(g, af, &flat, p) <=
          weighted_norm(g, f, &flat, p) * (1 + 1e-12));
  }

  SetFamily sets = test_sets(g, &sys, 30, 5);
  NormReport rep = verify_sparse_weighted_bound(g, fam, &sys, sets, flat, 2.0, 12, 5);
  CHECK(rep.trials == 12);
  CHECK(rep.max_ratio <= 1.0 + 1e-12);
  CHECK(rep.u_constant == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.reference == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.median_ratio <= rep.max_ratio);

  // the reference scale follows [u]^{max(p'/p, 1)}
  std::vector<double> u = weight_catalog(g, "dunkl_power:1");
  for (double p : {1.5, 3.0}) {
    NormReport w = verify_sparse_weighted_bound(g, fam, &sys, sets, u, p, 4, 5);
    const double expo = std::max(1.0 / (p - 1.0), 1.0);
    CHECK(w.reference == doctest::Approx(std::pow(w.u_constant, expo)).epsilon(1e-12));
    CHECK(w.max_ratio > 0);
  }

  CHECK_THROWS_AS(verify_sparse_weighted_bound(g, fam, &sys, sets, flat, 1.0, 2, 5), Error);
  std::vector<double> negative(static_cast<std::size_t>(g.size()), -1.0);
  CHECK_THROWS_AS(verify_sparse_weighted_bound(g, fam, &sys, sets, negative, 2.0, 2, 5),
                  Error);
}

TEST_CASE("bounds: operator trials compose and track the operator norm") {
  WeightedGrid g = unit_line(128);
  DyadicBundle bd;
  bd.systems.push_back(interval_system(g, 6));
  const DyadicSystem& sys = bd.systems.front();
  DiscreteOperator T(g, kernel_catalog(g.rs, "riesz:0"));
  SetFamily sets = test_sets(g, &sys, 30, 5);
  std::vector<double> flat = ones_weight(g);

  NormReport rep = verify_T_weighted(T, bd, sets, flat, 2.0, 5, 11);
  CHECK(rep.trials == 5);
  OpNormResult opn = l2_opnorm(T);
  CHECK(rep.ratios[0] == doctest::Approx(opn.norm).epsilon(1e-9));
  CHECK(rep.max_ratio >= opn.norm * (1 - 1e-9));
  CHECK(rep.max_ratio <= 1.5 * opn.norm);
  for (double r : rep.ratios) CHECK(std::isfinite(r));
  MESSAGE("unweighted p=2 ratio max ", rep.max_ratio, " opnorm ", opn.norm);

  std::vector<double> u = weight_catalog(g, "dunkl_power:1");
  NormReport wrep = verify_T_weighted(T, bd, sets, u, 1.5, 4, 11);
  CHECK(wrep.max_ratio > 0);
  CHECK(std::isfinite(wrep.max_ratio));
  CHECK(wrep.reference == doctest::Approx(std::pow(wrep.u_constant, 2.0)).epsilon(1e-12));

  DiscreteOperator Z(g, Kernel{"zero", [](const Pt&, const Pt&) { return 0.0; }});
  NormReport zrep = verify_T_weighted(Z, bd, sets, flat, 2.0, 3, 11);
  CHECK(zrep.max_ratio == 0.0);

  WeightedGrid g2 = unit_line(64);
  DyadicBundle bd2;
  bd2.systems.push_back(interval_system(g2, 5));
  CHECK_THROWS_AS(verify_T_weighted(T, bd2, sets, flat, 2.0, 2, 11), Error);
  CHECK_THROWS_AS(verify_T_weighted(T, DyadicBundle{}, sets, flat, 2.0, 2, 11), Error);
}

TEST_CASE("bounds: commutator report splits the two dominator terms") {
  WeightedGrid g = build_grid(catalog("a1:1.0"), make_pt(-1.0), make_pt(1.0), 64);
  DyadicBundle bd = build_dyadic_bundle(g, 0.5, 7);
  const DyadicSystem& sys = bd.systems.front();
  DiscreteOperator T(g, kernel_catalog(g.rs, "riesz:0"));
  SetFamily sets = test_sets(g, &sys, 25, 3);

  std::vector<double> b = symbol_catalog(g, &sys, "coord:0");
  std::vector<double> u = weight_catalog(g, "dunkl_power:1");
  std::vector<double> v = weight_catalog(g, "dunkl_power:-1");

  NormReport rep = verify_commutator_two_weight(T, bd, sets, b, u, v, 2.0, 3, 7);
  CHECK(rep.trials == 3);
  CHECK(rep.bmo_constant > 0);
  CHECK(rep.u_constant > 0);
  CHECK(rep.v_constant > 0);
  CHECK(rep.reference > 0);
  for (double r : rep.ratios) {
    CHECK(std::isfinite(r));
    CHECK(r >= 0);
  }
  CHECK(rep.max_ratio > 0);
  CHECK(rep.split_b1 > 0);
  CHECK(rep.split_b2 >= 0);
  CHECK(std::isfinite(rep.split_b1 + rep.split_b2));
  MESSAGE("two-weight ratio max ", rep.max_ratio, " splits ", rep.split_b1, " / ",
          rep.split_b2);

  std::vector<double> constant = symbol_catalog(g, nullptr, "const:2.5");
  CHECK_THROWS_AS(verify_commutator_two_weight(T, bd, sets, constant, u, v, 2.0, 2, 7),
                  Error);
}

TEST_CASE("bounds: median chain holds link by link on the line") {
  WeightedGrid g = unit_line(256);
  DyadicSystem sys = interval_system(g, 7);
  DiscreteOperator T(g, kernel_catalog(g.rs, "riesz:0"));
  SetFamily sets = test_sets(g, &sys, 25, 9);

  std::vector<double> b = symbol_catalog(g, nullptr, "coord:0");
  std::vector<double> u = weight_catalog(g, "dunkl_power:1");
  std::vector<double> v = ones_weight(g);

  BallSpec b0{make_pt(0.15), 0.05, false};
  LowerBoundReport rep = lower_bound_experiment(T, 0, b, v, u, 2.0, b0, sets);
  for (const ChainLink& l : rep.links) {
    MESSAGE("link ", l.name, " lhs ", l.lhs, " rhs ", l.rhs);
    CHECK(l.ok);
  }
  CHECK(rep.ok);
  CHECK(rep.sign_ok);
  CHECK(rep.split_ok);
  CHECK(rep.kernel_min > 0);
  CHECK(rep.mass_e1 > 0);
  CHECK(rep.mass_e2 > 0);
  CHECK(std::isfinite(rep.chain_constant));
  CHECK(rep.chain_constant > 0);

  // twin ball sits at 0.40, so the median of the coordinate lands inside it
  CHECK(rep.median > 0.35);
  CHECK(rep.median < 0.45);

  // exact-link oracle: the mean-median comparison from first principles
  std::vector<int> members0 = g.ball_members({make_pt(0.15), 0.05, false});
  double mass0 = 0, avg_med = 0;
  for (int m : members0) {
    mass0 += g.w[m];
    avg_med += std::abs(b[m] - rep.median) * g.w[m];
  }
  avg_med /= mass0;
  const ChainLink* mm = nullptr;
  for (const ChainLink& l : rep.links)
    if (l.name == "mean-median") mm = &l;
  REQUIRE(mm != nullptr);
  CHECK(mm->rhs == doctest::Approx(2 * avg_med).epsilon(1e-12));
  CHECK(mm->lhs == doctest::Approx(oscillation(g, members0, b)).epsilon(1e-12));

  // constant symbols collapse the chain without breaking any link
  std::vector<double> constant = symbol_catalog(g, nullptr, "const:2.5");
  LowerBoundReport flatrep = lower_bound_experiment(T, 0, constant, v, u, 2.0, b0, sets);
  CHECK(flatrep.ok);
  CHECK(flatrep.oscillation == 0.0);
  CHECK(flatrep.chain_constant == 0.0);

  // geometry preflight failures
  CHECK_THROWS_AS(lower_bound_experiment(T, 0, b, v, u, 2.0,
                                         BallSpec{make_pt(0.9), 0.05, false}, sets),
                  Error);
  CHECK_THROWS_AS(lower_bound_experiment(T, 0, b, v, u, 2.0,
                                         BallSpec{make_pt(0.15), 0.0, false}, sets),
                  Error);
  CHECK_THROWS_AS(lower_bound_experiment(T, 1, b, v, u, 2.0, b0, sets), Error);
}

TEST_CASE("bounds: median chain survives a reflection-symmetric weight") {
  WeightedGrid g = build_grid(catalog("a1:1.0"), make_pt(-1.0), make_pt(1.0), 128);
  DyadicOptions opt;
  opt.seed = 7;
  DyadicSystem sys = build_dyadic_system(g, opt);
  DiscreteOperator T(g, kernel_catalog(g.rs, "riesz:0"));
  SetFamily sets = test_sets(g, &sys, 25, 9);

  std::vector<double> b = symbol_catalog(g, nullptr, "coord:0");
  std::vector<double> u = weight_catalog(g, "dunkl_power:1");
  std::vector<double> v = weight_catalog(g, "const:1");

  LowerBoundReport rep =
      lower_bound_experiment(T, 0, b, v, u, 2.0, BallSpec{make_pt(0.2), 0.04, false}, sets);
  for (const ChainLink& l : rep.links) {
    MESSAGE("a1 link ", l.name, " lhs ", l.lhs, " rhs ", l.rhs);
    CHECK(l.ok);
  }
  CHECK(rep.ok);
  CHECK(rep.kernel_min > 0);
}

TEST_CASE("bounds: majorant transfer constants stay uniform") {
  WeightedGrid g = unit_line(128);
  DyadicSystem sys = interval_system(g, 6);
  DiscreteOperator T(g, kernel_catalog(g.rs, "riesz:0"));

  RdfTransferReport rep = rdf_transfer_check(T, sys, 2.0, 5, 3);
  CHECK(rep.trials == 5);
  CHECK(rep.properties_ok);
  CHECK(rep.ok);
  CHECK(rep.slack_max <= 1e-6);
  CHECK(rep.c_max > 0);
  CHECK(std::isfinite(rep.c_max));
  CHECK(rep.constants.size() == 5);
  MESSAGE("transfer constant max ", rep.c_max, " slack ", rep.slack_max);

  RdfTransferReport again = rdf_transfer_check(T, sys, 2.0, 5, 3);
  CHECK(again.constants == rep.constants);

  DiscreteOperator Z(g, Kernel{"zero", [](const Pt&, const Pt&) { return 0.0; }});
  RdfTransferReport zrep = rdf_transfer_check(Z, sys, 2.0, 3, 3);
  CHECK(zrep.ok);
  CHECK(zrep.c_max == 0.0);

  CHECK_THROWS_AS(rdf_transfer_check(T, sys, 1.0, 2, 3), Error);
}
