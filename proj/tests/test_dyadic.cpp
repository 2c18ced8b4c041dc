#include <algorithm>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "dunkl/dyadic.hpp"
#include "dunkl/rng.hpp"

using namespace dunkl;

namespace {

WeightedGrid unit_line(int res) {
  return build_grid(catalog("trivial:1"), make_pt(0.0), make_pt(1.0), res);
}

// Centers whose Voronoi cells (ties to the left) are exactly the half-open
// dyadic intervals [a 2^-k, (a+1) 2^-k): one cell left of each midpoint.
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

}  // namespace

TEST_CASE("dyadic: fixed centers reproduce the standard dyadic intervals") {
  const int res = 64;
  WeightedGrid g = unit_line(res);
  auto forced = standard_interval_centers(res, 5);
  DyadicOptions opt;
  opt.kmin = 0;
  opt.forced_centers = &forced;
  DyadicSystem sys = build_dyadic_system(g, opt);
  REQUIRE(sys.row_count() == 6);
  REQUIRE(sys.kmax == 5);
  for (int k = 0; k <= 5; ++k) {
    const int width = res >> k;
    REQUIRE(static_cast<int>(sys.rows[k].size()) == (1 << k));
    for (int a = 0; a < (1 << k); ++a) {
      std::vector<int> oracle(width);
      std::iota(oracle.begin(), oracle.end(), a * width);
      CHECK(sys.rows[k][a].members == oracle);
      CHECK(sys.rows[k][a].omega == doctest::Approx(1.0 / (1 << k)).epsilon(1e-12));
    }
  }
  // Towers: child a at row k+1 hangs under a/2.
  for (int k = 1; k <= 5; ++k)
    for (int a = 0; a < (1 << k); ++a) CHECK(sys.rows[k][a].parent == a / 2);

  DyadicReport rep = verify_dyadic_properties(sys);
  CHECK(rep.ok);
  CHECK(rep.separation_margin == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rep.covering_margin == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.outer_max == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.c_in == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.doubling_largest == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.doubling_all == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rep.cube_count == 63);
}

TEST_CASE("dyadic: tower navigation helpers") {
  const int res = 64;
  WeightedGrid g = unit_line(res);
  auto forced = standard_interval_centers(res, 5);
  DyadicOptions opt;
  opt.kmin = 0;
  opt.forced_centers = &forced;
  DyadicSystem sys = build_dyadic_system(g, opt);

  CubeRef root{0, 0};
  for (int j = 0; j < res; ++j) {
    CubeRef leaf = sys.cube_of(j, 5);
    CHECK(sys.contains(root, leaf));
    CHECK_FALSE(sys.contains(leaf, root));
    CubeRef up = sys.parent_of(leaf);
    CHECK(sys.contains(up, leaf));
    CHECK(up.row == 4);
  }
  int visited = 0;
  sys.for_subtree(root, [&](CubeRef) { ++visited; });
  CHECK(visited == 63);
  CHECK(sys.dilated_ball({5, 3}, 1.0).radius == doctest::Approx(2.0 / 32));
  CHECK(sys.dilated_ball({5, 3}, 4.0).radius == doctest::Approx(8.0 / 32));
}

TEST_CASE("dyadic: greedy construction passes the structural checks") {
  struct Case {
    const char* key;
    double lo, hi;
    int res;
  };
  const Case cases[] = {
      {"trivial:1", 0.0, 1.0, 128},
      {"a1:1.0", -1.0, 1.0, 128},
      {"b2:1.0,0.5", -1.0, 1.0, 32},
  };
  for (const Case& c : cases) {
    CAPTURE(c.key);
    RootSystem rs = catalog(c.key);
    Pt lo{}, hi{};
    for (int d = 0; d < rs.dim; ++d) {
      lo[d] = c.lo;
      hi[d] = c.hi;
    }
    WeightedGrid g = build_grid(rs, lo, hi, c.res);
    DyadicOptions opt;
    opt.seed = 7;
    DyadicSystem sys = build_dyadic_system(g, opt);
    CHECK(sys.centers[0].size() == 1);                    // single root
    CHECK(sys.len(sys.row_count() - 1) >= 2 * g.cell_diag);
    CHECK(sys.len(sys.row_count() - 1) < 4 * g.cell_diag);
    DyadicReport rep = verify_dyadic_properties(sys);
    CAPTURE(rep.separation_margin);
    CAPTURE(rep.covering_margin);
    CAPTURE(rep.outer_max);
    CAPTURE(rep.c_in);
    CHECK(rep.ok);
    CHECK(rep.doubling_all >= rep.doubling_largest);
    CHECK(rep.doubling_largest >= 1.0);
  }
}

TEST_CASE("dyadic: bundle picks containing cubes with bounded inflation") {
  RootSystem rs = catalog("a1:1.0");
  WeightedGrid g = build_grid(rs, make_pt(-1.0), make_pt(1.0), 128);
  DyadicBundle bundle = build_dyadic_bundle(g, 0.5, 11);
  REQUIRE(bundle.systems.size() == 3);
  Rng rng(5);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    BallSpec ball{make_pt(rng.uniform(-0.9, 0.9)), rng.log_uniform(2 * g.cell, 0.3), true};
    ContainingCube cc = containing_cube(bundle, ball, 64.0);
    REQUIRE(cc.system >= 0);
    const DyadicSystem& sys = bundle.systems[static_cast<std::size_t>(cc.system)];
    std::vector<int> mem = g.ball_members(ball);
    const auto& cm = sys.cube(cc.cube).members;
    CHECK(std::includes(cm.begin(), cm.end(), mem.begin(), mem.end()));
    worst = std::max(worst, cc.inflation);
  }
  MESSAGE("worst inflation over 200 balls: ", worst);
  CHECK(worst <= 12.0);
  CHECK_THROWS_AS(containing_cube(bundle, BallSpec{make_pt(0.0), 0.1, true}, 1e-6), Error);
  CHECK_THROWS_AS(containing_cube(bundle, BallSpec{make_pt(0.0), 1e-9, true}, 64.0), Error);
}

TEST_CASE("dyadic: single-system containing cube is the smallest one") {
  const int res = 64;
  WeightedGrid g = unit_line(res);
  auto forced = standard_interval_centers(res, 5);
  DyadicOptions opt;
  opt.kmin = 0;
  opt.forced_centers = &forced;
  DyadicSystem sys = build_dyadic_system(g, opt);
  // Ball inside leaf {2a, 2a+1}.
  int a = 13;
  Pt c = make_pt((2 * a + 1.0) / res);  // shared edge of the two cells
  ContainingCube cc = containing_cube(sys, BallSpec{c, 0.9 / res, true});
  CHECK(cc.cube.row == 5);
  CHECK(cc.cube.idx == a);
  // Ball straddling the global midpoint forces the root.
  ContainingCube mid = containing_cube(sys, BallSpec{make_pt(0.5), 3.0 / res, true});
  CHECK(mid.cube.row == 0);
}

TEST_CASE("dyadic: sparseness checker accepts and rejects correctly") {
  WeightedGrid g = unit_line(16);
  auto range = [](int lo, int hi) {
    std::vector<int> v(static_cast<std::size_t>(hi - lo));
    std::iota(v.begin(), v.end(), lo);
    return v;
  };
  std::vector<SparseEntry> fam;
  fam.push_back({CubeRef{}, range(0, 8), range(0, 4), 0, 0});
  fam.push_back({CubeRef{}, range(8, 16), range(8, 16), 0, 0});
  SparseCheckReport rep = verify_sparse(g, fam, 0.5, 1);
  CHECK(rep.ok);
  CHECK(rep.theta_min == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(rep.overlap_max == 1);

  // Third cube re-uses witness mass: overlap 2 and theta 0.25.
  fam.push_back({CubeRef{}, range(0, 16), range(0, 4), 0, 0});
  rep = verify_sparse(g, fam, 0.5, 1);
  CHECK_FALSE(rep.ok);
  CHECK(rep.overlap_max == 2);
  rep = verify_sparse(g, fam, 0.25, 2);
  CHECK(rep.ok);

  // Witness escaping its cube is flagged.
  std::vector<SparseEntry> bad;
  bad.push_back({CubeRef{}, range(0, 4), range(3, 5), 0, 0});
  rep = verify_sparse(g, bad, 0.1, 1);
  CHECK_FALSE(rep.witness_contained);
  CHECK_FALSE(rep.ok);

  CHECK(verify_sparse(g, {}, 0.5, 1).ok);  // vacuous
}

TEST_CASE("dyadic: serialization round-trips and rejects mismatches") {
  RootSystem rs = catalog("a1:1.0");
  WeightedGrid g = build_grid(rs, make_pt(-1.0), make_pt(1.0), 64);
  DyadicOptions opt;
  opt.seed = 3;
  DyadicSystem sys = build_dyadic_system(g, opt);
  std::string text = serialize_dyadic(sys);
  DyadicSystem back = deserialize_dyadic(g, text);
  REQUIRE(back.row_count() == sys.row_count());
  CHECK(back.kmin == sys.kmin);
  CHECK(back.centers == sys.centers);
  CHECK(back.assign == sys.assign);
  for (int t = 0; t < sys.row_count(); ++t) {
    REQUIRE(back.rows[t].size() == sys.rows[t].size());
    for (std::size_t i = 0; i < sys.rows[t].size(); ++i) {
      CHECK(back.rows[t][i].members == sys.rows[t][i].members);
      CHECK(back.rows[t][i].parent == sys.rows[t][i].parent);
      CHECK(back.rows[t][i].omega == doctest::Approx(sys.rows[t][i].omega).epsilon(1e-14));
    }
  }
  CHECK(back.doubling_all == doctest::Approx(sys.doubling_all).epsilon(1e-14));

  CHECK_THROWS_AS(deserialize_dyadic(g, text.substr(0, text.size() / 2)), Error);
  CHECK_THROWS_AS(deserialize_dyadic(g, "dunkl-dyadic 2\n"), Error);
  WeightedGrid other = build_grid(rs, make_pt(-1.0), make_pt(1.0), 32);
  CHECK_THROWS_AS(deserialize_dyadic(other, text), Error);
}
