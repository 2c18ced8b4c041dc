#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "dunkl/operators.hpp"
#include "dunkl/rng.hpp"

using namespace dunkl;

namespace {

std::vector<double> random_vector(int n, Rng& rng, double zero_fraction = 0.0) {
  std::vector<double> f(static_cast<std::size_t>(n));
  for (double& x : f)
    x = (rng.uniform() < zero_fraction) ? 0.0 : rng.uniform(-1.0, 1.0);
  return f;
}

double wdot(const WeightedGrid& g, const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (int i = 0; i < g.size(); ++i)
    s += a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)] * g.w[i];
  return s;
}

}  // namespace

TEST_CASE("operators: classical limit of the odd model kernel on the line") {
  RootSystem rs = catalog("trivial:1");
  Kernel k = riesz_kernel(rs, 0);
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    double x = rng.uniform(-3.0, 3.0), y = rng.uniform(-3.0, 3.0);
    if (std::abs(x - y) < 1e-6) continue;
    double v = k.eval(make_pt(x), make_pt(y));
    CHECK(std::abs(v) * 2.0 * std::abs(x - y) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(v * (x - y) > 0);  // odd kernel, sign of x - y
  }
  CHECK(kernel_catalog(rs, "riesz:0").name == "riesz:0");
  CHECK_THROWS_AS(kernel_catalog(rs, "riesz:1"), Error);
  CHECK_THROWS_AS(kernel_catalog(rs, "cauchy"), Error);
  CHECK_THROWS_AS(ball_volume_constant(4), Error);
}

TEST_CASE("operators: empirical size and smoothness constants stay bounded") {
  RootSystem rs = catalog("a1:1.0");
  WeightedGrid g = build_grid(rs, make_pt(-1.0), make_pt(1.0), 128);
  Kernel k = riesz_kernel(rs, 0);
  CzReport rep = cz_check(g, k, 200, 9);
  CHECK(rep.samples == 200);
  CHECK(rep.size_max > 0.01);
  CHECK(rep.size_max < 10.0);
  CHECK(rep.holder_max > 0.01);
  CHECK(rep.holder_max < 400.0);
  CzReport again = cz_check(g, k, 200, 9);
  CHECK(rep.size_max == again.size_max);  // deterministic draw
  CHECK(rep.holder_max == again.holder_max);
}

TEST_CASE("operators: discrete application matches the dense brute force") {
  RootSystem rs = catalog("trivial:1");
  WeightedGrid g = build_grid(rs, make_pt(0.0), make_pt(1.0), 32);
  DiscreteOperator T(g, riesz_kernel(rs, 0));
  Rng rng(3);
  std::vector<double> f = random_vector(g.size(), rng);
  std::vector<double> got = T.apply(f);
  Kernel k = riesz_kernel(rs, 0);
  for (int i = 0; i < g.size(); ++i) {
    double s = 0;
    for (int j = 0; j < g.size(); ++j) {
      if (i == j) continue;
      Pt x = g.point(i), y = g.point(j);
      if (euclid_dist(x, y, 1) <= g.cell_diag) continue;
      s += k.eval(x, y) * g.w[j] * f[static_cast<std::size_t>(j)];
    }
    CHECK(got[static_cast<std::size_t>(i)] == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("operators: kappa = 0 operator is antisymmetric in the weighted product") {
  RootSystem rs = catalog("trivial:1");
  WeightedGrid g = build_grid(rs, make_pt(0.0), make_pt(1.0), 64);
  DiscreteOperator T(g, riesz_kernel(rs, 0));
  Rng rng(4);
  std::vector<double> f = random_vector(g.size(), rng), h = random_vector(g.size(), rng);
  double a = wdot(g, T.apply(f), h), b = wdot(g, f, T.apply(h));
  CHECK(a == doctest::Approx(-b).epsilon(1e-11));
  // Adjoint identity on a genuinely weighted grid.
  RootSystem rsa = catalog("a1:1.0");
  WeightedGrid ga = build_grid(rsa, make_pt(-1.0), make_pt(1.0), 64);
  DiscreteOperator Ta(ga, riesz_kernel(rsa, 0));
  std::vector<double> fa = random_vector(ga.size(), rng), ha = random_vector(ga.size(), rng);
  CHECK(wdot(ga, Ta.apply(fa), ha) == doctest::Approx(wdot(ga, fa, Ta.apply_adjoint(ha))).epsilon(1e-11));
}

TEST_CASE("operators: maximal truncation agrees with the threshold oracle") {
  RootSystem rs = catalog("a1:1.0");
  WeightedGrid g = build_grid(rs, make_pt(-1.0), make_pt(1.0), 48);
  DiscreteOperator T(g, riesz_kernel(rs, 0));
  Rng rng(5);
  std::vector<double> f = random_vector(g.size(), rng, 0.4);
  std::vector<double> star = T.maximal_truncation(f);
  std::vector<double> tf = T.apply(f);
  for (int i = 0; i < g.size(); ++i) {
    Pt x = g.point(i);
    std::vector<double> dists;
    for (int j = 0; j < g.size(); ++j) {
      if (T.entry(i, j) * f[static_cast<std::size_t>(j)] != 0.0)
        dists.push_back(g.dunkl_dist(x, g.point(j)));
    }
    std::sort(dists.begin(), dists.end());
    dists.erase(std::unique(dists.begin(), dists.end()), dists.end());
    double best = 0;
    for (double cut : dists) {
      double s = 0;
      for (int j = 0; j < g.size(); ++j)
        if (g.dunkl_dist(x, g.point(j)) >= cut) s += T.entry(i, j) * f[static_cast<std::size_t>(j)];
      best = std::max(best, std::abs(s));
    }
    CHECK(star[static_cast<std::size_t>(i)] == doctest::Approx(best).epsilon(1e-10));
    CHECK(star[static_cast<std::size_t>(i)] >=
          std::abs(tf[static_cast<std::size_t>(i)]) - 1e-12);
  }
}

TEST_CASE("operators: ball maximal averages behave") {
  RootSystem rs = catalog("b2:1.0,0.5");
  WeightedGrid g = build_grid(rs, make_pt(-1.0, -1.0), make_pt(1.0, 1.0), 16);
  Rng rng(6);
  std::vector<double> f = random_vector(g.size(), rng);
  std::vector<double> mf = hl_maximal(g, f);
  double fmax = 0;
  for (double x : f) fmax = std::max(fmax, std::abs(x));
  for (int i = 0; i < g.size(); ++i) {
    CHECK(mf[static_cast<std::size_t>(i)] >= std::abs(f[static_cast<std::size_t>(i)]) - 1e-14);
    CHECK(mf[static_cast<std::size_t>(i)] <= fmax + 1e-14);
  }
  // Constant data reproduces itself.
  std::vector<double> ones(static_cast<std::size_t>(g.size()), 0.7);
  std::vector<double> mones = hl_maximal(g, ones);
  for (double v : mones) CHECK(v == doctest::Approx(0.7).epsilon(1e-13));
  // Monotone in |f|.
  std::vector<double> f2 = f;
  for (double& x : f2) x *= 2.0;
  std::vector<double> mf2 = hl_maximal(g, f2);
  for (int i = 0; i < g.size(); ++i)
    CHECK(mf2[static_cast<std::size_t>(i)] >= mf[static_cast<std::size_t>(i)] - 1e-14);
  // Orbit ball version dominates invariant data pointwise.
  std::vector<double> inv(static_cast<std::size_t>(g.size()));
  for (int i = 0; i < g.size(); ++i) {
    Pt p = g.point(i);
    inv[static_cast<std::size_t>(i)] = p[0] * p[0] + p[1] * p[1] + 0.5;
  }
  std::vector<double> minv = orbit_maximal(g, inv);
  for (int i = 0; i < g.size(); ++i)
    CHECK(minv[static_cast<std::size_t>(i)] >= inv[static_cast<std::size_t>(i)] - 1e-10);
  // The singleton ball really is a singleton.
  auto single = g.ball_members({g.point(37), 0.99 * g.cell, false});
  CHECK(single == std::vector<int>{37});
}

TEST_CASE("operators: dyadic maximal equals the tower maximum") {
  WeightedGrid g = build_grid(catalog("trivial:1"), make_pt(0.0), make_pt(1.0), 64);
  std::vector<std::vector<int>> forced;
  for (int k = 0; k <= 5; ++k) {
    std::vector<int> row;
    for (int a = 0; a < (1 << k); ++a) row.push_back(64 * (2 * a + 1) / (1 << (k + 1)) - 1);
    forced.push_back(row);
  }
  DyadicOptions opt;
  opt.kmin = 0;
  opt.forced_centers = &forced;
  DyadicSystem sys = build_dyadic_system(g, opt);
  Rng rng(7);
  std::vector<double> f = random_vector(g.size(), rng);
  std::vector<double> u(static_cast<std::size_t>(g.size()));
  for (double& x : u) x = rng.uniform(0.2, 2.0);

  const std::vector<double>* variants[2] = {nullptr, &u};
  for (const std::vector<double>* dens : variants) {
    std::vector<double> md = dyadic_maximal(sys, f, dens);
    for (int j = 0; j < g.size(); ++j) {
      double best = 0;
      for (int t = 0; t < sys.row_count(); ++t) {
        const Cube& q = sys.cube(sys.cube_of(j, t));
        double num = 0, den = 0;
        for (int m : q.members) {
          double mass = g.w[m] * (dens ? (*dens)[static_cast<std::size_t>(m)] : 1.0);
          num += std::abs(f[static_cast<std::size_t>(m)]) * mass;
          den += mass;
        }
        best = std::max(best, num / den);
      }
      CHECK(md[static_cast<std::size_t>(j)] == doctest::Approx(best).epsilon(1e-13));
    }
    double top = 0, fmax = 0;
    for (int j = 0; j < g.size(); ++j) {
      top = std::max(top, md[static_cast<std::size_t>(j)]);
      fmax = std::max(fmax, std::abs(f[static_cast<std::size_t>(j)]));
    }
    CHECK(top <= fmax + 1e-14);  // norm one on L^infinity
  }
}

TEST_CASE("operators: grand maximal truncation") {
  RootSystem rs = catalog("trivial:1");
  WeightedGrid g = build_grid(rs, make_pt(0.0), make_pt(1.0), 32);
  DiscreteOperator T(g, riesz_kernel(rs, 0));
  std::vector<double> f(static_cast<std::size_t>(g.size()), 0.0);
  for (int j = 10; j <= 12; ++j) f[static_cast<std::size_t>(j)] = 1.0;

  // One faraway ball: the dilated cutoff misses the support entirely, so the
  // truncated value equals T f on the ball and the peak scatters to members.
  BallSpec far{make_pt(0.9), 0.05, false};
  std::vector<double> one = grand_maximal(T, f, {far}, 2.0);
  std::vector<double> tf = T.apply(f);
  std::vector<int> mem = g.ball_members(far);
  double peak = 0;
  for (int xi : mem) peak = std::max(peak, std::abs(tf[static_cast<std::size_t>(xi)]));
  CHECK(peak > 0);
  for (int xi : mem) CHECK(one[static_cast<std::size_t>(xi)] == doctest::Approx(peak).epsilon(1e-13));
  for (int j = 0; j < g.size(); ++j)
    if (!std::binary_search(mem.begin(), mem.end(), j))
      CHECK(one[static_cast<std::size_t>(j)] == 0.0);

  // A ball whose dilation covers the support contributes nothing.
  BallSpec cover{make_pt(11.5 / 32.0), 0.2, false};
  std::vector<double> zero = grand_maximal(T, f, {cover}, 4.0);
  for (double v : zero) CHECK(v == 0.0);

  // Sub-family values never exceed the full-family values.
  std::vector<BallSpec> fam = canonical_ball_family(g, false);
  std::vector<BallSpec> sub(fam.begin(), fam.begin() + static_cast<long>(fam.size() / 3));
  std::vector<double> full = grand_maximal(T, f, fam, 2.0);
  std::vector<double> part = grand_maximal(T, f, sub, 2.0);
  for (int j = 0; j < g.size(); ++j)
    CHECK(part[static_cast<std::size_t>(j)] <= full[static_cast<std::size_t>(j)] + 1e-15);
}

TEST_CASE("operators: commutator identities") {
  RootSystem rs = catalog("a1:1.0");
  WeightedGrid g = build_grid(rs, make_pt(-1.0), make_pt(1.0), 48);
  DiscreteOperator T(g, riesz_kernel(rs, 0));
  Rng rng(8);
  std::vector<double> f = random_vector(g.size(), rng);
  std::vector<double> c(static_cast<std::size_t>(g.size()), 3.25);
  for (double v : commutator_apply(T, c, f)) CHECK(std::abs(v) < 1e-12);

  std::vector<double> b(static_cast<std::size_t>(g.size()));
  for (int i = 0; i < g.size(); ++i) b[static_cast<std::size_t>(i)] = g.point(i)[0];
  std::vector<double> got = commutator_apply(T, b, f);
  for (int i = 0; i < g.size(); ++i) {
    double s = 0;
    for (int j = 0; j < g.size(); ++j)
      s += (b[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(j)]) * T.entry(i, j) *
           f[static_cast<std::size_t>(j)];
    CHECK(got[static_cast<std::size_t>(i)] == doctest::Approx(s).epsilon(1e-10));
  }
}

TEST_CASE("operators: power iteration recovers the block operator norm") {
  RootSystem rs = catalog("trivial:1");
  WeightedGrid g = build_grid(rs, make_pt(0.0), make_pt(1.0), 16);
  const double amp[8] = {0.3, 1.7, 0.9, 0.4, 1.1, 0.2, 0.6, 0.05};
  const double cell = g.cell;
  Kernel block{"block", [amp, cell](const Pt& x, const Pt& y) {
                 int i = static_cast<int>(std::llround(x[0] / cell - 0.5));
                 int j = static_cast<int>(std::llround(y[0] / cell - 0.5));
                 if (i / 2 != j / 2 || i == j) return 0.0;
                 return amp[i / 2] / cell;  // entry K w_j = amp on the block
               }};
  DiscreteOperator T(g, block, 1e-12);
  OpNormResult res = l2_opnorm(T, 100, 1);
  CHECK(res.norm == doctest::Approx(1.7).epsilon(1e-9));
  // The returned direction attains the norm.
  std::vector<double> tv = T.apply(res.top);
  CHECK(std::sqrt(wdot(g, tv, tv) / wdot(g, res.top, res.top)) ==
        doctest::Approx(res.norm).epsilon(1e-12));
}
