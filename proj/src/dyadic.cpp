#include "dunkl/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dunkl/rng.hpp"

namespace dunkl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Flat orbit images of a point (|G| * dim doubles).
void push_images(const WeightedGrid& g, const Pt& p, std::vector<double>& out) {
  for (const Mat& m : g.group.elements) {
    Pt q = m.apply(p);
    for (int d = 0; d < g.dim; ++d) out.push_back(q[d]);
  }
}

double min_dist2(const double* imgs, int count, int dim, const Pt& x) {
  double best = kInf;
  for (int e = 0; e < count; ++e) {
    double d2 = 0;
    for (int d = 0; d < dim; ++d) {
      double t = x[d] - imgs[e * dim + d];
      d2 += t * t;
    }
    best = std::min(best, d2);
  }
  return best;
}

double compute_doubling(const DyadicSystem& sys, bool all_children) {
  double worst = 1.0;
  for (int t = 0; t + 1 < sys.row_count(); ++t) {
    for (const Cube& q : sys.rows[t]) {
      if (q.children.empty()) continue;
      double pick = all_children ? kInf : 0.0;
      for (int c : q.children) {
        double oc = sys.rows[t + 1][c].omega;
        pick = all_children ? std::min(pick, oc) : std::max(pick, oc);
      }
      if (pick <= 0) throw Error("dyadic: child cube with zero mass");
      worst = std::max(worst, q.omega / pick);
    }
  }
  return worst;
}

// Builds rows/members/assign from centers + leaf assignment + parent links.
void finalize(DyadicSystem& sys, const std::vector<std::vector<int>>& parents,
              const std::vector<int>& leaf_assign) {
  const WeightedGrid& g = *sys.grid;
  const int n = g.size();
  const int rowsN = static_cast<int>(sys.centers.size());
  sys.rows.assign(rowsN, {});
  sys.assign.assign(rowsN, std::vector<int>(n, -1));
  for (int t = 0; t < rowsN; ++t) {
    sys.rows[t].resize(sys.centers[t].size());
    for (std::size_t i = 0; i < sys.centers[t].size(); ++i)
      sys.rows[t][i].center = sys.centers[t][i];
  }
  const int last = rowsN - 1;
  if (static_cast<int>(leaf_assign.size()) != n)
    throw Error("dyadic: leaf assignment size mismatch");
  sys.assign[last] = leaf_assign;
  for (int j = 0; j < n; ++j) {
    int ci = leaf_assign[j];
    if (ci < 0 || ci >= static_cast<int>(sys.rows[last].size()))
      throw Error("dyadic: leaf assignment out of range");
    sys.rows[last][ci].members.push_back(j);
  }
  for (int t = last; t >= 1; --t) {
    const auto& par = parents[t - 1];  // parents[t-1] holds row t -> row t-1 links
    if (par.size() != sys.rows[t].size()) throw Error("dyadic: parent row size mismatch");
    for (std::size_t ci = 0; ci < par.size(); ++ci) {
      int pi = par[ci];
      if (pi < 0 || pi >= static_cast<int>(sys.rows[t - 1].size()))
        throw Error("dyadic: parent index out of range");
      sys.rows[t][ci].parent = pi;
      sys.rows[t - 1][pi].children.push_back(static_cast<int>(ci));
    }
    for (std::size_t pi = 0; pi < sys.rows[t - 1].size(); ++pi) {
      Cube& q = sys.rows[t - 1][pi];
      for (int c : q.children) {
        const auto& cm = sys.rows[t][c].members;
        q.members.insert(q.members.end(), cm.begin(), cm.end());
      }
      std::sort(q.members.begin(), q.members.end());
    }
  }
  for (int t = 0; t < rowsN; ++t) {
    for (std::size_t ci = 0; ci < sys.rows[t].size(); ++ci) {
      Cube& q = sys.rows[t][ci];
      if (q.members.empty()) throw Error("dyadic: center owns no points");
      q.omega = 0;
      for (int m : q.members) {
        q.omega += g.w[m];
        sys.assign[t][m] = static_cast<int>(ci);
      }
    }
    for (int j = 0; j < n; ++j)
      if (sys.assign[t][j] < 0) throw Error("dyadic: row does not partition the grid");
  }
  sys.doubling_largest = compute_doubling(sys, false);
  sys.doubling_all = compute_doubling(sys, true);
}

}  // namespace

bool DyadicSystem::contains(CubeRef outer, CubeRef inner) const {
  if (!outer.valid() || !inner.valid() || inner.row < outer.row) return false;
  CubeRef r = inner;
  while (r.row > outer.row) r = parent_of(r);
  return r == outer;
}

std::vector<int> build_net(const WeightedGrid& g, double delta_k, std::uint64_t seed,
                           const std::vector<int>& seeds) {
  const int n = g.size(), dim = g.dim, go = g.group.order();
  if (delta_k <= 0) throw Error("build_net: scale must be positive");
  std::vector<int> admitted;
  std::vector<char> is_center(static_cast<std::size_t>(n), 0);
  std::vector<double> images;
  const double r2 = delta_k * delta_k;
  auto admit = [&](int j) {
    admitted.push_back(j);
    is_center[static_cast<std::size_t>(j)] = 1;
    push_images(g, g.point(j), images);
  };
  for (int s : seeds) {
    if (s < 0 || s >= n) throw Error("build_net: seed index out of range");
    if (!is_center[static_cast<std::size_t>(s)]) admit(s);  // caller keeps seeds separated
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  // Per-candidate rejection test: whichever is cheaper of scanning the
  // admitted orbit images or enumerating the candidate's delta^k ball.
  const double est_cells =
      std::pow(std::min<double>(g.res, 2.0 * delta_k / g.cell + 2.0), dim) * go;
  for (int c : order) {
    if (is_center[static_cast<std::size_t>(c)]) continue;
    Pt p = g.point(c);
    bool near = false;
    if (static_cast<double>(admitted.size()) * go < est_cells) {
      const int count = static_cast<int>(admitted.size()) * go;
      const double* img = images.data();
      for (int e = 0; e < count && !near; ++e) {
        double d2 = 0;
        for (int d = 0; d < dim; ++d) {
          double t = p[d] - img[e * dim + d];
          d2 += t * t;
        }
        if (d2 < r2) near = true;
      }
    } else {
      g.for_ball({p, delta_k, true}, [&](int j) {
        if (is_center[static_cast<std::size_t>(j)]) near = true;
      });
    }
    if (!near) admit(c);
  }
  return admitted;
}

DyadicSystem build_dyadic_system(const WeightedGrid& g, const DyadicOptions& opt) {
  if (!(opt.delta > 0 && opt.delta < 1)) throw Error("dyadic: delta must lie in (0,1)");
  DyadicSystem sys;
  sys.grid = &g;
  sys.delta = opt.delta;
  if (opt.forced_centers) {
    if (opt.kmin == INT_MIN) throw Error("dyadic: forced centers need an explicit kmin");
    if (opt.forced_centers->empty()) throw Error("dyadic: forced centers are empty");
    sys.kmin = opt.kmin;
    sys.kmax = opt.kmin + static_cast<int>(opt.forced_centers->size()) - 1;
    sys.centers = *opt.forced_centers;
    for (const auto& row : sys.centers)
      for (int c : row)
        if (c < 0 || c >= g.size()) throw Error("dyadic: forced center out of range");
  } else {
    const double logd = std::log(opt.delta);
    int kmin = opt.kmin, kmax = opt.kmax;
    if (kmin == INT_MIN)
      kmin = static_cast<int>(std::floor(std::log(g.euclid_diag() * 1.0001) / logd + 1e-9));
    if (kmax == INT_MAX)
      kmax = static_cast<int>(std::floor(std::log(2.0 * g.cell_diag) / logd + 1e-9));
    if (kmax < kmin) kmax = kmin;
    sys.kmin = kmin;
    sys.kmax = kmax;
    std::vector<int> prev;
    for (int k = kmin; k <= kmax; ++k) {
      std::uint64_t row_seed =
          opt.seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(k - kmin + 1);
      std::vector<int> net = build_net(g, std::pow(opt.delta, k), row_seed, prev);
      sys.centers.push_back(net);
      prev = std::move(net);
    }
  }

  const int n = g.size(), dim = g.dim, go = g.group.order();
  const int last = static_cast<int>(sys.centers.size()) - 1;
  // Finest row: Dunkl-metric Voronoi assignment, ties to the earlier center.
  std::vector<int> leaf_assign(static_cast<std::size_t>(n), -1);
  {
    std::vector<double> best(static_cast<std::size_t>(n), kInf);
    const double dk = sys.len(last);
    std::vector<double> imgs;
    for (std::size_t ci = 0; ci < sys.centers[last].size(); ++ci) {
      imgs.clear();
      push_images(g, g.point(sys.centers[last][ci]), imgs);
      g.for_ball({g.point(sys.centers[last][ci]), dk, true}, [&](int j) {
        double d2 = min_dist2(imgs.data(), go, dim, g.point(j));
        if (d2 < best[static_cast<std::size_t>(j)]) {
          best[static_cast<std::size_t>(j)] = d2;
          leaf_assign[static_cast<std::size_t>(j)] = static_cast<int>(ci);
        }
      });
    }
    for (int j = 0; j < n; ++j)
      if (leaf_assign[static_cast<std::size_t>(j)] < 0)
        throw Error("dyadic: finest net does not cover the grid");
  }
  // Coarser rows: each cube hangs off the nearest coarser center.
  std::vector<std::vector<int>> parents(static_cast<std::size_t>(last));
  for (int t = last; t >= 1; --t) {
    std::vector<double> imgs;
    for (int pc : sys.centers[t - 1]) push_images(g, g.point(pc), imgs);
    const int pcount = static_cast<int>(sys.centers[t - 1].size());
    std::vector<int>& par = parents[static_cast<std::size_t>(t - 1)];
    par.assign(sys.centers[t].size(), -1);
    for (std::size_t ci = 0; ci < sys.centers[t].size(); ++ci) {
      Pt cp = g.point(sys.centers[t][ci]);
      double bestd = kInf;
      for (int pi = 0; pi < pcount; ++pi) {
        double d2 = min_dist2(imgs.data() + static_cast<std::size_t>(pi) * go * dim, go, dim, cp);
        if (d2 < bestd) {
          bestd = d2;
          par[ci] = pi;
        }
      }
    }
  }
  finalize(sys, parents, leaf_assign);
  return sys;
}

DyadicReport verify_dyadic_properties(const DyadicSystem& sys) {
  const WeightedGrid& g = *sys.grid;
  const int n = g.size(), dim = g.dim, go = g.group.order();
  const int R = sys.row_count();
  DyadicReport rep;
  double sep = kInf, cover = 0, outer = 0, cin = kInf;
  bool covered_all = true, partition = true, nesting = true;
  std::vector<int> which(static_cast<std::size_t>(n), -1);
  std::vector<double> bd(static_cast<std::size_t>(n));
  std::vector<int> seen(static_cast<std::size_t>(n));
  std::vector<double> imgs;
  for (int t = 0; t < R; ++t) {
    const double dk = sys.len(t);
    const auto& cs = sys.centers[t];
    std::fill(which.begin(), which.end(), -1);
    for (std::size_t ci = 0; ci < cs.size(); ++ci) which[static_cast<std::size_t>(cs[ci])] = static_cast<int>(ci);
    std::fill(bd.begin(), bd.end(), kInf);
    for (std::size_t ci = 0; ci < cs.size(); ++ci) {
      Pt cp = g.point(cs[ci]);
      imgs.clear();
      push_images(g, cp, imgs);
      // Separation: another center strictly inside 1.5 delta^k.
      g.for_ball({cp, 1.5 * dk, true}, [&](int j) {
        double d2 = min_dist2(imgs.data(), go, dim, g.point(j));
        if (which[static_cast<std::size_t>(j)] >= 0 && j != cs[ci] && d2 < sep * sep * dk * dk)
          sep = std::sqrt(d2) / dk;
        if (d2 < bd[static_cast<std::size_t>(j)]) bd[static_cast<std::size_t>(j)] = d2;
      });
    }
    for (int j = 0; j < n; ++j) {
      if (bd[static_cast<std::size_t>(j)] == kInf) {
        covered_all = false;  // nothing within delta^k (for_ball is strict)
      } else {
        cover = std::max(cover, std::sqrt(bd[static_cast<std::size_t>(j)]) / dk);
      }
    }
    // Partition + assignment consistency.
    std::fill(seen.begin(), seen.end(), 0);
    for (std::size_t ci = 0; ci < sys.rows[t].size(); ++ci) {
      const Cube& q = sys.rows[t][ci];
      for (int m : q.members) {
        ++seen[static_cast<std::size_t>(m)];
        if (sys.assign[t][m] != static_cast<int>(ci)) partition = false;
      }
      if (!std::is_sorted(q.members.begin(), q.members.end())) partition = false;
    }
    for (int j = 0; j < n; ++j)
      if (seen[static_cast<std::size_t>(j)] != 1) partition = false;
    for (std::size_t ci = 0; ci < sys.rows[t].size(); ++ci) {
      const Cube& q = sys.rows[t][ci];
      // Nesting: members sit inside the parent cube.
      if (t > 0) {
        if (q.parent < 0 || q.parent >= static_cast<int>(sys.rows[t - 1].size())) {
          nesting = false;
        } else {
          const Cube& p = sys.rows[t - 1][static_cast<std::size_t>(q.parent)];
          if (!std::includes(p.members.begin(), p.members.end(), q.members.begin(),
                             q.members.end()))
            nesting = false;
        }
      }
      Pt cp = g.point(q.center);
      imgs.clear();
      push_images(g, cp, imgs);
      for (int m : q.members)
        outer = std::max(outer, std::sqrt(min_dist2(imgs.data(), go, dim, g.point(m))) / dk);
      // Inner constant: nearest non-member of Q to its center.
      double found = kInf;
      for (double rho = dk / 6.0; rho <= 2.8 * dk; rho *= 2.0) {
        g.for_ball({cp, rho, true}, [&](int j) {
          if (sys.assign[t][j] != static_cast<int>(ci))
            found = std::min(found, min_dist2(imgs.data(), go, dim, g.point(j)));
        });
        if (found < kInf) break;
      }
      if (found < kInf) cin = std::min(cin, std::sqrt(found) / dk);
    }
    rep.cube_count += static_cast<int>(sys.rows[t].size());
  }
  rep.separation_margin = std::min(sep, 1.5);
  rep.covering_margin = cover;
  rep.outer_max = outer;
  rep.c_in = (cin == kInf) ? 1.0 : cin;  // no non-members anywhere: single root row
  rep.doubling_largest = compute_doubling(sys, false);
  rep.doubling_all = compute_doubling(sys, true);
  rep.separation_ok = rep.separation_margin >= 1.0 - 1e-9;
  rep.covering_ok = covered_all && cover <= 1.0 + 1e-9;
  rep.partition_ok = partition;
  rep.nesting_ok = nesting;
  rep.outer_ok = outer < 2.0;
  if (rep.c_in < 1.0 / 24.0 - 1e-12)
    throw Error("dyadic: inner constant fell below 1/24 (got " + std::to_string(rep.c_in) + ")");
  rep.ok = rep.separation_ok && rep.covering_ok && rep.partition_ok && rep.nesting_ok &&
           rep.outer_ok && rep.c_in >= 1.0 / 6.0 - 1e-12;
  return rep;
}

DyadicBundle build_dyadic_bundle(const WeightedGrid& g, double delta, std::uint64_t seed,
                                 int count) {
  if (count < 1) throw Error("dyadic: bundle needs at least one system");
  DyadicBundle b;
  for (int i = 0; i < count; ++i) {
    DyadicOptions opt;
    opt.delta = delta;
    opt.seed = seed + static_cast<std::uint64_t>(i);
    b.systems.push_back(build_dyadic_system(g, opt));
  }
  return b;
}

ContainingCube containing_cube(const DyadicSystem& sys, const BallSpec& ball) {
  const WeightedGrid& g = *sys.grid;
  std::vector<int> mem = g.ball_members(ball);
  if (mem.empty()) throw Error("containing_cube: ball holds no grid points");
  for (int t = sys.row_count() - 1; t >= 0; --t) {
    int idx = sys.assign[t][mem[0]];
    bool uniform = true;
    for (int m : mem)
      if (sys.assign[t][m] != idx) {
        uniform = false;
        break;
      }
    if (!uniform) continue;
    ContainingCube out;
    out.cube = {t, idx};
    double worst = 0;
    for (int m : sys.cube(out.cube).members)
      worst = std::max(worst, g.dunkl_dist(g.point(m), ball.center));
    out.inflation = worst / ball.radius;
    return out;
  }
  throw Error("containing_cube: no cube contains the ball");
}

ContainingCube containing_cube(const DyadicBundle& bundle, const BallSpec& ball,
                               double inflation_cap) {
  ContainingCube best;
  best.inflation = kInf;
  for (std::size_t s = 0; s < bundle.systems.size(); ++s) {
    ContainingCube c = containing_cube(bundle.systems[s], ball);
    if (c.inflation < best.inflation) {
      best = c;
      best.system = static_cast<int>(s);
    }
  }
  if (best.inflation > inflation_cap)
    throw Error("containing_cube: best inflation " + std::to_string(best.inflation) +
                " exceeds cap " + std::to_string(inflation_cap));
  return best;
}

SparseCheckReport verify_sparse(const WeightedGrid& g, const std::vector<SparseEntry>& fam,
                                double theta, int overlap_cap) {
  SparseCheckReport rep;
  rep.theta_min = 1.0;
  rep.witness_contained = true;
  std::vector<int> count(static_cast<std::size_t>(g.size()), 0);
  for (const SparseEntry& e : fam) {
    if (!std::includes(e.members.begin(), e.members.end(), e.witness.begin(), e.witness.end()))
      rep.witness_contained = false;
    double om = 0, ow = 0;
    for (int m : e.members) om += g.w[m];
    for (int m : e.witness) {
      ow += g.w[m];
      ++count[static_cast<std::size_t>(m)];
    }
    if (om > 0) rep.theta_min = std::min(rep.theta_min, ow / om);
  }
  for (int c : count) rep.overlap_max = std::max(rep.overlap_max, c);
  rep.ok = rep.witness_contained && rep.theta_min >= theta - 1e-12 &&
           rep.overlap_max <= overlap_cap;
  return rep;
}

std::string serialize_dyadic(const DyadicSystem& sys) {
  std::ostringstream os;
  os.precision(17);
  os << "dunkl-dyadic 1\n";
  os << "delta " << sys.delta << "\n";
  os << "kmin " << sys.kmin << " kmax " << sys.kmax << "\n";
  os << "points " << sys.grid->size() << " dim " << sys.grid->dim << " res " << sys.grid->res
     << "\n";
  for (int t = 0; t < sys.row_count(); ++t) {
    os << "centers " << t << " " << sys.centers[t].size() << ":";
    for (int c : sys.centers[t]) os << " " << c;
    os << "\n";
  }
  for (int t = 1; t < sys.row_count(); ++t) {
    os << "parents " << t << " " << sys.rows[t].size() << ":";
    for (const Cube& q : sys.rows[t]) os << " " << q.parent;
    os << "\n";
  }
  os << "leaves " << sys.grid->size() << ":";
  for (int v : sys.assign.back()) os << " " << v;
  os << "\nend\n";
  return os.str();
}

DyadicSystem deserialize_dyadic(const WeightedGrid& g, const std::string& text) {
  std::istringstream is(text);
  std::string tok;
  auto need = [&](const std::string& what) {
    if (!(is >> tok) || tok != what)
      throw Error("dyadic parse: expected '" + what + "', got '" + tok + "'");
  };
  int version = 0;
  need("dunkl-dyadic");
  if (!(is >> version) || version != 1) throw Error("dyadic parse: unsupported version");
  DyadicSystem sys;
  sys.grid = &g;
  need("delta");
  if (!(is >> sys.delta) || !(sys.delta > 0 && sys.delta < 1))
    throw Error("dyadic parse: bad delta");
  need("kmin");
  is >> sys.kmin;
  need("kmax");
  is >> sys.kmax;
  int n = 0, dim = 0, res = 0;
  need("points");
  is >> n;
  need("dim");
  is >> dim;
  need("res");
  is >> res;
  if (n != g.size() || dim != g.dim || res != g.res)
    throw Error("dyadic parse: serialized structure does not match this grid");
  const int R = sys.kmax - sys.kmin + 1;
  if (R < 1 || R > 64) throw Error("dyadic parse: bad scale range");
  sys.centers.resize(static_cast<std::size_t>(R));
  for (int t = 0; t < R; ++t) {
    need("centers");
    int row = 0, cnt = 0;
    char colon = 0;
    if (!(is >> row >> cnt >> colon) || row != t || colon != ':' || cnt < 1)
      throw Error("dyadic parse: bad centers row " + std::to_string(t));
    sys.centers[static_cast<std::size_t>(t)].resize(static_cast<std::size_t>(cnt));
    for (int& c : sys.centers[static_cast<std::size_t>(t)]) {
      if (!(is >> c) || c < 0 || c >= n) throw Error("dyadic parse: center out of range");
    }
  }
  std::vector<std::vector<int>> parents(static_cast<std::size_t>(R - 1));
  for (int t = 1; t < R; ++t) {
    need("parents");
    int row = 0, cnt = 0;
    char colon = 0;
    if (!(is >> row >> cnt >> colon) || row != t || colon != ':' ||
        cnt != static_cast<int>(sys.centers[static_cast<std::size_t>(t)].size()))
      throw Error("dyadic parse: bad parents row " + std::to_string(t));
    parents[static_cast<std::size_t>(t - 1)].resize(static_cast<std::size_t>(cnt));
    for (int& p : parents[static_cast<std::size_t>(t - 1)])
      if (!(is >> p)) throw Error("dyadic parse: bad parent entry");
  }
  need("leaves");
  int cnt = 0;
  char colon = 0;
  if (!(is >> cnt >> colon) || cnt != n || colon != ':')
    throw Error("dyadic parse: bad leaf assignment header");
  std::vector<int> leaf_assign(static_cast<std::size_t>(n));
  for (int& v : leaf_assign)
    if (!(is >> v)) throw Error("dyadic parse: bad leaf entry");
  need("end");
  finalize(sys, parents, leaf_assign);
  return sys;
}

}  // namespace dunkl
