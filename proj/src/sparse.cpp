#include "dunkl/sparse.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <utility>

#include "dunkl/weights.hpp"

namespace dunkl {

namespace {

double member_mass(const WeightedGrid& g, const std::vector<int>& members) {
  double m = 0;
  for (int i : members) m += g.w[static_cast<std::size_t>(i)];
  return m;
}

double member_avg_abs(const WeightedGrid& g, const std::vector<int>& members,
                      const std::vector<double>& f) {
  double m = 0, a = 0;
  for (int i : members) {
    m += g.w[static_cast<std::size_t>(i)];
    a += std::abs(f[static_cast<std::size_t>(i)]) * g.w[static_cast<std::size_t>(i)];
  }
  return m > 0 ? a / m : 0.0;
}

// Mass of the sorted intersection of cube members with a sorted index set.
double intersection_mass(const WeightedGrid& g, const std::vector<int>& a,
                         const std::vector<int>& b) {
  double m = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) ++i;
    else if (b[j] < a[i]) ++j;
    else { m += g.w[static_cast<std::size_t>(a[i])]; ++i; ++j; }
  }
  return m;
}

std::vector<int> subtract_sorted(const std::vector<int>& from, const std::vector<int>& drop) {
  std::vector<int> out;
  out.reserve(from.size());
  std::set_difference(from.begin(), from.end(), drop.begin(), drop.end(),
                      std::back_inserter(out));
  return out;
}

}  // namespace

namespace {

// Shared threshold-independent work: dilate, local average, orbit sums over
// the cube, and the local grand maximal function of f cut to the dilate.
// The dilate is ctilde0 times the node's generating ball (the cube's own
// sandwich ball by default).
struct NodeCore {
  std::vector<int> dilate;
  double favg = 0;
  std::vector<double> osum;  // aligned with cube members
  std::vector<double> mt;    // full-grid vector; empty when favg == 0
};

NodeCore node_core(const DiscreteOperator& T, const DyadicSystem& sys, CubeRef q,
                   const BallSpec& ball, const std::vector<double>& f,
                   const SparseConstants& c) {
  const WeightedGrid& g = *sys.grid;
  const int n = g.size();
  if (!g.orbit_closed) throw Error("sparse: grid must be orbit-closed");
  if (static_cast<int>(f.size()) != n) throw Error("sparse: data size mismatch");
  if (&T.grid() != &g) throw Error("sparse: operator grid differs from system grid");
  const Cube& cube = sys.cube(q);
  const double ct0 = c.ctilde0();

  NodeCore core;
  core.dilate = g.ball_members({ball.center, ct0 * ball.radius, true});
  core.favg = member_avg_abs(g, core.dilate, f);

  // Orbit sums of |f| over the cube; the dilate is orbit-closed, so these
  // vanish whenever favg does.
  const int go = g.group.order();
  core.osum.assign(cube.members.size(), 0.0);
  for (std::size_t i = 0; i < cube.members.size(); ++i) {
    double s = 0;
    for (int e = 0; e < go; ++e)
      s += std::abs(f[static_cast<std::size_t>(
          g.orbit_idx[static_cast<std::size_t>(cube.members[i]) * go + e])]);
    core.osum[i] = s;
  }

  // Local grand maximal function over the sandwich balls of the subcubes.
  if (core.favg > 0) {
    std::vector<double> floc(static_cast<std::size_t>(n), 0.0);
    for (int m : core.dilate) floc[static_cast<std::size_t>(m)] = f[static_cast<std::size_t>(m)];
    std::vector<BallSpec> balls;
    sys.for_subtree(q, [&](CubeRef r) { balls.push_back(sys.dilated_ball(r)); });
    core.mt = grand_maximal(T, floc, balls, ct0);
  }
  return core;
}

// Membership sweep at one threshold; fills parts when asked.
double sweep_exceptional(const WeightedGrid& g, const Cube& cube, const NodeCore& core,
                         double ce, std::vector<int>& members, std::vector<int>* orbit_part,
                         std::vector<int>* maximal_part) {
  members.clear();
  if (orbit_part) orbit_part->clear();
  if (maximal_part) maximal_part->clear();
  double mass = 0;
  for (std::size_t i = 0; i < cube.members.size(); ++i) {
    int m = cube.members[i];
    double mval = core.mt.empty() ? 0.0 : core.mt[static_cast<std::size_t>(m)];
    bool by_orbit = core.osum[i] > ce * core.favg;
    bool by_maximal = mval > ce * core.favg;
    if (by_orbit && orbit_part) orbit_part->push_back(m);
    if (by_maximal && maximal_part) maximal_part->push_back(m);
    if (by_orbit || by_maximal) {
      members.push_back(m);
      mass += g.w[static_cast<std::size_t>(m)];
    }
  }
  return mass;
}

NodeAnalysis analyze_node_at(const DiscreteOperator& T, const DyadicSystem& sys, CubeRef q,
                             const BallSpec& ball, const std::vector<double>& f,
                             const SparseConstants& c) {
  const WeightedGrid& g = *sys.grid;
  const Cube& cube = sys.cube(q);
  NodeCore core = node_core(T, sys, q, ball, f, c);

  NodeAnalysis out;
  out.dilate = std::move(core.dilate);
  out.favg = core.favg;
  const double target = cube.omega / (4.0 * sys.doubling_all);
  double ce = c.CE_start;
  for (;;) {
    double mass = sweep_exceptional(g, cube, core, ce, out.exceptional, nullptr, nullptr);
    if (mass <= target) break;
    ce *= 2.0;
    if (ce > c.CE_cap) throw Error("sparse: exceptional-set threshold exceeded its cap");
  }
  out.ce = ce;
  return out;
}

}  // namespace

NodeAnalysis analyze_node(const DiscreteOperator& T, const DyadicSystem& sys, CubeRef q,
                          const std::vector<double>& f, const SparseConstants& c) {
  return analyze_node_at(T, sys, q, sys.dilated_ball(q), f, c);
}

ExceptionalSet exceptional_set(const DiscreteOperator& T, const DyadicSystem& sys, CubeRef q,
                               const std::vector<double>& f, double ce,
                               const SparseConstants& c) {
  if (ce <= 0) throw Error("sparse: exceptional threshold must be positive");
  NodeCore core = node_core(T, sys, q, sys.dilated_ball(q), f, c);
  if (core.favg <= 0) throw Error("sparse: f vanishes on the dilated cube");
  ExceptionalSet out;
  out.base = q;
  out.ce = ce;
  out.favg = core.favg;
  out.mass = sweep_exceptional(*sys.grid, sys.cube(q), core, ce, out.members, &out.orbit_part,
                               &out.maximal_part);
  return out;
}

double calibrate_CE(const DiscreteOperator& T, const DyadicSystem& sys, CubeRef q,
                    const std::vector<double>& f, const SparseConstants& c) {
  NodeCore core = node_core(T, sys, q, sys.dilated_ball(q), f, c);
  if (core.favg <= 0) throw Error("sparse: f vanishes on the dilated cube");
  const WeightedGrid& g = *sys.grid;
  const Cube& cube = sys.cube(q);
  const double target = cube.omega / (4.0 * sys.doubling_all);
  std::vector<int> scratch;
  for (double ce = c.CE_start;; ce *= 2.0) {
    if (ce > c.CE_cap) throw Error("sparse: exceptional-set threshold exceeded its cap");
    if (sweep_exceptional(g, cube, core, ce, scratch, nullptr, nullptr) <= target) return ce;
  }
}

std::vector<CubeRef> cz_select(const DyadicSystem& sys, CubeRef q,
                               const std::vector<int>& exceptional, double csel,
                               double* leakage) {
  if (csel <= 0) throw Error("sparse: selection constant must be positive");
  const WeightedGrid& g = *sys.grid;
  const Cube& base = sys.cube(q);
  double base_mass = intersection_mass(g, base.members, exceptional);
  if (base_mass > base.omega / (2.0 * csel))
    throw Error("sparse: base cube qualifies for selection; recalibrate the threshold");
  std::vector<CubeRef> out, stack;
  auto push_children = [&](CubeRef r) {
    for (int ch : sys.cube(r).children) stack.push_back({r.row + 1, ch});
  };
  push_children(q);
  double captured = 0;
  while (!stack.empty()) {
    CubeRef r = stack.back();
    stack.pop_back();
    const Cube& cb = sys.cube(r);
    double inter = intersection_mass(g, cb.members, exceptional);
    if (inter > cb.omega / (2.0 * csel)) {
      out.push_back(r);
      captured += inter;
    } else {
      push_children(r);
    }
  }
  if (leakage) *leakage = std::max(0.0, base_mass - captured);
  std::sort(out.begin(), out.end());
  return out;
}

SparseBuild sparse_family_T(const DiscreteOperator& T, const DyadicBundle& bundle,
                            const std::vector<double>& f, const BallSpec& support,
                            const SparseConstants& c) {
  if (bundle.systems.empty()) throw Error("sparse: bundle holds no systems");
  const DyadicSystem& sys = bundle.systems.front();
  const WeightedGrid& g = *sys.grid;
  const int n = g.size();
  if (!g.orbit_closed) throw Error("sparse: grid must be orbit-closed");
  if (static_cast<int>(f.size()) != n) throw Error("sparse: data size mismatch");
  if (&T.grid() != &g) throw Error("sparse: operator grid differs from system grid");
  if (support.radius <= 0) throw Error("sparse: support ball has no radius");
  for (const DyadicSystem& s : bundle.systems)
    if (s.grid != &g) throw Error("sparse: bundle systems use different grids");

  SparseBuild out;
  out.ctilde0 = c.ctilde0();
  out.csel = sys.doubling_all;
  if (std::all_of(f.begin(), f.end(), [](double v) { return v == 0.0; }))
    return out;  // nothing to dominate: empty family by convention

  // Re-cube a generating ball: smallest cube across the bundle holding the
  // ctilde0-dilate. No inflation cap here - the worst accepted inflation is
  // reported instead of failing the build.
  std::set<std::array<int, 3>> recube_seen;
  auto recube = [&](const BallSpec& ball) {
    const BallSpec dil{ball.center, out.ctilde0 * ball.radius, true};
    const ContainingCube cc =
        containing_cube(bundle, dil, std::numeric_limits<double>::infinity());
    out.inflation_max = std::max(out.inflation_max, cc.inflation);
    if (recube_seen.insert({cc.system, cc.cube.row, cc.cube.idx}).second) {
      const Cube& rcube = bundle.systems[static_cast<std::size_t>(cc.system)].cube(cc.cube);
      out.recubed.push_back({cc.cube, rcube.members, {}, rcube.omega, 0.0, cc.system});
    }
  };

  // Cover the core 2x ball and each dyadic annulus around the support by a
  // greedy net of balls with radius matched to the annulus; their dilates
  // all reach the support, so every local average below is positive. Each
  // ball is re-cubed (those cubes alone make the dominator cover the grid)
  // and its containing cube in the first system seeds the stopping tree.
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) dist[static_cast<std::size_t>(i)] = g.dunkl_dist(g.point(i), support.center);
  const double r = support.radius;
  const double diam = g.euclid_diag();
  std::map<std::pair<int, int>, BallSpec> gen_ball;  // top cube -> first ball
  std::set<std::pair<int, int>> picked;
  int imax = 0;
  while (std::ldexp(r, imax) < diam) ++imax;
  for (int i = 0; i <= imax; ++i) {
    const double rho = std::max(std::ldexp(r, i + 2) / out.ctilde0, g.cell_diag);
    const double lo = i == 0 ? 0.0 : std::ldexp(r, i);
    const double hi = std::ldexp(r, i + 1);
    std::vector<int> region;
    for (int p = 0; p < n; ++p)
      if (dist[static_cast<std::size_t>(p)] >= lo && dist[static_cast<std::size_t>(p)] < hi)
        region.push_back(p);
    std::vector<char> covered(region.size(), 0);
    int count = 0;
    for (std::size_t a = 0; a < region.size(); ++a) {
      if (covered[a]) continue;
      const Pt ctr = g.point(region[a]);
      for (std::size_t b = a; b < region.size(); ++b)
        if (!covered[b] &&
            g.dunkl_dist(ctr, g.point(region[b])) < rho)
          covered[b] = 1;
      const BallSpec ball{ctr, rho, true};
      ++count;
      recube(ball);
      ContainingCube top = containing_cube(sys, ball);
      picked.insert({top.cube.row, top.cube.idx});
      gen_ball.emplace(std::pair<int, int>{top.cube.row, top.cube.idx}, ball);
    }
    out.cover_counts.push_back(count);
  }
  std::vector<CubeRef> tops;
  for (const auto& pr : picked) {
    CubeRef a{pr.first, pr.second};
    bool inside = false;
    for (const auto& qr : picked) {
      CubeRef b{qr.first, qr.second};
      if (!(b == a) && sys.contains(b, a)) { inside = true; break; }
    }
    if (!inside) tops.push_back(a);
  }

  std::function<int(CubeRef, const BallSpec&, int, int)> visit =
      [&](CubeRef q, const BallSpec& ball, int parent, int depth) -> int {
    if (depth > c.depth_cap) throw Error("sparse: stopping-time depth cap exceeded");
    if (static_cast<int>(out.nodes.size()) >= c.node_cap)
      throw Error("sparse: node cap exceeded");
    const int id = static_cast<int>(out.nodes.size());
    out.nodes.push_back({});
    NodeAnalysis a = analyze_node_at(T, sys, q, ball, f, c);
    out.ce_max = std::max(out.ce_max, a.ce);
    {
      SparseNode& nd = out.nodes[static_cast<std::size_t>(id)];
      nd.cube = q;
      nd.ball = ball;
      nd.parent = parent;
      nd.depth = depth;
      nd.favg = a.favg;
      nd.ce = a.ce;
    }
    recube(ball);
    std::vector<CubeRef> sel;
    if (a.favg > 0) sel = cz_select(sys, q, a.exceptional, out.csel);
    std::vector<int> removed;
    for (CubeRef s : sel) {
      const std::vector<int>& mem = sys.cube(s).members;
      removed.insert(removed.end(), mem.begin(), mem.end());
    }
    std::sort(removed.begin(), removed.end());
    const Cube& cube = sys.cube(q);
    std::vector<int> witness = subtract_sorted(cube.members, removed);
    double wmass = member_mass(g, witness);
    // Selected children carry at most half the mass (the calibration target
    // times the selection threshold cancel); enforced every run.
    if (wmass < 0.5 * cube.omega - 1e-9 * cube.omega)
      throw Error("sparse: selected subcubes exceed half of the parent mass");
    out.generations.push_back({q, cube.members, witness, cube.omega, wmass, 0});
    out.nodes[static_cast<std::size_t>(id)].witness = std::move(witness);
    for (CubeRef s : sel) {
      int child = visit(s, sys.dilated_ball(s), id, depth + 1);
      out.nodes[static_cast<std::size_t>(id)].children.push_back(child);
    }
    return id;
  };
  for (CubeRef t : tops) out.roots.push_back(visit(t, gen_ball.at({t.row, t.idx}), -1, 0));
  return out;
}

std::vector<double> sparse_operator(const WeightedGrid& g, const std::vector<SparseEntry>& fam,
                                    const std::vector<double>& f) {
  if (static_cast<int>(f.size()) != g.size()) throw Error("sparse: data size mismatch");
  std::vector<double> out(f.size(), 0.0);
  for (const SparseEntry& e : fam) {
    double avg = member_avg_abs(g, e.members, f);
    for (int m : e.members) out[static_cast<std::size_t>(m)] += avg;
  }
  return out;
}

std::vector<double> sparse_commutator_bound(const WeightedGrid& g,
                                            const std::vector<SparseEntry>& fam,
                                            const std::vector<double>& b,
                                            const std::vector<double>& f) {
  const int n = g.size();
  if (static_cast<int>(f.size()) != n || static_cast<int>(b.size()) != n)
    throw Error("sparse: data size mismatch");
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (const SparseEntry& e : fam) {
    double mass = 0, af = 0, ab = 0;
    for (int m : e.members) {
      mass += g.w[static_cast<std::size_t>(m)];
      af += std::abs(f[static_cast<std::size_t>(m)]) * g.w[static_cast<std::size_t>(m)];
      ab += b[static_cast<std::size_t>(m)] * g.w[static_cast<std::size_t>(m)];
    }
    if (mass <= 0) continue;
    double avg_f = af / mass, b_q = ab / mass;
    double dev = 0;
    for (int m : e.members)
      dev += std::abs((b[static_cast<std::size_t>(m)] - b_q) * f[static_cast<std::size_t>(m)]) *
             g.w[static_cast<std::size_t>(m)];
    dev /= mass;
    for (int m : e.members)
      out[static_cast<std::size_t>(m)] +=
          avg_f * std::abs(b[static_cast<std::size_t>(m)] - b_q) + dev;
  }
  return out;
}

DominationReport verify_domination(const WeightedGrid& g, const std::vector<double>& target,
                                   const std::vector<double>& dominator, double rel_floor) {
  const int n = g.size();
  if (static_cast<int>(target.size()) != n || static_cast<int>(dominator.size()) != n)
    throw Error("sparse: data size mismatch");
  DominationReport rep;
  for (double v : target) rep.target_max = std::max(rep.target_max, std::abs(v));
  rep.covered = true;
  for (int i = 0; i < n; ++i) {
    double t = std::abs(target[static_cast<std::size_t>(i)]);
    if (t <= rel_floor * rep.target_max) continue;
    ++rep.active_points;
    if (dominator[static_cast<std::size_t>(i)] > 0)
      rep.ratio_max = std::max(rep.ratio_max, t / dominator[static_cast<std::size_t>(i)]);
    else
      rep.covered = false;
  }
  return rep;
}

namespace {

DominationRun finish_domination(const WeightedGrid& g, SparseBuild&& build,
                                std::vector<double>&& target, std::vector<double>&& dominator) {
  DominationRun run;
  run.build = std::move(build);
  run.target = std::move(target);
  run.dominator = std::move(dominator);
  run.report = verify_domination(g, run.target, run.dominator);
  run.report.family_size = static_cast<int>(run.build.recubed.size());
  if (!run.report.covered) {
    for (int i = 0; i < g.size(); ++i)
      if (std::abs(run.target[static_cast<std::size_t>(i)]) >
              1e-9 * run.report.target_max &&
          run.dominator[static_cast<std::size_t>(i)] <= 0)
        throw Error("sparse: domination coverage failed at point " + std::to_string(i));
    throw Error("sparse: domination coverage failed");
  }
  return run;
}

}  // namespace

DominationRun dominate_T(const DiscreteOperator& T, const DyadicBundle& bundle,
                         const std::vector<double>& f, const BallSpec& support,
                         const SparseConstants& c) {
  const WeightedGrid& g = T.grid();
  SparseBuild build = sparse_family_T(T, bundle, f, support, c);
  std::vector<double> target = T.apply(f);
  std::vector<double> dom = sparse_operator(g, build.recubed, f);
  return finish_domination(g, std::move(build), std::move(target), std::move(dom));
}

DominationRun dominate_commutator(const DiscreteOperator& T, const DyadicBundle& bundle,
                                  const std::vector<double>& b, const std::vector<double>& f,
                                  const BallSpec& support, const SparseConstants& c) {
  const WeightedGrid& g = T.grid();
  SparseBuild build = sparse_family_T(T, bundle, f, support, c);
  std::vector<double> target = commutator_apply(T, b, f);
  std::vector<double> dom = sparse_commutator_bound(g, build.recubed, b, f);
  return finish_domination(g, std::move(build), std::move(target), std::move(dom));
}

namespace {

AugmentReport augment_impl(const std::vector<const DyadicSystem*>& systems,
                           const std::vector<SparseEntry>& base, const std::vector<double>& b) {
  if (systems.empty()) throw Error("augment: bundle holds no systems");
  const WeightedGrid& g = *systems.front()->grid;
  for (const DyadicSystem* s : systems)
    if (s->grid != &g) throw Error("augment: bundle systems use different grids");
  if (static_cast<int>(b.size()) != g.size()) throw Error("sparse: data size mismatch");
  AugmentReport rep;
  std::set<std::array<int, 3>> seen;
  std::vector<std::pair<int, CubeRef>> starts;
  for (const SparseEntry& e : base) {
    if (!e.cube.valid()) throw Error("augment: base entry lacks a cube reference");
    if (e.system < 0 || e.system >= static_cast<int>(systems.size()))
      throw Error("augment: entry names a system outside the bundle");
    if (seen.insert({e.system, e.cube.row, e.cube.idx}).second) {
      rep.family.push_back(e);
      starts.push_back({e.system, e.cube});
    }
  }
  const int base_count = static_cast<int>(rep.family.size());

  auto avg_dev = [&](const std::vector<int>& mem, double bp) {
    double mass = 0, acc = 0;
    for (int m : mem) {
      mass += g.w[static_cast<std::size_t>(m)];
      acc += std::abs(b[static_cast<std::size_t>(m)] - bp) * g.w[static_cast<std::size_t>(m)];
    }
    return mass > 0 ? acc / mass : 0.0;
  };
  auto avg_b = [&](const std::vector<int>& mem) {
    double mass = 0, acc = 0;
    for (int m : mem) {
      mass += g.w[static_cast<std::size_t>(m)];
      acc += b[static_cast<std::size_t>(m)] * g.w[static_cast<std::size_t>(m)];
    }
    return acc / mass;
  };

  for (const auto& [si, top] : starts) {
    const DyadicSystem& sys = *systems[static_cast<std::size_t>(si)];
    const double b_top = avg_b(sys.cube(top).members);
    // DFS carrying the partial sum of oscillations along the stopping tower.
    std::function<void(CubeRef, double, bool)> walk = [&](CubeRef p, double osc_sum, bool root) {
      const Cube& cube = sys.cube(p);
      double bp = avg_b(cube.members);
      double osc = oscillation(g, cube.members, b);
      osc_sum += osc;
      // Maximal strict subcubes whose average deviation from b_P exceeds twice
      // the oscillation of b on P; their total mass is at most omega(P)/2.
      std::vector<CubeRef> sel, stack;
      for (int ch : cube.children) stack.push_back({p.row + 1, ch});
      while (!stack.empty()) {
        CubeRef rr = stack.back();
        stack.pop_back();
        const Cube& cc = sys.cube(rr);
        if (avg_dev(cc.members, bp) > 2.0 * osc)
          sel.push_back(rr);
        else
          for (int ch : cc.children) stack.push_back({rr.row + 1, ch});
      }
      std::sort(sel.begin(), sel.end());
      std::vector<int> removed;
      for (CubeRef s : sel) {
        const std::vector<int>& mem = sys.cube(s).members;
        removed.insert(removed.end(), mem.begin(), mem.end());
      }
      std::sort(removed.begin(), removed.end());
      std::vector<int> witness = subtract_sorted(cube.members, removed);
      double wmass = member_mass(g, witness);
      rep.theta_tilde = std::min(rep.theta_tilde, cube.omega > 0 ? wmass / cube.omega : 1.0);
      if (rep.family.size() >= 100000) throw Error("augment: cube budget exceeded");
      if (!root && seen.insert({si, p.row, p.idx}).second)
        rep.family.push_back({p, cube.members, witness, cube.omega, wmass, si});
      for (int m : witness) {
        double num = std::abs(b[static_cast<std::size_t>(m)] - b_top);
        if (osc_sum > 0)
          rep.chain_constant = std::max(rep.chain_constant, num / osc_sum);
      }
      for (CubeRef s : sel) walk(s, osc_sum, false);
    };
    walk(top, 0.0, true);
  }
  rep.added = static_cast<int>(rep.family.size()) - base_count;
  return rep;
}

}  // namespace

AugmentReport augment_family(const DyadicSystem& sys, const std::vector<SparseEntry>& base,
                             const std::vector<double>& b) {
  return augment_impl({&sys}, base, b);
}

AugmentReport augment_family(const DyadicBundle& bundle, const std::vector<SparseEntry>& base,
                             const std::vector<double>& b) {
  std::vector<const DyadicSystem*> systems;
  systems.reserve(bundle.systems.size());
  for (const DyadicSystem& s : bundle.systems) systems.push_back(&s);
  return augment_impl(systems, base, b);
}

}  // namespace dunkl
