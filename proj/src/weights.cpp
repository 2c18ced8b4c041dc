#include "dunkl/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dunkl/operators.hpp"
#include "dunkl/rng.hpp"

namespace dunkl {

namespace {

double set_mass(const WeightedGrid& g, const std::vector<int>& members) {
  double s = 0;
  for (int m : members) s += g.w[m];
  return s;
}

void require_positive(const std::vector<double>& u, const char* who) {
  for (double v : u)
    if (!(v > 0)) throw Error(std::string(who) + ": weight must be strictly positive");
}

double lp_norm(const WeightedGrid& g, const std::vector<double>& f, double p) {
  double s = 0;
  for (int i = 0; i < g.size(); ++i)
    s += std::pow(std::abs(f[static_cast<std::size_t>(i)]), p) * g.w[i];
  return std::pow(s, 1.0 / p);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

SetFamily test_sets(const WeightedGrid& g, const DyadicSystem* sys, int ball_samples,
                    std::uint64_t seed) {
  SetFamily fam;
  Rng rng(seed);
  const double rmin = 2.0 * g.cell_diag;
  int attempts = ball_samples * 20;
  while (fam.ball_count < ball_samples && attempts-- > 0) {
    int c = static_cast<int>(rng.index(static_cast<std::uint64_t>(g.size())));
    Pt x = g.point(c);
    double rmax = std::max(rmin * 1.5, 0.45 * g.euclid_diag());
    double r = rng.log_uniform(rmin, rmax);
    std::vector<int> mem = g.ball_members({x, r, true});
    if (mem.size() < 2) continue;
    fam.sets.push_back(std::move(mem));
    ++fam.ball_count;
  }
  if (fam.ball_count < ball_samples) throw Error("test_sets: could not draw enough balls");
  if (sys) {
    for (int t = 0; t < sys->row_count(); ++t)
      for (const Cube& q : sys->rows[t]) {
        fam.sets.push_back(q.members);
        ++fam.cube_count;
      }
  }
  return fam;
}

double ap_on_set(const WeightedGrid& g, const std::vector<int>& members,
                 const std::vector<double>& u, double p) {
  if (p < 1.0) throw Error("ap_on_set: p must be >= 1");
  double mass = set_mass(g, members);
  if (mass <= 0) throw Error("ap_on_set: empty set");
  double su = 0;
  for (int m : members) su += u[static_cast<std::size_t>(m)] * g.w[m];
  double avg = su / mass;
  if (p == 1.0) {
    double lo = std::numeric_limits<double>::infinity();
    for (int m : members) lo = std::min(lo, u[static_cast<std::size_t>(m)]);
    return avg / lo;
  }
  double dual = 0;
  const double e = -1.0 / (p - 1.0);
  for (int m : members) dual += std::pow(u[static_cast<std::size_t>(m)], e) * g.w[m];
  return avg * std::pow(dual / mass, p - 1.0);
}

ApReport ap_constant(const WeightedGrid& g, const SetFamily& fam, const std::vector<double>& u,
                     double p) {
  require_positive(u, "ap_constant");
  ApReport rep;
  rep.p = p;
  rep.sets = static_cast<int>(fam.sets.size());
  for (std::size_t s = 0; s < fam.sets.size(); ++s) {
    double c = ap_on_set(g, fam.sets[s], u, p);
    if (c > rep.constant) {
      rep.constant = c;
      rep.argmax = static_cast<int>(s);
    }
  }
  return rep;
}

double a1_constant(const DyadicSystem& sys, const std::vector<double>& u) {
  require_positive(u, "a1_constant");
  std::vector<double> mu = dyadic_maximal(sys, u);
  double worst = 0;
  for (std::size_t i = 0; i < u.size(); ++i) worst = std::max(worst, mu[i] / u[i]);
  return worst;
}

WpReport verify_wp(const WeightedGrid& g, const DyadicSystem& sys, const std::vector<double>& u,
                   double p, int trials, std::uint64_t seed) {
  require_positive(u, "verify_wp");
  if (!g.orbit_closed) throw Error("verify_wp: needs an orbit-closed grid");
  Rng rng(seed);
  WpReport rep;
  const int R = sys.row_count();
  int guard = trials * 20;
  while (rep.trials < trials && guard-- > 0) {
    int t = static_cast<int>(rng.index(static_cast<std::uint64_t>(R)));
    const auto& row = sys.rows[t];
    const Cube& q = row[rng.index(row.size())];
    // E: random union of the orbit classes meeting the cube.
    std::vector<int> e;
    std::vector<char> done(q.members.size(), 0);
    const int go = g.group.order();
    for (std::size_t a = 0; a < q.members.size(); ++a) {
      if (done[a]) continue;
      int rep_idx = q.members[a];
      bool take = rng.uniform() < 0.5;
      for (int s = 0; s < go; ++s) {
        int img = g.orbit_idx[static_cast<std::size_t>(rep_idx) * go + s];
        auto it = std::lower_bound(q.members.begin(), q.members.end(), img);
        if (it != q.members.end() && *it == img) {
          done[static_cast<std::size_t>(it - q.members.begin())] = 1;
          if (take) e.push_back(img);
        }
      }
    }
    if (e.empty()) continue;
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    double mass_q = set_mass(g, q.members), mass_e = set_mass(g, e);
    double uq = 0, ue = 0;
    for (int m : q.members) uq += u[static_cast<std::size_t>(m)] * g.w[m];
    for (int m : e) ue += u[static_cast<std::size_t>(m)] * g.w[m];
    double lhs = std::pow(mass_e / mass_q, p);
    double rhs = ap_on_set(g, q.members, u, p) * ue / uq;
    rep.worst_ratio = std::max(rep.worst_ratio, lhs / rhs);
    ++rep.trials;
  }
  if (rep.trials < trials) throw Error("verify_wp: could not draw enough trials");
  rep.ok = rep.worst_ratio <= 1.0 + 1e-9;
  return rep;
}

InclusionReport verify_inclusion(const WeightedGrid& g, const SetFamily& fam,
                                 const std::vector<double>& u, double p, double q) {
  if (!(1.0 <= p && p < q)) throw Error("verify_inclusion: need 1 <= p < q");
  require_positive(u, "verify_inclusion");
  InclusionReport rep;
  rep.monotone_ok = true;
  for (const auto& s : fam.sets) {
    double cp = ap_on_set(g, s, u, p), cq = ap_on_set(g, s, u, q);
    rep.constant_p = std::max(rep.constant_p, cp);
    rep.constant_q = std::max(rep.constant_q, cq);
    if (cq > cp * (1.0 + 1e-12)) rep.monotone_ok = false;
  }
  return rep;
}

RhReport reverse_holder(const WeightedGrid& g, const SetFamily& fam, const std::vector<double>& u,
                        double cap) {
  require_positive(u, "reverse_holder");
  RhReport rep;
  for (int step = 1; step <= 8; ++step) {
    double gamma = std::pow(0.5, step);
    double worst = 0;
    for (const auto& s : fam.sets) {
      double mass = set_mass(g, s), mean = 0, high = 0;
      for (int m : s) {
        mean += u[static_cast<std::size_t>(m)] * g.w[m];
        high += std::pow(u[static_cast<std::size_t>(m)], 1.0 + gamma) * g.w[m];
      }
      mean /= mass;
      worst = std::max(worst, std::pow(high / mass, 1.0 / (1.0 + gamma)) / mean);
    }
    rep.ladder.push_back(worst);
    if (!rep.ok && worst <= cap) {
      rep.ok = true;
      rep.gamma = gamma;
      rep.constant = worst;
    }
  }
  return rep;
}

double bmo_norm(const WeightedGrid& g, const SetFamily& fam, const std::vector<double>& b,
                const std::vector<double>* weight) {
  double worst = 0;
  for (const auto& s : fam.sets) {
    double mass = set_mass(g, s), avg = 0;
    for (int m : s) avg += b[static_cast<std::size_t>(m)] * g.w[m];
    avg /= mass;
    double osc = 0, denom = 0;
    for (int m : s) {
      osc += std::abs(b[static_cast<std::size_t>(m)] - avg) * g.w[m];
      denom += (weight ? (*weight)[static_cast<std::size_t>(m)] : 1.0) * g.w[m];
    }
    if (denom > 0) worst = std::max(worst, osc / denom);
  }
  return worst;
}

double median_value(const WeightedGrid& g, const std::vector<int>& members,
                    const std::vector<double>& b) {
  if (members.empty()) throw Error("median_value: empty set");
  std::vector<std::pair<double, double>> vals;  // (value, mass)
  double mass = 0;
  for (int m : members) {
    vals.emplace_back(b[static_cast<std::size_t>(m)], g.w[m]);
    mass += g.w[m];
  }
  std::sort(vals.begin(), vals.end());
  double cum = 0;
  for (const auto& [v, wm] : vals) {
    cum += wm;
    if (cum >= mass / 2.0) return v;
  }
  return vals.back().first;
}

double oscillation(const WeightedGrid& g, const std::vector<int>& members,
                   const std::vector<double>& b) {
  if (members.empty()) throw Error("oscillation: empty set");
  double mass = set_mass(g, members), avg = 0;
  for (int m : members) avg += b[static_cast<std::size_t>(m)] * g.w[m];
  avg /= mass;
  double osc = 0;
  for (int m : members) osc += std::abs(b[static_cast<std::size_t>(m)] - avg) * g.w[m];
  return osc / mass;
}

RdfResult rubio_de_francia(const DyadicSystem& sys, const std::vector<double>& g0, double p,
                           int terms, std::uint64_t seed) {
  const WeightedGrid& g = *sys.grid;
  const int n = g.size();
  if (static_cast<int>(g0.size()) != n) throw Error("rubio_de_francia: size mismatch");
  double gmax = 0;
  for (double v : g0) {
    if (v < 0) throw Error("rubio_de_francia: data must be nonnegative");
    gmax = std::max(gmax, v);
  }
  if (gmax <= 0) throw Error("rubio_de_francia: data vanishes");
  // Norm estimate for the dyadic maximal on L^p(omega) from seeded probes,
  // floored and inflated so the series keeps a geometric tail.
  Rng rng(seed);
  double est = 1.0;
  for (int probe = 0; probe < 8; ++probe) {
    std::vector<double> f(static_cast<std::size_t>(n));
    for (double& x : f) x = std::pow(rng.uniform(), 3.0);  // spiky nonnegative draw
    est = std::max(est, lp_norm(g, dyadic_maximal(sys, f), p) / lp_norm(g, f, p));
  }
  RdfResult res;
  res.mnorm = std::max(1.25, 1.25 * est);
  const double q = 2.0 * res.mnorm;
  std::vector<double> term = g0;
  res.phi = g0;
  for (int k = 1; k <= terms; ++k) {
    term = dyadic_maximal(sys, term);
    for (double& v : term) v /= q;
    for (int i = 0; i < n; ++i) res.phi[static_cast<std::size_t>(i)] += term[static_cast<std::size_t>(i)];
  }
  std::vector<double> slack = dyadic_maximal(sys, term);
  std::vector<double> mphi = dyadic_maximal(sys, res.phi);
  bool pointwise = true;
  for (int i = 0; i < n; ++i) {
    const std::size_t s = static_cast<std::size_t>(i);
    res.slack_max = std::max(res.slack_max, slack[s]);
    res.a1_ratio = std::max(res.a1_ratio, mphi[s] / res.phi[s]);
    if (res.phi[s] < g0[s]) pointwise = false;
    // Exact sublinearity budget for the truncated series.
    if (mphi[s] > q * (res.phi[s] - g0[s]) + slack[s] + 1e-9 * gmax) pointwise = false;
  }
  res.norm_ratio = lp_norm(g, res.phi, p) / lp_norm(g, g0, p);
  res.ok = pointwise && res.norm_ratio <= 2.0 + 1e-9 && res.a1_ratio <= q + 1e-6;
  return res;
}

std::vector<double> weight_catalog(const WeightedGrid& g, const std::string& key) {
  auto starts = [&](const char* pre) { return key.rfind(pre, 0) == 0; };
  const int n = g.size();
  std::vector<double> u(static_cast<std::size_t>(n));
  if (starts("const:")) {
    double c = std::stod(key.substr(6));
    if (!(c > 0)) throw Error("weight_catalog: constant must be positive");
    std::fill(u.begin(), u.end(), c);
    return u;
  }
  if (starts("power:") || starts("dunkl_power:")) {
    double gamma = std::stod(key.substr(key.find(':') + 1));
    bool dunkl = starts("dunkl_power:");
    Pt origin{};
    for (int i = 0; i < n; ++i) {
      Pt x = g.point(i);
      double r = dunkl ? g.dunkl_dist(x, origin) : euclid_dist(x, origin, g.dim);
      u[static_cast<std::size_t>(i)] = std::pow(std::max(r, g.cell / 2.0), gamma);
    }
    return u;
  }
  throw Error("weight_catalog: unknown key '" + key + "'");
}

std::vector<double> symbol_catalog(const WeightedGrid& g, const DyadicSystem* sys,
                                   const std::string& key) {
  auto starts = [&](const char* pre) { return key.rfind(pre, 0) == 0; };
  const int n = g.size();
  std::vector<double> b(static_cast<std::size_t>(n));
  if (starts("const:")) {
    std::fill(b.begin(), b.end(), std::stod(key.substr(6)));
    return b;
  }
  if (starts("coord:")) {
    int j = std::stoi(key.substr(6));
    if (j < 0 || j >= g.dim) throw Error("symbol_catalog: coordinate out of range");
    for (int i = 0; i < n; ++i) b[static_cast<std::size_t>(i)] = g.point(i)[j];
    return b;
  }
  if (key == "logd") {
    Pt origin{};
    for (int i = 0; i < n; ++i) {
      double r = euclid_dist(g.point(i), origin, g.dim);
      b[static_cast<std::size_t>(i)] = std::log(std::max(r, g.cell_diag));
    }
    return b;
  }
  if (starts("martingale:")) {
    if (!sys) throw Error("symbol_catalog: martingale symbol needs a dyadic system");
    std::uint64_t seed = std::stoull(key.substr(11));
    std::fill(b.begin(), b.end(), 0.0);
    for (int t = 1; t < sys->row_count(); ++t) {
      for (std::size_t ci = 0; ci < sys->rows[t].size(); ++ci) {
        double sign = (mix(seed, mix(static_cast<std::uint64_t>(t), ci)) & 1) ? 1.0 : -1.0;
        for (int m : sys->rows[t][ci].members) b[static_cast<std::size_t>(m)] += sign;
      }
    }
    return b;
  }
  throw Error("symbol_catalog: unknown key '" + key + "'");
}

}  // namespace dunkl
