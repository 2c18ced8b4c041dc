#include "dunkl/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "dunkl/operators.hpp"
#include "dunkl/rng.hpp"

namespace dunkl {

namespace {

std::uint64_t trial_seed(std::uint64_t seed, int t) {
  return seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(t + 1);
}

double set_mass(const WeightedGrid& g, const std::vector<int>& members) {
  double s = 0;
  for (int m : members) s += g.w[static_cast<std::size_t>(m)];
  return s;
}

double set_integral_abs(const WeightedGrid& g, const std::vector<int>& members,
                        const std::vector<double>& f) {
  double s = 0;
  for (int m : members) s += std::abs(f[static_cast<std::size_t>(m)]) * g.w[static_cast<std::size_t>(m)];
  return s;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void finalize(NormReport& rep) {
  rep.trials = static_cast<int>(rep.ratios.size());
  rep.max_ratio = 0;
  for (double r : rep.ratios) rep.max_ratio = std::max(rep.max_ratio, r);
  rep.median_ratio = median_of(rep.ratios);
}

void require_positive(const std::vector<double>& u, const char* what) {
  for (double x : u)
    if (!(x > 0)) throw Error(std::string(what) + " must be strictly positive");
}

double strong_exponent(double p) { return std::max(1.0 / (p - 1.0), 1.0); }

void require_p(double p) {
  if (!(p > 1.0)) throw Error("bounds: p must exceed 1");
}

BallSpec whole_box(const WeightedGrid& g) {
  Pt mid{};
  for (int d = 0; d < g.dim; ++d) mid[d] = 0.5 * (g.lo[d] + g.hi[d]);
  return {mid, 0.75 * g.euclid_diag(), true};
}

// Same averages as the dominator, the two terms kept apart.
void commutator_split(const WeightedGrid& g, const std::vector<SparseEntry>& fam,
                      const std::vector<double>& b, const std::vector<double>& f,
                      std::vector<double>& d1, std::vector<double>& d2) {
  d1.assign(f.size(), 0.0);
  d2.assign(f.size(), 0.0);
  for (const SparseEntry& e : fam) {
    double mass = 0, af = 0, ab = 0;
    for (int m : e.members) {
      const std::size_t i = static_cast<std::size_t>(m);
      mass += g.w[i];
      af += std::abs(f[i]) * g.w[i];
      ab += b[i] * g.w[i];
    }
    if (mass <= 0) continue;
    const double avg_f = af / mass, b_q = ab / mass;
    double dev = 0;
    for (int m : e.members) {
      const std::size_t i = static_cast<std::size_t>(m);
      dev += std::abs((b[i] - b_q) * f[i]) * g.w[i];
    }
    dev /= mass;
    for (int m : e.members) {
      const std::size_t i = static_cast<std::size_t>(m);
      d1[i] += avg_f * std::abs(b[i] - b_q);
      d2[i] += dev;
    }
  }
}

// Pointwise |target| <= ratio * dominator + floor * target_max transfers to
// the weighted norm by Minkowski; asserted literally per trial.
void check_composition(const WeightedGrid& g, const DominationReport& rep,
                       double target_norm, double dominator_norm,
                       const std::vector<double>& u, double p) {
  const std::vector<double> ones(static_cast<std::size_t>(g.size()), 1.0);
  const double floor_term = 1e-9 * rep.target_max * weighted_norm(g, ones, &u, p);
  if (target_norm > (rep.ratio_max * dominator_norm + floor_term) * (1.0 + 1e-9))
    throw Error("bounds: pointwise domination failed to compose into the weighted norm");
}

}  // namespace

double weighted_norm(const WeightedGrid& g, const std::vector<double>& f,
                     const std::vector<double>* u, double p) {
  if (static_cast<int>(f.size()) != g.size()) throw Error("weighted_norm: data size mismatch");
  if (u && u->size() != f.size()) throw Error("weighted_norm: weight size mismatch");
  if (!(p >= 1.0)) throw Error("weighted_norm: p must be at least 1");
  double s = 0;
  for (int i = 0; i < g.size(); ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    s += std::pow(std::abs(f[k]), p) * (u ? (*u)[k] : 1.0) * g.w[k];
  }
  return std::pow(s, 1.0 / p);
}

Trial trial_function(const WeightedGrid& g, const DyadicSystem* sys, std::uint64_t seed) {
  const int n = g.size();
  if (n == 0) throw Error("trial_function: empty grid");
  Rng rng(seed);
  const double diag = g.euclid_diag();
  for (int attempt = 0; attempt < 64; ++attempt) {
    Trial t;
    t.f.assign(static_cast<std::size_t>(n), 0.0);
    const int kind = static_cast<int>(rng.index(3));
    if (kind == 0) {
      Pt c{};
      for (int d = 0; d < g.dim; ++d) c[d] = rng.uniform(g.lo[d], g.hi[d]);
      const double r = rng.log_uniform(2.0 * g.cell_diag, 0.25 * diag);
      t.support = {c, r, true};
      for (int m : g.ball_members(t.support)) t.f[static_cast<std::size_t>(m)] = 1.0;
      t.kind = "indicator";
    } else if (kind == 1) {
      Pt c{};
      for (int d = 0; d < g.dim; ++d) c[d] = rng.uniform(g.lo[d], g.hi[d]);
      const double h = rng.log_uniform(2.0 * g.cell, 0.25 * diag);
      for (int i = 0; i < n; ++i) {
        const Pt x = g.point(i);
        double v = 1.0;
        for (int d = 0; d < g.dim; ++d) {
          const double s = 1.0 - std::abs(x[d] - c[d]) / h;
          v *= s > 0 ? s * s * s : 0.0;
        }
        t.f[static_cast<std::size_t>(i)] = v;
      }
      // Nonzero cells sit within h of c per axis, hence in this orbit ball.
      t.support = {c, h * std::sqrt(static_cast<double>(g.dim)) * (1.0 + 1e-9), true};
      t.kind = "bump";
    } else {
      if (sys && sys->row_count() > 0) {
        const int rows = sys->row_count();
        const int row = rows > 1 ? 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(rows - 1))) : 0;
        for (const Cube& q : sys->rows[static_cast<std::size_t>(row)]) {
          const double s = static_cast<double>(rng.sign());
          for (int m : q.members) t.f[static_cast<std::size_t>(m)] = s;
        }
      } else {
        for (double& x : t.f) x = static_cast<double>(rng.sign());
      }
      t.support = whole_box(g);
      t.kind = "signs";
    }
    if (std::any_of(t.f.begin(), t.f.end(), [](double x) { return x != 0.0; })) return t;
  }
  throw Error("trial_function: failed to draw a nonzero function");
}

NormReport verify_sparse_weighted_bound(const WeightedGrid& g,
                                        const std::vector<SparseEntry>& fam,
                                        const DyadicSystem* sys, const SetFamily& sets,
                                        const std::vector<double>& u, double p, int trials,
                                        std::uint64_t seed) {
  require_p(p);
  if (static_cast<int>(u.size()) != g.size()) throw Error("bounds: weight size mismatch");
  require_positive(u, "weight u");
  NormReport rep;
  rep.p = p;
  rep.u_constant = ap_constant(g, sets, u, p).constant;
  rep.reference = std::pow(rep.u_constant, strong_exponent(p));
  for (int t = 0; t < trials; ++t) {
    const Trial tr = trial_function(g, sys, trial_seed(seed, t));
    const double den = weighted_norm(g, tr.f, &u, p);
    const double num = weighted_norm(g, sparse_operator(g, fam, tr.f), &u, p);
    rep.ratios.push_back(den > 0 ? num / den : 0.0);
  }
  finalize(rep);
  return rep;
}

NormReport verify_T_weighted(const DiscreteOperator& T, const DyadicBundle& bundle,
                             const SetFamily& sets, const std::vector<double>& u, double p,
                             int trials, std::uint64_t seed, const SparseConstants& c) {
  const WeightedGrid& g = T.grid();
  if (bundle.systems.empty() || bundle.systems.front().grid != &g)
    throw Error("bounds: operator and system use different grids");
  const DyadicSystem& sys = bundle.systems.front();
  require_p(p);
  if (static_cast<int>(u.size()) != g.size()) throw Error("bounds: weight size mismatch");
  require_positive(u, "weight u");
  NormReport rep;
  rep.p = p;
  rep.u_constant = ap_constant(g, sets, u, p).constant;
  rep.reference = std::pow(rep.u_constant, strong_exponent(p));
  for (int t = 0; t < trials; ++t) {
    std::vector<double> f;
    BallSpec support;
    if (t == 0) {  // power-iteration direction: ties the p = 2 report to the operator norm
      f = l2_opnorm(T).top;
      support = whole_box(g);
    } else {
      Trial tr = trial_function(g, &sys, trial_seed(seed, t));
      f = std::move(tr.f);
      support = tr.support;
    }
    const DominationRun run = dominate_T(T, bundle, f, support, c);
    const double fnorm = weighted_norm(g, f, &u, p);
    const double tnorm = weighted_norm(g, run.target, &u, p);
    const double anorm = weighted_norm(g, run.dominator, &u, p);
    check_composition(g, run.report, tnorm, anorm, u, p);
    rep.ratios.push_back(fnorm > 0 ? tnorm / fnorm : 0.0);
  }
  finalize(rep);
  return rep;
}

NormReport verify_commutator_two_weight(const DiscreteOperator& T, const DyadicBundle& bundle,
                                        const SetFamily& sets, const std::vector<double>& b,
                                        const std::vector<double>& u,
                                        const std::vector<double>& v, double p, int trials,
                                        std::uint64_t seed, const SparseConstants& c) {
  const WeightedGrid& g = T.grid();
  if (bundle.systems.empty() || bundle.systems.front().grid != &g)
    throw Error("bounds: operator and system use different grids");
  const DyadicSystem& sys = bundle.systems.front();
  require_p(p);
  const int n = g.size();
  if (static_cast<int>(u.size()) != n || static_cast<int>(v.size()) != n ||
      static_cast<int>(b.size()) != n)
    throw Error("bounds: data size mismatch");
  require_positive(u, "weight u");
  require_positive(v, "weight v");

  std::vector<double> vartheta(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    vartheta[static_cast<std::size_t>(i)] =
        std::pow(u[static_cast<std::size_t>(i)] / v[static_cast<std::size_t>(i)], 1.0 / p);

  NormReport rep;
  rep.p = p;
  rep.u_constant = ap_constant(g, sets, u, p).constant;
  rep.v_constant = ap_constant(g, sets, v, p).constant;
  rep.reference = std::pow(rep.u_constant * rep.v_constant, strong_exponent(p));
  const auto [bmin, bmax] = std::minmax_element(b.begin(), b.end());
  if (!(*bmax > *bmin))
    throw Error("bounds: symbol is constant; commutator ratios are undefined");
  rep.bmo_constant = bmo_norm(g, sets, b, &vartheta);
  if (!(rep.bmo_constant > 0))
    throw Error("bounds: symbol has no weighted oscillation; commutator ratios are undefined");

  for (int t = 0; t < trials; ++t) {
    const Trial tr = trial_function(g, &sys, trial_seed(seed, t));
    const DominationRun run = dominate_commutator(T, bundle, b, tr.f, tr.support, c);
    const double den = rep.bmo_constant * weighted_norm(g, tr.f, &u, p);
    const double tnorm = weighted_norm(g, run.target, &v, p);
    const double anorm = weighted_norm(g, run.dominator, &v, p);
    check_composition(g, run.report, tnorm, anorm, v, p);
    rep.ratios.push_back(den > 0 ? tnorm / den : 0.0);
    std::vector<double> d1, d2;
    commutator_split(g, run.build.recubed, b, tr.f, d1, d2);
    if (den > 0) {
      rep.split_b1 = std::max(rep.split_b1, weighted_norm(g, d1, &v, p) / den);
      rep.split_b2 = std::max(rep.split_b2, weighted_norm(g, d2, &v, p) / den);
    }
  }
  finalize(rep);
  return rep;
}

LowerBoundReport lower_bound_experiment(const DiscreteOperator& T, int direction,
                                        const std::vector<double>& b,
                                        const std::vector<double>& v,
                                        const std::vector<double>& u, double p,
                                        const BallSpec& b0, const SetFamily& sets) {
  const WeightedGrid& g = T.grid();
  const int n = g.size();
  require_p(p);
  if (direction < 0 || direction >= g.dim) throw Error("bounds: direction out of range");
  if (static_cast<int>(b.size()) != n || static_cast<int>(v.size()) != n ||
      static_cast<int>(u.size()) != n)
    throw Error("bounds: data size mismatch");
  require_positive(v, "weight v");
  require_positive(u, "weight u");
  if (!(b0.radius > 0)) throw Error("bounds: ball radius must be positive");

  const double r = b0.radius;
  Pt xt = b0.center;
  xt[direction] += 5.0 * r;
  if (g.radius_to_boundary(b0.center) < r || g.radius_to_boundary(xt) < r)
    throw Error("bounds: lower-bound geometry does not fit inside the box");
  if (3.0 * r <= T.r_cut())
    throw Error("bounds: twin-ball separation is inside the truncation strip");

  const BallSpec ball0{b0.center, r, false}, ball_t{xt, r, false};
  const std::vector<int> members0 = g.ball_members(ball0);
  const std::vector<int> members_t = g.ball_members(ball_t);
  if (members0.empty() || members_t.empty())
    throw Error("bounds: lower-bound balls contain no grid cells");

  LowerBoundReport rep;
  const double mass0 = set_mass(g, members0);
  const double mass_t = set_mass(g, members_t);

  // Split the twin ball at the median of b: the value-sorted prefix reaching
  // half the mass has b <= median, the rest b >= median, and the two masses
  // differ by at most one cell weight.
  rep.median = median_value(g, members_t, b);
  std::vector<int> order = members_t;
  std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
    return b[static_cast<std::size_t>(a)] < b[static_cast<std::size_t>(c)];
  });
  std::vector<int> e1, e2;
  double cum = 0, max_w = 0;
  for (int m : order) {
    max_w = std::max(max_w, g.w[static_cast<std::size_t>(m)]);
    if (cum < 0.5 * mass_t) {
      cum += g.w[static_cast<std::size_t>(m)];
      e1.push_back(m);
    } else {
      e2.push_back(m);
    }
  }
  std::sort(e1.begin(), e1.end());
  std::sort(e2.begin(), e2.end());
  rep.mass_e1 = set_mass(g, e1);
  rep.mass_e2 = set_mass(g, e2);
  bool values_ok = true;
  for (int m : e1) values_ok = values_ok && b[static_cast<std::size_t>(m)] <= rep.median;
  for (int m : e2) values_ok = values_ok && b[static_cast<std::size_t>(m)] >= rep.median;
  rep.split_ok = !e1.empty() && !e2.empty() && values_ok;
  rep.links.push_back({"median-split", std::abs(rep.mass_e1 - rep.mass_e2), max_w,
                       rep.split_ok &&
                           std::abs(rep.mass_e1 - rep.mass_e2) <= max_w + 1e-12 * mass_t});

  // Kernel sign and size between the balls (no masked pairs: separation 3r).
  int sgn = 0;
  bool sign_ok = true;
  double kmin = std::numeric_limits<double>::infinity();
  for (int i : members0) {
    for (int j : members_t) {
      const double e = T.entry(i, j);
      const int s = e > 0 ? 1 : (e < 0 ? -1 : 0);
      if (s == 0) {
        sign_ok = false;
        continue;
      }
      if (sgn == 0) sgn = s;
      if (s != sgn) sign_ok = false;
      kmin = std::min(kmin, std::abs(e) / g.w[static_cast<std::size_t>(j)]);
    }
  }
  if (!sign_ok || !std::isfinite(kmin)) kmin = 0;
  rep.sign_ok = sign_ok && kmin > 0;
  rep.kernel_min = kmin;
  rep.links.push_back({"sign-definite-kernel", kmin, 0.0, rep.sign_ok});

  // Mean oscillation against the median (exact doubling).
  rep.oscillation = oscillation(g, members0, b);
  double avg_med = 0;
  for (int m : members0)
    avg_med += std::abs(b[static_cast<std::size_t>(m)] - rep.median) *
               g.w[static_cast<std::size_t>(m)];
  avg_med /= mass0;
  rep.links.push_back({"mean-median", rep.oscillation, 2.0 * avg_med,
                       rep.oscillation <= 2.0 * avg_med * (1.0 + 1e-12) + 1e-15});

  // Drive the commutator with the two half indicators. For x on the b >= med
  // side every term of [b,T]1_{E1}(x) carries the factor b(x)-b(y) >= b(x)-med
  // with the sign-definite kernel, so the modulus is bounded below pointwise.
  std::vector<double> f1(static_cast<std::size_t>(n), 0.0), f2 = f1;
  for (int m : e1) f1[static_cast<std::size_t>(m)] = 1.0;
  for (int m : e2) f2[static_cast<std::size_t>(m)] = 1.0;
  const std::vector<double> com1 = commutator_apply(T, b, f1);
  const std::vector<double> com2 = commutator_apply(T, b, f2);
  double worst = 0;
  for (int i : members0) {
    const std::size_t k = static_cast<std::size_t>(i);
    const bool high = b[k] >= rep.median;
    const double lower =
        std::abs(b[k] - rep.median) * kmin * (high ? rep.mass_e1 : rep.mass_e2);
    const double actual = std::abs(high ? com1[k] : com2[k]);
    if (lower > 0) worst = std::max(worst, actual > 0 ? lower / actual : std::numeric_limits<double>::infinity());
  }
  rep.links.push_back({"pointwise-kernel", worst, 1.0, worst <= 1.0 + 1e-9});

  // Integrated chain: Omega(b,B0) against the averaged commutator responses.
  double integral = 0;
  for (int i : members0) {
    const std::size_t k = static_cast<std::size_t>(i);
    integral += (std::abs(com1[k]) + std::abs(com2[k])) * g.w[k];
  }
  const double response = integral / mass0;
  rep.chain_constant = response > 0 ? rep.oscillation / response : 0.0;
  const double mmin = std::min(rep.mass_e1, rep.mass_e2);
  const double chain_rhs = (kmin > 0 && mmin > 0)
                               ? 2.0 / (kmin * mmin) * response
                               : std::numeric_limits<double>::infinity();
  rep.links.push_back({"chain", rep.oscillation, chain_rhs,
                       std::isfinite(chain_rhs) &&
                           rep.oscillation <= chain_rhs * (1.0 + 1e-9) + 1e-15});

  // Hoelder with the target weight on the stronger response.
  const std::vector<double>& big =
      set_integral_abs(g, members0, com1) >= set_integral_abs(g, members0, com2) ? com1 : com2;
  const double pprime = p / (p - 1.0);
  double lhs_h = 0, fnorm = 0, dual = 0;
  for (int i : members0) {
    const std::size_t k = static_cast<std::size_t>(i);
    lhs_h += std::abs(big[k]) * g.w[k];
    fnorm += std::pow(std::abs(big[k]), p) * v[k] * g.w[k];
    dual += std::pow(v[k], -pprime / p) * g.w[k];
  }
  const double rhs_h = std::pow(fnorm, 1.0 / p) * std::pow(dual, 1.0 / pprime);
  rep.links.push_back({"holder-v", lhs_h, rhs_h, lhs_h <= rhs_h * (1.0 + 1e-9) + 1e-15});

  // Reverse-Hoelder control of u over the family, plus the exact power-mean
  // direction on B0 itself.
  const RhReport rh = reverse_holder(g, sets, u);
  rep.rh_gamma = rh.gamma;
  rep.rh_constant = rh.constant;
  double avg_u = 0, avg_up = 0;
  for (int i : members0) {
    const std::size_t k = static_cast<std::size_t>(i);
    avg_u += u[k] * g.w[k];
    avg_up += std::pow(u[k], 1.0 + rh.gamma) * g.w[k];
  }
  avg_u /= mass0;
  avg_up /= mass0;
  const double jl = std::pow(avg_u, 1.0 + rh.gamma);
  rep.links.push_back({"jensen-u", jl, avg_up, jl <= avg_up * (1.0 + 1e-9)});

  rep.ok = rep.split_ok && rep.sign_ok;
  for (const ChainLink& l : rep.links) rep.ok = rep.ok && l.ok;
  return rep;
}

RdfTransferReport rdf_transfer_check(const DiscreteOperator& T, const DyadicSystem& sys,
                                     double p, int trials, std::uint64_t seed) {
  const WeightedGrid& g = T.grid();
  if (sys.grid != &g) throw Error("bounds: operator and system use different grids");
  require_p(p);
  if (trials < 1) throw Error("bounds: at least one trial is required");

  RdfTransferReport rep;
  rep.p = p;
  rep.trials = trials;
  bool props = true;
  for (int t = 0; t < trials; ++t) {
    const std::vector<double> f = trial_function(g, &sys, trial_seed(seed, 2 * t)).f;
    std::vector<double> probe = trial_function(g, &sys, trial_seed(seed, 2 * t + 1)).f;
    double gmax = 0;
    for (double& x : probe) {
      x = std::abs(x);
      gmax = std::max(gmax, x);
    }
    for (double& x : probe) x /= gmax;  // sup norm 1, so the tail slack is ~2^-20

    const RdfResult rdf = rubio_de_francia(sys, probe, p);
    props = props && rdf.ok;
    rep.slack_max = std::max(rep.slack_max, rdf.slack_max);
    for (std::size_t i = 0; i < probe.size(); ++i)
      props = props && rdf.phi[i] >= probe[i];
    props = props && rdf.norm_ratio <= 2.0 + 1e-12;
    const std::vector<double> mdphi = dyadic_maximal(sys, rdf.phi);
    for (std::size_t i = 0; i < probe.size(); ++i)
      props = props &&
              mdphi[i] <= 2.0 * rdf.mnorm * rdf.phi[i] + rdf.slack_max * (1.0 + 1e-9) + 1e-12;

    const double a1c = a1_constant(sys, rdf.phi);
    const std::vector<double> tf = T.apply(f);
    const std::vector<double> mdf = dyadic_maximal(sys, f);
    double num = 0, den = 0;
    for (int i = 0; i < g.size(); ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      num += std::abs(tf[k]) * rdf.phi[k] * g.w[k];
      den += mdf[k] * rdf.phi[k] * g.w[k];
    }
    den *= a1c;
    const double c_t = den > 0 ? num / den : 0.0;
    rep.constants.push_back(c_t);
    rep.c_max = std::max(rep.c_max, c_t);
  }
  rep.properties_ok = props;
  rep.ok = props && std::all_of(rep.constants.begin(), rep.constants.end(),
                                [](double c) { return std::isfinite(c); });
  return rep;
}

}  // namespace dunkl
