#include "dunkl/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dunkl/rng.hpp"

namespace dunkl {

namespace {

std::vector<int> nonzero_indices(const std::vector<double>& f) {
  std::vector<int> nz;
  for (std::size_t j = 0; j < f.size(); ++j)
    if (f[j] != 0.0) nz.push_back(static_cast<int>(j));
  return nz;
}

}  // namespace

double ball_volume_constant(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return 3.14159265358979323846;
    case 3: return 4.0 * 3.14159265358979323846 / 3.0;
    default: throw Error("ball_volume_constant: unsupported dimension");
  }
}

Kernel riesz_kernel(const RootSystem& rs, int j) {
  if (j < 0 || j >= rs.dim) throw Error("riesz_kernel: component out of range");
  const double vol = ball_volume_constant(rs.dim);
  RootSystem sys = rs;
  return Kernel{"riesz:" + std::to_string(j), [sys, j, vol](const Pt& x, const Pt& y) {
                  double r = euclid_dist(x, y, sys.dim);
                  if (r <= 0) return 0.0;
                  double W = vol * std::pow(r, sys.dim);
                  for (std::size_t v = 0; v < sys.roots.size(); ++v) {
                    double t = 0;
                    for (int d = 0; d < sys.dim; ++d) t += sys.roots[v][d] * x[d];
                    W *= std::pow(std::abs(t) + r, sys.kappa[v]);
                  }
                  return (x[j] - y[j]) / (r * W);
                }};
}

Kernel kernel_catalog(const RootSystem& rs, const std::string& key) {
  if (key.rfind("riesz:", 0) == 0) {
    int j = 0;
    try {
      j = std::stoi(key.substr(6));
    } catch (...) {
      throw Error("kernel_catalog: bad component in '" + key + "'");
    }
    return riesz_kernel(rs, j);
  }
  throw Error("kernel_catalog: unknown kernel '" + key + "'");
}

CzReport cz_check(const WeightedGrid& g, const Kernel& k, int samples, std::uint64_t seed) {
  Rng rng(seed);
  CzReport rep;
  const int n = g.size();
  int attempts = samples * 50;
  while (rep.samples < samples && attempts-- > 0) {
    int i = static_cast<int>(rng.index(static_cast<std::uint64_t>(n)));
    int j = static_cast<int>(rng.index(static_cast<std::uint64_t>(n)));
    Pt x = g.point(i), y = g.point(j);
    double de = euclid_dist(x, y, g.dim);
    double d = g.dunkl_dist(x, y);
    if (de < 4 * g.cell_diag || d < 2 * g.cell_diag) continue;
    double om = g.ball_measure({x, d, true});
    if (om <= 0) continue;
    rep.size_max = std::max(rep.size_max, std::abs(k.eval(x, y)) * om);
    // Nearby second base point for the smoothness quotient.
    std::vector<int> close = g.ball_members({x, d / 4.0, false});
    int xi = close[rng.index(close.size())];
    if (xi == i) continue;
    Pt xp = g.point(xi);
    double step = euclid_dist(x, xp, g.dim);
    if (step <= 0) continue;
    double quot = std::abs(k.eval(x, y) - k.eval(xp, y)) * om * d / step;
    rep.holder_max = std::max(rep.holder_max, quot);
    ++rep.samples;
  }
  if (rep.samples < samples)
    throw Error("cz_check: could not draw enough separated pairs (grid too small?)");
  return rep;
}

DiscreteOperator::DiscreteOperator(const WeightedGrid& g, Kernel k, double r_cut)
    : g_(&g), kernel_(std::move(k)), r_cut_(r_cut < 0 ? g.cell_diag : r_cut) {
  const int n = g.size();
  if (n <= 4096) {
    cached_ = true;
    mat_.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        mat_[static_cast<std::size_t>(i) * n + j] = raw(i, j) * g.w[j];
  }
}

double DiscreteOperator::raw(int i, int j) const {
  if (i == j) return 0.0;
  Pt x = g_->point(i), y = g_->point(j);
  if (euclid_dist(x, y, g_->dim) <= r_cut_) return 0.0;
  return kernel_.eval(x, y);
}

double DiscreteOperator::entry(int i, int j) const {
  if (cached_) return mat_[static_cast<std::size_t>(i) * g_->size() + j];
  return raw(i, j) * g_->w[j];
}

std::vector<double> DiscreteOperator::apply(const std::vector<double>& f) const {
  const int n = g_->size();
  if (static_cast<int>(f.size()) != n) throw Error("operator apply: size mismatch");
  std::vector<int> nz = nonzero_indices(f);
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double s = 0;
    if (cached_) {
      const double* row = mat_.data() + static_cast<std::size_t>(i) * n;
      for (int j : nz) s += row[j] * f[j];
    } else {
      for (int j : nz) s += raw(i, j) * g_->w[j] * f[j];
    }
    out[static_cast<std::size_t>(i)] = s;
  }
  return out;
}

std::vector<double> DiscreteOperator::apply_adjoint(const std::vector<double>& f) const {
  const int n = g_->size();
  if (static_cast<int>(f.size()) != n) throw Error("operator adjoint: size mismatch");
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    if (f[i] == 0.0) continue;
    const double fw = f[i] * g_->w[i];
    if (cached_) {
      const double* row = mat_.data() + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] += row[j] / g_->w[j] * fw;
    } else {
      for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] += raw(i, j) * fw;
    }
  }
  return out;
}

std::vector<double> DiscreteOperator::maximal_truncation(const std::vector<double>& f) const {
  const int n = g_->size();
  if (static_cast<int>(f.size()) != n) throw Error("operator truncation: size mismatch");
  std::vector<int> nz = nonzero_indices(f);
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  std::vector<std::pair<double, double>> contrib;  // (distance, term)
  for (int i = 0; i < n; ++i) {
    contrib.clear();
    Pt x = g_->point(i);
    for (int j : nz) {
      double term = entry(i, j) * f[j];
      if (term == 0.0) continue;
      contrib.emplace_back(g_->dunkl_dist(x, g_->point(j)), term);
    }
    std::sort(contrib.begin(), contrib.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    double suffix = 0, best = 0;
    std::size_t p = 0;
    while (p < contrib.size()) {
      double dcur = contrib[p].first;
      while (p < contrib.size() && contrib[p].first == dcur) suffix += contrib[p++].second;
      best = std::max(best, std::abs(suffix));
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

std::vector<BallSpec> canonical_ball_family(const WeightedGrid& g, bool dunkl) {
  std::vector<double> radii;
  double diag = g.euclid_diag();
  for (double r = 0.99 * g.cell; r < diag; r *= 2.0) radii.push_back(r);
  radii.push_back(diag * 1.05);
  std::vector<BallSpec> fam;
  fam.reserve(radii.size() * static_cast<std::size_t>(g.size()));
  for (double r : radii)
    for (int c = 0; c < g.size(); ++c) fam.push_back({g.point(c), r, dunkl});
  return fam;
}

namespace {

std::vector<double> ball_maximal(const WeightedGrid& g, const std::vector<double>& f,
                                 bool dunkl) {
  const int n = g.size();
  if (static_cast<int>(f.size()) != n) throw Error("maximal: size mismatch");
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  std::vector<int> scratch;
  double diag = g.euclid_diag();
  for (double r = 0.99 * g.cell; r < 2.1 * diag; r *= 2.0) {
    for (int c = 0; c < n; ++c) {
      scratch.clear();
      double num = 0, den = 0;
      g.for_ball({g.point(c), r, dunkl}, [&](int j) {
        scratch.push_back(j);
        num += std::abs(f[static_cast<std::size_t>(j)]) * g.w[j];
        den += g.w[j];
      });
      if (den <= 0) continue;
      double avg = num / den;
      for (int j : scratch)
        out[static_cast<std::size_t>(j)] = std::max(out[static_cast<std::size_t>(j)], avg);
    }
    if (r > diag) break;  // the whole-box ball ran once
  }
  return out;
}

}  // namespace

std::vector<double> hl_maximal(const WeightedGrid& g, const std::vector<double>& f) {
  return ball_maximal(g, f, false);
}

std::vector<double> orbit_maximal(const WeightedGrid& g, const std::vector<double>& f) {
  return ball_maximal(g, f, true);
}

std::vector<double> dyadic_maximal(const DyadicSystem& sys, const std::vector<double>& f,
                                   const std::vector<double>* density) {
  const WeightedGrid& g = *sys.grid;
  const int n = g.size();
  if (static_cast<int>(f.size()) != n) throw Error("dyadic_maximal: size mismatch");
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (int t = 0; t < sys.row_count(); ++t) {
    for (const Cube& q : sys.rows[t]) {
      double num = 0, den = 0;
      for (int m : q.members) {
        double mass = g.w[m] * (density ? (*density)[static_cast<std::size_t>(m)] : 1.0);
        num += std::abs(f[static_cast<std::size_t>(m)]) * mass;
        den += mass;
      }
      if (den <= 0) continue;
      double avg = num / den;
      for (int m : q.members)
        out[static_cast<std::size_t>(m)] = std::max(out[static_cast<std::size_t>(m)], avg);
    }
  }
  return out;
}

std::vector<double> grand_maximal(const DiscreteOperator& T, const std::vector<double>& f,
                                  const std::vector<BallSpec>& family, double ctilde0,
                                  const std::vector<int>* support) {
  const WeightedGrid& g = T.grid();
  const int n = g.size();
  if (static_cast<int>(f.size()) != n) throw Error("grand_maximal: size mismatch");
  std::vector<int> supp = support ? *support : nonzero_indices(f);
  std::vector<double> tf = T.apply(f);
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  if (supp.empty()) return out;
  // Enclosing euclidean ball of the support: when it fits inside the dilated
  // ball the truncation is identically zero and the ball can be skipped
  // without enumerating the dilate (euclidean distance dominates the orbit
  // distance, so containment transfers to either ball flavor).
  std::vector<double> supp_mid(static_cast<std::size_t>(g.dim), 0.0);
  for (int s : supp) {
    Pt p = g.point(s);
    for (int d = 0; d < g.dim; ++d) supp_mid[static_cast<std::size_t>(d)] += p[d];
  }
  for (double& c : supp_mid) c /= static_cast<double>(supp.size());
  double supp_rad = 0;
  for (int s : supp) {
    Pt p = g.point(s);
    double d2 = 0;
    for (int d = 0; d < g.dim; ++d) {
      double t = p[d] - supp_mid[static_cast<std::size_t>(d)];
      d2 += t * t;
    }
    supp_rad = std::max(supp_rad, std::sqrt(d2));
  }
  for (const BallSpec& ball : family) {
    double off2 = 0;
    for (int d = 0; d < g.dim; ++d) {
      double t = ball.center[static_cast<std::size_t>(d)] - supp_mid[static_cast<std::size_t>(d)];
      off2 += t * t;
    }
    if (std::sqrt(off2) + supp_rad < ctilde0 * ball.radius) continue;
    std::vector<int> members = g.ball_members(ball);
    if (members.empty()) continue;
    std::vector<int> big = g.ball_members({ball.center, ctilde0 * ball.radius, ball.dunkl});
    if (std::includes(big.begin(), big.end(), supp.begin(), supp.end()))
      continue;  // f vanishes off the dilated ball: the truncation is zero
    double peak = 0;
    for (int xi : members) {
      double val = tf[static_cast<std::size_t>(xi)];
      for (int j : big)
        if (f[static_cast<std::size_t>(j)] != 0.0)
          val -= T.entry(xi, j) * f[static_cast<std::size_t>(j)];
      peak = std::max(peak, std::abs(val));
    }
    for (int x : members)
      out[static_cast<std::size_t>(x)] = std::max(out[static_cast<std::size_t>(x)], peak);
  }
  return out;
}

std::vector<double> commutator_apply(const DiscreteOperator& T, const std::vector<double>& b,
                                     const std::vector<double>& f) {
  const int n = T.grid().size();
  if (static_cast<int>(b.size()) != n || static_cast<int>(f.size()) != n)
    throw Error("commutator: size mismatch");
  std::vector<double> bf(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) bf[static_cast<std::size_t>(j)] = b[j] * f[j];
  std::vector<double> tf = T.apply(f), tbf = T.apply(bf);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = b[i] * tf[static_cast<std::size_t>(i)] -
                                       tbf[static_cast<std::size_t>(i)];
  return out;
}

OpNormResult l2_opnorm(const DiscreteOperator& T, int iterations, std::uint64_t seed) {
  const WeightedGrid& g = T.grid();
  const int n = g.size();
  Rng rng(seed);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  auto wnorm = [&](const std::vector<double>& a) {
    double s = 0;
    for (int i = 0; i < n; ++i) s += a[static_cast<std::size_t>(i)] * a[static_cast<std::size_t>(i)] * g.w[i];
    return std::sqrt(s);
  };
  double nv = wnorm(v);
  if (nv <= 0) throw Error("l2_opnorm: degenerate start");
  for (double& x : v) x /= nv;
  OpNormResult res;
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> u = T.apply(v);
    res.iterations = it + 1;
    if (wnorm(u) <= 1e-300) break;  // T annihilates the iterate
    std::vector<double> z = T.apply_adjoint(u);
    double nz = wnorm(z);
    if (nz <= 1e-300) break;
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] / nz;
  }
  res.norm = wnorm(T.apply(v));  // consistent with the returned direction
  res.top = std::move(v);
  return res;
}

}  // namespace dunkl
