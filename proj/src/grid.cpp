#include "dunkl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>

#include "dunkl/rng.hpp"

namespace dunkl {

double density(const RootSystem& rs, const Pt& x) {
  double h = 1.0;
  for (std::size_t i = 0; i < rs.roots.size(); ++i) {
    const double s = std::abs(dot(rs.roots[i].data(), x.data(), rs.dim));
    if (rs.kappa[i] == 0.0) continue;
    h *= std::pow(s, rs.kappa[i]);
  }
  return h;
}

WeightedGrid build_grid(const RootSystem& rs, const Pt& lo, const Pt& hi, int res) {
  if (res < 16) throw Error("build_grid: resolution must be >= 16");
  validate_root_system(rs);
  WeightedGrid g;
  g.rs = rs;
  g.group = generate_group(rs);
  g.dim = rs.dim;
  g.res = res;
  g.lo = lo;
  g.hi = hi;
  const double width = hi[0] - lo[0];
  if (width <= 0) throw Error("build_grid: empty box");
  for (int d = 1; d < g.dim; ++d)
    if (std::abs((hi[d] - lo[d]) - width) > 1e-12)
      throw Error("build_grid: box must have equal axis widths");
  g.cell = width / res;
  g.cell_diag = g.cell * std::sqrt(static_cast<double>(g.dim));

  int n = 1;
  for (int d = 0; d < g.dim; ++d) n *= res;
  g.pts.resize(static_cast<std::size_t>(n) * g.dim);
  g.w.resize(n);

  double cellvol = 1;
  for (int d = 0; d < g.dim; ++d) cellvol *= g.cell;
  const double off[3] = {-g.cell / 3.0, 0.0, g.cell / 3.0};

  for (int i = 0; i < n; ++i) {
    int rest = i;
    Pt c{};
    for (int d = 0; d < g.dim; ++d) {
      const int jd = rest % res;
      rest /= res;
      c[d] = lo[d] + (jd + 0.5) * g.cell;
      g.pts[static_cast<std::size_t>(i) * g.dim + d] = c[d];
    }
    // 3^N subsample average of the density over the cell.
    double acc = 0;
    int m = 1;
    for (int d = 0; d < g.dim; ++d) m *= 3;
    for (int s = 0; s < m; ++s) {
      int sr = s;
      Pt q = c;
      for (int d = 0; d < g.dim; ++d) {
        q[d] += off[sr % 3];
        sr /= 3;
      }
      acc += density(rs, q);
    }
    g.w[i] = cellvol * acc / m;
    g.total_mass += g.w[i];
  }

  // Orbit index map: valid iff every group image of a cell center is again a
  // cell center (catalog grids on symmetric boxes for Z2-type and B2 groups).
  const int gl = g.group.order();
  g.orbit_idx.assign(static_cast<std::size_t>(n) * gl, -1);
  g.orbit_closed = true;
  for (int i = 0; i < n && g.orbit_closed; ++i) {
    const Pt x = g.point(i);
    for (int s = 0; s < gl; ++s) {
      const Pt y = g.group.elements[s].apply(x);
      const int j = g.lattice_index(y);
      if (j < 0) {
        g.orbit_closed = false;
        break;
      }
      g.orbit_idx[static_cast<std::size_t>(i) * gl + s] = j;
    }
  }
  if (!g.orbit_closed) g.orbit_idx.clear();
  g.stamp_.assign(n, 0);
  return g;
}

int WeightedGrid::lattice_index(const Pt& p) const {
  int idx = 0;
  int stridegap = 1;
  for (int d = 0; d < dim; ++d) {
    const double t = (p[d] - lo[d]) / cell - 0.5;
    const long j = std::lround(t);
    if (j < 0 || j >= res) return -1;
    if (std::abs(t - j) > 1e-7) return -1;
    idx += static_cast<int>(j) * stridegap;
    stridegap *= res;
  }
  return idx;
}

template <typename F>
void WeightedGrid::visit_euclid(const Pt& c, double r, F&& fn) const {
  int jlo[3] = {0, 0, 0}, jhi[3] = {-1, -1, -1};
  for (int d = 0; d < dim; ++d) {
    jlo[d] = std::max(0, static_cast<int>(std::ceil((c[d] - r - lo[d]) / cell - 0.5 - 1e-12)));
    jhi[d] = std::min(res - 1, static_cast<int>(std::floor((c[d] + r - lo[d]) / cell - 0.5 + 1e-12)));
    if (jlo[d] > jhi[d]) return;
  }
  const double r2 = r * r;
  const auto coord = [&](int d, int j) { return lo[d] + (j + 0.5) * cell; };
  if (dim == 1) {
    for (int x = jlo[0]; x <= jhi[0]; ++x) {
      const double dx = coord(0, x) - c[0];
      if (dx * dx < r2) fn(x);
    }
  } else if (dim == 2) {
    for (int y = jlo[1]; y <= jhi[1]; ++y) {
      const double dy = coord(1, y) - c[1];
      const double py = dy * dy;
      if (py >= r2) continue;
      const int base = y * res;
      for (int x = jlo[0]; x <= jhi[0]; ++x) {
        const double dx = coord(0, x) - c[0];
        if (py + dx * dx < r2) fn(base + x);
      }
    }
  } else {
    for (int z = jlo[2]; z <= jhi[2]; ++z) {
      const double dz = coord(2, z) - c[2];
      const double pz = dz * dz;
      if (pz >= r2) continue;
      for (int y = jlo[1]; y <= jhi[1]; ++y) {
        const double dy = coord(1, y) - c[1];
        const double p = pz + dy * dy;
        if (p >= r2) continue;
        const int base = (z * res + y) * res;
        for (int x = jlo[0]; x <= jhi[0]; ++x) {
          const double dx = coord(0, x) - c[0];
          if (p + dx * dx < r2) fn(base + x);
        }
      }
    }
  }
}

void WeightedGrid::for_ball(const BallSpec& b, const std::function<void(int)>& fn) const {
  if (!(b.radius > 0)) return;
  if (!b.dunkl) {
    visit_euclid(b.center, b.radius, fn);
    return;
  }
  // Orbit ball = union of Euclidean balls around the orbit of the center.
  ++epoch_;
  const int e = epoch_;
  for (const Mat& m : group.elements) {
    const Pt oc = m.apply(b.center);
    visit_euclid(oc, b.radius, [&](int i) {
      if (stamp_[i] != e) {
        stamp_[i] = e;
        fn(i);
      }
    });
  }
}

std::vector<int> WeightedGrid::ball_members(const BallSpec& b) const {
  std::vector<int> out;
  for_ball(b, [&](int i) { out.push_back(i); });
  std::sort(out.begin(), out.end());
  return out;
}

double WeightedGrid::ball_measure(const BallSpec& b) const {
  double s = 0;
  for_ball(b, [&](int i) { s += w[i]; });
  return s;
}

bool WeightedGrid::ball_inside_box(const BallSpec& b) const {
  auto inside = [&](const Pt& c) {
    for (int d = 0; d < dim; ++d)
      if (c[d] - b.radius < lo[d] - 1e-12 || c[d] + b.radius > hi[d] + 1e-12) return false;
    return true;
  };
  if (!b.dunkl) return inside(b.center);
  for (const Mat& m : group.elements)
    if (!inside(m.apply(b.center))) return false;
  return true;
}

double WeightedGrid::radius_to_boundary(const Pt& c) const {
  double r = std::numeric_limits<double>::infinity();
  for (int d = 0; d < dim; ++d) {
    r = std::min(r, c[d] - lo[d]);
    r = std::min(r, hi[d] - c[d]);
  }
  return r;
}

std::vector<std::vector<int>> WeightedGrid::orbit_classes() const {
  if (!orbit_closed) throw Error("orbit_classes: grid is not closed under the group");
  const int n = size();
  const int gl = group.order();
  std::vector<std::vector<int>> classes;
  std::vector<char> seen(n, 0);
  for (int i = 0; i < n; ++i) {
    if (seen[i]) continue;
    std::vector<int> cls;
    for (int s = 0; s < gl; ++s) {
      const int j = orbit_idx[static_cast<std::size_t>(i) * gl + s];
      if (!seen[j]) {
        seen[j] = 1;
        cls.push_back(j);
      }
    }
    std::sort(cls.begin(), cls.end());
    classes.push_back(std::move(cls));
  }
  return classes;
}

double ball_measure(const WeightedGrid& g, const BallSpec& b) { return g.ball_measure(b); }

ScalingReport verify_scaling(const WeightedGrid& g, const Pt& x, double r, double t) {
  if (r <= 0 || t <= 0) throw Error("verify_scaling: r and t must be positive");
  Pt tx{};
  for (int d = 0; d < g.dim; ++d) tx[d] = t * x[d];
  const BallSpec small{x, r, false};
  const BallSpec big{tx, t * r, false};
  if (!g.ball_inside_box(small) || !g.ball_inside_box(big))
    throw Error("verify_scaling: ball exits the box");
  ScalingReport rep;
  rep.reference = std::pow(t, g.rs.homogeneous_dimension()) * g.ball_measure(small);
  rep.measured = g.ball_measure(big);
  if (rep.reference == 0) throw Error("verify_scaling: empty reference ball");
  rep.ratio = rep.measured / rep.reference;
  return rep;
}

double comparison_surrogate(const RootSystem& rs, const Pt& x, double r) {
  double s = std::pow(r, rs.dim);
  for (std::size_t i = 0; i < rs.roots.size(); ++i) {
    if (rs.kappa[i] == 0.0) continue;
    s *= std::pow(std::abs(dot(rs.roots[i].data(), x.data(), rs.dim)) + r, rs.kappa[i]);
  }
  return s;
}

ComparisonReport verify_comparison(const WeightedGrid& g, int samples, std::uint64_t seed) {
  Rng rng(seed);
  ComparisonReport rep;
  rep.ratio_min = std::numeric_limits<double>::infinity();
  rep.ratio_max = 0;
  int done = 0;
  int guard = 0;
  while (done < samples) {
    if (++guard > samples * 200) throw Error("verify_comparison: cannot place sample balls");
    const int i = static_cast<int>(rng.index(g.size()));
    const Pt x = g.point(i);
    const double rmax = g.radius_to_boundary(x);
    if (rmax < 4 * g.cell_diag) continue;
    const double r = rng.log_uniform(4 * g.cell_diag, rmax);
    const double meas = g.ball_measure({x, r, false});
    if (meas <= 0) continue;
    const double ratio = meas / comparison_surrogate(g.rs, x, r);
    rep.ratio_min = std::min(rep.ratio_min, ratio);
    rep.ratio_max = std::max(rep.ratio_max, ratio);
    ++done;
  }
  rep.samples = done;
  rep.spread = rep.ratio_max / rep.ratio_min;
  return rep;
}

GrowthReport doubling_and_growth(const WeightedGrid& g, const Pt& x, double r1, double r2) {
  if (!(r1 >= r2 && r2 > 0)) throw Error("doubling_and_growth: need r1 >= r2 > 0");
  GrowthReport rep;
  const double m1 = g.ball_measure({x, r1, true});
  const double m2 = g.ball_measure({x, r2, true});
  if (m2 <= 0) throw Error("doubling_and_growth: empty inner ball");
  rep.ratio = m1 / m2;
  rep.lower = std::pow(r1 / r2, g.dim);
  rep.upper = std::pow(r1 / r2, g.rs.homogeneous_dimension());
  rep.constant = std::max({1.0, rep.lower / rep.ratio, rep.ratio / rep.upper});
  return rep;
}

namespace {

constexpr char kMagic[4] = {'D', 'G', 'R', 'D'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("grid file: truncated");
  return v;
}

}  // namespace

void save_grid(const WeightedGrid& g, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("save_grid: cannot open " + path);
  os.write(kMagic, 4);
  put(os, kVersion);
  put(os, static_cast<std::int32_t>(g.dim));
  put(os, static_cast<std::int32_t>(g.res));
  for (int d = 0; d < g.dim; ++d) put(os, g.lo[d]);
  for (int d = 0; d < g.dim; ++d) put(os, g.hi[d]);
  put(os, static_cast<std::uint32_t>(g.rs.name.size()));
  os.write(g.rs.name.data(), static_cast<std::streamsize>(g.rs.name.size()));
  put(os, static_cast<std::int32_t>(g.rs.roots.size()));
  for (std::size_t i = 0; i < g.rs.roots.size(); ++i) {
    for (int d = 0; d < g.dim; ++d) put(os, g.rs.roots[i][d]);
    put(os, g.rs.kappa[i]);
  }
  put(os, static_cast<std::int64_t>(g.w.size()));
  os.write(reinterpret_cast<const char*>(g.w.data()),
           static_cast<std::streamsize>(g.w.size() * sizeof(double)));
  if (!os) throw Error("save_grid: write failed for " + path);
}

WeightedGrid load_grid(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("load_grid: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw Error("load_grid: bad magic");
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw Error("load_grid: unsupported version");
  const int dim = get<std::int32_t>(is);
  const int res = get<std::int32_t>(is);
  if (dim < 1 || dim > kMaxDim || res < 16) throw Error("load_grid: bad header");
  Pt lo{}, hi{};
  for (int d = 0; d < dim; ++d) lo[d] = get<double>(is);
  for (int d = 0; d < dim; ++d) hi[d] = get<double>(is);
  RootSystem rs;
  rs.dim = dim;
  const auto namelen = get<std::uint32_t>(is);
  rs.name.resize(namelen);
  is.read(rs.name.data(), namelen);
  const int nroots = get<std::int32_t>(is);
  for (int i = 0; i < nroots; ++i) {
    Pt v{};
    for (int d = 0; d < dim; ++d) v[d] = get<double>(is);
    rs.roots.push_back(v);
    rs.kappa.push_back(get<double>(is));
  }
  const auto count = get<std::int64_t>(is);
  WeightedGrid g = build_grid(rs, lo, hi, res);
  if (count != g.size()) throw Error("load_grid: weight count mismatch");
  is.read(reinterpret_cast<char*>(g.w.data()),
          static_cast<std::streamsize>(g.w.size() * sizeof(double)));
  if (!is) throw Error("load_grid: truncated weights");
  g.total_mass = 0;
  for (double wi : g.w) g.total_mass += wi;
  return g;
}

WeightedGrid grid_cached(const RootSystem& rs, const Pt& lo, const Pt& hi, int res,
                         const std::string& cache_dir) {
  if (cache_dir.empty()) return build_grid(rs, lo, hi, res);
  // FNV-1a over the canonical description.
  std::string desc = rs.name + "|" + std::to_string(rs.dim) + "|" + std::to_string(res);
  for (int d = 0; d < rs.dim; ++d)
    desc += "|" + std::to_string(lo[d]) + "," + std::to_string(hi[d]);
  for (std::size_t i = 0; i < rs.roots.size(); ++i) {
    for (int d = 0; d < rs.dim; ++d) desc += "," + std::to_string(rs.roots[i][d]);
    desc += ";" + std::to_string(rs.kappa[i]);
  }
  std::uint64_t h = 1469598103934665603ull;
  for (char c : desc) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  const auto path = std::filesystem::path(cache_dir) / ("grid_" + std::string(buf) + ".bin");
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) return load_grid(path.string());
  WeightedGrid g = build_grid(rs, lo, hi, res);
  std::filesystem::create_directories(cache_dir, ec);
  save_grid(g, path.string());
  return g;
}

}  // namespace dunkl
