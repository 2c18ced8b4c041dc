#include "dunkl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <fstream>
#include <map>
#include <sstream>

namespace dunkl {

namespace {

std::array<std::int64_t, kMaxDim> pt_key(const Pt& p) {
  return {quantize(p[0]), quantize(p[1]), quantize(p[2])};
}

std::array<std::int64_t, kMaxDim * kMaxDim> mat_key(const Mat& m) {
  std::array<std::int64_t, kMaxDim * kMaxDim> k{};
  for (int i = 0; i < kMaxDim * kMaxDim; ++i) k[i] = quantize(m.a[i]);
  return k;
}

}  // namespace

Mat Mat::identity(int n) {
  Mat m;
  m.n = n;
  for (int i = 0; i < kMaxDim; ++i) m.a[i * kMaxDim + i] = 1.0;
  return m;
}

Pt Mat::apply(const Pt& x) const {
  Pt y{};
  for (int i = 0; i < kMaxDim; ++i) {
    double s = 0;
    for (int j = 0; j < kMaxDim; ++j) s += a[i * kMaxDim + j] * x[j];
    y[i] = s;
  }
  return y;
}

Mat Mat::mul(const Mat& o) const {
  Mat r;
  r.n = n;
  for (int i = 0; i < kMaxDim; ++i)
    for (int j = 0; j < kMaxDim; ++j) {
      double s = 0;
      for (int k = 0; k < kMaxDim; ++k) s += a[i * kMaxDim + k] * o.a[k * kMaxDim + j];
      r.a[i * kMaxDim + j] = s;
    }
  return r;
}

Pt reflect(const Pt& root, const Pt& x, int dim) {
  const double c = dot(root.data(), x.data(), dim);
  Pt y = x;
  for (int i = 0; i < dim; ++i) y[i] -= c * root[i];
  return y;
}

Mat reflection_matrix(const Pt& root, int dim) {
  Mat m = Mat::identity(dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m.a[i * kMaxDim + j] -= root[i] * root[j];
  return m;
}

ReflectionGroup generate_group(const RootSystem& rs, int cap) {
  validate_root_system(rs);
  std::vector<Mat> gens;
  gens.reserve(rs.roots.size());
  for (const Pt& v : rs.roots) gens.push_back(reflection_matrix(v, rs.dim));

  ReflectionGroup g;
  g.dim = rs.dim;
  std::map<std::array<std::int64_t, kMaxDim * kMaxDim>, int> seen;
  std::deque<int> queue;
  const Mat id = Mat::identity(rs.dim);
  g.elements.push_back(id);
  seen.emplace(mat_key(id), 0);
  queue.push_back(0);
  while (!queue.empty()) {
    const int at = queue.front();
    queue.pop_front();
    for (const Mat& s : gens) {
      const Mat next = s.mul(g.elements[at]);
      const auto key = mat_key(next);
      if (seen.count(key)) continue;
      if (static_cast<int>(g.elements.size()) >= cap)
        throw Error("generate_group: closure exceeds cap " + std::to_string(cap));
      seen.emplace(key, static_cast<int>(g.elements.size()));
      queue.push_back(static_cast<int>(g.elements.size()));
      g.elements.push_back(next);
    }
  }
  return g;
}

std::vector<Pt> orbit(const ReflectionGroup& g, const Pt& x) {
  std::vector<Pt> out;
  std::vector<std::array<std::int64_t, kMaxDim>> keys;
  for (const Mat& m : g.elements) {
    const Pt y = m.apply(x);
    const auto key = pt_key(y);
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      keys.push_back(key);
      out.push_back(y);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

double dunkl_distance(const ReflectionGroup& g, const Pt& x, const Pt& y) {
  double best = std::numeric_limits<double>::infinity();
  for (const Mat& m : g.elements) {
    const Pt z = m.apply(y);
    best = std::min(best, dist2(x.data(), z.data(), g.dim));
  }
  return std::sqrt(best);
}

void validate_root_system(const RootSystem& rs) {
  if (rs.dim < 1 || rs.dim > kMaxDim)
    throw Error("root system: dimension out of range");
  if (rs.roots.size() != rs.kappa.size())
    throw Error("root system: kappa table size mismatch");
  for (std::size_t i = 0; i < rs.roots.size(); ++i) {
    const double n2 = dot(rs.roots[i].data(), rs.roots[i].data(), rs.dim);
    if (std::abs(n2 - 2.0) > 1e-9)
      throw Error("root system: root " + std::to_string(i) + " not normalized to <v,v>=2");
    if (rs.kappa[i] < 0)
      throw Error("root system: negative kappa at root " + std::to_string(i));
  }
  // Closure of R under its own reflections, with kappa constant on orbits.
  for (std::size_t i = 0; i < rs.roots.size(); ++i) {
    for (std::size_t j = 0; j < rs.roots.size(); ++j) {
      const Pt im = reflect(rs.roots[i], rs.roots[j], rs.dim);
      const auto key = pt_key(im);
      bool found = false;
      for (std::size_t t = 0; t < rs.roots.size(); ++t) {
        if (pt_key(rs.roots[t]) == key) {
          if (std::abs(rs.kappa[t] - rs.kappa[j]) > 1e-12)
            throw Error("root system: kappa not G-invariant");
          found = true;
          break;
        }
      }
      if (!found) throw Error("root system: not closed under its own reflections");
    }
  }
}

namespace {

const double kSqrt2 = std::sqrt(2.0);

void push_pair(RootSystem& rs, const Pt& v, double k) {
  rs.roots.push_back(v);
  rs.kappa.push_back(k);
  Pt m{};
  for (int i = 0; i < kMaxDim; ++i) m[i] = -v[i];
  rs.roots.push_back(m);
  rs.kappa.push_back(k);
}

std::vector<double> parse_kappa_suffix(const std::string& key, std::size_t colon,
                                       std::size_t want) {
  std::vector<double> ks;
  if (colon == std::string::npos) {
    ks.assign(want, 1.0);
    return ks;
  }
  std::stringstream ss(key.substr(colon + 1));
  std::string tok;
  while (std::getline(ss, tok, ',')) ks.push_back(std::stod(tok));
  if (ks.size() == 1 && want > 1) ks.assign(want, ks[0]);
  if (ks.size() != want)
    throw Error("catalog: expected " + std::to_string(want) + " kappa values in '" + key + "'");
  return ks;
}

}  // namespace

RootSystem catalog(const std::string& key) {
  RootSystem rs;
  rs.name = key;
  const std::size_t colon = key.find(':');
  const std::string base = key.substr(0, colon);
  if (base == "trivial") {
    rs.dim = 1;
    if (colon != std::string::npos) rs.dim = std::stoi(key.substr(colon + 1));
    if (rs.dim < 1 || rs.dim > kMaxDim) throw Error("catalog: bad trivial dimension");
    return rs;
  }
  if (base == "a1") {
    rs.dim = 1;
    const auto ks = parse_kappa_suffix(key, colon, 1);
    push_pair(rs, make_pt(kSqrt2), ks[0]);
    return rs;
  }
  if (base == "a1xa1") {
    rs.dim = 2;
    const auto ks = parse_kappa_suffix(key, colon, 2);
    push_pair(rs, make_pt(kSqrt2, 0.0), ks[0]);
    push_pair(rs, make_pt(0.0, kSqrt2), ks[1]);
    return rs;
  }
  if (base == "a1cube") {
    rs.dim = 3;
    const auto ks = parse_kappa_suffix(key, colon, 3);
    push_pair(rs, make_pt(kSqrt2, 0.0, 0.0), ks[0]);
    push_pair(rs, make_pt(0.0, kSqrt2, 0.0), ks[1]);
    push_pair(rs, make_pt(0.0, 0.0, kSqrt2), ks[2]);
    return rs;
  }
  if (base == "b2") {
    rs.dim = 2;
    const auto ks = parse_kappa_suffix(key, colon, 2);
    push_pair(rs, make_pt(kSqrt2, 0.0), ks[0]);
    push_pair(rs, make_pt(0.0, kSqrt2), ks[0]);
    push_pair(rs, make_pt(1.0, 1.0), ks[1]);
    push_pair(rs, make_pt(1.0, -1.0), ks[1]);
    return rs;
  }
  if (base.rfind("i2_", 0) == 0) {
    const int k = std::stoi(base.substr(3));
    if (k < 3 || k > 6) throw Error("catalog: i2_k supports 3 <= k <= 6");
    rs.dim = 2;
    // k even: two reflection classes (alternating); k odd: one class.
    const std::size_t classes = (k % 2 == 0) ? 2 : 1;
    const auto ks = parse_kappa_suffix(key, colon, classes);
    for (int j = 0; j < k; ++j) {
      const double th = M_PI * j / k;
      const double kap = (classes == 2) ? ks[j % 2] : ks[0];
      push_pair(rs, make_pt(kSqrt2 * std::cos(th), kSqrt2 * std::sin(th)), kap);
    }
    return rs;
  }
  throw Error("catalog: unknown system key '" + key + "'");
}

std::vector<RootSystem> parse_root_systems(const std::string& text) {
  std::vector<RootSystem> out;
  std::istringstream in(text);
  std::string line;
  RootSystem cur;
  bool open = false;
  auto flush = [&]() {
    if (open) {
      // Fill in missing negatives so files may list one root per pair.
      RootSystem full = cur;
      for (std::size_t i = 0; i < cur.roots.size(); ++i) {
        Pt neg{};
        for (int d = 0; d < kMaxDim; ++d) neg[d] = -cur.roots[i][d];
        bool present = false;
        for (const Pt& r : full.roots)
          if (pt_key(r) == pt_key(neg)) { present = true; break; }
        if (!present) {
          full.roots.push_back(neg);
          full.kappa.push_back(cur.kappa[i]);
        }
      }
      validate_root_system(full);
      out.push_back(full);
    }
    cur = RootSystem{};
    open = false;
  };
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;
    if (line[first] == '[') {
      flush();
      const auto close = line.find(']', first);
      if (close == std::string::npos)
        throw Error("root file: unterminated section header at line " + std::to_string(lineno));
      cur.name = line.substr(first + 1, close - first - 1);
      open = true;
      continue;
    }
    if (!open) throw Error("root file: content before any [section] at line " + std::to_string(lineno));
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "dimension") {
      std::string eq;
      ls >> eq >> cur.dim;
      if (eq != "=" || cur.dim < 1 || cur.dim > kMaxDim)
        throw Error("root file: bad dimension line at line " + std::to_string(lineno));
    } else if (head == "root") {
      // root = [v1, v2] kappa = k
      std::string rest;
      std::getline(ls, rest);
      const auto lb = rest.find('[');
      const auto rb = rest.find(']');
      const auto kw = rest.find("kappa");
      if (lb == std::string::npos || rb == std::string::npos || kw == std::string::npos)
        throw Error("root file: bad root line at line " + std::to_string(lineno));
      std::stringstream cs(rest.substr(lb + 1, rb - lb - 1));
      Pt v{};
      std::string tok;
      int d = 0;
      while (std::getline(cs, tok, ',')) {
        if (d >= cur.dim) throw Error("root file: too many coordinates at line " + std::to_string(lineno));
        v[d++] = std::stod(tok);
      }
      if (d != cur.dim) throw Error("root file: coordinate count mismatch at line " + std::to_string(lineno));
      const auto eq = rest.find('=', kw);
      if (eq == std::string::npos)
        throw Error("root file: missing kappa value at line " + std::to_string(lineno));
      cur.roots.push_back(v);
      cur.kappa.push_back(std::stod(rest.substr(eq + 1)));
    } else {
      throw Error("root file: unknown directive '" + head + "' at line " + std::to_string(lineno));
    }
  }
  flush();
  if (out.empty()) throw Error("root file: no systems found");
  return out;
}

RootSystem load_root_system_file(const std::string& path, const std::string& name) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open root system file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const auto all = parse_root_systems(buf.str());
  if (name.empty()) return all.front();
  for (const auto& rs : all)
    if (rs.name == name) return rs;
  throw Error("root system '" + name + "' not found in " + path);
}

}  // namespace dunkl
