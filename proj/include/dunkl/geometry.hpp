#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dunkl/common.hpp"

namespace dunkl {

// Finite root system in R^N (N <= 3), all roots normalized to <v,v> = 2,
// with a multiplicity (kappa) per root that is constant on group orbits.
struct RootSystem {
  int dim = 1;
  std::vector<Pt> roots;       // full system, both signs listed
  std::vector<double> kappa;   // one entry per root, >= 0
  std::string name;

  double gamma() const {
    double s = 0;
    for (double k : kappa) s += k;
    return s;
  }
  // Homogeneous dimension of the associated measure.
  double homogeneous_dimension() const { return dim + gamma(); }
};

// Orthogonal matrix, row-major; identity on coordinates beyond dim.
struct Mat {
  std::array<double, kMaxDim * kMaxDim> a{};
  int n = 0;

  static Mat identity(int n);
  Pt apply(const Pt& x) const;
  Mat mul(const Mat& other) const;  // this * other
};

struct ReflectionGroup {
  int dim = 1;
  std::vector<Mat> elements;  // elements[0] is the identity
  int order() const { return static_cast<int>(elements.size()); }
};

// sigma_v(x) = x - <v,x> v for <v,v> = 2.
Pt reflect(const Pt& root, const Pt& x, int dim);

// Reflection matrix of a root.
Mat reflection_matrix(const Pt& root, int dim);

// Closure of the reflections under composition (BFS, capped at 1024
// elements, 1e-9 quantized dedup). Throws Error on cap overflow.
ReflectionGroup generate_group(const RootSystem& rs, int cap = 1024);

// Orbit of a point, deduplicated at 1e-9 and sorted lexicographically.
std::vector<Pt> orbit(const ReflectionGroup& g, const Pt& x);

// d(x,y) = min_{sigma in G} ||x - sigma(y)||; a pseudo-metric <= ||x-y||.
double dunkl_distance(const ReflectionGroup& g, const Pt& x, const Pt& y);

// Validates normalization, closure of R under its own reflections, kappa >= 0
// and G-invariance of kappa. Throws Error with a description on failure.
void validate_root_system(const RootSystem& rs);

// Built-in systems addressable by key:
//   trivial:N          empty system in dimension N
//   a1[:k]             rank one on the line, multiplicity k (default 1)
//   a1xa1[:k1,k2]      coordinate reflections in the plane
//   b2[:k1,k2]         square symmetry (axis and diagonal classes)
//   i2_K[:k1[,k2]]     dihedral of order 2K, 3 <= K <= 6
//   a1cube[:k]         coordinate reflections in R^3 (tests only)
RootSystem catalog(const std::string& key);

// Parses the structured text format:
//   [name]
//   dimension = N
//   root = [v1, ..., vN] kappa = k
// Unlisted negatives are filled in automatically.
std::vector<RootSystem> parse_root_systems(const std::string& text);
RootSystem load_root_system_file(const std::string& path,
                                 const std::string& name = "");

}  // namespace dunkl
