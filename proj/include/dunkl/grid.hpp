#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dunkl/geometry.hpp"

namespace dunkl {

struct BallSpec {
  Pt center{};
  double radius = 0;
  bool dunkl = true;  // orbit ball O(B) when true, Euclidean ball otherwise
};

// Uniform cell-center grid over a box with cell-averaged density weights.
// Balls are grid-cell unions: membership means the cell center lies inside.
struct WeightedGrid {
  RootSystem rs;
  ReflectionGroup group;
  int dim = 1;
  int res = 0;
  Pt lo{}, hi{};
  double cell = 0;       // cell edge (equal on all axes)
  double cell_diag = 0;  // cell diagonal
  std::vector<double> pts;  // n*dim, x-fastest lattice order
  std::vector<double> w;    // quadrature weights
  double total_mass = 0;

  bool orbit_closed = false;   // sigma maps cell centers to cell centers
  std::vector<int> orbit_idx;  // n*|G| grid index of sigma(x_i), iff closed

  int size() const { return static_cast<int>(w.size()); }
  Pt point(int i) const {
    Pt p{};
    for (int d = 0; d < dim; ++d) p[d] = pts[static_cast<std::size_t>(i) * dim + d];
    return p;
  }

  double dunkl_dist(const Pt& a, const Pt& b) const { return dunkl_distance(group, a, b); }
  double euclid_diag() const { return euclid_dist(lo, hi, dim); }

  // Exact member enumeration via the lattice (no full scan).
  std::vector<int> ball_members(const BallSpec& b) const;
  void for_ball(const BallSpec& b, const std::function<void(int)>& fn) const;
  double ball_measure(const BallSpec& b) const;
  bool ball_inside_box(const BallSpec& b) const;
  // Largest Euclidean radius around c that stays inside the box.
  double radius_to_boundary(const Pt& c) const;

  // Orbit classes of grid indices (requires orbit_closed).
  std::vector<std::vector<int>> orbit_classes() const;

 private:
  int lattice_index(const Pt& p) const;  // -1 when p is not a cell center
  template <typename F>
  void visit_euclid(const Pt& c, double r, F&& fn) const;
  mutable std::vector<int> stamp_;
  mutable int epoch_ = 0;
  friend WeightedGrid build_grid(const RootSystem&, const Pt&, const Pt&, int);
  friend WeightedGrid load_grid(const std::string&);
};

// Product density h_kappa(x) = prod over roots |<v,x>|^kappa(v).
double density(const RootSystem& rs, const Pt& x);

// Cell-averaged weights from 3^N regular subsamples per cell; res >= 16.
WeightedGrid build_grid(const RootSystem& rs, const Pt& lo, const Pt& hi, int res);

double ball_measure(const WeightedGrid& g, const BallSpec& b);

struct ScalingReport {
  double ratio = 0;  // omega(B(tx,tr)) / (t^hom_dim * omega(B(x,r)))
  double measured = 0, reference = 0;
};
ScalingReport verify_scaling(const WeightedGrid& g, const Pt& x, double r, double t);

struct ComparisonReport {
  int samples = 0;
  double ratio_min = 0, ratio_max = 0;  // omega(B)/surrogate over the sample set
  double spread = 0;                    // ratio_max / ratio_min
};
// Surrogate r^N * prod(|<v,x>|+r)^kappa against grid ball measures.
double comparison_surrogate(const RootSystem& rs, const Pt& x, double r);
ComparisonReport verify_comparison(const WeightedGrid& g, int samples, std::uint64_t seed);

struct GrowthReport {
  double ratio = 0;      // omega(B(x,r1)) / omega(B(x,r2)), r1 >= r2
  double lower = 0;      // (r1/r2)^N
  double upper = 0;      // (r1/r2)^homdim
  double constant = 0;   // smallest C with lower/C <= ratio <= C*upper
};
GrowthReport doubling_and_growth(const WeightedGrid& g, const Pt& x, double r1, double r2);

// Versioned binary serialization (weights as little-endian 64-bit floats).
void save_grid(const WeightedGrid& g, const std::string& path);
WeightedGrid load_grid(const std::string& path);

// Build or reuse a cached grid when cache_dir is non-empty.
WeightedGrid grid_cached(const RootSystem& rs, const Pt& lo, const Pt& hi, int res,
                         const std::string& cache_dir);

}  // namespace dunkl
