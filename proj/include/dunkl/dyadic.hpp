#pragma once

#include <climits>
#include <cstdint>
#include <string>
#include <vector>

#include "dunkl/grid.hpp"

namespace dunkl {

struct CubeRef {
  int row = -1;  // scale row; exponent k = kmin + row
  int idx = -1;
  bool valid() const { return row >= 0 && idx >= 0; }
  friend bool operator==(const CubeRef& a, const CubeRef& b) {
    return a.row == b.row && a.idx == b.idx;
  }
  friend bool operator<(const CubeRef& a, const CubeRef& b) {
    return a.row != b.row ? a.row < b.row : a.idx < b.idx;
  }
};

struct Cube {
  int center = -1;            // grid index of the net center
  int parent = -1;            // cube idx one row up, -1 on the coarsest row
  std::vector<int> children;  // cube idxs one row down
  std::vector<int> members;   // grid indices, sorted
  double omega = 0;
};

// Christ-type dyadic structure on the orbit space: nested nets of centers,
// Voronoi leaves, nearest-parent-center towers. One tree per coarsest cube.
struct DyadicSystem {
  const WeightedGrid* grid = nullptr;
  double delta = 0.5;
  int kmin = 0, kmax = 0;
  std::vector<std::vector<int>> centers;  // per row: grid indices
  std::vector<std::vector<Cube>> rows;
  std::vector<std::vector<int>> assign;   // per row: point -> cube idx
  double doubling_largest = 0;  // max omega(Q)/omega(largest child)
  double doubling_all = 0;      // max omega(Q)/omega(child), any child

  int row_count() const { return static_cast<int>(rows.size()); }
  double len(int row) const { return std::pow(delta, kmin + row); }
  const Cube& cube(CubeRef r) const { return rows[r.row][r.idx]; }
  Pt center_pt(CubeRef r) const { return grid->point(cube(r).center); }
  CubeRef cube_of(int point, int row) const { return {row, assign[row][point]}; }
  CubeRef parent_of(CubeRef r) const {
    return r.row == 0 ? CubeRef{} : CubeRef{r.row - 1, cube(r).parent};
  }
  // lambda B(Q) = O(B(x_Q, 2 lambda len(Q))).
  BallSpec dilated_ball(CubeRef r, double lambda = 1.0) const {
    return {center_pt(r), 2.0 * lambda * len(r.row), true};
  }
  bool contains(CubeRef outer, CubeRef inner) const;  // inner subset of outer
  template <typename F>
  void for_subtree(CubeRef r, F&& fn) const {
    fn(r);
    for (int c : cube(r).children) for_subtree(CubeRef{r.row + 1, c}, fn);
  }
};

struct DyadicOptions {
  double delta = 0.5;
  std::uint64_t seed = 1;
  int kmin = INT_MIN;  // auto: coarsest scale spans the grid (single root)
  int kmax = INT_MAX;  // auto: finest scale with delta^k >= 2 cell diagonals
  // When set, bypasses the greedy net (one list per row, grid indices).
  const std::vector<std::vector<int>>* forced_centers = nullptr;
};

// Greedy maximal delta^k-separated net in the Dunkl metric; candidates are
// visited in seeded order, seeds list is admitted first (nesting).
std::vector<int> build_net(const WeightedGrid& g, double delta_k, std::uint64_t seed,
                           const std::vector<int>& seeds = {});

DyadicSystem build_dyadic_system(const WeightedGrid& g, const DyadicOptions& opt = {});

struct DyadicReport {
  bool separation_ok = false, covering_ok = false, partition_ok = false, nesting_ok = false;
  bool outer_ok = false;
  double separation_margin = 0;  // min pairwise center distance / delta^k
  double covering_margin = 0;    // max point-to-net distance / delta^k
  double outer_max = 0;          // max member distance to center / delta^k (< 2)
  double c_in = 0;               // min over cubes: nearest non-member dist / delta^k
  double doubling_largest = 0, doubling_all = 0;
  int cube_count = 0;
  bool ok = false;
};
// Checks Lemma-type properties (1)-(5); throws Error when c_in < 1/24.
DyadicReport verify_dyadic_properties(const DyadicSystem& sys);

struct DyadicBundle {
  std::vector<DyadicSystem> systems;
};
DyadicBundle build_dyadic_bundle(const WeightedGrid& g, double delta, std::uint64_t seed,
                                 int count = 3);

struct ContainingCube {
  int system = -1;
  CubeRef cube;
  double inflation = 0;  // max member distance to ball center / ball radius
};
// Smallest cube (across the bundle) containing all grid points of the ball;
// throws Error when the best achievable inflation exceeds cap.
ContainingCube containing_cube(const DyadicBundle& bundle, const BallSpec& ball,
                               double inflation_cap);
// Single-system variant used inside the sparse construction.
ContainingCube containing_cube(const DyadicSystem& sys, const BallSpec& ball);

struct SparseEntry {
  CubeRef cube;               // optional back-reference
  std::vector<int> members;   // sorted grid indices
  std::vector<int> witness;   // sorted grid indices
  double omega = 0, omega_witness = 0;
  int system = 0;             // bundle slot the cube reference lives in
};

struct SparseCheckReport {
  double theta_min = 0;
  int overlap_max = 0;
  bool witness_contained = false;
  bool ok = false;
};
// theta-sparseness with witness sets: omega(E(Q)) >= theta omega(Q), witnesses
// inside their cubes, point multiplicity across witnesses <= overlap_cap.
SparseCheckReport verify_sparse(const WeightedGrid& g, const std::vector<SparseEntry>& fam,
                                double theta, int overlap_cap);

// Structured-text serialization (centers + towers; members rebuilt on load).
std::string serialize_dyadic(const DyadicSystem& sys);
DyadicSystem deserialize_dyadic(const WeightedGrid& g, const std::string& text);

}  // namespace dunkl
