#pragma once

#include <cstdint>
#include <vector>

#include "dunkl/dyadic.hpp"
#include "dunkl/operators.hpp"

namespace dunkl {

struct SparseConstants {
  double C0 = 3.0;  // run-level geometry constant; dilations use ctilde0()
  double CE_start = 1.0;
  double CE_cap = 1099511627776.0;  // 2^40
  int depth_cap = 30;
  int node_cap = 100000;
  double ctilde0() const { return 4.0 * (std::floor(2.0 * C0) + 1.0); }
};

// Per-cube data feeding the stopping-time step: the dilated neighborhood,
// the local average, the calibrated threshold multiplier and the resulting
// exceptional subset of the cube. The threshold doubles from CE_start until
// omega(E) <= omega(Q) / (4 Csel), Csel the all-children covering constant.
struct NodeAnalysis {
  std::vector<int> dilate;       // members of ctilde0 * B(Q)
  double favg = 0;               // average of |f| over the dilate
  double ce = 0;
  std::vector<int> exceptional;  // sorted subset of the cube members
};
NodeAnalysis analyze_node(const DiscreteOperator& T, const DyadicSystem& sys, CubeRef q,
                          const std::vector<double>& f, const SparseConstants& c);

// The set at a fixed threshold, split into its two defining parts:
// orbit sums of f beating ce * favg, and the local grand maximal beating it.
struct ExceptionalSet {
  CubeRef base;
  double ce = 0;
  double favg = 0;
  double mass = 0;
  std::vector<int> members;       // union, sorted
  std::vector<int> orbit_part;    // sum_sigma |f(sigma x)| > ce favg
  std::vector<int> maximal_part;  // M_{T,local} f > ce favg
};
// Throws when f vanishes on the dilate (the caller skips such cubes).
ExceptionalSet exceptional_set(const DiscreteOperator& T, const DyadicSystem& sys, CubeRef q,
                               const std::vector<double>& f, double ce,
                               const SparseConstants& c = {});
// Doubling ladder from CE_start until the exceptional mass drops to
// omega(Q) / (4 Csel); throws at CE_cap.
double calibrate_CE(const DiscreteOperator& T, const DyadicSystem& sys, CubeRef q,
                    const std::vector<double>& f, const SparseConstants& c = {});

// Maximal descendants P of q with omega(P cap E) > omega(P) / (2 csel),
// found top-down; sorted by (row, idx). `exceptional` must be sorted.
// Requires the root itself not to qualify (recalibrate the threshold
// otherwise); `leakage` receives the exceptional mass left outside every
// selected cube (points that fell through to the finest scale).
std::vector<CubeRef> cz_select(const DyadicSystem& sys, CubeRef q,
                               const std::vector<int>& exceptional, double csel,
                               double* leakage = nullptr);

struct SparseNode {
  CubeRef cube;
  BallSpec ball{};  // generating ball; the node's dilate is ctilde0 * ball
  int parent = -1;
  int depth = 0;
  double favg = 0;
  double ce = 0;
  std::vector<int> children;  // node indices
  std::vector<int> witness;   // members minus selected subcubes
};

struct SparseBuild {
  std::vector<SparseNode> nodes;
  std::vector<int> roots;
  double ce_max = 0;
  double csel = 0;
  double ctilde0 = 0;
  std::vector<int> cover_counts;  // balls per region (core, then annuli)
  double inflation_max = 0;       // worst re-cubing inflation accepted
  // One entry per node: cube members with the node witness (theta 1/2,
  // overlap 1 by construction). All cubes live in the first bundle system.
  std::vector<SparseEntry> generations;
  // Smallest containing cube across the bundle for every generating ball's
  // ctilde0-dilate; the family whose sparse operator is measured against
  // |Tf|.  Entries carry the bundle slot of their cube.
  std::vector<SparseEntry> recubed;
};

// Stopping-time family for T f with f supported in `support`. The core 2x
// ball and each dyadic annulus around the support are greedily covered by
// balls of radius 2^(i+2) r / ctilde0 (so every dilate reaches the support);
// per-ball containing cubes in the first system, pruned to maximal, seed the
// recursion.  Each node keeps its generating ball - covering ball at the
// top, the cube's own sandwich ball below - and its ctilde0-dilate is taken
// around that ball, then re-cubed across the whole bundle.
SparseBuild sparse_family_T(const DiscreteOperator& T, const DyadicBundle& bundle,
                            const std::vector<double>& f, const BallSpec& support,
                            const SparseConstants& c = {});

// A_S f = sum over entries of avg_Q |f| * 1_Q.
std::vector<double> sparse_operator(const WeightedGrid& g, const std::vector<SparseEntry>& fam,
                                    const std::vector<double>& f);
// Commutator dominator: sum over entries of
//   (avg_Q |f|) |b - b_Q| 1_Q + (avg_Q |(b - b_Q) f|) 1_Q.
std::vector<double> sparse_commutator_bound(const WeightedGrid& g,
                                            const std::vector<SparseEntry>& fam,
                                            const std::vector<double>& b,
                                            const std::vector<double>& f);

struct DominationReport {
  double ratio_max = 0;    // max |target| / dominator where target is active
  double target_max = 0;
  bool covered = false;    // {|target| > floor * max} inside {dominator > 0}
  int active_points = 0;
  int family_size = 0;
};
DominationReport verify_domination(const WeightedGrid& g, const std::vector<double>& target,
                                   const std::vector<double>& dominator,
                                   double rel_floor = 1e-9);

// Build + measure in one step; throws on coverage failure, naming a witness
// point. The dominator is the recubed-family sparse operator (plain for T,
// symbol-weighted for the commutator).
struct DominationRun {
  SparseBuild build;
  std::vector<double> target;     // T f, or [b, T] f
  std::vector<double> dominator;  // sparse operator output
  DominationReport report;
};
DominationRun dominate_T(const DiscreteOperator& T, const DyadicBundle& bundle,
                         const std::vector<double>& f, const BallSpec& support,
                         const SparseConstants& c = {});
DominationRun dominate_commutator(const DiscreteOperator& T, const DyadicBundle& bundle,
                                  const std::vector<double>& b, const std::vector<double>& f,
                                  const BallSpec& support, const SparseConstants& c = {});

// Symbol-adapted enlargement: under each base cube, stopping subcubes where
// the local average of |b - b_P| exceeds twice the oscillation of b on P.
// Selected mass is at most half the parent by construction (theta_tilde
// records the worst witness fraction); chain_constant is the observed
// multiple of the summed oscillations needed to bound |b(x) - b_Q| along
// the stopping towers.
struct AugmentReport {
  std::vector<SparseEntry> family;
  double theta_tilde = 1.0;
  double chain_constant = 0;
  int added = 0;
};
AugmentReport augment_family(const DyadicSystem& sys, const std::vector<SparseEntry>& base,
                             const std::vector<double>& b);
// Bundle form: each base entry's tower is walked inside the system named by
// its `system` slot (as produced by sparse_family_T's re-cubing).
AugmentReport augment_family(const DyadicBundle& bundle, const std::vector<SparseEntry>& base,
                             const std::vector<double>& b);

}  // namespace dunkl
