#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dunkl/sparse.hpp"
#include "dunkl/weights.hpp"

namespace dunkl {

// (sum |f_i|^p u_i w_i)^{1/p}; u == nullptr means the plain omega norm.
double weighted_norm(const WeightedGrid& g, const std::vector<double>& f,
                     const std::vector<double>* u, double p);

// Seeded trial inputs: orbit-ball indicators, tensor-cubic bumps, and random
// per-cube signs. The support ball always contains the nonzero set and the
// function is never identically zero.
struct Trial {
  std::vector<double> f;
  BallSpec support;
  std::string kind;
};
Trial trial_function(const WeightedGrid& g, const DyadicSystem* sys, std::uint64_t seed);

struct NormReport {
  double p = 0;
  int trials = 0;
  std::vector<double> ratios;  // per trial, in trial order
  double max_ratio = 0, median_ratio = 0;
  double u_constant = 0, v_constant = 0, bmo_constant = 0;
  double reference = 0;  // [u]^{max(p'/p,1)} scale the ratios are reported against
  double split_b1 = 0, split_b2 = 0;  // commutator dominator term maxima
};

// max over seeded trials of ||A_S f||_{L^p(u)} / ||f||_{L^p(u)}, reported
// alongside the A_p characteristic scale. Requires p > 1.
NormReport verify_sparse_weighted_bound(const WeightedGrid& g,
                                        const std::vector<SparseEntry>& fam,
                                        const DyadicSystem* sys, const SetFamily& sets,
                                        const std::vector<double>& u, double p, int trials,
                                        std::uint64_t seed);

// Builds the sparse family per trial and measures ||Tf||_{L^p(u)} /
// ||f||_{L^p(u)}; trial 0 is the power-iteration top direction, so the
// unweighted p = 2 report recovers the operator norm. Asserts the literal
// composition ||Tf|| <= ratio * ||A_S f|| (plus the coverage floor) per trial.
NormReport verify_T_weighted(const DiscreteOperator& T, const DyadicBundle& bundle,
                             const SetFamily& sets, const std::vector<double>& u, double p,
                             int trials, std::uint64_t seed, const SparseConstants& c = {});

// ||[b,T]f||_{L^p(v)} / (||b||_{BMO(theta)} ||f||_{L^p(u)}) with
// theta = (u/v)^{1/p}; also reports the two dominator-term norms separately.
// Throws when the weighted oscillation of b vanishes.
NormReport verify_commutator_two_weight(const DiscreteOperator& T, const DyadicBundle& bundle,
                                        const SetFamily& sets, const std::vector<double>& b,
                                        const std::vector<double>& u,
                                        const std::vector<double>& v, double p, int trials,
                                        std::uint64_t seed, const SparseConstants& c = {});

struct ChainLink {
  std::string name;
  double lhs = 0, rhs = 0;
  bool ok = false;
};

// Median-value lower-bound chain on a ball B0 and its 5r-shifted twin along
// `direction`: split the twin at the median of b, drive the commutator with
// the two half indicators, and verify every inequality link through to the
// v-weighted Hoelder step and the reverse-Hoelder control of u.
struct LowerBoundReport {
  std::vector<ChainLink> links;
  double oscillation = 0, median = 0, kernel_min = 0;
  double mass_e1 = 0, mass_e2 = 0;
  bool sign_ok = false, split_ok = false;
  double chain_constant = 0;  // Omega(b,B0) over the averaged commutator mass
  double rh_gamma = 0, rh_constant = 0;
  bool ok = false;
};
LowerBoundReport lower_bound_experiment(const DiscreteOperator& T, int direction,
                                        const std::vector<double>& b,
                                        const std::vector<double>& v,
                                        const std::vector<double>& u, double p,
                                        const BallSpec& b0, const SetFamily& sets);

// Duality transfer: for seeded (f, g) pairs build the iterated majorant
// phi(g) and check  int |Tf| phi domega <= C [phi]_{A1} int M_d f phi domega
// with one finite C across trials; the majorant properties (pointwise lower
// bound, norm doubling, A1-type bound with truncation slack) are asserted on
// every phi.
struct RdfTransferReport {
  int trials = 0;
  double p = 0;
  std::vector<double> constants;
  double c_max = 0;
  double slack_max = 0;
  bool properties_ok = false;
  bool ok = false;
};
RdfTransferReport rdf_transfer_check(const DiscreteOperator& T, const DyadicSystem& sys,
                                     double p, int trials, std::uint64_t seed);

}  // namespace dunkl
