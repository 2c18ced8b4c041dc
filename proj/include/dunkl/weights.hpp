#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dunkl/dyadic.hpp"
#include "dunkl/grid.hpp"

namespace dunkl {

// Shared test-set collection: seeded orbit balls with log-uniform radii plus
// every cube of the attached dyadic system (when given).
struct SetFamily {
  std::vector<std::vector<int>> sets;  // sorted member lists, each nonempty
  int ball_count = 0;
  int cube_count = 0;
};
SetFamily test_sets(const WeightedGrid& g, const DyadicSystem* sys, int ball_samples,
                    std::uint64_t seed);

// Muckenhoupt-style characteristic over one set (exact discrete averages):
// p > 1: (avg_S u) (avg_S u^{-1/(p-1)})^{p-1};  p = 1: (avg_S u) / (min_S u).
double ap_on_set(const WeightedGrid& g, const std::vector<int>& members,
                 const std::vector<double>& u, double p);

struct ApReport {
  double constant = 0;
  double p = 0;
  int sets = 0;
  int argmax = -1;
};
ApReport ap_constant(const WeightedGrid& g, const SetFamily& fam, const std::vector<double>& u,
                     double p);

// max over grid points of (dyadic maximal of u) / u.
double a1_constant(const DyadicSystem& sys, const std::vector<double>& u);

// Substitute-measure inequality on random cubes and orbit-class subsets E:
//   (omega(E)/omega(Q))^p <= [u]_Q  u(E)/u(Q)
// with the cube-local characteristic; holds exactly, worst ratio reported.
struct WpReport {
  double worst_ratio = 0;
  int trials = 0;
  bool ok = false;
};
WpReport verify_wp(const WeightedGrid& g, const DyadicSystem& sys, const std::vector<double>& u,
                   double p, int trials, std::uint64_t seed);

// Characteristics shrink as p grows; checked per set.
struct InclusionReport {
  double constant_p = 0, constant_q = 0;
  bool monotone_ok = false;
};
InclusionReport verify_inclusion(const WeightedGrid& g, const SetFamily& fam,
                                 const std::vector<double>& u, double p, double q);

// Largest gamma on the ladder 2^-1 .. 2^-8 whose normalized (1+gamma)-mean
// stays within `cap` of the plain mean, uniformly over the family.
struct RhReport {
  double gamma = 0;
  double constant = 0;
  std::vector<double> ladder;  // constant per ladder step, descending gamma
  bool ok = false;
};
RhReport reverse_holder(const WeightedGrid& g, const SetFamily& fam, const std::vector<double>& u,
                        double cap = 10.0);

// sup over sets of int_S |b - avg_S b| domega / mu(S), where mu is omega or
// weight*omega. The plain norm is the weight == nullptr case.
double bmo_norm(const WeightedGrid& g, const SetFamily& fam, const std::vector<double>& b,
                const std::vector<double>* weight = nullptr);

// Weighted median: least attained value v with omega{b <= v} >= omega(S)/2.
double median_value(const WeightedGrid& g, const std::vector<int>& members,
                    const std::vector<double>& b);
// Mean oscillation avg_S |b - avg_S b|.
double oscillation(const WeightedGrid& g, const std::vector<int>& members,
                   const std::vector<double>& b);

// Iterated-maximal majorant phi = sum_k M_d^k g / (2m)^k with these checks:
//   g <= phi pointwise, ||phi||_p <= 2 ||g||_p,
//   M_d phi <= 2m (phi - g) + slack with slack = M_d^(T+1) g / (2m)^T.
struct RdfResult {
  std::vector<double> phi;
  double mnorm = 0;       // L^p bound estimate for M_d used in the series
  double norm_ratio = 0;  // ||phi||_p / ||g||_p
  double a1_ratio = 0;    // max M_d phi / phi
  double slack_max = 0;
  bool ok = false;
};
RdfResult rubio_de_francia(const DyadicSystem& sys, const std::vector<double>& g0, double p,
                           int terms = 20, std::uint64_t seed = 1);

// Weight factory. Keys: "const:c", "power:gamma" and "dunkl_power:gamma"
// (radial |x|^gamma, radius clamped below at half a cell; the two agree
// because the origin is fixed by every reflection).
std::vector<double> weight_catalog(const WeightedGrid& g, const std::string& key);

// Symbol factory for commutators. Keys: "const:c", "coord:j",
// "logd" (log of the clamped radius), "martingale:seed" (per-cube signs
// summed down the towers; needs a system).
std::vector<double> symbol_catalog(const WeightedGrid& g, const DyadicSystem* sys,
                                   const std::string& key);

}  // namespace dunkl
