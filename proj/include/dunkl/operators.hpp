#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dunkl/dyadic.hpp"
#include "dunkl/grid.hpp"

namespace dunkl {

struct Kernel {
  std::string name;
  std::function<double(const Pt&, const Pt&)> eval;
};

double ball_volume_constant(int dim);  // Lebesgue measure of the unit ball

// Riesz-type model kernel (x_j - y_j) / (|x-y| W(x,|x-y|)) where W(x,r) is
// the volume surrogate v_N r^N prod(|<v,x>|+r)^kappa. Odd, size-bounded and
// Lipschitz against the measure of B(x, d(x,y)); for kappa == 0 in dimension
// one it reduces to sgn(x-y) / (2|x-y|).
Kernel riesz_kernel(const RootSystem& rs, int j);

// Keys: "riesz:j" with 0 <= j < dim.
Kernel kernel_catalog(const RootSystem& rs, const std::string& key);

struct CzReport {
  int samples = 0;        // pairs that passed the separation guards
  double size_max = 0;    // max |K(x,y)| omega(B(x, d(x,y)))
  double holder_max = 0;  // max |K(x,y)-K(x',y)| omega(B(x,d)) d / |x-x'|
};
// Empirical size and smoothness constants against the discrete ball measure.
CzReport cz_check(const WeightedGrid& g, const Kernel& k, int samples, std::uint64_t seed);

// Discretization of the principal-value integral: matrix K(x_i,x_j) w_j with
// the Euclidean diagonal strip |x_i-x_j| <= r_cut removed. Dense cache for
// small grids, rows generated on the fly otherwise.
class DiscreteOperator {
 public:
  DiscreteOperator(const WeightedGrid& g, Kernel k, double r_cut = -1.0);

  const WeightedGrid& grid() const { return *g_; }
  const Kernel& kernel() const { return kernel_; }
  double r_cut() const { return r_cut_; }

  double entry(int i, int j) const;  // K(x_i,x_j) w_j, 0 on the masked strip
  std::vector<double> apply(const std::vector<double>& f) const;
  std::vector<double> apply_adjoint(const std::vector<double>& f) const;  // in L^2(omega)
  // T* f(x) = sup over cutoffs of |sum_{d(x,y) > eps} K(x,y) w_y f(y)|,
  // exact over all cut positions (per-row sort by Dunkl distance).
  std::vector<double> maximal_truncation(const std::vector<double>& f) const;

 private:
  const WeightedGrid* g_;
  Kernel kernel_;
  double r_cut_;
  bool cached_ = false;
  std::vector<double> mat_;
  double raw(int i, int j) const;
};

// Centers at every grid point, radii on a doubling ladder from the single
// cell up to the full box. The smallest radius isolates one cell.
std::vector<BallSpec> canonical_ball_family(const WeightedGrid& g, bool dunkl);

// Hardy-Littlewood maximal average over the canonical Euclidean family;
// dominates |f| pointwise (singleton balls are in the family).
std::vector<double> hl_maximal(const WeightedGrid& g, const std::vector<double>& f);
// Same ladder over orbit balls: averages are orbit-symmetrized, so the
// pointwise lower bound holds for G-invariant data only.
std::vector<double> orbit_maximal(const WeightedGrid& g, const std::vector<double>& f);

// max over cubes containing the point of avg_Q |f| d(mu), mu = density * omega
// (density == nullptr means omega itself). Norm-one on L^infinity.
std::vector<double> dyadic_maximal(const DyadicSystem& sys, const std::vector<double>& f,
                                   const std::vector<double>* density = nullptr);

// Grand maximal truncation over a ball family:
//   M_T f(x) = max over balls B containing x of
//              max_{xi in B} |T(f restricted off ctilde0 B)(xi)|.
// `support` (sorted) limits correction sums to where f can be nonzero.
std::vector<double> grand_maximal(const DiscreteOperator& T, const std::vector<double>& f,
                                  const std::vector<BallSpec>& family, double ctilde0,
                                  const std::vector<int>* support = nullptr);

std::vector<double> commutator_apply(const DiscreteOperator& T, const std::vector<double>& b,
                                     const std::vector<double>& f);

struct OpNormResult {
  double norm = 0;          // ||T v|| with the final unit vector v
  std::vector<double> top;  // converged direction, unit in L^2(omega)
  int iterations = 0;
};
// Power iteration on T'T in the omega inner product.
OpNormResult l2_opnorm(const DiscreteOperator& T, int iterations = 100, std::uint64_t seed = 1);

}  // namespace dunkl
