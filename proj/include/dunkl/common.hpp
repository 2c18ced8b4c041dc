#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dunkl {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr int kMaxDim = 3;
inline constexpr double kQuantTol = 1e-9;

// Fixed-capacity point; coordinates beyond the active dimension stay zero so
// distance helpers can run over the full capacity.
using Pt = std::array<double, kMaxDim>;

inline Pt make_pt(double x) { return {x, 0.0, 0.0}; }
inline Pt make_pt(double x, double y) { return {x, y, 0.0}; }
inline Pt make_pt(double x, double y, double z) { return {x, y, z}; }

inline double dot(const double* a, const double* b, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

inline double dist2(const double* a, const double* b, int n) {
  double s = 0;
  for (int i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double norm2(const double* a, int n) { return std::sqrt(dot(a, a, n)); }

inline double euclid_dist(const Pt& a, const Pt& b, int n) {
  return std::sqrt(dist2(a.data(), b.data(), n));
}

// Quantized key used wherever geometric objects are deduplicated.
inline std::int64_t quantize(double x, double tol = kQuantTol) {
  return static_cast<std::int64_t>(std::llround(x / tol));
}

template <typename T>
inline T clamp(T v, T lo, T hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace dunkl
