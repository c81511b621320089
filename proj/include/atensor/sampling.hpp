#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "atensor/linalg.hpp"

namespace atensor {

// Axis-aligned coordinate box with an interior safety margin. All sampling
// and all trajectory bookkeeping work against the margin-shrunk interior so
// that chart singularities sitting on the boundary are never touched.
struct Box {
  VecN<double> lo, hi;
  double margin = 0.05;

  int dim() const { return static_cast<int>(lo.size()); }

  double interior_lo(int i) const { return lo[i] + margin * (hi[i] - lo[i]); }
  double interior_hi(int i) const { return hi[i] - margin * (hi[i] - lo[i]); }

  bool contains(const VecN<double>& x) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < lo[i] || x[i] > hi[i]) return false;
    return true;
  }
  bool contains_interior(const VecN<double>& x) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] < interior_lo(i) || x[i] > interior_hi(i)) return false;
    return true;
  }
};

inline double halton(uint64_t index, uint32_t base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

// Low-discrepancy interior samples. The seed offsets the Halton index so
// distinct seeds give distinct but reproducible point sets.
inline std::vector<VecN<double>> interior_samples(const Box& box, int count,
                                                  uint64_t seed) {
  static const uint32_t bases[] = {2, 3, 5, 7, 11, 13, 17};
  std::vector<VecN<double>> pts;
  pts.reserve(static_cast<size_t>(count));
  const int n = box.dim();
  for (int k = 0; k < count; ++k) {
    VecN<double> x(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      double u = halton(seed + 1 + static_cast<uint64_t>(k), bases[i]);
      x[i] = box.interior_lo(i) + u * (box.interior_hi(i) - box.interior_lo(i));
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

// Deterministic RNG wrapper. Gaussians go through Box-Muller so that the
// stream does not depend on the standard library's distribution choices.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  double uniform() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

  VecN<double> normal_vector(int n) {
    VecN<double> v(static_cast<size_t>(n));
    for (auto& x : v) x = normal();
    return v;
  }

 private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace atensor
