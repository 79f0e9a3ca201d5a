#pragma once

#include <algorithm>
#include <cmath>

#include "speckle/field.hpp"
#include "speckle/rng.hpp"

namespace speckle::testing {

inline Field2D random_field(Rng& rng, std::size_t h, std::size_t w, double lo = -1.0,
                            double hi = 1.0) {
  Field2D f(h, w);
  for (double& v : f.values()) v = rng.uniform(lo, hi);
  return f;
}

// Smooth positive test image in [0.1, 0.9]: a few low-frequency cosines.
inline Field2D smooth_field(Rng& rng, std::size_t h, std::size_t w) {
  Field2D f(h, w, 0.5);
  for (int k = 0; k < 3; ++k) {
    const double fy = rng.uniform(0.5, 2.5), fx = rng.uniform(0.5, 2.5);
    const double py = rng.uniform(0.0, 6.28), px = rng.uniform(0.0, 6.28);
    const double a = rng.uniform(0.05, 0.12);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x)
        f(y, x) += a * std::cos(6.283185307179586 * fy * static_cast<double>(y) /
                                    static_cast<double>(h) + py) *
                   std::cos(6.283185307179586 * fx * static_cast<double>(x) /
                                static_cast<double>(w) + px);
  }
  return f;
}

inline double max_abs_diff(const Field2D& a, const Field2D& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const Field2D& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

// max |a - b| / max(max |b|, tiny)
inline double max_rel_diff(const Field2D& a, const Field2D& b) {
  return max_abs_diff(a, b) / std::max(max_abs(b), 1e-300);
}

inline double rmse(const Field2D& a, const Field2D& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc / static_cast<double>(a.size()));
}

}  // namespace speckle::testing
