#pragma once

#include <string>

#include "speckle/field.hpp"

namespace speckle {

// Metrics take images in [0, 1] and score them on the 8-bit scale (x 255).
inline constexpr double kPsnrCap = 100.0;

// sqrt(mean((255 a - 255 b)^2)). Throws DimensionError on shape mismatch.
double rmse(const Field2D& a, const Field2D& b);

// 20 log10(255 / rmse), or kPsnrCap when rmse < 255e-5.
double psnr(const Field2D& a, const Field2D& b);

struct SsimOptions {
  std::size_t window = 8;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

// Mean SSIM over every window x window placement (stride 1, uniform weights,
// population statistics). Throws DimensionError when the image is smaller
// than the window.
double ssim(const Field2D& a, const Field2D& b, const SsimOptions& opts = {});

struct MetricRow {
  std::string condition;
  double psnr = 0.0;
  double rmse = 0.0;
  double ssim = 0.0;
};

MetricRow score(std::string condition, const Field2D& truth, const Field2D& estimate);

}  // namespace speckle
