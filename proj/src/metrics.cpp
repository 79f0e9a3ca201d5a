#include "speckle/metrics.hpp"

#include <cmath>

#include "speckle/error.hpp"

namespace speckle {

double rmse(const Field2D& a, const Field2D& b) {
  require_same_shape(a, b, "rmse");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = 255.0 * a[i] - 255.0 * b[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

double psnr(const Field2D& a, const Field2D& b) {
  const double e = rmse(a, b);
  if (e < 255e-5) return kPsnrCap;
  return 20.0 * std::log10(255.0 / e);
}

double ssim(const Field2D& a, const Field2D& b, const SsimOptions& opts) {
  require_same_shape(a, b, "ssim");
  const std::size_t win = opts.window;
  if (win == 0 || a.height() < win || a.width() < win) {
    throw DimensionError("ssim: image smaller than the window");
  }
  const double c1 = (opts.k1 * opts.dynamic_range) * (opts.k1 * opts.dynamic_range);
  const double c2 = (opts.k2 * opts.dynamic_range) * (opts.k2 * opts.dynamic_range);
  const double scale = opts.dynamic_range;
  const double n = static_cast<double>(win * win);

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t y0 = 0; y0 + win <= a.height(); ++y0) {
    for (std::size_t x0 = 0; x0 + win <= a.width(); ++x0) {
      double sa = 0.0, sb = 0.0;
      for (std::size_t y = y0; y < y0 + win; ++y)
        for (std::size_t x = x0; x < x0 + win; ++x) {
          sa += scale * a(y, x);
          sb += scale * b(y, x);
        }
      const double ma = sa / n, mb = sb / n;
      double vaa = 0.0, vbb = 0.0, vab = 0.0;
      for (std::size_t y = y0; y < y0 + win; ++y)
        for (std::size_t x = x0; x < x0 + win; ++x) {
          const double da = scale * a(y, x) - ma;
          const double db = scale * b(y, x) - mb;
          vaa += da * da;
          vbb += db * db;
          vab += da * db;
        }
      vaa /= n;
      vbb /= n;
      vab /= n;
      total += ((2.0 * ma * mb + c1) * (2.0 * vab + c2)) /
               ((ma * ma + mb * mb + c1) * (vaa + vbb + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

MetricRow score(std::string condition, const Field2D& truth, const Field2D& estimate) {
  return {std::move(condition), psnr(truth, estimate), rmse(truth, estimate), ssim(truth, estimate)};
}

}  // namespace speckle
