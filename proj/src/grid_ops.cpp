#include "speckle/grid_ops.hpp"

#include <cmath>
#include <vector>

#include "speckle/error.hpp"

namespace speckle {

std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept {
  const auto period = static_cast<std::ptrdiff_t>(2 * n);
  std::ptrdiff_t m = i % period;
  if (m < 0) m += period;
  const auto nn = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(m < nn ? m : period - 1 - m);
}

Field2D convolve2(const Field2D& field, const Field2D& kernel) {
  if (kernel.height() % 2 == 0 || kernel.width() % 2 == 0) {
    throw KernelError("convolve2: kernel extents must be odd");
  }
  const std::size_t h = field.height();
  const std::size_t w = field.width();
  const auto ry = static_cast<std::ptrdiff_t>(kernel.height() / 2);
  const auto rx = static_cast<std::ptrdiff_t>(kernel.width() / 2);
  Field2D out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::ptrdiff_t i = -ry; i <= ry; ++i) {
        const std::size_t sy = reflect_index(static_cast<std::ptrdiff_t>(y) - i, h);
        for (std::ptrdiff_t j = -rx; j <= rx; ++j) {
          const std::size_t sx = reflect_index(static_cast<std::ptrdiff_t>(x) - j, w);
          acc += kernel(static_cast<std::size_t>(i + ry), static_cast<std::size_t>(j + rx)) *
                 field(sy, sx);
        }
      }
      out(y, x) = acc;
    }
  }
  return out;
}

Field2D convolve_separable(const Field2D& field, std::span<const double> column_taps,
                           std::span<const double> row_taps) {
  if (column_taps.size() % 2 == 0 || row_taps.size() % 2 == 0) {
    throw KernelError("convolve_separable: tap counts must be odd");
  }
  const std::size_t h = field.height();
  const std::size_t w = field.width();
  const auto rx = static_cast<std::ptrdiff_t>(row_taps.size() / 2);
  const auto ry = static_cast<std::ptrdiff_t>(column_taps.size() / 2);

  // Reflected source index per (output position, tap) along each axis.
  std::vector<std::size_t> xmap(w * row_taps.size());
  for (std::size_t x = 0; x < w; ++x)
    for (std::ptrdiff_t j = -rx; j <= rx; ++j)
      xmap[x * row_taps.size() + static_cast<std::size_t>(j + rx)] =
          reflect_index(static_cast<std::ptrdiff_t>(x) - j, w);

  Field2D tmp(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      const std::size_t* src = &xmap[x * row_taps.size()];
      for (std::size_t t = 0; t < row_taps.size(); ++t) acc += row_taps[t] * field(y, src[t]);
      tmp(y, x) = acc;
    }
  }
  Field2D out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t i = -ry; i <= ry; ++i) {
      const double k = column_taps[static_cast<std::size_t>(i + ry)];
      const std::size_t sy = reflect_index(static_cast<std::ptrdiff_t>(y) - i, h);
      for (std::size_t x = 0; x < w; ++x) out(y, x) += k * tmp(sy, x);
    }
  }
  return out;
}

Field2D derivative_x(const Field2D& field) {
  const std::size_t h = field.height();
  const std::size_t w = field.width();
  if (w < 2) throw DimensionError("derivative_x: width must be >= 2");
  Field2D out(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    out(y, 0) = field(y, 1) - field(y, 0);
    for (std::size_t x = 1; x + 1 < w; ++x) out(y, x) = 0.5 * (field(y, x + 1) - field(y, x - 1));
    out(y, w - 1) = field(y, w - 1) - field(y, w - 2);
  }
  return out;
}

Field2D derivative_y(const Field2D& field) {
  const std::size_t h = field.height();
  const std::size_t w = field.width();
  if (h < 2) throw DimensionError("derivative_y: height must be >= 2");
  Field2D out(h, w);
  for (std::size_t x = 0; x < w; ++x) {
    out(0, x) = field(1, x) - field(0, x);
    out(h - 1, x) = field(h - 1, x) - field(h - 2, x);
  }
  for (std::size_t y = 1; y + 1 < h; ++y)
    for (std::size_t x = 0; x < w; ++x) out(y, x) = 0.5 * (field(y + 1, x) - field(y - 1, x));
  return out;
}

Field2D mixed_second_derivative(const Field2D& field) {
  if (field.height() < 3 || field.width() < 3) {
    throw DimensionError("mixed_second_derivative: extents must be >= 3");
  }
  return derivative_y(derivative_x(field));
}

Field2D grad_magnitude(const Field2D& field) {
  if (field.height() < 2 || field.width() < 2) {
    throw DimensionError("grad_magnitude: extents must be >= 2");
  }
  const Field2D gx = derivative_x(field);
  const Field2D gy = derivative_y(field);
  Field2D out(field.height(), field.width());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::hypot(gx[i], gy[i]);
  return out;
}

namespace {

struct Tap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

std::vector<Tap> corner_aligned_taps(std::size_t n, std::size_t factor) {
  const std::size_t m = n * factor;
  std::vector<Tap> taps(m);
  for (std::size_t o = 0; o < m; ++o) {
    if (n == 1) {
      taps[o] = {0, 0, 0.0};
      continue;
    }
    const double pos = static_cast<double>(o * (n - 1)) / static_cast<double>(m - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    if (lo >= n - 1) lo = n - 1;
    const std::size_t hi = lo + 1 < n ? lo + 1 : lo;
    taps[o] = {lo, hi, pos - static_cast<double>(lo)};
  }
  return taps;
}

}  // namespace

Field2D bilinear_upsample(const Field2D& field, std::size_t factor) {
  if (factor == 0) throw ArgumentError("bilinear_upsample: factor must be >= 1");
  if (factor == 1) return field;
  const auto ty = corner_aligned_taps(field.height(), factor);
  const auto tx = corner_aligned_taps(field.width(), factor);
  Field2D out(ty.size(), tx.size());
  for (std::size_t y = 0; y < ty.size(); ++y) {
    const auto [y0, y1, fy] = ty[y];
    for (std::size_t x = 0; x < tx.size(); ++x) {
      const auto [x0, x1, fx] = tx[x];
      // std::lerp stays inside [a, b], so the output never leaves the input envelope.
      const double top = std::lerp(field(y0, x0), field(y0, x1), fx);
      const double bottom = std::lerp(field(y1, x0), field(y1, x1), fx);
      out(y, x) = std::lerp(top, bottom, fy);
    }
  }
  return out;
}

}  // namespace speckle
