#include "speckle/spectral.hpp"

#include <bit>
#include <cmath>
#include <map>
#include <numbers>

#include "speckle/error.hpp"

namespace speckle {
namespace {

// exp(-2 pi i k / n) for k in [0, n/2); cached per length.
const std::vector<Complex>& radix2_twiddles(std::size_t n) {
  thread_local std::map<std::size_t, std::vector<Complex>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<Complex> w(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    w[k] = {std::cos(angle), std::sin(angle)};
  }
  return cache.emplace(n, std::move(w)).first->second;
}

void fft_radix2(std::span<Complex> a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const auto& w = radix2_twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex t = w[k * stride] * a[start + k + half];
        a[start + k + half] = a[start + k] - t;
        a[start + k] += t;
      }
    }
  }
}

struct BluesteinPlan {
  std::size_t m = 0;
  std::vector<Complex> chirp;       // exp(-i pi k^2 / n), k in [0, n)
  std::vector<Complex> filter_fft;  // FFT of conj(chirp) laid out circularly
};

const BluesteinPlan& bluestein_plan(std::size_t n) {
  thread_local std::map<std::size_t, BluesteinPlan> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  BluesteinPlan plan;
  plan.m = std::bit_ceil(2 * n - 1);
  plan.chirp.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle small and exact.
    const std::size_t k2 = (k * k) % (2 * n);
    const double angle = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    plan.chirp[k] = {std::cos(angle), std::sin(angle)};
  }
  plan.filter_fft.assign(plan.m, Complex{});
  plan.filter_fft[0] = std::conj(plan.chirp[0]);
  for (std::size_t k = 1; k < n; ++k) {
    plan.filter_fft[k] = std::conj(plan.chirp[k]);
    plan.filter_fft[plan.m - k] = std::conj(plan.chirp[k]);
  }
  fft_radix2(plan.filter_fft);
  return cache.emplace(n, std::move(plan)).first->second;
}

void fft_bluestein(std::span<Complex> a) {
  const std::size_t n = a.size();
  const auto& plan = bluestein_plan(n);
  std::vector<Complex> buf(plan.m, Complex{});
  for (std::size_t k = 0; k < n; ++k) buf[k] = a[k] * plan.chirp[k];
  fft_radix2(buf);
  for (std::size_t k = 0; k < plan.m; ++k) buf[k] *= plan.filter_fft[k];
  // Inverse radix-2 via conjugation.
  for (auto& v : buf) v = std::conj(v);
  fft_radix2(buf);
  const double scale = 1.0 / static_cast<double>(plan.m);
  for (std::size_t k = 0; k < n; ++k) a[k] = std::conj(buf[k]) * scale * plan.chirp[k];
}

void transform_rows_and_cols(SpectralField& s, bool inverse) {
  const std::size_t h = s.height();
  const std::size_t w = s.width();
  auto all = s.values();
  for (std::size_t r = 0; r < h; ++r) fft_inplace(all.subspan(r * w, w), inverse);
  std::vector<Complex> column(h);
  for (std::size_t c = 0; c < w; ++c) {
    for (std::size_t r = 0; r < h; ++r) column[r] = s(r, c);
    fft_inplace(column, inverse);
    for (std::size_t r = 0; r < h; ++r) s(r, c) = column[r];
  }
}

}  // namespace

SpectralField::SpectralField(std::size_t height, std::size_t width, Complex fill)
    : height_(height), width_(width) {
  if (height == 0 || width == 0) {
    throw DimensionError("SpectralField: height and width must be positive");
  }
  data_.assign(height * width, fill);
}

void fft_inplace(std::span<Complex> data, bool inverse) {
  const std::size_t n = data.size();
  if (n == 0) throw DimensionError("fft: empty input");
  if (n == 1) return;
  if (inverse) {
    for (auto& v : data) v = std::conj(v);
  }
  if (std::has_single_bit(n)) {
    fft_radix2(data);
  } else {
    fft_bluestein(data);
  }
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& v : data) v = std::conj(v) * scale;
  }
}

SpectralField dft2(const Field2D& field) {
  if (field.empty()) throw DimensionError("dft2: empty field");
  SpectralField s(field.height(), field.width());
  for (std::size_t i = 0; i < field.size(); ++i) s[i] = {field[i], 0.0};
  transform_rows_and_cols(s, false);
  return s;
}

SpectralField dft2(const SpectralField& field) {
  if (field.size() == 0) throw DimensionError("dft2: empty spectrum");
  SpectralField s = field;
  transform_rows_and_cols(s, false);
  return s;
}

SpectralField idft2_complex(const SpectralField& spectrum) {
  if (spectrum.size() == 0) throw DimensionError("idft2: empty spectrum");
  SpectralField s = spectrum;
  transform_rows_and_cols(s, true);
  return s;
}

Field2D idft2(const SpectralField& spectrum) {
  const SpectralField s = idft2_complex(spectrum);
  Field2D out(s.height(), s.width());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[i].real();
  return out;
}

double bin_frequency(std::size_t k, std::size_t n) noexcept {
  const auto kd = static_cast<double>(k);
  const auto nd = static_cast<double>(n);
  return (2 * k <= n) ? kd / nd : (kd - nd) / nd;
}

}  // namespace speckle
