#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "speckle/field.hpp"

namespace speckle {

using Complex = std::complex<double>;

// Complex H x W grid indexed by frequency bin (u = row, v = column).
class SpectralField {
 public:
  SpectralField() = default;
  SpectralField(std::size_t height, std::size_t width, Complex fill = {});

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }

  Complex& operator()(std::size_t u, std::size_t v) noexcept { return data_[u * width_ + v]; }
  Complex operator()(std::size_t u, std::size_t v) const noexcept {
    return data_[u * width_ + v];
  }
  Complex& operator[](std::size_t i) noexcept { return data_[i]; }
  Complex operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<Complex> values() noexcept { return data_; }
  std::span<const Complex> values() const noexcept { return data_; }

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<Complex> data_;
};

// In-place 1D DFT, X[k] = sum_n x[n] exp(-2 pi i k n / N). Radix-2 for powers of
// two, Bluestein's chirp-z otherwise. `inverse` flips the exponent sign and
// scales by 1/N.
void fft_inplace(std::span<Complex> data, bool inverse = false);

// Normalization convention: the forward transform is unnormalized and the
// inverse carries 1/(H W), so  sum |f|^2 = (1 / (H W)) sum |F|^2.
SpectralField dft2(const Field2D& field);
SpectralField dft2(const SpectralField& field);
// Real part of the inverse transform.
Field2D idft2(const SpectralField& spectrum);
SpectralField idft2_complex(const SpectralField& spectrum);

// Signed normalized frequency (cycles/sample) of bin k on an n-point grid:
// k/n for k <= n/2, (k - n)/n above.
double bin_frequency(std::size_t k, std::size_t n) noexcept;

}  // namespace speckle
