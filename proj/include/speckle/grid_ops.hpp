#pragma once

#include <cstddef>
#include <span>

#include "speckle/field.hpp"

namespace speckle {

// Half-sample symmetric reflection of index i onto [0, n):
// ... 1 0 | 0 1 2 ... n-1 | n-1 n-2 ...  (period 2n, so any offset is valid).
std::size_t reflect_index(std::ptrdiff_t i, std::size_t n) noexcept;

// Same-size 2D convolution, out(y,x) = sum_{i,j} k(i,j) f(y-i, x-j) with the
// kernel centred on its middle tap. Borders use reflect_index. Throws
// KernelError if either kernel extent is even.
Field2D convolve2(const Field2D& field, const Field2D& kernel);

// convolve2 with the rank-one kernel k(i,j) = column_taps[i] * row_taps[j].
Field2D convolve_separable(const Field2D& field, std::span<const double> column_taps,
                           std::span<const double> row_taps);

// First differences along columns (x) or rows (y): central in the interior,
// one-sided forward/backward in the first/last column (row).
Field2D derivative_x(const Field2D& field);
Field2D derivative_y(const Field2D& field);

// d2f/dxdy as derivative_y(derivative_x(f)). Interior points reduce to the
// four-corner stencil (f[y+1,x+1] - f[y+1,x-1] - f[y-1,x+1] + f[y-1,x-1]) / 4.
// Requires both extents >= 3.
Field2D mixed_second_derivative(const Field2D& field);

// sqrt(dx^2 + dy^2) from derivative_x / derivative_y. Requires extents >= 2.
Field2D grad_magnitude(const Field2D& field);

// Corner-aligned bilinear resize by an integer factor: output index o maps to
// source coordinate o (n - 1) / (factor n - 1), so [0, 1] x2 -> [0, 1/3, 2/3, 1].
Field2D bilinear_upsample(const Field2D& field, std::size_t factor);

}  // namespace speckle
