#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace speckle {

enum class Activation { Relu, Softplus };

std::string_view activation_name(Activation a) noexcept;  // "relu", "softplus"
Activation parse_activation(std::string_view name);       // ArgumentError on unknown names

double activate(Activation a, double x) noexcept;
double sigmoid(double x) noexcept;

// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) noexcept { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data[r * cols + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

}  // namespace speckle
