#include "speckle/layers.hpp"

#include <cmath>
#include <string>

#include "speckle/error.hpp"

namespace speckle {

std::string_view activation_name(Activation a) noexcept {
  return a == Activation::Relu ? "relu" : "softplus";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::Relu;
  if (name == "softplus") return Activation::Softplus;
  throw ArgumentError("unknown activation '" + std::string(name) + "' (expected relu or softplus)");
}

double activate(Activation a, double x) noexcept {
  if (a == Activation::Relu) return x > 0.0 ? x : 0.0;
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace speckle
