#pragma once

#include <cstdint>
#include <vector>

#include "speckle/field.hpp"
#include "speckle/layers.hpp"
#include "speckle/tensor_io.hpp"

namespace speckle {

struct UpsampleSpec {
  std::size_t levels = 2;
  std::size_t channels = 4;
  std::size_t kernel_size = 3;  // odd
  Activation activation = Activation::Softplus;
  std::uint64_t seed = 0;
};

// Level i (counted from the coarsest) smooths with kappa_up[i], shared across
// channels; the output projection convolves channel c with kappa_out[c].
struct UpsampleParams {
  std::vector<Field2D> kappa_up;   // one per level
  std::vector<Field2D> kappa_out;  // one per channel
  double b_out = 0.0;
  Activation activation = Activation::Softplus;
  std::uint64_t seed = 0;

  std::size_t levels() const noexcept { return kappa_up.size(); }
  std::size_t channels() const noexcept { return kappa_out.size(); }
  friend bool operator==(const UpsampleParams&, const UpsampleParams&) = default;
};

// Entries uniform in +-1/sqrt(fan_in), fan_in = kernel area (times C for kappa_out).
UpsampleParams generate_upsample_params(const UpsampleSpec& spec);
void validate(const UpsampleParams& p);

TensorBundle to_bundle(const UpsampleParams& p);
UpsampleParams upsample_params_from_bundle(const TensorBundle& bundle);

// phi(kappa_up[level] * (bilinear_upsample(z, 2) + z_prev)) per channel;
// z_prev must be exactly twice the size of z.
FeatureStack upsample_level(const FeatureStack& z, const FeatureStack& z_prev,
                            const UpsampleParams& p, std::size_t level);

// sum_c kappa_out[c] * f_c + b_out, no activation.
Field2D output_projection(const FeatureStack& f, const UpsampleParams& p);

// pyramid[0] is the coarsest map and pyramid[i] doubles pyramid[i - 1]; needs
// levels + 1 entries. Each level's output is carried into the next, and the
// finest result is projected to pixels.
Field2D decode(const std::vector<FeatureStack>& pyramid, const UpsampleParams& p);

}  // namespace speckle
