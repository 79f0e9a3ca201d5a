#pragma once

#include <cstdint>
#include <vector>

#include "speckle/field.hpp"
#include "speckle/layers.hpp"
#include "speckle/tensor_io.hpp"

namespace speckle {

// Which features enter the frequency split: the spatial-diffusion output
// alone, or the channel concatenation of both path outputs.
enum class SplitInput { SpatialPath, BothPaths };

struct BlockSpec {
  std::size_t channels = 4;     // C
  std::size_t attn_dim = 4;     // d; the full chain needs d == C
  std::size_t heads = 2;        // must divide d
  std::size_t kernel_size = 3;  // odd
  std::size_t gate_hidden = 4;
  Activation activation = Activation::Softplus;
  double freq_cutoff = 0.25;  // cycles / pixel, in (0, 0.5]
  SplitInput split_input = SplitInput::SpatialPath;
  std::uint64_t seed = 0;
};

// Weights of one perturbation-dissipation block. Generated from a seed with
// every entry uniform in +-1/sqrt(fan_in).
struct BlockParams {
  std::size_t heads = 1;
  std::vector<Field2D> kappa_a;  // per channel, odd square
  std::vector<double> b_a;       // per channel
  Matrix w_q, w_k, w_v;          // C x d
  std::vector<double> b_b;       // d
  std::vector<double> w1, w2;    // gate chain 1 -> hidden -> 1
  Activation activation = Activation::Softplus;
  double freq_cutoff = 0.25;
  SplitInput split_input = SplitInput::SpatialPath;
  std::uint64_t seed = 0;

  std::size_t channels() const noexcept { return kappa_a.size(); }
  std::size_t attn_dim() const noexcept { return w_q.cols; }
  friend bool operator==(const BlockParams&, const BlockParams&) = default;
};

BlockParams generate_block_params(const BlockSpec& spec);
// Throws DimensionError / KernelError / ArgumentError on inconsistent weights.
void validate(const BlockParams& p);

TensorBundle to_bundle(const BlockParams& p);
BlockParams block_params_from_bundle(const TensorBundle& bundle);

// Hard radial low-pass indicator over DFT bins: 1 where the normalized
// frequency radius is <= cutoff, else 0.
class FrequencyMask {
 public:
  FrequencyMask(std::size_t height, std::size_t width, double cutoff);
  // Arbitrary mask; rejected (ArgumentError) unless values lie in [0, 1] and
  // the mask is symmetric under frequency negation.
  explicit FrequencyMask(Field2D low);

  const Field2D& low() const noexcept { return low_; }

 private:
  Field2D low_;
};

struct BandSplit {
  FeatureStack low;
  FeatureStack high;
};

// F_A = phi(kappa_A * D_xy(I) + b_A) per channel.
FeatureStack spatial_diffusion_path(const FeatureStack& input, const BlockParams& p);

// Row-stochastic N x N softmax attention matrix over the N = H W pixels.
Matrix semantic_attention(const FeatureStack& input, const BlockParams& p);
// F_B = phi(A V + b_B), d output channels.
FeatureStack semantic_attenuation_path(const FeatureStack& input, const BlockParams& p);

BandSplit frequency_split(const FeatureStack& features, const FrequencyMask& mask);

// alpha_c = sigmoid(sum_j w2_j phi(w1_j s_c)), s_c the mean gradient magnitude
// of low_c + high_c. With 2C band channels (both-paths split) channel c pools
// bands c and C + c.
std::vector<double> channel_gate_alpha(const BandSplit& bands, std::size_t channels,
                                       const BlockParams& p);
// F_A' = F_A (1 + alpha_c)
FeatureStack channel_gate(const FeatureStack& f_a, const BandSplit& bands, const BlockParams& p);

// m_c = sigmoid(mean(F_A'_c + F_B_c)); F~_c = m_c (F_A'_c + F_B_c)
std::vector<double> fusion_weights(const FeatureStack& f_a_gated, const FeatureStack& f_b);
FeatureStack channel_attention_fuse(const FeatureStack& f_a_gated, const FeatureStack& f_b);

// Multi-head attention whose scores pair each head's query and key with their
// central differences along image rows:
//   score = exp(<dQ(x), K(x')>) + <Q(x), dK(x')>,  A = score / (sum |score| + 1e-8)
// Z = concat_h(A_h V_h) + F~.
FeatureStack derivative_attention(const FeatureStack& fused, const BlockParams& p);

struct ChainTrace {
  FeatureStack f_a;
  FeatureStack f_b;
  BandSplit bands;
  FeatureStack f_a_gated;
  FeatureStack fused;
  FeatureStack z;
};

ChainTrace trace_dissipation_chain(const FeatureStack& input, const BlockParams& p);
FeatureStack dissipation_chain(const FeatureStack& input, const BlockParams& p);

}  // namespace speckle
