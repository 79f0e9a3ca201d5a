#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "speckle/field.hpp"

namespace speckle {

// Per (channel, row, col) a dim-length vector, stored channel-major then
// row-major with the vector components contiguous.
class SemanticEmbedding {
 public:
  SemanticEmbedding() = default;
  SemanticEmbedding(std::size_t channels, std::size_t height, std::size_t width, std::size_t dim,
                    double fill = 0.0);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<double> vec(std::size_t c, std::size_t row, std::size_t col) noexcept;
  std::span<const double> vec(std::size_t c, std::size_t row, std::size_t col) const noexcept;
  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool same_shape(const SemanticEmbedding& o) const noexcept;
  friend bool operator==(const SemanticEmbedding&, const SemanticEmbedding&) = default;

 private:
  std::size_t offset(std::size_t c, std::size_t row, std::size_t col) const noexcept {
    return ((c * height_ + row) * width_ + col) * dim_;
  }

  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

// Untrained encoder: five stride-2 stages, each a seeded linear map of every
// 2x2 patch followed by softplus, with widths 1 -> 8 -> 16 -> 32 -> 32 -> dim.
// Both extents must be multiples of 32; the result has one channel at 1/32
// of the input size.
SemanticEmbedding semantic_encode(const Field2D& field, std::uint64_t seed, std::size_t dim);

// s = <p, r> / (sqrt(|p|^2 + eps) sqrt(|r|^2 + eps)), one field per channel.
FeatureStack cosine_similarity_map(const SemanticEmbedding& p, const SemanticEmbedding& r,
                                   double eps);

struct LossConfig {
  double eps = 1e-8;
  double alpha = 1.0;
  double lambda = 1e-4;
  std::vector<double> theta;  // parameters under the L2 penalty
};

void validate(const LossConfig& cfg);

struct BatchPoint {
  std::size_t channel = 0;
  std::size_t row = 0;
  std::size_t col = 0;
};

// (1/N) sum_j (1 - s_j)^alpha + lambda |theta|^2
double batch_loss_from_similarities(std::span<const double> s, const LossConfig& cfg);
double batch_loss(const SemanticEmbedding& p, const SemanticEmbedding& r, const LossConfig& cfg,
                  std::span<const BatchPoint> batch);

struct LossGradient {
  SemanticEmbedding d_p;       // dL/dv_P; zero away from the batch
  std::vector<double> d_theta;  // 2 lambda theta
};

LossGradient batch_loss_gradient(const SemanticEmbedding& p, const SemanticEmbedding& r,
                                 const LossConfig& cfg, std::span<const BatchPoint> batch);

struct GradientCheckReport {
  int trials = 0;
  std::size_t components = 0;
  double max_rel_error = 0.0;
  double max_loss_deviation = 0.0;  // batch_loss vs the extended-precision formula
};

// Compares batch_loss_gradient with central differences of the loss on seeded
// random embeddings, batches and loss settings. The differences are taken on
// an extended-precision evaluation of the loss formula, which keeps their
// round-off (about eps * L / h) below the tolerance even for components near
// zero. The relative error of a component is |a - fd| / max(|a|, |fd|, 1e-6).
GradientCheckReport icsr_gradient_check(int trials, std::uint64_t seed, double h = 1e-6);

}  // namespace speckle
