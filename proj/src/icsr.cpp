#include "speckle/icsr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "speckle/error.hpp"
#include "speckle/layers.hpp"
#include "speckle/rng.hpp"

namespace speckle {
namespace {

constexpr std::size_t kStages = 5;

void require_compatible(const SemanticEmbedding& p, const SemanticEmbedding& r, const char* what) {
  if (!p.same_shape(r)) throw DimensionError(std::string(what) + ": embeddings differ in shape");
}

void require_batch(const SemanticEmbedding& p, std::span<const BatchPoint> batch, const char* what) {
  if (batch.empty()) throw ArgumentError(std::string(what) + ": empty batch");
  for (const BatchPoint& b : batch) {
    if (b.channel >= p.channels() || b.row >= p.height() || b.col >= p.width()) {
      throw DimensionError(std::string(what) + ": batch point outside the embedding");
    }
  }
}

struct Cosine {
  double s;
  double dp;  // sqrt(|p|^2 + eps)
  double dr;
};

Cosine cosine(std::span<const double> p, std::span<const double> r, double eps) {
  double pr = 0.0, pp = 0.0, rr = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    pr += p[i] * r[i];
    pp += p[i] * p[i];
    rr += r[i] * r[i];
  }
  const double dp = std::sqrt(pp + eps), dr = std::sqrt(rr + eps);
  return {pr / (dp * dr), dp, dr};
}

// One stride-2 stage: every 2x2 patch of `in_width` channels -> out_width channels.
std::vector<Field2D> encode_stage(const std::vector<Field2D>& in, std::size_t out_width, Rng& rng) {
  const std::size_t h = in.front().height() / 2, w = in.front().width() / 2;
  const std::size_t fan_in = 4 * in.size();
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> weights(out_width * fan_in), bias(out_width);
  for (double& v : weights) v = rng.uniform(-bound, bound);
  for (double& v : bias) v = rng.uniform(-bound, bound);

  std::vector<Field2D> out(out_width, Field2D(h, w));
  std::vector<double> patch(fan_in);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t t = 0;
      for (const Field2D& f : in)
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) patch[t++] = f(2 * y + dy, 2 * x + dx);
      for (std::size_t j = 0; j < out_width; ++j) {
        double acc = bias[j];
        const double* row = &weights[j * fan_in];
        for (std::size_t i = 0; i < fan_in; ++i) acc += row[i] * patch[i];
        out[j](y, x) = activate(Activation::Softplus, acc);
      }
    }
  return out;
}

// The loss formula re-evaluated in extended precision with one input
// component shifted by `delta`: index < p.size() shifts v_P, otherwise theta.
long double extended_loss(const SemanticEmbedding& p, const SemanticEmbedding& r,
                          const LossConfig& cfg, std::span<const BatchPoint> batch,
                          std::size_t index, long double delta) {
  const std::size_t base = p.data().size();
  long double acc = 0.0L;
  for (const BatchPoint& b : batch) {
    const auto vp = p.vec(b.channel, b.row, b.col), vr = r.vec(b.channel, b.row, b.col);
    const std::size_t first = static_cast<std::size_t>(vp.data() - p.data().data());
    long double pr = 0.0L, pp = 0.0L, rr = 0.0L;
    for (std::size_t i = 0; i < vp.size(); ++i) {
      const long double x = vp[i] + (first + i == index ? delta : 0.0L);
      pr += x * vr[i];
      pp += x * x;
      rr += static_cast<long double>(vr[i]) * vr[i];
    }
    const long double s = pr / (std::sqrt(pp + cfg.eps) * std::sqrt(rr + cfg.eps));
    acc += std::pow(1.0L - s, static_cast<long double>(cfg.alpha));
  }
  long double theta2 = 0.0L;
  for (std::size_t i = 0; i < cfg.theta.size(); ++i) {
    const long double t = cfg.theta[i] + (base + i == index ? delta : 0.0L);
    theta2 += t * t;
  }
  return acc / static_cast<long double>(batch.size()) + cfg.lambda * theta2;
}

}  // namespace

SemanticEmbedding::SemanticEmbedding(std::size_t channels, std::size_t height, std::size_t width,
                                     std::size_t dim, double fill)
    : channels_(channels),
      height_(height),
      width_(width),
      dim_(dim),
      data_(channels * height * width * dim, fill) {
  if (dim == 0) throw DimensionError("SemanticEmbedding: dim must be >= 1");
}

std::span<double> SemanticEmbedding::vec(std::size_t c, std::size_t row, std::size_t col) noexcept {
  return {data_.data() + offset(c, row, col), dim_};
}

std::span<const double> SemanticEmbedding::vec(std::size_t c, std::size_t row,
                                               std::size_t col) const noexcept {
  return {data_.data() + offset(c, row, col), dim_};
}

bool SemanticEmbedding::same_shape(const SemanticEmbedding& o) const noexcept {
  return channels_ == o.channels_ && height_ == o.height_ && width_ == o.width_ && dim_ == o.dim_;
}

SemanticEmbedding semantic_encode(const Field2D& field, std::uint64_t seed, std::size_t dim) {
  constexpr std::size_t kDivisor = std::size_t{1} << kStages;
  if (dim == 0) throw DimensionError("semantic_encode: dim must be >= 1");
  if (field.height() == 0 || field.width() == 0 || field.height() % kDivisor != 0 ||
      field.width() % kDivisor != 0) {
    throw DimensionError("semantic_encode: both extents must be positive multiples of 32");
  }
  const std::size_t widths[kStages] = {8, 16, 32, 32, dim};
  Rng rng(seed);
  std::vector<Field2D> maps{field};
  for (std::size_t width : widths) maps = encode_stage(maps, width, rng);

  SemanticEmbedding e(1, maps.front().height(), maps.front().width(), dim);
  for (std::size_t y = 0; y < e.height(); ++y)
    for (std::size_t x = 0; x < e.width(); ++x) {
      auto v = e.vec(0, y, x);
      for (std::size_t j = 0; j < dim; ++j) v[j] = maps[j](y, x);
    }
  return e;
}

FeatureStack cosine_similarity_map(const SemanticEmbedding& p, const SemanticEmbedding& r,
                                   double eps) {
  require_compatible(p, r, "cosine_similarity_map");
  if (!(eps > 0.0)) throw ArgumentError("cosine_similarity_map: eps must be > 0");
  FeatureStack out(p.channels(), p.height(), p.width());
  for (std::size_t c = 0; c < p.channels(); ++c)
    for (std::size_t y = 0; y < p.height(); ++y)
      for (std::size_t x = 0; x < p.width(); ++x) out[c](y, x) = cosine(p.vec(c, y, x), r.vec(c, y, x), eps).s;
  return out;
}

void validate(const LossConfig& cfg) {
  if (!(cfg.eps > 0.0)) throw ConfigError("eps", "must be > 0");
  if (!(cfg.alpha >= 1.0)) throw ConfigError("alpha", "must be >= 1");
  if (!(cfg.lambda >= 0.0)) throw ConfigError("lambda", "must be >= 0");
}

double batch_loss_from_similarities(std::span<const double> s, const LossConfig& cfg) {
  validate(cfg);
  if (s.empty()) throw ArgumentError("batch_loss: empty batch");
  double acc = 0.0;
  for (double v : s) acc += std::pow(1.0 - v, cfg.alpha);
  double theta2 = 0.0;
  for (double t : cfg.theta) theta2 += t * t;
  return acc / static_cast<double>(s.size()) + cfg.lambda * theta2;
}

double batch_loss(const SemanticEmbedding& p, const SemanticEmbedding& r, const LossConfig& cfg,
                  std::span<const BatchPoint> batch) {
  require_compatible(p, r, "batch_loss");
  require_batch(p, batch, "batch_loss");
  std::vector<double> s;
  s.reserve(batch.size());
  for (const BatchPoint& b : batch) {
    s.push_back(cosine(p.vec(b.channel, b.row, b.col), r.vec(b.channel, b.row, b.col), cfg.eps).s);
  }
  return batch_loss_from_similarities(s, cfg);
}

LossGradient batch_loss_gradient(const SemanticEmbedding& p, const SemanticEmbedding& r,
                                 const LossConfig& cfg, std::span<const BatchPoint> batch) {
  validate(cfg);
  require_compatible(p, r, "batch_loss_gradient");
  require_batch(p, batch, "batch_loss_gradient");
  LossGradient g{SemanticEmbedding(p.channels(), p.height(), p.width(), p.dim()), {}};
  const double n = static_cast<double>(batch.size());
  for (const BatchPoint& b : batch) {
    const auto vp = p.vec(b.channel, b.row, b.col), vr = r.vec(b.channel, b.row, b.col);
    const Cosine c = cosine(vp, vr, cfg.eps);
    const double dl_ds = -(cfg.alpha / n) * std::pow(1.0 - c.s, cfg.alpha - 1.0);
    const double a = 1.0 / (c.dp * c.dr), bq = c.s / (c.dp * c.dp);
    auto out = g.d_p.vec(b.channel, b.row, b.col);
    for (std::size_t i = 0; i < vp.size(); ++i) out[i] += dl_ds * (vr[i] * a - bq * vp[i]);
  }
  g.d_theta.reserve(cfg.theta.size());
  for (double t : cfg.theta) g.d_theta.push_back(2.0 * cfg.lambda * t);
  return g;
}

GradientCheckReport icsr_gradient_check(int trials, std::uint64_t seed, double h) {
  if (trials < 1) throw ArgumentError("icsr_gradient_check: trials must be >= 1");
  if (!(h > 0.0)) throw ArgumentError("icsr_gradient_check: h must be > 0");
  GradientCheckReport report;
  report.trials = trials;
  auto rel = [](double a, double fd) {
    return std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-6});
  };
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng(seed).split(static_cast<std::uint64_t>(t));
    const std::size_t c = 1 + rng.below(3), hh = 1 + rng.below(3), ww = 1 + rng.below(3),
                      d = 1 + rng.below(8);
    SemanticEmbedding p(c, hh, ww, d), r(c, hh, ww, d);
    for (double& v : p.data()) v = rng.normal();
    for (double& v : r.data()) v = rng.normal();
    LossConfig cfg;
    cfg.alpha = rng.uniform(1.0, 3.0);
    cfg.lambda = rng.uniform(0.0, 0.5);
    cfg.theta.resize(1 + rng.below(4));
    for (double& v : cfg.theta) v = rng.normal();
    std::vector<BatchPoint> batch(1 + rng.below(6));
    for (BatchPoint& b : batch) b = {rng.below(c), rng.below(hh), rng.below(ww)};

    const LossGradient g = batch_loss_gradient(p, r, cfg, batch);
    const double loss = batch_loss(p, r, cfg, batch);
    const long double loss_ext = extended_loss(p, r, cfg, batch, SIZE_MAX, 0.0L);
    report.max_loss_deviation = std::max(
        report.max_loss_deviation,
        static_cast<double>(std::abs(loss - loss_ext) / std::max(1.0L, std::abs(loss_ext))));

    const std::size_t np = p.data().size();
    for (std::size_t i = 0; i < np + cfg.theta.size(); ++i) {
      const long double fd = (extended_loss(p, r, cfg, batch, i, h) -
                              extended_loss(p, r, cfg, batch, i, -static_cast<long double>(h))) /
                             (2.0L * h);
      const double analytic = i < np ? g.d_p.data()[i] : g.d_theta[i - np];
      report.max_rel_error = std::max(report.max_rel_error, rel(analytic, static_cast<double>(fd)));
      ++report.components;
    }
  }
  return report;
}

}  // namespace speckle
