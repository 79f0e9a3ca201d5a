#include "speckle/dissipation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "speckle/error.hpp"
#include "speckle/grid_ops.hpp"
#include "speckle/rng.hpp"
#include "speckle/spectral.hpp"

namespace speckle {
namespace {

constexpr double kImagTolerance = 1e-10;
constexpr double kScoreEps = 1e-8;

std::vector<double> uniform_vector(Rng& rng, std::size_t n, double fan_in) {
  const double bound = 1.0 / std::sqrt(fan_in);
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-bound, bound);
  return v;
}

Matrix uniform_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  m.data = uniform_vector(rng, rows * cols, static_cast<double>(rows));
  return m;
}

void require_input(const FeatureStack& input, const BlockParams& p, const char* what) {
  if (input.channels() != p.channels()) {
    throw DimensionError(std::string(what) + ": input has " + std::to_string(input.channels()) +
                         " channels, parameters expect " + std::to_string(p.channels()));
  }
  if (input.height() == 0 || input.width() == 0) {
    throw DimensionError(std::string(what) + ": empty input");
  }
}

// Pixel-major N x d projection: out[x * d + j] = sum_c input_c(x) w(c, j).
std::vector<double> project(const FeatureStack& input, const Matrix& w) {
  const std::size_t n = input.height() * input.width();
  std::vector<double> out(n * w.cols, 0.0);
  for (std::size_t c = 0; c < w.rows; ++c) {
    const Field2D& f = input[c];
    for (std::size_t x = 0; x < n; ++x) {
      const double v = f[x];
      for (std::size_t j = 0; j < w.cols; ++j) out[x * w.cols + j] += v * w(c, j);
    }
  }
  return out;
}

// Row-axis central difference of every column of a pixel-major N x d block.
std::vector<double> row_derivative(const std::vector<double>& block, std::size_t d,
                                   std::size_t height, std::size_t width) {
  std::vector<double> out(block.size());
  Field2D plane(height, width);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t x = 0; x < plane.size(); ++x) plane[x] = block[x * d + j];
    const Field2D dp = derivative_x(plane);
    for (std::size_t x = 0; x < plane.size(); ++x) out[x * d + j] = dp[x];
  }
  return out;
}

Tensor tensor_of(std::vector<std::uint32_t> dims, std::vector<double> data) {
  return Tensor{std::move(dims), std::move(data)};
}

const Tensor& entry(const TensorBundle& b, const char* name, std::size_t ndim) {
  const Tensor& t = bundle_entry(b, name);
  if (t.dims.size() != ndim) throw FormatError(std::string("block bundle: bad rank for ") + name);
  return t;
}

}  // namespace

BlockParams generate_block_params(const BlockSpec& spec) {
  if (spec.channels == 0 || spec.attn_dim == 0 || spec.heads == 0 || spec.gate_hidden == 0) {
    throw DimensionError("generate_block_params: channels, attn_dim, heads and gate_hidden must be >= 1");
  }
  if (spec.kernel_size % 2 == 0) throw KernelError("generate_block_params: kernel_size must be odd");
  Rng rng(spec.seed);
  BlockParams p;
  p.heads = spec.heads;
  p.activation = spec.activation;
  p.freq_cutoff = spec.freq_cutoff;
  p.split_input = spec.split_input;
  p.seed = spec.seed;
  const std::size_t k = spec.kernel_size;
  const double kernel_fan_in = static_cast<double>(k * k);
  for (std::size_t c = 0; c < spec.channels; ++c) {
    p.kappa_a.emplace_back(k, k, uniform_vector(rng, k * k, kernel_fan_in));
  }
  p.b_a = uniform_vector(rng, spec.channels, kernel_fan_in);
  p.w_q = uniform_matrix(rng, spec.channels, spec.attn_dim);
  p.w_k = uniform_matrix(rng, spec.channels, spec.attn_dim);
  p.w_v = uniform_matrix(rng, spec.channels, spec.attn_dim);
  p.b_b = uniform_vector(rng, spec.attn_dim, static_cast<double>(spec.channels));
  p.w1 = uniform_vector(rng, spec.gate_hidden, 1.0);
  p.w2 = uniform_vector(rng, spec.gate_hidden, static_cast<double>(spec.gate_hidden));
  validate(p);
  return p;
}

void validate(const BlockParams& p) {
  const std::size_t c = p.channels();
  if (c == 0) throw DimensionError("BlockParams: no channels");
  for (const Field2D& k : p.kappa_a) {
    if (k.height() % 2 == 0 || k.width() % 2 == 0) throw KernelError("BlockParams: kappa_A must be odd");
  }
  if (p.b_a.size() != c) throw DimensionError("BlockParams: b_A length must equal channels");
  const std::size_t d = p.w_q.cols;
  if (d == 0) throw DimensionError("BlockParams: attention dimension must be >= 1");
  for (const Matrix* w : {&p.w_q, &p.w_k, &p.w_v}) {
    if (w->rows != c || w->cols != d || w->data.size() != c * d) {
      throw DimensionError("BlockParams: W_Q, W_K, W_V must all be channels x attn_dim");
    }
  }
  if (p.b_b.size() != d) throw DimensionError("BlockParams: b_B length must equal attn_dim");
  if (p.w1.empty() || p.w1.size() != p.w2.size()) {
    throw DimensionError("BlockParams: gate weights W_1, W_2 must share a non-zero length");
  }
  if (p.heads == 0) throw ArgumentError("BlockParams: heads must be >= 1");
  if (!(p.freq_cutoff > 0.0 && p.freq_cutoff <= 0.5)) {
    throw ArgumentError("BlockParams: freq_cutoff must be in (0, 0.5]");
  }
}

TensorBundle to_bundle(const BlockParams& p) {
  validate(p);
  const auto c = static_cast<std::uint32_t>(p.channels());
  const auto d = static_cast<std::uint32_t>(p.attn_dim());
  const auto kh = static_cast<std::uint32_t>(p.kappa_a.front().height());
  const auto kw = static_cast<std::uint32_t>(p.kappa_a.front().width());
  std::vector<double> kappa;
  for (const Field2D& k : p.kappa_a) {
    if (k.height() != kh || k.width() != kw) throw DimensionError("to_bundle: kernels differ in size");
    kappa.insert(kappa.end(), k.values().begin(), k.values().end());
  }
  const double config[] = {static_cast<double>(p.heads),
                           p.activation == Activation::Relu ? 0.0 : 1.0,
                           p.freq_cutoff,
                           p.split_input == SplitInput::SpatialPath ? 0.0 : 1.0,
                           static_cast<double>(p.seed & 0xffffffffu),
                           static_cast<double>(p.seed >> 32)};
  const auto hidden = static_cast<std::uint32_t>(p.w1.size());
  return {{"kappa_A", tensor_of({c, kh, kw}, std::move(kappa))},
          {"b_A", tensor_of({c}, p.b_a)},
          {"W_Q", tensor_of({c, d}, p.w_q.data)},
          {"W_K", tensor_of({c, d}, p.w_k.data)},
          {"W_V", tensor_of({c, d}, p.w_v.data)},
          {"b_B", tensor_of({d}, p.b_b)},
          {"W_1", tensor_of({hidden}, p.w1)},
          {"W_2", tensor_of({hidden}, p.w2)},
          {"config", tensor_of({6}, std::vector<double>(std::begin(config), std::end(config)))}};
}

BlockParams block_params_from_bundle(const TensorBundle& bundle) {
  BlockParams p;
  const Tensor& kappa = entry(bundle, "kappa_A", 3);
  const std::size_t kk = std::size_t{kappa.dims[1]} * kappa.dims[2];
  for (std::uint32_t c = 0; c < kappa.dims[0]; ++c) {
    p.kappa_a.emplace_back(kappa.dims[1], kappa.dims[2],
                           std::vector<double>(kappa.data.begin() + static_cast<std::ptrdiff_t>(c * kk),
                                               kappa.data.begin() + static_cast<std::ptrdiff_t>((c + 1) * kk)));
  }
  p.b_a = entry(bundle, "b_A", 1).data;
  auto matrix = [&](const char* name) {
    const Tensor& t = entry(bundle, name, 2);
    Matrix m(t.dims[0], t.dims[1]);
    m.data = t.data;
    return m;
  };
  p.w_q = matrix("W_Q");
  p.w_k = matrix("W_K");
  p.w_v = matrix("W_V");
  p.b_b = entry(bundle, "b_B", 1).data;
  p.w1 = entry(bundle, "W_1", 1).data;
  p.w2 = entry(bundle, "W_2", 1).data;
  const Tensor& cfg = entry(bundle, "config", 1);
  if (cfg.data.size() != 6) throw FormatError("block bundle: config must hold 6 values");
  p.heads = static_cast<std::size_t>(cfg.data[0]);
  p.activation = cfg.data[1] == 0.0 ? Activation::Relu : Activation::Softplus;
  p.freq_cutoff = cfg.data[2];
  p.split_input = cfg.data[3] == 0.0 ? SplitInput::SpatialPath : SplitInput::BothPaths;
  p.seed = static_cast<std::uint64_t>(cfg.data[4]) | (static_cast<std::uint64_t>(cfg.data[5]) << 32);
  validate(p);
  return p;
}

FrequencyMask::FrequencyMask(std::size_t height, std::size_t width, double cutoff)
    : low_(height, width) {
  if (height == 0 || width == 0) throw DimensionError("FrequencyMask: empty grid");
  if (!(cutoff > 0.0 && cutoff <= 0.5)) throw ArgumentError("FrequencyMask: cutoff must be in (0, 0.5]");
  for (std::size_t u = 0; u < height; ++u)
    for (std::size_t v = 0; v < width; ++v) {
      const double r = std::hypot(bin_frequency(u, height), bin_frequency(v, width));
      low_(u, v) = r <= cutoff ? 1.0 : 0.0;
    }
}

FrequencyMask::FrequencyMask(Field2D low) : low_(std::move(low)) {
  const std::size_t h = low_.height(), w = low_.width();
  if (h == 0 || w == 0) throw DimensionError("FrequencyMask: empty grid");
  for (std::size_t u = 0; u < h; ++u)
    for (std::size_t v = 0; v < w; ++v) {
      const double m = low_(u, v);
      if (!(m >= 0.0 && m <= 1.0)) throw ArgumentError("FrequencyMask: values must lie in [0, 1]");
      if (m != low_((h - u) % h, (w - v) % w)) {
        throw ArgumentError("FrequencyMask: mask must be symmetric under frequency negation");
      }
    }
}

FeatureStack spatial_diffusion_path(const FeatureStack& input, const BlockParams& p) {
  validate(p);
  require_input(input, p, "spatial_diffusion_path");
  std::vector<Field2D> channels;
  for (std::size_t c = 0; c < input.channels(); ++c) {
    Field2D f = convolve2(mixed_second_derivative(input[c]), p.kappa_a[c]);
    for (double& v : f.values()) v = activate(p.activation, v + p.b_a[c]);
    channels.push_back(std::move(f));
  }
  return FeatureStack(std::move(channels));
}

Matrix semantic_attention(const FeatureStack& input, const BlockParams& p) {
  validate(p);
  require_input(input, p, "semantic_attention");
  const std::size_t n = input.height() * input.width(), d = p.attn_dim();
  const std::vector<double> q = project(input, p.w_q), k = project(input, p.w_k);
  Matrix a(n, n);
  for (std::size_t x = 0; x < n; ++x) {
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t xp = 0; xp < n; ++xp) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += q[x * d + j] * k[xp * d + j];
      a(x, xp) = s;
      peak = std::max(peak, s);
    }
    double total = 0.0;
    for (std::size_t xp = 0; xp < n; ++xp) total += (a(x, xp) = std::exp(a(x, xp) - peak));
    for (std::size_t xp = 0; xp < n; ++xp) a(x, xp) /= total;
  }
  return a;
}

FeatureStack semantic_attenuation_path(const FeatureStack& input, const BlockParams& p) {
  const Matrix a = semantic_attention(input, p);
  const std::size_t n = a.rows, d = p.attn_dim();
  const std::vector<double> v = project(input, p.w_v);
  FeatureStack out(d, input.height(), input.width());
  std::vector<double> acc(d);
  for (std::size_t x = 0; x < n; ++x) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t xp = 0; xp < n; ++xp) {
      const double w = a(x, xp);
      for (std::size_t j = 0; j < d; ++j) acc[j] += w * v[xp * d + j];
    }
    for (std::size_t j = 0; j < d; ++j) out[j][x] = activate(p.activation, acc[j] + p.b_b[j]);
  }
  return out;
}

BandSplit frequency_split(const FeatureStack& features, const FrequencyMask& mask) {
  const Field2D& chi = mask.low();
  if (features.height() != chi.height() || features.width() != chi.width()) {
    throw DimensionError("frequency_split: mask shape does not match the features");
  }
  std::vector<Field2D> low, high;
  for (const Field2D& f : features) {
    const SpectralField spec = dft2(f);
    SpectralField lo = spec, hi = spec;
    for (std::size_t i = 0; i < spec.size(); ++i) {
      lo[i] *= chi[i];
      hi[i] *= 1.0 - chi[i];
    }
    const SpectralField lo_t = idft2_complex(lo), hi_t = idft2_complex(hi);
    const double scale = std::max(1.0, std::max(std::abs(max_value(f)), std::abs(min_value(f))));
    Field2D l(f.height(), f.width()), h(f.height(), f.width());
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (std::abs(lo_t[i].imag()) > kImagTolerance * scale ||
          std::abs(hi_t[i].imag()) > kImagTolerance * scale) {
        throw std::logic_error("frequency_split: band has a non-negligible imaginary part");
      }
      l[i] = lo_t[i].real();
      h[i] = hi_t[i].real();
    }
    low.push_back(std::move(l));
    high.push_back(std::move(h));
  }
  return {FeatureStack(std::move(low)), FeatureStack(std::move(high))};
}

std::vector<double> channel_gate_alpha(const BandSplit& bands, std::size_t channels,
                                       const BlockParams& p) {
  require_same_shape(bands.low, bands.high, "channel_gate");
  const std::size_t nb = bands.low.channels();
  if (nb != channels && nb != 2 * channels) {
    throw DimensionError("channel_gate: band count must be C or 2C");
  }
  auto statistic = [&](std::size_t b) {
    const Field2D dx = derivative_x(bands.low[b]) + derivative_x(bands.high[b]);
    const Field2D dy = derivative_y(bands.low[b]) + derivative_y(bands.high[b]);
    double acc = 0.0;
    for (std::size_t i = 0; i < dx.size(); ++i) acc += std::hypot(dx[i], dy[i]);
    return acc / static_cast<double>(dx.size());
  };
  std::vector<double> alpha(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const double s = nb == channels ? statistic(c) : 0.5 * (statistic(c) + statistic(channels + c));
    double z = 0.0;
    for (std::size_t j = 0; j < p.w1.size(); ++j) z += p.w2[j] * activate(p.activation, p.w1[j] * s);
    alpha[c] = sigmoid(z);
  }
  return alpha;
}

FeatureStack channel_gate(const FeatureStack& f_a, const BandSplit& bands, const BlockParams& p) {
  if (f_a.height() != bands.low.height() || f_a.width() != bands.low.width()) {
    throw DimensionError("channel_gate: band shape does not match F_A");
  }
  const std::vector<double> alpha = channel_gate_alpha(bands, f_a.channels(), p);
  FeatureStack out = f_a;
  for (std::size_t c = 0; c < out.channels(); ++c) out[c] *= 1.0 + alpha[c];
  return out;
}

std::vector<double> fusion_weights(const FeatureStack& f_a_gated, const FeatureStack& f_b) {
  require_same_shape(f_a_gated, f_b, "channel_attention_fuse");
  std::vector<double> m(f_b.channels());
  for (std::size_t c = 0; c < m.size(); ++c) m[c] = sigmoid(mean(f_a_gated[c] + f_b[c]));
  return m;
}

FeatureStack channel_attention_fuse(const FeatureStack& f_a_gated, const FeatureStack& f_b) {
  const std::vector<double> m = fusion_weights(f_a_gated, f_b);
  std::vector<Field2D> out;
  for (std::size_t c = 0; c < m.size(); ++c) out.push_back(m[c] * (f_a_gated[c] + f_b[c]));
  return FeatureStack(std::move(out));
}

FeatureStack derivative_attention(const FeatureStack& fused, const BlockParams& p) {
  validate(p);
  require_input(fused, p, "derivative_attention");
  const std::size_t d = p.attn_dim(), heads = p.heads;
  if (d % heads != 0) throw ArgumentError("derivative_attention: heads must divide the attention dimension");
  if (d != fused.channels()) {
    throw DimensionError("derivative_attention: residual needs attn_dim == channels");
  }
  const std::size_t h = fused.height(), w = fused.width(), n = h * w, g = d / heads;
  const std::vector<double> q = project(fused, p.w_q), k = project(fused, p.w_k),
                            v = project(fused, p.w_v);
  const std::vector<double> dq = row_derivative(q, d, h, w), dk = row_derivative(k, d, h, w);

  FeatureStack z = fused;
  std::vector<double> score(n), acc(g);
  for (std::size_t head = 0; head < heads; ++head) {
    const std::size_t off = head * g;
    for (std::size_t x = 0; x < n; ++x) {
      double norm = 0.0;
      for (std::size_t xp = 0; xp < n; ++xp) {
        double lin = 0.0, ex = 0.0;
        for (std::size_t j = off; j < off + g; ++j) {
          ex += dq[x * d + j] * k[xp * d + j];
          lin += q[x * d + j] * dk[xp * d + j];
        }
        score[xp] = std::exp(ex) + lin;
        norm += std::abs(score[xp]);
      }
      norm += kScoreEps;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t xp = 0; xp < n; ++xp)
        for (std::size_t j = 0; j < g; ++j) acc[j] += score[xp] * v[xp * d + off + j];
      for (std::size_t j = 0; j < g; ++j) z[off + j][x] += acc[j] / norm;
    }
  }
  return z;
}

ChainTrace trace_dissipation_chain(const FeatureStack& input, const BlockParams& p) {
  ChainTrace t;
  t.f_a = spatial_diffusion_path(input, p);
  t.f_b = semantic_attenuation_path(input, p);
  const FrequencyMask mask(input.height(), input.width(), p.freq_cutoff);
  if (p.split_input == SplitInput::SpatialPath) {
    t.bands = frequency_split(t.f_a, mask);
  } else {
    std::vector<Field2D> both(t.f_a.begin(), t.f_a.end());
    both.insert(both.end(), t.f_b.begin(), t.f_b.end());
    t.bands = frequency_split(FeatureStack(std::move(both)), mask);
  }
  t.f_a_gated = channel_gate(t.f_a, t.bands, p);
  t.fused = channel_attention_fuse(t.f_a_gated, t.f_b);
  t.z = derivative_attention(t.fused, p);
  return t;
}

FeatureStack dissipation_chain(const FeatureStack& input, const BlockParams& p) {
  return trace_dissipation_chain(input, p).z;
}

}  // namespace speckle
