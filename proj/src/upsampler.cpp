#include "speckle/upsampler.hpp"

#include <cmath>
#include <string>

#include "speckle/error.hpp"
#include "speckle/grid_ops.hpp"
#include "speckle/rng.hpp"

namespace speckle {
namespace {

Field2D uniform_kernel(Rng& rng, std::size_t k, double fan_in) {
  const double bound = 1.0 / std::sqrt(fan_in);
  Field2D f(k, k);
  for (double& v : f.values()) v = rng.uniform(-bound, bound);
  return f;
}

void require_odd(const Field2D& k, const char* what) {
  if (k.height() % 2 == 0 || k.width() % 2 == 0) throw KernelError(std::string(what) + " must be odd");
}

Tensor stack_kernels(const std::vector<Field2D>& ks) {
  Tensor t;
  const auto kh = static_cast<std::uint32_t>(ks.front().height());
  const auto kw = static_cast<std::uint32_t>(ks.front().width());
  t.dims = {static_cast<std::uint32_t>(ks.size()), kh, kw};
  for (const Field2D& k : ks) {
    if (k.height() != kh || k.width() != kw) throw DimensionError("to_bundle: kernels differ in size");
    t.data.insert(t.data.end(), k.values().begin(), k.values().end());
  }
  return t;
}

std::vector<Field2D> unstack_kernels(const Tensor& t, const char* name) {
  if (t.dims.size() != 3) throw FormatError(std::string("upsample bundle: bad rank for ") + name);
  const std::size_t kk = std::size_t{t.dims[1]} * t.dims[2];
  std::vector<Field2D> out;
  for (std::size_t i = 0; i < t.dims[0]; ++i) {
    out.emplace_back(t.dims[1], t.dims[2],
                     std::vector<double>(t.data.begin() + static_cast<std::ptrdiff_t>(i * kk),
                                         t.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * kk)));
  }
  return out;
}

}  // namespace

UpsampleParams generate_upsample_params(const UpsampleSpec& spec) {
  if (spec.levels == 0 || spec.channels == 0) {
    throw DimensionError("generate_upsample_params: levels and channels must be >= 1");
  }
  if (spec.kernel_size % 2 == 0) throw KernelError("generate_upsample_params: kernel_size must be odd");
  Rng rng(spec.seed);
  UpsampleParams p;
  p.activation = spec.activation;
  p.seed = spec.seed;
  const std::size_t k = spec.kernel_size;
  const auto area = static_cast<double>(k * k);
  for (std::size_t i = 0; i < spec.levels; ++i) p.kappa_up.push_back(uniform_kernel(rng, k, area));
  const double out_fan_in = area * static_cast<double>(spec.channels);
  for (std::size_t c = 0; c < spec.channels; ++c) p.kappa_out.push_back(uniform_kernel(rng, k, out_fan_in));
  p.b_out = rng.uniform(-1.0, 1.0) / std::sqrt(out_fan_in);
  return p;
}

void validate(const UpsampleParams& p) {
  if (p.kappa_up.empty()) throw DimensionError("UpsampleParams: levels must be >= 1");
  if (p.kappa_out.empty()) throw DimensionError("UpsampleParams: channels must be >= 1");
  for (const Field2D& k : p.kappa_up) require_odd(k, "kappa_up");
  for (const Field2D& k : p.kappa_out) require_odd(k, "kappa_out");
}

TensorBundle to_bundle(const UpsampleParams& p) {
  validate(p);
  const double config[] = {p.activation == Activation::Relu ? 0.0 : 1.0,
                           static_cast<double>(p.seed & 0xffffffffu),
                           static_cast<double>(p.seed >> 32)};
  return {{"kappa_up", stack_kernels(p.kappa_up)},
          {"kappa_out", stack_kernels(p.kappa_out)},
          {"b_out", Tensor{{}, {p.b_out}}},
          {"config", Tensor{{3}, {config[0], config[1], config[2]}}}};
}

UpsampleParams upsample_params_from_bundle(const TensorBundle& bundle) {
  UpsampleParams p;
  p.kappa_up = unstack_kernels(bundle_entry(bundle, "kappa_up"), "kappa_up");
  p.kappa_out = unstack_kernels(bundle_entry(bundle, "kappa_out"), "kappa_out");
  const Tensor& b = bundle_entry(bundle, "b_out");
  if (b.data.size() != 1) throw FormatError("upsample bundle: b_out must be a scalar");
  p.b_out = b.data[0];
  const Tensor& cfg = bundle_entry(bundle, "config");
  if (cfg.data.size() != 3) throw FormatError("upsample bundle: config must hold 3 values");
  p.activation = cfg.data[0] == 0.0 ? Activation::Relu : Activation::Softplus;
  p.seed = static_cast<std::uint64_t>(cfg.data[1]) | (static_cast<std::uint64_t>(cfg.data[2]) << 32);
  validate(p);
  return p;
}

FeatureStack upsample_level(const FeatureStack& z, const FeatureStack& z_prev,
                            const UpsampleParams& p, std::size_t level) {
  validate(p);
  if (level >= p.levels()) throw ArgumentError("upsample_level: level out of range");
  if (z.channels() != z_prev.channels() || z_prev.height() != 2 * z.height() ||
      z_prev.width() != 2 * z.width() || z.height() == 0 || z.width() == 0) {
    throw DimensionError("upsample_level: previous map must have the same channels at twice the size");
  }
  std::vector<Field2D> out;
  for (std::size_t c = 0; c < z.channels(); ++c) {
    Field2D f = convolve2(bilinear_upsample(z[c], 2) + z_prev[c], p.kappa_up[level]);
    for (double& v : f.values()) v = activate(p.activation, v);
    out.push_back(std::move(f));
  }
  return FeatureStack(std::move(out));
}

Field2D output_projection(const FeatureStack& f, const UpsampleParams& p) {
  validate(p);
  if (f.channels() != p.channels()) {
    throw DimensionError("output_projection: expected " + std::to_string(p.channels()) +
                         " channels, got " + std::to_string(f.channels()));
  }
  Field2D out(f.height(), f.width(), p.b_out);
  for (std::size_t c = 0; c < f.channels(); ++c) out += convolve2(f[c], p.kappa_out[c]);
  return out;
}

Field2D decode(const std::vector<FeatureStack>& pyramid, const UpsampleParams& p) {
  validate(p);
  if (pyramid.size() != p.levels() + 1) {
    throw DimensionError("decode: pyramid needs levels + 1 maps");
  }
  FeatureStack carry = pyramid.front();
  for (std::size_t i = 0; i < p.levels(); ++i) carry = upsample_level(carry, pyramid[i + 1], p, i);
  return output_projection(carry, p);
}

}  // namespace speckle
