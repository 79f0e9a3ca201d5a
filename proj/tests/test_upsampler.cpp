#include <cmath>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "speckle/error.hpp"
#include "speckle/grid_ops.hpp"
#include "speckle/upsampler.hpp"
#include "support.hpp"

using namespace speckle;
using speckle::testing::max_abs_diff;
using speckle::testing::random_field;

namespace {

FeatureStack random_stack(Rng& rng, std::size_t c, std::size_t h, std::size_t w, double lo = -1.0) {
  std::vector<Field2D> ch;
  for (std::size_t i = 0; i < c; ++i) ch.push_back(random_field(rng, h, w, lo, 1.0));
  return FeatureStack(std::move(ch));
}

UpsampleParams params(std::size_t levels, std::size_t channels, std::uint64_t seed,
                      Activation act = Activation::Softplus) {
  UpsampleSpec s;
  s.levels = levels;
  s.channels = channels;
  s.seed = seed;
  s.activation = act;
  return generate_upsample_params(s);
}

double correlation(const Field2D& a, const Field2D& b) {
  const double ma = mean(a), mb = mean(b);
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += (a[i] - ma) * (b[i] - mb);
    aa += (a[i] - ma) * (a[i] - ma);
    bb += (b[i] - mb) * (b[i] - mb);
  }
  return ab / std::sqrt(aa * bb);
}

}  // namespace

TEST_CASE("degenerate upsampling parameters give plain bilinear upsampling") {
  UpsampleParams p = params(1, 2, 1, Activation::Relu);
  p.kappa_up[0] = Field2D(1, 1, 1.0);
  Rng rng(2);
  const FeatureStack z = random_stack(rng, 2, 5, 7, 0.0);
  const FeatureStack out = upsample_level(z, FeatureStack(2, 10, 14), p, 0);
  for (std::size_t c = 0; c < 2; ++c) CHECK(out[c] == bilinear_upsample(z[c], 2));
}

TEST_CASE("upsampling with a zero coarse map filters the previous map") {
  const UpsampleParams p = params(2, 2, 3);
  Rng rng(4);
  const FeatureStack prev = random_stack(rng, 2, 8, 8);
  const FeatureStack out = upsample_level(FeatureStack(2, 4, 4), prev, p, 1);
  for (std::size_t c = 0; c < 2; ++c) {
    const Field2D conv = convolve2(prev[c], p.kappa_up[1]);
    for (std::size_t i = 0; i < conv.size(); ++i)
      CHECK(out[c][i] == doctest::Approx(std::log1p(std::exp(conv[i]))).epsilon(1e-14));
  }
}

TEST_CASE("upsample level matches a composition oracle") {
  const UpsampleParams p = params(1, 3, 5, Activation::Relu);
  Rng rng(6);
  const FeatureStack z = random_stack(rng, 3, 4, 6), prev = random_stack(rng, 3, 8, 12);
  const FeatureStack out = upsample_level(z, prev, p, 0);
  for (std::size_t c = 0; c < 3; ++c) {
    // Corner-aligned bilinear resize written out directly.
    Field2D up(8, 12);
    for (std::size_t r = 0; r < 8; ++r)
      for (std::size_t x = 0; x < 12; ++x) {
        const double sy = static_cast<double>(r) * 3.0 / 7.0, sx = static_cast<double>(x) * 5.0 / 11.0;
        const auto y0 = static_cast<std::size_t>(sy), x0 = static_cast<std::size_t>(sx);
        const std::size_t y1 = std::min<std::size_t>(y0 + 1, 3), x1 = std::min<std::size_t>(x0 + 1, 5);
        const double fy = sy - static_cast<double>(y0), fx = sx - static_cast<double>(x0);
        up(r, x) = (1 - fy) * ((1 - fx) * z[c](y0, x0) + fx * z[c](y0, x1)) +
                   fy * ((1 - fx) * z[c](y1, x0) + fx * z[c](y1, x1));
      }
    const Field2D conv = convolve2(up + prev[c], p.kappa_up[0]);
    for (std::size_t i = 0; i < conv.size(); ++i) CHECK(std::abs(out[c][i] - std::max(conv[i], 0.0)) <= 1e-13);
  }
}

TEST_CASE("output projection") {
  const UpsampleParams p = params(1, 3, 7);
  const Field2D zero = output_projection(FeatureStack(3, 6, 5), p);
  for (double v : zero.values()) CHECK(v == p.b_out);

  UpsampleParams single = params(1, 1, 8);
  single.kappa_out[0] = Field2D(1, 1, 1.0);
  Rng rng(9);
  const FeatureStack f1 = random_stack(rng, 1, 5, 5);
  CHECK(max_abs_diff(output_projection(f1, single), f1[0] + Field2D(5, 5, single.b_out)) == 0.0);

  // Per-channel convolution sum with reflective borders written as loops.
  const FeatureStack f = random_stack(rng, 3, 6, 7);
  const Field2D got = output_projection(f, p);
  auto reflect = [](long i, long n) {
    while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
    return static_cast<std::size_t>(i);
  };
  for (long y = 0; y < 6; ++y)
    for (long x = 0; x < 7; ++x) {
      double acc = p.b_out;
      for (std::size_t c = 0; c < 3; ++c)
        for (long i = -1; i <= 1; ++i)
          for (long j = -1; j <= 1; ++j)
            acc += p.kappa_out[c](static_cast<std::size_t>(i + 1), static_cast<std::size_t>(j + 1)) *
                   f[c](reflect(y - i, 6), reflect(x - j, 7));
      CHECK(std::abs(got(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) - acc) <= 1e-13);
    }
  CHECK_THROWS_AS(output_projection(FeatureStack(2, 6, 7), p), DimensionError);
}

TEST_CASE("output projection is affine") {
  const UpsampleParams p = params(1, 2, 10);
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const FeatureStack f = random_stack(rng, 2, 8, 8), g = random_stack(rng, 2, 8, 8);
    const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
    FeatureStack mix = f;
    for (std::size_t c = 0; c < 2; ++c) mix[c] = a * f[c] + b * g[c];
    const Field2D lhs = output_projection(mix, p);
    const Field2D rhs = a * output_projection(f, p) + b * output_projection(g, p) -
                        Field2D(8, 8, (a + b - 1.0) * p.b_out);
    CHECK(max_abs_diff(lhs, rhs) <= 1e-12);
  }
}

TEST_CASE("decoder output is 2^levels times the coarsest map") {
  for (std::size_t levels : {1u, 2u, 3u}) {
    const UpsampleParams p = params(levels, 2, 12 + levels);
    Rng rng(levels);
    std::vector<FeatureStack> pyramid;
    for (std::size_t i = 0; i <= levels; ++i) pyramid.push_back(random_stack(rng, 2, 3u << i, 5u << i));
    const Field2D out = decode(pyramid, p);
    CHECK(out.height() == (3u << levels));
    CHECK(out.width() == (5u << levels));
    pyramid.pop_back();
    CHECK_THROWS_AS(decode(pyramid, p), DimensionError);
  }
}

TEST_CASE("upsampling argument checks") {
  const UpsampleParams p = params(1, 2, 20);
  CHECK_THROWS_AS(upsample_level(FeatureStack(2, 4, 4), FeatureStack(2, 8, 9), p, 0), DimensionError);
  CHECK_THROWS_AS(upsample_level(FeatureStack(2, 4, 4), FeatureStack(3, 8, 8), p, 0), DimensionError);
  CHECK_THROWS_AS(upsample_level(FeatureStack(2, 4, 4), FeatureStack(2, 8, 8), p, 1), ArgumentError);
  UpsampleParams even = p;
  even.kappa_up[0] = Field2D(2, 2);
  CHECK_THROWS_AS(upsample_level(FeatureStack(2, 4, 4), FeatureStack(2, 8, 8), even, 0), KernelError);
  UpsampleSpec bad;
  bad.kernel_size = 2;
  CHECK_THROWS_AS(generate_upsample_params(bad), KernelError);
}

TEST_CASE("upsample parameters round trip through a bundle") {
  UpsampleSpec s;
  s.levels = 3;
  s.channels = 5;
  s.kernel_size = 5;
  s.activation = Activation::Relu;
  s.seed = 0x1234567890abcdefull;
  const UpsampleParams p = generate_upsample_params(s);
  CHECK(p == generate_upsample_params(s));
  std::stringstream buf;
  write_bundle(buf, to_bundle(p));
  CHECK(upsample_params_from_bundle(read_bundle(buf)) == p);
}

TEST_CASE("cross-scale consistent structure survives, fine-only detail is damped") {
  UpsampleParams p = params(1, 1, 21, Activation::Relu);
  const double binomial[] = {0.25, 0.5, 0.25};
  Field2D k(3, 3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) k(i, j) = binomial[i] * binomial[j];
  p.kappa_up[0] = k;

  auto pattern = [](std::size_t n, double cycles) {
    Field2D f(n, n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        const double u = static_cast<double>(r) / static_cast<double>(n - 1);
        const double v = static_cast<double>(c) / static_cast<double>(n - 1);
        f(r, c) = 0.5 + 0.4 * std::cos(std::numbers::pi * cycles * u) * std::cos(std::numbers::pi * cycles * v);
      }
    return f;
  };
  const Field2D coarse = pattern(32, 2.0), fine = pattern(64, 2.0);
  Field2D detail(64, 64);
  for (std::size_t r = 0; r < 64; ++r)
    for (std::size_t c = 0; c < 64; ++c) detail(r, c) = 0.2 * (((r + c) % 2) ? 1.0 : -1.0);

  const Field2D out = upsample_level(FeatureStack({coarse}), FeatureStack({fine + detail}), p, 0)[0];
  const double low_corr = correlation(out, fine);
  // Project the output on the two injected patterns to measure their gains.
  const Field2D centred_fine = fine - Field2D(64, 64, mean(fine));
  const double low_gain = dot(out, centred_fine) / dot(centred_fine, centred_fine);
  const double high_gain = dot(out, detail) / dot(detail, detail);
  MESSAGE("consistent-pattern correlation " << low_corr << ", gain " << low_gain
                                            << "; fine-only detail gain " << high_gain);
  CHECK(low_corr >= 0.99);
  CHECK(std::abs(high_gain) < low_gain);
}
