#include <cmath>
#include <numbers>

#include "doctest.h"
#include "speckle/error.hpp"
#include "speckle/optics.hpp"
#include "support.hpp"

using namespace speckle;
using speckle::testing::max_abs_diff;
using speckle::testing::random_field;
using speckle::testing::smooth_field;

namespace {

OpticsConfig identity_optics() {
  OpticsConfig cfg;
  cfg.psf_sigma = 0.0;
  cfg.albedo = 1.0;
  cfg.gamma = 1.0;
  cfg.noise_sigma = 0.0;
  cfg.brightness_offset_nits = 0.0;
  return cfg;
}

double psnr01(const Field2D& a, const Field2D& b) {
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) se += (a[i] - b[i]) * (a[i] - b[i]);
  return 10.0 * std::log10(1.0 / (se / static_cast<double>(a.size())));
}

// Plain bilinear sample with zero outside [0, n-1].
double sample(const Field2D& f, double sx, double sy) {
  const double mx = static_cast<double>(f.width() - 1), my = static_cast<double>(f.height() - 1);
  if (sx < -1e-9 || sy < -1e-9 || sx > mx + 1e-9 || sy > my + 1e-9) return 0.0;
  sx = std::clamp(sx, 0.0, mx);
  sy = std::clamp(sy, 0.0, my);
  const auto x0 = static_cast<std::size_t>(std::floor(sx));
  const auto y0 = static_cast<std::size_t>(std::floor(sy));
  const std::size_t x1 = std::min(x0 + 1, f.width() - 1), y1 = std::min(y0 + 1, f.height() - 1);
  const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
  return (1 - fy) * ((1 - fx) * f(y0, x0) + fx * f(y0, x1)) +
         fy * ((1 - fx) * f(y1, x0) + fx * f(y1, x1));
}

// Rotate about the grid centre by the inverse map src = R(theta) (dst - c) + c.
Field2D rotate_oracle(const Field2D& f, double theta_deg) {
  const double t = theta_deg * std::numbers::pi / 180.0;
  const double cx = 0.5 * static_cast<double>(f.width() - 1);
  const double cy = 0.5 * static_cast<double>(f.height() - 1);
  Field2D out(f.height(), f.width());
  for (std::size_t r = 0; r < f.height(); ++r)
    for (std::size_t c = 0; c < f.width(); ++c) {
      const double dx = static_cast<double>(c) - cx, dy = static_cast<double>(r) - cy;
      out(r, c) = sample(f, cx + std::cos(t) * dx - std::sin(t) * dy,
                         cy + std::sin(t) * dx + std::cos(t) * dy);
    }
  return out;
}

}  // namespace

TEST_CASE("zero screen produces a zero observation") {
  OpticsConfig cfg;
  cfg.pose.yaw_deg = 5.0;
  const auto obs = apply_transfer(ScreenImage(Field2D(16, 16)), cfg);
  CHECK(max_value(obs.irradiance()) == 0.0);
}

TEST_CASE("degenerate configuration is the identity channel") {
  Rng rng(1);
  const Field2D x = random_field(rng, 12, 10, 0.0, 1.0);
  CHECK(apply_transfer(ScreenImage(x), identity_optics()).irradiance() == x);
}

TEST_CASE("impulse response is the normalized sampled Gaussian") {
  OpticsConfig cfg = identity_optics();
  cfg.psf_sigma = 1.5;
  Field2D impulse(21, 21);
  impulse(10, 10) = 1.0;
  const Field2D obs = apply_transfer(ScreenImage(impulse), cfg).irradiance();

  const int radius = static_cast<int>(std::ceil(4.0 * 1.5));
  double z = 0.0;
  for (int i = -radius; i <= radius; ++i)
    for (int j = -radius; j <= radius; ++j) z += std::exp(-(i * i + j * j) / (2.0 * 1.5 * 1.5));
  for (int r = 0; r < 21; ++r)
    for (int c = 0; c < 21; ++c) {
      const int di = r - 10, dj = c - 10;
      const double expected = (std::abs(di) <= radius && std::abs(dj) <= radius)
                                  ? std::exp(-(di * di + dj * dj) / (2.0 * 1.5 * 1.5)) / z
                                  : 0.0;
      CHECK(obs(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) ==
            doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("inverse approximation recovers smooth images") {
  OpticsConfig cfg;
  cfg.psf_sigma = 1.0;
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const Field2D x = smooth_field(rng, 64, 64);
    const auto obs = apply_transfer(ScreenImage(x), cfg);
    CHECK(psnr01(x, apply_inverse_approx(obs, cfg, 1e-6)) >= 40.0);
  }
}

TEST_CASE("inverse approximation degenerate cases") {
  Rng rng(3);
  const Field2D x = random_field(rng, 9, 11, 0.0, 1.0);
  const Field2D back = apply_inverse_approx(WallObservation(x), identity_optics(), 1e-6);
  CHECK(max_abs_diff(back, x) < 1e-6);

  OpticsConfig cfg;
  const Field2D zero = apply_inverse_approx(WallObservation(Field2D(8, 8)), cfg, 1e-6);
  CHECK(max_value(zero) == 0.0);
  CHECK_THROWS_AS(apply_inverse_approx(WallObservation(x), cfg, 0.0), ArgumentError);
  CHECK_THROWS_AS(apply_inverse_approx(WallObservation(x), cfg, -1.0), ArgumentError);
}

TEST_CASE("configuration errors name the offending field") {
  const ScreenImage s(Field2D(4, 4));
  auto field_of = [&](OpticsConfig cfg) {
    try {
      apply_transfer(s, cfg);
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("none");
  };
  OpticsConfig cfg;
  cfg.albedo = 0.0;
  CHECK(field_of(cfg) == "albedo");
  cfg = {};
  cfg.distance_m = -1.0;
  CHECK(field_of(cfg) == "distance_m");
  cfg = {};
  cfg.gamma = 0.0;
  CHECK(field_of(cfg) == "gamma");
  cfg = {};
  cfg.noise_sigma = -0.1;
  CHECK(field_of(cfg) == "noise_sigma");
  cfg = {};
  cfg.pose.roll_deg = 60.0;
  CHECK(field_of(cfg) == "pose");
  CHECK(field_of(OpticsConfig{}) == "none");
}

TEST_CASE("identity pose is bit exact and large angles are rejected") {
  Rng rng(4);
  const Field2D f = random_field(rng, 13, 17);
  CHECK(geometric_warp(f, Pose{}) == f);
  CHECK_THROWS_AS(geometric_warp(f, Pose{.roll_deg = 90.0}), PoseError);
  CHECK_THROWS_AS(geometric_warp(f, Pose{.vert_arc_deg = -46.0}), PoseError);
}

TEST_CASE("roll rotates about the grid centre") {
  Field2D cross(33, 33);
  for (std::size_t i = 0; i < 33; ++i) {
    for (std::size_t t = 15; t <= 17; ++t) {
      cross(i, t) = 1.0;
      cross(t, i) = 1.0;
    }
  }
  const Field2D rotated = geometric_warp(cross, Pose{.roll_deg = 45.0});
  CHECK(max_abs_diff(rotated, rotate_oracle(cross, 45.0)) < 1e-12);
  // The arms now run along the diagonals.
  CHECK(rotated(6, 6) > 0.9);
  CHECK(rotated(26, 26) > 0.9);
  CHECK(rotated(16, 4) < 0.1);
}

TEST_CASE("yaw round trip error is bounded by plain resampling error") {
  Rng rng(5);
  const Field2D f = smooth_field(rng, 64, 64);

  auto masked_mad = [](const Field2D& a, const Field2D& b, const Field2D& mask) {
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::abs(mask[i] - 1.0) < 1e-12) {
        acc += std::abs(a[i] - b[i]);
        ++n;
      }
    return acc / static_cast<double>(n);
  };

  const Homography half_shift{1, 0, 0.5, 0, 1, 0.5, 0, 0, 1};
  const WarpMap there(half_shift, 64, 64), back(inverse_homography(half_shift), 64, 64);
  const Field2D ones(64, 64, 1.0);
  const double baseline =
      masked_mad(back.apply(there.apply(f)), f, back.apply(there.apply(ones)));

  const Pose plus{.yaw_deg = 10.0}, minus{.yaw_deg = -10.0};
  const Field2D round = geometric_warp(geometric_warp(f, plus), minus);
  const Field2D mask = geometric_warp(geometric_warp(ones, plus), minus);
  const double mad = masked_mad(round, f, mask);
  MESSAGE("half-pixel baseline MAD " << baseline << ", yaw round trip MAD " << mad);
  CHECK(baseline > 0.0);
  CHECK(mad <= 2.0 * baseline);
}

TEST_CASE("brightness offset only darkens") {
  OpticsConfig cfg;
  cfg.pose.pitch_deg = 3.0;
  Rng rng(6);
  const ScreenImage screen(random_field(rng, 24, 24, 0.0, 1.0));
  Field2D prev = apply_transfer(screen, cfg).irradiance();
  for (double offset = 25.0; offset <= 300.0; offset += 25.0) {
    cfg.brightness_offset_nits = offset;
    const Field2D cur = apply_transfer(screen, cfg).irradiance();
    for (std::size_t i = 0; i < cur.size(); ++i) CHECK(cur[i] <= prev[i]);
    prev = cur;
  }
}

TEST_CASE("channel is scale covariant at unit gamma") {
  OpticsConfig cfg;
  cfg.gamma = 1.0;
  cfg.pose = Pose{.pitch_deg = 4.0, .roll_deg = -7.0, .horiz_arc_deg = 12.0};
  Rng rng(7);
  const Field2D x = random_field(rng, 20, 24, 0.0, 1.0);
  const Field2D base = apply_transfer(ScreenImage(x), cfg).irradiance();
  for (double a : {0.0, 0.25, 0.6, 1.0}) {
    const Field2D scaled = apply_transfer(ScreenImage(a * x), cfg).irradiance();
    CHECK(max_abs_diff(scaled, a * base) < 1e-13);
  }
}

TEST_CASE("blur and radiometric scale conserve energy") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    OpticsConfig cfg;
    cfg.gamma = 1.0;
    cfg.psf_sigma = rng.uniform(0.3, 3.0);
    cfg.albedo = rng.uniform(0.2, 1.0);
    cfg.distance_m = rng.uniform(1.0, 6.0);
    cfg.brightness_offset_nits = rng.uniform(0.0, 100.0);
    const Field2D x = random_field(rng, 16 + trial, 20, 0.0, 1.0);
    double attenuated = 0.0;
    for (double v : x.values()) attenuated += std::max(0.0, v * 300.0 - cfg.brightness_offset_nits) / 300.0;
    const double expected = cfg.albedo * std::pow(2.0 / cfg.distance_m, 2) * attenuated;
    CHECK(sum(apply_transfer(ScreenImage(x), cfg).irradiance()) ==
          doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("noise is deterministic per seed") {
  OpticsConfig cfg;
  cfg.noise_sigma = 0.02;
  cfg.noise_seed = 99;
  Rng rng(9);
  const ScreenImage s(random_field(rng, 16, 16, 0.0, 1.0));
  CHECK(apply_transfer(s, cfg).irradiance() == apply_transfer(s, cfg).irradiance());
  OpticsConfig other = cfg;
  other.noise_seed = 100;
  CHECK_FALSE(apply_transfer(s, cfg).irradiance() == apply_transfer(s, other).irradiance());
  for (double v : apply_transfer(s, cfg).irradiance().values()) CHECK(v >= 0.0);
}

TEST_CASE("linear channel passes the dot-product adjoint test") {
  Rng rng(10);
  const Pose poses[] = {Pose{}, Pose{.pitch_deg = 6.0, .yaw_deg = -4.0, .roll_deg = 9.0},
                        Pose{.horiz_arc_deg = 15.0, .vert_arc_deg = -5.0}};
  for (const Pose& pose : poses) {
    OpticsConfig cfg;
    cfg.pose = pose;
    cfg.distance_m = 3.0;
    const LinearChannel a(cfg, 24, 28);
    for (int trial = 0; trial < 20; ++trial) {
      const Field2D u = random_field(rng, 24, 28), v = random_field(rng, 24, 28);
      const double lhs = dot(a.apply(u), v), rhs = dot(u, a.adjoint(v));
      CHECK(std::abs(lhs - rhs) <= 1e-8 * std::abs(lhs));
    }
  }
}

TEST_CASE("frequency-domain deconvolution inverts the reflective blur") {
  OpticsConfig cfg;
  cfg.psf_sigma = 0.8;
  const LinearChannel a(cfg, 15, 22);
  Rng rng(11);
  const Field2D x = random_field(rng, 15, 22);
  CHECK(max_abs_diff(a.deconvolve(a.blur(x), 1e-14), x) < 1e-6);
}

TEST_CASE("normal-equation solve") {
  Rng rng(12);
  for (bool rotated : {false, true}) {
    OpticsConfig cfg;
    if (rotated) cfg.pose.roll_deg = 5.0;
    const LinearChannel a(cfg, 16, 16);
    const Field2D rhs = random_field(rng, 16, 16);
    const double rho = 0.5;
    const Field2D x = a.solve_normal(rhs, rho, Field2D(16, 16), 40);
    Field2D lhs = a.adjoint(a.apply(x));
    axpy(rho, x, lhs);
    CHECK(norm2(lhs - rhs) < 1e-9 * norm2(rhs));
  }
}
