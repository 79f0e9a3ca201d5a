#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "speckle/field.hpp"
#include "speckle/rng.hpp"

namespace speckle {

// Camera pose relative to the calibrated reference view, in degrees.
// Rotation angles turn the camera about its own centre; arc angles move it
// along horizontal / vertical arcs around the wall patch while it keeps
// looking at the patch centre. Every magnitude must be <= 45.
struct Pose {
  double pitch_deg = 0.0;
  double yaw_deg = 0.0;
  double roll_deg = 0.0;
  double horiz_arc_deg = 0.0;
  double vert_arc_deg = 0.0;

  bool is_identity() const noexcept;
  friend bool operator==(const Pose&, const Pose&) = default;
};

void validate(const Pose& pose);

struct OpticsConfig {
  double psf_sigma = 1.0;  // pixels, at base_distance_m
  double albedo = 0.8;
  double base_distance_m = 2.0;
  double distance_m = 2.0;
  double brightness_offset_nits = 0.0;
  double gamma = 2.2;
  double noise_sigma = 0.0;
  Pose pose;
  double screen_max_nits = 300.0;
  std::uint64_t noise_seed = 0;

  double effective_psf_sigma() const noexcept { return psf_sigma * distance_m / base_distance_m; }
  // albedo * (base / distance)^2
  double radiometric_scale() const noexcept;

  friend bool operator==(const OpticsConfig&, const OpticsConfig&) = default;
};

// Throws ConfigError naming the first out-of-range field.
void validate(const OpticsConfig& cfg);

// Source radiance in [0, 1]; 1.0 corresponds to screen_max_nits.
class ScreenImage {
 public:
  // Values are clamped into [0, 1].
  explicit ScreenImage(Field2D radiance);
  const Field2D& radiance() const noexcept { return radiance_; }

 private:
  Field2D radiance_;
};

// Camera-side irradiance after the response curve; non-negative and finite.
class WallObservation {
 public:
  // Throws ArgumentError on negative or non-finite samples.
  explicit WallObservation(Field2D irradiance);
  const Field2D& irradiance() const noexcept { return irradiance_; }

 private:
  Field2D irradiance_;
};

using Homography = std::array<double, 9>;  // row-major 3x3

// Projective map from reference-view pixel (col, row, 1) to the pixel seen
// under `pose`. Pinhole model with focal length max(H, W) pixels and the
// principal point at the grid centre; the wall is the reference image plane.
Homography pose_homography(const Pose& pose, std::size_t height, std::size_t width);
Homography inverse_homography(const Homography& h);

// Bilinear resampling operator for dest = H(src), stored per output pixel so
// the exact adjoint is available. Output pixels whose pre-image falls outside
// the frame are 0.
class WarpMap {
 public:
  WarpMap(const Homography& h, std::size_t height, std::size_t width);

  Field2D apply(const Field2D& src) const;
  Field2D adjoint(const Field2D& dst) const;

 private:
  struct Entry {
    std::array<std::uint32_t, 4> src{};
    std::array<double, 4> weight{};
  };
  std::size_t height_;
  std::size_t width_;
  std::vector<Entry> entries_;
};

// Throws PoseError when any angle exceeds 45 degrees. The identity pose
// returns the input unchanged.
Field2D geometric_warp(const Field2D& field, const Pose& pose);

// Normalized 1D Gaussian taps with radius ceil(4 sigma); sigma = 0 gives {1}.
std::vector<double> gaussian_taps(double sigma);

// The linear part of the channel, x -> s * B(W(x)): warp W, Gaussian blur B
// with reflective borders, radiometric scale s. Luminance attenuation and the
// camera response are the nonlinear ends handled by apply_transfer.
//
// B is symmetric and is diagonalized exactly by a 2H x 2W DFT of the
// half-sample mirror extension, which is what deconvolve and solve_normal use.
class LinearChannel {
 public:
  LinearChannel(const OpticsConfig& cfg, std::size_t height, std::size_t width);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  double scale() const noexcept { return scale_; }
  bool identity_pose() const noexcept { return identity_pose_; }

  Field2D blur(const Field2D& x) const;
  Field2D warp(const Field2D& x) const;
  Field2D unwarp(const Field2D& x) const;  // inverse homography, not the adjoint

  Field2D apply(const Field2D& x) const;
  Field2D adjoint(const Field2D& v) const;

  // Wiener filter H / (H^2 + eps) on the blur alone (H is real here).
  Field2D deconvolve(const Field2D& v, double eps) const;
  // Inverse approximation in the linear domain: clamp(unwarp(deconvolve(v / s)), 0, 2).
  Field2D invert(const Field2D& v, double eps) const;
  // The same map without the clamp; linear in v.
  Field2D invert_unclamped(const Field2D& v, double eps) const;
  // Solves (A^T A + rho I) x = rhs. Closed form in the frequency domain for the
  // identity pose, otherwise `cg_iters` conjugate-gradient steps from `warm`.
  Field2D solve_normal(const Field2D& rhs, double rho, const Field2D& warm,
                       int cg_iters = 10) const;

 private:
  Field2D spectral_filter(const Field2D& v, const std::vector<double>& gain) const;

  std::size_t height_;
  std::size_t width_;
  double scale_;
  std::vector<double> taps_;
  bool identity_pose_;
  std::vector<WarpMap> warps_;             // {forward, inverse} unless identity
  std::vector<double> blur_spectrum_;      // 2H x 2W, real
};

// Forward model: attenuation -> warp -> blur -> scale -> response -> noise.
//   L = max(0, x * M - offset) / M,  v = (s * B(W(L)))^(1 / gamma) + n,  clamp >= 0
// Noise n ~ N(0, noise_sigma^2) drawn row-major from `rng`.
WallObservation apply_transfer(const ScreenImage& screen, const OpticsConfig& cfg, Rng& rng);
// Same, with the generator seeded from cfg.noise_seed.
WallObservation apply_transfer(const ScreenImage& screen, const OpticsConfig& cfg);

// Inverse approximation: v^gamma, then LinearChannel::invert. Throws
// ArgumentError when reg_eps <= 0.
Field2D apply_inverse_approx(const WallObservation& obs, const OpticsConfig& cfg,
                             double reg_eps);

// Observation mapped back through the camera response: max(v, 0)^gamma.
Field2D linearize(const WallObservation& obs, double gamma);

}  // namespace speckle
