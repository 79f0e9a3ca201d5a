#include "speckle/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "speckle/error.hpp"
#include "speckle/grid_ops.hpp"
#include "speckle/spectral.hpp"

namespace speckle {
namespace {

constexpr double kMaxAngleDeg = 45.0;
constexpr double kFrameTolerance = 1e-9;

using Mat3 = std::array<double, 9>;

Mat3 mul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += a[i * 3 + k] * b[k * 3 + j];
      c[i * 3 + j] = acc;
    }
  return c;
}

Mat3 transpose(const Mat3& a) {
  return {a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]};
}

double rad(double deg) { return deg * std::numbers::pi / 180.0; }

Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {1, 0, 0, 0, c, -s, 0, s, c};
}
Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c, 0, s, 0, 1, 0, -s, 0, c};
}
Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c, -s, 0, s, c, 0, 0, 0, 1};
}

void check_angle(double v, const char* name) {
  if (!std::isfinite(v) || std::abs(v) > kMaxAngleDeg) {
    throw PoseError(std::string(name) + " = " + std::to_string(v) +
                    " deg outside [-45, 45]");
  }
}

void require(bool ok, const char* field, const char* what) {
  if (!ok) throw ConfigError(field, what);
}

// Real DFT of taps wrapped circularly onto n points (taps are symmetric, so the
// spectrum is real).
std::vector<double> wrapped_spectrum(const std::vector<double>& taps, std::size_t n) {
  std::vector<Complex> buf(n, Complex{});
  const auto r = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const auto nn = static_cast<std::ptrdiff_t>(n);
  for (std::ptrdiff_t i = -r; i <= r; ++i) {
    std::ptrdiff_t k = i % nn;
    if (k < 0) k += nn;
    buf[static_cast<std::size_t>(k)] += taps[static_cast<std::size_t>(i + r)];
  }
  fft_inplace(buf);
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = buf[k].real();
  return out;
}

Field2D mirror_extend(const Field2D& v) {
  const std::size_t h = v.height(), w = v.width();
  Field2D ext(2 * h, 2 * w);
  for (std::size_t y = 0; y < 2 * h; ++y) {
    const std::size_t sy = y < h ? y : 2 * h - 1 - y;
    for (std::size_t x = 0; x < 2 * w; ++x) {
      const std::size_t sx = x < w ? x : 2 * w - 1 - x;
      ext(y, x) = v(sy, sx);
    }
  }
  return ext;
}

const OpticsConfig& validated(const OpticsConfig& cfg) {
  validate(cfg);
  return cfg;
}

}  // namespace

bool Pose::is_identity() const noexcept {
  return pitch_deg == 0.0 && yaw_deg == 0.0 && roll_deg == 0.0 && horiz_arc_deg == 0.0 &&
         vert_arc_deg == 0.0;
}

void validate(const Pose& pose) {
  check_angle(pose.pitch_deg, "pitch_deg");
  check_angle(pose.yaw_deg, "yaw_deg");
  check_angle(pose.roll_deg, "roll_deg");
  check_angle(pose.horiz_arc_deg, "horiz_arc_deg");
  check_angle(pose.vert_arc_deg, "vert_arc_deg");
}

double OpticsConfig::radiometric_scale() const noexcept {
  const double ratio = base_distance_m / distance_m;
  return albedo * ratio * ratio;
}

void validate(const OpticsConfig& cfg) {
  require(std::isfinite(cfg.psf_sigma) && cfg.psf_sigma >= 0.0, "psf_sigma", "must be >= 0");
  require(cfg.albedo > 0.0 && cfg.albedo <= 1.0, "albedo", "must lie in (0, 1]");
  require(std::isfinite(cfg.base_distance_m) && cfg.base_distance_m > 0.0, "base_distance_m",
          "must be > 0");
  require(std::isfinite(cfg.distance_m) && cfg.distance_m > 0.0, "distance_m", "must be > 0");
  require(std::isfinite(cfg.brightness_offset_nits) && cfg.brightness_offset_nits >= 0.0,
          "brightness_offset_nits", "must be >= 0");
  require(std::isfinite(cfg.gamma) && cfg.gamma > 0.0, "gamma", "must be > 0");
  require(std::isfinite(cfg.noise_sigma) && cfg.noise_sigma >= 0.0, "noise_sigma",
          "must be >= 0");
  require(std::isfinite(cfg.screen_max_nits) && cfg.screen_max_nits > 0.0, "screen_max_nits",
          "must be > 0");
  try {
    validate(cfg.pose);
  } catch (const PoseError& e) {
    throw ConfigError("pose", e.what());
  }
}

ScreenImage::ScreenImage(Field2D radiance) : radiance_(std::move(radiance)) {
  for (double& v : radiance_.values()) v = std::isnan(v) ? 0.0 : std::clamp(v, 0.0, 1.0);
}

WallObservation::WallObservation(Field2D irradiance) : irradiance_(std::move(irradiance)) {
  for (double v : irradiance_.values()) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ArgumentError("WallObservation: samples must be finite and >= 0");
    }
  }
}

Homography pose_homography(const Pose& pose, std::size_t height, std::size_t width) {
  validate(pose);
  const double f = static_cast<double>(std::max(height, width));
  const double cx = 0.5 * static_cast<double>(width - 1);
  const double cy = 0.5 * static_cast<double>(height - 1);
  const Mat3 k{f, 0, cx, 0, f, cy, 0, 0, 1};
  const Mat3 k_inv{1.0 / f, 0, -cx / f, 0, 1.0 / f, -cy / f, 0, 0, 1};

  // Reference camera sits one unit in front of the wall (z = 0) looking +z.
  const Mat3 orbit = mul(rot_y(rad(pose.horiz_arc_deg)), rot_x(rad(pose.vert_arc_deg)));
  const std::array<double, 3> centre{-orbit[2], -orbit[5], -orbit[8]};
  const Mat3 turn =
      mul(rot_z(rad(pose.roll_deg)), mul(rot_x(rad(pose.pitch_deg)), rot_y(rad(pose.yaw_deg))));
  const Mat3 world_to_cam = mul(transpose(turn), transpose(orbit));
  // Wall point (X, Y, 0) in homogeneous wall coordinates -> camera frame.
  const Mat3 plane{1, 0, -centre[0], 0, 1, -centre[1], 0, 0, -centre[2]};

  Mat3 h = mul(k, mul(world_to_cam, mul(plane, k_inv)));
  const double norm = h[8];
  for (double& v : h) v /= norm;
  return h;
}

Homography inverse_homography(const Homography& m) {
  const double a = m[0], b = m[1], c = m[2], d = m[3], e = m[4], f = m[5], g = m[6], h = m[7],
               i = m[8];
  const double det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
  if (det == 0.0 || !std::isfinite(det)) throw ArgumentError("singular homography");
  Homography inv{(e * i - f * h), -(b * i - c * h), (b * f - c * e),
                 -(d * i - f * g), (a * i - c * g),  -(a * f - c * d),
                 (d * h - e * g),  -(a * h - b * g), (a * e - b * d)};
  for (double& v : inv) v /= det;
  return inv;
}

WarpMap::WarpMap(const Homography& h, std::size_t height, std::size_t width)
    : height_(height), width_(width), entries_(height * width) {
  const Homography back = inverse_homography(h);
  const double max_x = static_cast<double>(width - 1);
  const double max_y = static_cast<double>(height - 1);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double px = static_cast<double>(c), py = static_cast<double>(r);
      const double wz = back[6] * px + back[7] * py + back[8];
      if (wz <= 0.0) continue;
      double sx = (back[0] * px + back[1] * py + back[2]) / wz;
      double sy = (back[3] * px + back[4] * py + back[5]) / wz;
      if (sx < -kFrameTolerance || sy < -kFrameTolerance || sx > max_x + kFrameTolerance ||
          sy > max_y + kFrameTolerance) {
        continue;
      }
      sx = std::clamp(sx, 0.0, max_x);
      sy = std::clamp(sy, 0.0, max_y);
      const auto x0 = std::min(static_cast<std::size_t>(sx), width - 1);
      const auto y0 = std::min(static_cast<std::size_t>(sy), height - 1);
      const std::size_t x1 = std::min(x0 + 1, width - 1);
      const std::size_t y1 = std::min(y0 + 1, height - 1);
      const double fx = sx - static_cast<double>(x0);
      const double fy = sy - static_cast<double>(y0);
      Entry& e = entries_[r * width + c];
      e.src = {static_cast<std::uint32_t>(y0 * width + x0), static_cast<std::uint32_t>(y0 * width + x1),
               static_cast<std::uint32_t>(y1 * width + x0), static_cast<std::uint32_t>(y1 * width + x1)};
      e.weight = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
    }
  }
}

Field2D WarpMap::apply(const Field2D& src) const {
  if (src.height() != height_ || src.width() != width_) {
    throw DimensionError("WarpMap::apply: shape mismatch");
  }
  Field2D out(height_, width_);
  for (std::size_t p = 0; p < entries_.size(); ++p) {
    const Entry& e = entries_[p];
    double acc = 0.0;
    for (int k = 0; k < 4; ++k) acc += e.weight[k] * src[e.src[k]];
    out[p] = acc;
  }
  return out;
}

Field2D WarpMap::adjoint(const Field2D& dst) const {
  if (dst.height() != height_ || dst.width() != width_) {
    throw DimensionError("WarpMap::adjoint: shape mismatch");
  }
  Field2D out(height_, width_);
  for (std::size_t p = 0; p < entries_.size(); ++p) {
    const Entry& e = entries_[p];
    for (int k = 0; k < 4; ++k) out[e.src[k]] += e.weight[k] * dst[p];
  }
  return out;
}

Field2D geometric_warp(const Field2D& field, const Pose& pose) {
  validate(pose);
  if (pose.is_identity()) return field;
  return WarpMap(pose_homography(pose, field.height(), field.width()), field.height(),
                 field.width())
      .apply(field);
}

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ArgumentError("gaussian_taps: bad sigma");
  if (sigma == 0.0) return {1.0};
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(4.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (std::ptrdiff_t i = -radius; i <= radius; ++i) {
    const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& v : taps) v /= total;
  return taps;
}

LinearChannel::LinearChannel(const OpticsConfig& cfg, std::size_t height, std::size_t width)
    : height_(height),
      width_(width),
      scale_(validated(cfg).radiometric_scale()),
      taps_(gaussian_taps(cfg.effective_psf_sigma())),
      identity_pose_(cfg.pose.is_identity()) {
  if (height == 0 || width == 0) throw DimensionError("LinearChannel: empty grid");
  if (!identity_pose_) {
    const Homography h = pose_homography(cfg.pose, height, width);
    warps_.emplace_back(h, height, width);
    warps_.emplace_back(inverse_homography(h), height, width);
  }
  const auto rows = wrapped_spectrum(taps_, 2 * height);
  const auto cols = wrapped_spectrum(taps_, 2 * width);
  blur_spectrum_.resize(4 * height * width);
  for (std::size_t u = 0; u < 2 * height; ++u)
    for (std::size_t v = 0; v < 2 * width; ++v) blur_spectrum_[u * 2 * width + v] = rows[u] * cols[v];
}

Field2D LinearChannel::blur(const Field2D& x) const {
  if (taps_.size() == 1) return x;
  return convolve_separable(x, taps_, taps_);
}

Field2D LinearChannel::warp(const Field2D& x) const {
  return identity_pose_ ? x : warps_[0].apply(x);
}

Field2D LinearChannel::unwarp(const Field2D& x) const {
  return identity_pose_ ? x : warps_[1].apply(x);
}

Field2D LinearChannel::apply(const Field2D& x) const {
  Field2D out = blur(warp(x));
  out *= scale_;
  return out;
}

Field2D LinearChannel::adjoint(const Field2D& v) const {
  Field2D out = blur(v);
  out *= scale_;
  return identity_pose_ ? out : warps_[0].adjoint(out);
}

Field2D LinearChannel::spectral_filter(const Field2D& v, const std::vector<double>& gain) const {
  if (v.height() != height_ || v.width() != width_) {
    throw DimensionError("LinearChannel: field shape does not match the channel");
  }
  SpectralField spec = dft2(mirror_extend(v));
  for (std::size_t i = 0; i < spec.size(); ++i) spec[i] *= gain[i];
  const Field2D full = idft2(spec);
  Field2D out(height_, width_);
  for (std::size_t y = 0; y < height_; ++y)
    for (std::size_t x = 0; x < width_; ++x) out(y, x) = full(y, x);
  return out;
}

Field2D LinearChannel::deconvolve(const Field2D& v, double eps) const {
  if (!(eps > 0.0)) throw ArgumentError("deconvolve: reg_eps must be > 0");
  std::vector<double> gain(blur_spectrum_.size());
  for (std::size_t i = 0; i < gain.size(); ++i) {
    const double hk = blur_spectrum_[i];
    gain[i] = hk / (hk * hk + eps);
  }
  return spectral_filter(v, gain);
}

Field2D LinearChannel::invert_unclamped(const Field2D& v, double eps) const {
  Field2D scaled = v;
  scaled *= 1.0 / scale_;
  return unwarp(deconvolve(scaled, eps));
}

Field2D LinearChannel::invert(const Field2D& v, double eps) const {
  Field2D out = invert_unclamped(v, eps);
  for (double& x : out.values()) x = std::clamp(x, 0.0, 2.0);
  return out;
}

Field2D LinearChannel::solve_normal(const Field2D& rhs, double rho, const Field2D& warm,
                                    int cg_iters) const {
  if (!(rho > 0.0)) throw ArgumentError("solve_normal: rho must be > 0");
  if (identity_pose_) {
    std::vector<double> gain(blur_spectrum_.size());
    const double s2 = scale_ * scale_;
    for (std::size_t i = 0; i < gain.size(); ++i) {
      const double hk = blur_spectrum_[i];
      gain[i] = 1.0 / (s2 * hk * hk + rho);
    }
    return spectral_filter(rhs, gain);
  }
  auto normal_op = [&](const Field2D& x) {
    Field2D out = adjoint(apply(x));
    axpy(rho, x, out);
    return out;
  };
  Field2D x = warm;
  Field2D r = rhs - normal_op(x);
  Field2D p = r;
  double rr = dot(r, r);
  for (int it = 0; it < cg_iters && rr > 0.0; ++it) {
    const Field2D ap = normal_op(p);
    const double alpha = rr / dot(p, ap);
    axpy(alpha, p, x);
    axpy(-alpha, ap, r);
    const double rr_next = dot(r, r);
    const double beta = rr_next / rr;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
    rr = rr_next;
  }
  return x;
}

WallObservation apply_transfer(const ScreenImage& screen, const OpticsConfig& cfg, Rng& rng) {
  validate(cfg);
  const Field2D& x = screen.radiance();
  Field2D lum = x;
  if (cfg.brightness_offset_nits != 0.0) {
    for (double& l : lum.values())
      l = std::max(0.0, l * cfg.screen_max_nits - cfg.brightness_offset_nits) / cfg.screen_max_nits;
  }
  const LinearChannel channel(cfg, x.height(), x.width());
  Field2D v = channel.apply(lum);
  const double inv_gamma = 1.0 / cfg.gamma;
  for (double& s : v.values()) {
    s = std::max(s, 0.0);
    if (cfg.gamma != 1.0) s = std::pow(s, inv_gamma);
  }
  if (cfg.noise_sigma > 0.0) {
    for (double& s : v.values()) s = std::max(0.0, s + cfg.noise_sigma * rng.normal());
  }
  return WallObservation(std::move(v));
}

WallObservation apply_transfer(const ScreenImage& screen, const OpticsConfig& cfg) {
  Rng rng(cfg.noise_seed);
  return apply_transfer(screen, cfg, rng);
}

Field2D linearize(const WallObservation& obs, double gamma) {
  Field2D out = obs.irradiance();
  if (gamma != 1.0) {
    for (double& s : out.values()) s = std::pow(s, gamma);
  }
  return out;
}

Field2D apply_inverse_approx(const WallObservation& obs, const OpticsConfig& cfg,
                             double reg_eps) {
  if (!(reg_eps > 0.0)) throw ArgumentError("apply_inverse_approx: reg_eps must be > 0");
  validate(cfg);
  const Field2D& v = obs.irradiance();
  return LinearChannel(cfg, v.height(), v.width()).invert(linearize(obs, cfg.gamma), reg_eps);
}

}  // namespace speckle
