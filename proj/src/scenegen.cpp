#include "speckle/scenegen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "speckle/error.hpp"
#include "speckle/rng.hpp"

namespace speckle {
namespace {

bool pow2_in_range(std::size_t n) { return n >= 32 && n <= 256 && (n & (n - 1)) == 0; }

std::size_t scaled(double fraction, std::size_t extent) {
  return static_cast<std::size_t>(std::lround(fraction * static_cast<double>(extent)));
}

class Canvas {
 public:
  Canvas(std::size_t h, std::size_t w, double fill) : img_(h, w, fill) {}

  std::size_t height() const { return img_.height(); }
  std::size_t width() const { return img_.width(); }

  // Clipped to the canvas; returns the clipped rectangle.
  Region fill(std::string label, std::size_t top, std::size_t left, std::size_t h, std::size_t w,
              double value) {
    top = std::min(top, height());
    left = std::min(left, width());
    h = std::min(h, height() - top);
    w = std::min(w, width() - left);
    for (std::size_t y = top; y < top + h; ++y)
      for (std::size_t x = left; x < left + w; ++x) img_(y, x) = value;
    return {std::move(label), top, left, h, w};
  }

  void vertical_gradient(double from, double to) {
    for (std::size_t y = 0; y < height(); ++y) {
      const double t = static_cast<double>(y) / static_cast<double>(height() - 1);
      for (std::size_t x = 0; x < width(); ++x) img_(y, x) = from + (to - from) * t;
    }
  }

  void dot(double y, double x, double radius, double value) {
    const auto y0 = static_cast<std::ptrdiff_t>(std::floor(y - radius));
    const auto y1 = static_cast<std::ptrdiff_t>(std::ceil(y + radius));
    const auto x0 = static_cast<std::ptrdiff_t>(std::floor(x - radius));
    const auto x1 = static_cast<std::ptrdiff_t>(std::ceil(x + radius));
    for (std::ptrdiff_t r = y0; r <= y1; ++r)
      for (std::ptrdiff_t c = x0; c <= x1; ++c) {
        if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(height()) ||
            c >= static_cast<std::ptrdiff_t>(width()))
          continue;
        if (std::hypot(static_cast<double>(r) - y, static_cast<double>(c) - x) <= radius) {
          img_(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = value;
        }
      }
  }

  Field2D take() { return std::move(img_); }

 private:
  Field2D img_;
};

Scene websight(Rng& rng, std::size_t h, std::size_t w) {
  Canvas cv(h, w, rng.uniform(0.82, 0.96));
  std::vector<Region> regions;
  const std::size_t header = std::max<std::size_t>(3, scaled(rng.uniform(0.08, 0.16), h));
  regions.push_back(cv.fill("header", 0, 0, header, w, rng.uniform(0.1, 0.35)));

  const std::size_t split = scaled(rng.uniform(0.45, 0.65), w);
  const std::size_t margin = std::max<std::size_t>(2, w / 16);
  const std::size_t line_h = std::max<std::size_t>(1, h / 48);
  const std::size_t pitch = line_h * static_cast<std::size_t>(rng.between(3, 4));
  const double ink = rng.uniform(0.05, 0.3);
  for (std::size_t y = header + margin; y + line_h < h - margin; y += pitch) {
    const std::size_t len = scaled(rng.uniform(0.4, 1.0), split - 2 * margin);
    regions.push_back(cv.fill("text", y, margin, line_h, len, ink));
  }

  const auto blocks = static_cast<std::size_t>(rng.between(1, 3));
  const std::size_t col_w = w - split - margin;
  const std::size_t avail = h - header - 2 * margin;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t bh = avail / blocks - margin;
    const std::size_t top = header + margin + b * (avail / blocks);
    regions.push_back(cv.fill("image", top, split, bh, col_w, rng.uniform(0.35, 0.7)));
  }
  return {ScreenImage(cv.take()), std::move(regions), std::nullopt};
}

Scene password(Rng& rng, std::size_t h, std::size_t w) {
  Canvas cv(h, w, rng.uniform(0.05, 0.25));
  std::vector<Region> regions;
  const double key = rng.uniform(0.3, 0.45);
  const double lit = std::min(1.0, 1.9 * key + rng.uniform(0.0, 0.1));
  const auto hot = static_cast<std::size_t>(rng.below(12));
  const std::size_t pad_w = scaled(rng.uniform(0.55, 0.75), w);
  const std::size_t pad_h = scaled(rng.uniform(0.6, 0.8), h);
  const std::size_t left = static_cast<std::size_t>(rng.below(w - pad_w + 1));
  const std::size_t top = static_cast<std::size_t>(rng.below(h - pad_h + 1));
  const std::size_t cell_w = pad_w / 3, cell_h = pad_h / 4;
  const std::size_t gap_w = std::max<std::size_t>(1, cell_w / 8), gap_h = std::max<std::size_t>(1, cell_h / 8);
  for (std::size_t k = 0; k < 12; ++k) {
    const std::size_t r = k / 3, c = k % 3;
    regions.push_back(cv.fill("key" + std::to_string(k), top + r * cell_h + gap_h,
                              left + c * cell_w + gap_w, cell_h - 2 * gap_h, cell_w - 2 * gap_w,
                              k == hot ? lit : key));
  }
  // A small glyph-like mark on every key, darker than the key face.
  for (std::size_t k = 0; k < 12; ++k) {
    const Region& reg = regions[k];
    const double face = k == hot ? lit : key;
    cv.dot(static_cast<double>(reg.top) + 0.5 * static_cast<double>(reg.height),
           static_cast<double>(reg.left) + 0.5 * static_cast<double>(reg.width),
           0.15 * static_cast<double>(std::min(reg.height, reg.width)), 0.6 * face);
  }
  return {ScreenImage(cv.take()), std::move(regions), hot};
}

Scene chart(Rng& rng, std::size_t h, std::size_t w) {
  Canvas cv(h, w, rng.uniform(0.72, 0.88));
  std::vector<Region> regions;
  const std::size_t margin = std::max<std::size_t>(3, w / 10);
  const std::size_t axis = std::max<std::size_t>(1, w / 64);
  const double ink = rng.uniform(0.0, 0.2);
  const std::size_t base = h - margin;
  regions.push_back(cv.fill("y-axis", margin / 2, margin, base - margin / 2, axis, ink));
  regions.push_back(cv.fill("x-axis", base, margin, axis, w - margin - margin / 2, ink));
  const std::size_t plot_w = w - margin - margin / 2 - axis, plot_h = base - margin / 2 - 1;
  const auto count = static_cast<std::size_t>(rng.between(4, 8));
  if (rng.uniform() < 0.6) {
    const std::size_t slot = plot_w / count;
    const double fill = rng.uniform(0.25, 0.6);
    for (std::size_t b = 0; b < count; ++b) {
      const std::size_t bh = std::max<std::size_t>(1, scaled(rng.uniform(0.15, 0.95), plot_h));
      const std::size_t bw = std::max<std::size_t>(1, slot * 2 / 3);
      regions.push_back(cv.fill("bar" + std::to_string(b), base - bh,
                                margin + axis + b * slot + (slot - bw) / 2, bh, bw, fill));
    }
  } else {
    const double value = rng.uniform(0.1, 0.4);
    const double radius = std::max(0.8, static_cast<double>(w) / 96.0);
    std::vector<double> ys(count + 1);
    for (double& y : ys) y = rng.uniform(0.1, 0.95) * static_cast<double>(plot_h);
    const double x0 = static_cast<double>(margin + axis + 1);
    const double step = static_cast<double>(plot_w - 2) / static_cast<double>(count);
    for (std::size_t s = 0; s < count; ++s) {
      const int samples = static_cast<int>(std::ceil(step * 2.0));
      for (int i = 0; i <= samples; ++i) {
        const double t = static_cast<double>(i) / samples;
        const double y = static_cast<double>(base) - (ys[s] + t * (ys[s + 1] - ys[s]));
        cv.dot(y, x0 + (static_cast<double>(s) + t) * step, radius, value);
      }
    }
    regions.push_back({"line", margin / 2, margin + axis, plot_h + 1, plot_w});
  }
  return {ScreenImage(cv.take()), std::move(regions), std::nullopt};
}

Scene screen(Rng& rng, std::size_t h, std::size_t w) {
  Canvas cv(h, w, 0.0);
  const double sky = rng.uniform(0.3, 0.6);
  cv.vertical_gradient(sky, sky + rng.uniform(-0.2, 0.2));
  std::vector<Region> regions;
  const std::size_t bar = std::max<std::size_t>(3, h / 14);
  regions.push_back(cv.fill("taskbar", h - bar, 0, bar, w, rng.uniform(0.05, 0.2)));

  const std::size_t icon = std::max<std::size_t>(2, w / 16), pitch = icon + icon / 2;
  const double icon_value = rng.uniform(0.7, 0.95);
  const auto rows = static_cast<std::size_t>(rng.between(2, 4));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < 2; ++c) {
      regions.push_back(cv.fill("icon", icon / 2 + r * pitch, icon / 2 + c * pitch, icon, icon, icon_value));
    }

  const auto windows = static_cast<std::size_t>(rng.between(2, 4));
  const std::size_t desk_h = h - bar;
  for (std::size_t i = 0; i < windows; ++i) {
    const std::size_t ww = scaled(rng.uniform(0.35, 0.6), w), wh = scaled(rng.uniform(0.3, 0.55), desk_h);
    const std::size_t left = scaled(rng.uniform(0.15, 0.95), w - ww);
    const std::size_t top = static_cast<std::size_t>(rng.below(desk_h - wh));
    const std::size_t title = std::max<std::size_t>(2, wh / 8);
    regions.push_back(cv.fill("window" + std::to_string(i), top, left, wh, ww, rng.uniform(0.75, 0.95)));
    cv.fill("title", top, left, title, ww, rng.uniform(0.15, 0.4));
  }
  return {ScreenImage(cv.take()), std::move(regions), std::nullopt};
}

}  // namespace

std::string_view category_name(Category c) noexcept {
  switch (c) {
    case Category::Websight: return "websight";
    case Category::Password: return "password";
    case Category::Chart: return "chart";
    case Category::Screen: return "screen";
  }
  return "unknown";
}

Category parse_category(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (Category c : kAllCategories) {
    if (category_name(c) == lower) return c;
  }
  throw ArgumentError("unknown category '" + std::string(name) +
                      "' (expected websight, password, chart or screen)");
}

void validate(const SceneSpec& spec) {
  if (!pow2_in_range(spec.height) || !pow2_in_range(spec.width)) {
    throw ConfigError("size", "height and width must be powers of two in [32, 256]");
  }
}

Field2D Region::mask(std::size_t image_height, std::size_t image_width) const {
  Field2D m(image_height, image_width);
  for (std::size_t y = top; y < std::min(top + height, image_height); ++y)
    for (std::size_t x = left; x < std::min(left + width, image_width); ++x) m(y, x) = 1.0;
  return m;
}

double Region::mean_over(const Field2D& image) const {
  if (height == 0 || width == 0) throw DimensionError("Region::mean_over: empty region");
  double acc = 0.0;
  for (std::size_t y = top; y < top + height; ++y)
    for (std::size_t x = left; x < left + width; ++x) acc += image(y, x);
  return acc / static_cast<double>(height * width);
}

Scene generate(const SceneSpec& spec) {
  validate(spec);
  Rng rng(spec.seed);
  switch (spec.category) {
    case Category::Websight: return websight(rng, spec.height, spec.width);
    case Category::Password: return password(rng, spec.height, spec.width);
    case Category::Chart: return chart(rng, spec.height, spec.width);
    case Category::Screen: return screen(rng, spec.height, spec.width);
  }
  throw ArgumentError("generate: unknown category");
}

CorpusSplit make_split(std::size_t n, std::uint64_t seed) {
  if (n < 10) throw ArgumentError("make_split: corpus needs at least 10 items");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  const auto n_train = static_cast<std::size_t>(std::lround(0.8 * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(n)));
  CorpusSplit s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
               order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), order.end());
  for (auto* part : {&s.train, &s.val, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

}  // namespace speckle
