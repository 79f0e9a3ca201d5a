#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "speckle/field.hpp"
#include "speckle/optics.hpp"

namespace speckle {

enum class Category { Websight, Password, Chart, Screen };

inline constexpr Category kAllCategories[] = {Category::Websight, Category::Password,
                                              Category::Chart, Category::Screen};

std::string_view category_name(Category c) noexcept;  // "websight", "password", "chart", "screen"
Category parse_category(std::string_view name);       // case-insensitive; ArgumentError otherwise

struct SceneSpec {
  Category category = Category::Websight;
  std::size_t height = 64;  // powers of two in [32, 256]
  std::size_t width = 64;
  std::uint64_t seed = 0;
};

// Throws ConfigError("size", ...) unless both extents are powers of two in [32, 256].
void validate(const SceneSpec& spec);

// Axis-aligned rectangle in pixel coordinates.
struct Region {
  std::string label;
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  // 1 inside the rectangle, 0 elsewhere, on an image of the given size.
  Field2D mask(std::size_t image_height, std::size_t image_width) const;
  double mean_over(const Field2D& image) const;
};

struct Scene {
  ScreenImage image;
  std::vector<Region> regions;
  std::optional<std::size_t> highlighted_key;  // index into regions, password pads only
};

// Procedural screen content:
//   websight  header bar, text-line strips, image blocks
//   password  3 x 4 keypad with exactly one highlighted key
//   chart     axes with 4-8 bars or a polyline
//   screen    taskbar, icon grid, 2-4 overlapping windows
Scene generate(const SceneSpec& spec);

struct CorpusSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Seeded shuffle of 0..n-1 cut 8:1:1 with |train| = round(0.8 n),
// |val| = round(0.1 n) and the rest in test; each list is sorted. n >= 10.
CorpusSplit make_split(std::size_t n, std::uint64_t seed);

}  // namespace speckle
