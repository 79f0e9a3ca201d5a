#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "speckle/field.hpp"

namespace speckle {

// Binary tensor container, all integers little-endian:
//   "IRR4" | version u16 (=1) | ndim u8 | dims u32 x ndim | payload f64 x prod(dims)
// Payload is row-major IEEE-754 binary64. ndim 0 stores a single scalar.
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<double> data;

  std::size_t element_count() const noexcept;
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

inline constexpr std::uint16_t kTensorVersion = 1;

void write_tensor(std::ostream& out, const Tensor& t);
Tensor read_tensor(std::istream& in);

Tensor to_tensor(const Field2D& f);
Tensor to_tensor(const FeatureStack& s);
Tensor to_tensor(std::vector<double> values);
Field2D field_from_tensor(const Tensor& t);
FeatureStack stack_from_tensor(const Tensor& t);

void save_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor load_tensor(const std::filesystem::path& path);
inline void save_field(const std::filesystem::path& path, const Field2D& f) {
  save_tensor(path, to_tensor(f));
}
inline Field2D load_field(const std::filesystem::path& path) {
  return field_from_tensor(load_tensor(path));
}

// Named parameter bundle:
//   "IRRB" | version u16 (=1) | count u32 | count x { name_len u16 | name | tensor }
// where each tensor is a complete IRR4 record.
using TensorBundle = std::vector<std::pair<std::string, Tensor>>;

void write_bundle(std::ostream& out, const TensorBundle& bundle);
TensorBundle read_bundle(std::istream& in);
void save_bundle(const std::filesystem::path& path, const TensorBundle& bundle);
TensorBundle load_bundle(const std::filesystem::path& path);
// Throws FormatError when `name` is absent.
const Tensor& bundle_entry(const TensorBundle& bundle, const std::string& name);

// 8-bit PNG export. Each sample maps as byte = round(clamp(v, 0, 1) * 255),
// halves rounded away from zero.
std::uint8_t to_byte(double v) noexcept;
void write_png_gray(const std::filesystem::path& path, const Field2D& image);

}  // namespace speckle
