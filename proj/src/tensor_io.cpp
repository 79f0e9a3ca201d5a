#include "speckle/tensor_io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <numeric>
#include <ostream>

#include "speckle/error.hpp"

namespace speckle {
namespace {

constexpr std::array<char, 4> kTensorMagic{'I', 'R', 'R', '4'};
constexpr std::array<char, 4> kBundleMagic{'I', 'R', 'R', 'B'};

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  std::array<char, sizeof(T)> bytes{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>(u & 0xFFu);
    u = static_cast<U>(u >> 8);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw FormatError("tensor stream truncated");
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<decltype(u)>((u << 8) | bytes[i]);
  return static_cast<T>(u);
}

void expect_magic(std::istream& in, const std::array<char, 4>& magic) {
  std::array<char, 4> got{};
  in.read(got.data(), got.size());
  if (!in || got != magic) {
    throw FormatError("bad magic, expected '" + std::string(magic.data(), 4) + "'");
  }
}

}  // namespace

std::size_t Tensor::element_count() const noexcept {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t a, std::uint32_t d) { return a * d; });
}

void write_tensor(std::ostream& out, const Tensor& t) {
  if (t.dims.size() > 255) throw FormatError("tensor rank exceeds 255");
  if (t.element_count() != t.data.size()) throw FormatError("tensor dims/data mismatch");
  out.write(kTensorMagic.data(), kTensorMagic.size());
  put_le<std::uint16_t>(out, kTensorVersion);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t.dims.size()));
  for (auto d : t.dims) put_le<std::uint32_t>(out, d);
  for (double v : t.data) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw FormatError("tensor write failed");
}

Tensor read_tensor(std::istream& in) {
  expect_magic(in, kTensorMagic);
  const auto version = get_le<std::uint16_t>(in);
  if (version != kTensorVersion) {
    throw FormatError("unsupported tensor version " + std::to_string(version));
  }
  Tensor t;
  const auto ndim = get_le<std::uint8_t>(in);
  t.dims.resize(ndim);
  for (auto& d : t.dims) d = get_le<std::uint32_t>(in);
  t.data.resize(t.element_count());
  for (auto& v : t.data) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
  return t;
}

Tensor to_tensor(const Field2D& f) {
  return {{static_cast<std::uint32_t>(f.height()), static_cast<std::uint32_t>(f.width())},
          f.raw()};
}

Tensor to_tensor(const FeatureStack& s) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(s.channels()), static_cast<std::uint32_t>(s.height()),
            static_cast<std::uint32_t>(s.width())};
  t.data.reserve(t.element_count());
  for (const auto& c : s) t.data.insert(t.data.end(), c.raw().begin(), c.raw().end());
  return t;
}

Tensor to_tensor(std::vector<double> values) {
  Tensor t;
  t.dims = {static_cast<std::uint32_t>(values.size())};
  t.data = std::move(values);
  return t;
}

Field2D field_from_tensor(const Tensor& t) {
  if (t.dims.size() != 2) throw FormatError("expected a rank-2 tensor for Field2D");
  return Field2D(t.dims[0], t.dims[1], t.data);
}

FeatureStack stack_from_tensor(const Tensor& t) {
  if (t.dims.size() != 3) throw FormatError("expected a rank-3 tensor for FeatureStack");
  const std::size_t plane = std::size_t{t.dims[1]} * t.dims[2];
  std::vector<Field2D> channels;
  for (std::size_t c = 0; c < t.dims[0]; ++c) {
    auto first = t.data.begin() + static_cast<std::ptrdiff_t>(c * plane);
    channels.emplace_back(t.dims[1], t.dims[2],
                          std::vector<double>(first, first + static_cast<std::ptrdiff_t>(plane)));
  }
  return FeatureStack(std::move(channels));
}

void save_tensor(const std::filesystem::path& path, const Tensor& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_tensor(out, t);
}

Tensor load_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_tensor(in);
}

void write_bundle(std::ostream& out, const TensorBundle& bundle) {
  out.write(kBundleMagic.data(), kBundleMagic.size());
  put_le<std::uint16_t>(out, kTensorVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.size()));
  for (const auto& [name, tensor] : bundle) {
    if (name.size() > 0xFFFF) throw FormatError("bundle entry name too long");
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tensor(out, tensor);
  }
}

TensorBundle read_bundle(std::istream& in) {
  expect_magic(in, kBundleMagic);
  const auto version = get_le<std::uint16_t>(in);
  if (version != kTensorVersion) {
    throw FormatError("unsupported bundle version " + std::to_string(version));
  }
  const auto count = get_le<std::uint32_t>(in);
  TensorBundle bundle;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint16_t>(in);
    std::string name(len, '\0');
    in.read(name.data(), len);
    if (!in) throw FormatError("bundle truncated in entry name");
    bundle.emplace_back(std::move(name), read_tensor(in));
  }
  return bundle;
}

void save_bundle(const std::filesystem::path& path, const TensorBundle& bundle) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  write_bundle(out, bundle);
}

TensorBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return read_bundle(in);
}

const Tensor& bundle_entry(const TensorBundle& bundle, const std::string& name) {
  auto it = std::find_if(bundle.begin(), bundle.end(),
                         [&](const auto& e) { return e.first == name; });
  if (it == bundle.end()) throw FormatError("bundle has no entry '" + name + "'");
  return it->second;
}

std::uint8_t to_byte(double v) noexcept {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::lround(v * 255.0));
}

void write_png_gray(const std::filesystem::path& path, const Field2D& image) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> fp(std::fopen(path.c_str(), "wb"),
                                                      &std::fclose);
  if (!fp) throw FormatError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw FormatError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw FormatError("png_create_info_struct failed");
  }
  std::vector<std::uint8_t> row(image.width());
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("libpng error while writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < image.height(); ++y) {
    for (std::size_t x = 0; x < image.width(); ++x) row[x] = to_byte(image(y, x));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace speckle
