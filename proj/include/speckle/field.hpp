#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace speckle {

// Dense real-valued H x W grid, row-major, double precision.
class Field2D {
 public:
  Field2D() = default;
  // Throws DimensionError when either extent is zero.
  Field2D(std::size_t height, std::size_t width, double fill = 0.0);
  Field2D(std::size_t height, std::size_t width, std::vector<double> data);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t row, std::size_t col) noexcept {
    return data_[row * width_ + col];
  }
  double operator()(std::size_t row, std::size_t col) const noexcept {
    return data_[row * width_ + col];
  }
  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& raw() const noexcept { return data_; }

  bool same_shape(const Field2D& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_;
  }

  Field2D& operator+=(const Field2D& other);
  Field2D& operator-=(const Field2D& other);
  Field2D& operator*=(double s) noexcept;

  friend bool operator==(const Field2D&, const Field2D&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

Field2D operator+(Field2D a, const Field2D& b);
Field2D operator-(Field2D a, const Field2D& b);
Field2D operator*(double s, Field2D a);

// Euclidean inner product / norms over all entries.
double dot(const Field2D& a, const Field2D& b);
double norm2(const Field2D& f);
double sum(const Field2D& f);
double mean(const Field2D& f);
double min_value(const Field2D& f);
double max_value(const Field2D& f);
bool all_finite(const Field2D& f);

// a += s * b
void axpy(double s, const Field2D& b, Field2D& a);

void require_same_shape(const Field2D& a, const Field2D& b, const char* what);

// C channels of identical H x W fields.
class FeatureStack {
 public:
  FeatureStack() = default;
  FeatureStack(std::size_t channels, std::size_t height, std::size_t width,
               double fill = 0.0);
  explicit FeatureStack(std::vector<Field2D> channels);

  std::size_t channels() const noexcept { return channels_.size(); }
  std::size_t height() const noexcept {
    return channels_.empty() ? 0 : channels_.front().height();
  }
  std::size_t width() const noexcept {
    return channels_.empty() ? 0 : channels_.front().width();
  }

  Field2D& operator[](std::size_t c) noexcept { return channels_[c]; }
  const Field2D& operator[](std::size_t c) const noexcept { return channels_[c]; }

  auto begin() noexcept { return channels_.begin(); }
  auto end() noexcept { return channels_.end(); }
  auto begin() const noexcept { return channels_.begin(); }
  auto end() const noexcept { return channels_.end(); }

  bool same_shape(const FeatureStack& other) const noexcept;

  friend bool operator==(const FeatureStack&, const FeatureStack&) = default;

 private:
  std::vector<Field2D> channels_;
};

void require_same_shape(const FeatureStack& a, const FeatureStack& b, const char* what);

double norm2(const FeatureStack& s);

}  // namespace speckle
