#include "speckle/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "speckle/error.hpp"

namespace speckle {

Field2D::Field2D(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width) {
  if (height == 0 || width == 0) {
    throw DimensionError("Field2D: height and width must be positive");
  }
  data_.assign(height * width, fill);
}

Field2D::Field2D(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height == 0 || width == 0) {
    throw DimensionError("Field2D: height and width must be positive");
  }
  if (data_.size() != height * width) {
    throw DimensionError("Field2D: data length " + std::to_string(data_.size()) +
                         " does not match " + std::to_string(height) + "x" +
                         std::to_string(width));
  }
}

Field2D& Field2D::operator+=(const Field2D& other) {
  require_same_shape(*this, other, "Field2D::operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Field2D& Field2D::operator-=(const Field2D& other) {
  require_same_shape(*this, other, "Field2D::operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Field2D& Field2D::operator*=(double s) noexcept {
  for (double& v : data_) v *= s;
  return *this;
}

Field2D operator+(Field2D a, const Field2D& b) { return a += b; }
Field2D operator-(Field2D a, const Field2D& b) { return a -= b; }
Field2D operator*(double s, Field2D a) { return a *= s; }

void require_same_shape(const Field2D& a, const Field2D& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " +
                         std::to_string(a.height()) + "x" + std::to_string(a.width()) +
                         " vs " + std::to_string(b.height()) + "x" +
                         std::to_string(b.width()));
  }
}

double dot(const Field2D& a, const Field2D& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(const Field2D& f) { return std::sqrt(dot(f, f)); }

double sum(const Field2D& f) {
  return std::accumulate(f.values().begin(), f.values().end(), 0.0);
}

double mean(const Field2D& f) { return sum(f) / static_cast<double>(f.size()); }

double min_value(const Field2D& f) {
  return *std::min_element(f.values().begin(), f.values().end());
}

double max_value(const Field2D& f) {
  return *std::max_element(f.values().begin(), f.values().end());
}

bool all_finite(const Field2D& f) {
  return std::all_of(f.values().begin(), f.values().end(),
                     [](double v) { return std::isfinite(v); });
}

void axpy(double s, const Field2D& b, Field2D& a) {
  require_same_shape(a, b, "axpy");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += s * b[i];
}

FeatureStack::FeatureStack(std::size_t channels, std::size_t height, std::size_t width,
                           double fill) {
  if (channels == 0) throw DimensionError("FeatureStack: need at least one channel");
  channels_.assign(channels, Field2D(height, width, fill));
}

FeatureStack::FeatureStack(std::vector<Field2D> channels) : channels_(std::move(channels)) {
  if (channels_.empty()) throw DimensionError("FeatureStack: need at least one channel");
  for (const auto& c : channels_) {
    require_same_shape(channels_.front(), c, "FeatureStack");
  }
}

bool FeatureStack::same_shape(const FeatureStack& other) const noexcept {
  return channels() == other.channels() && height() == other.height() &&
         width() == other.width();
}

void require_same_shape(const FeatureStack& a, const FeatureStack& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": feature stack shape mismatch");
  }
}

double norm2(const FeatureStack& s) {
  double acc = 0.0;
  for (const auto& c : s) acc += dot(c, c);
  return std::sqrt(acc);
}

}  // namespace speckle
