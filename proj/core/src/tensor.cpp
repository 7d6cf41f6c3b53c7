#include "ticketlab/tensor.hpp"

#include <cmath>
#include <string>

#include "ticketlab/errors.hpp"

namespace ticketlab {

FeatureMap::FeatureMap(std::size_t channels, std::size_t length, double fill)
    : FeatureMap(channels, 1, length, fill) {}

FeatureMap::FeatureMap(std::size_t channels, std::size_t height, std::size_t width, double fill)
    : channels_(channels), height_(height), width_(width), values_(channels * height * width, fill) {}

FeatureMap FeatureMap::from_values(std::size_t channels, std::size_t height, std::size_t width,
                                   std::vector<double> values) {
  if (values.size() != channels * height * width) {
    throw ShapeError("FeatureMap: " + std::to_string(values.size()) + " values for shape " +
                     std::to_string(channels) + "x" + std::to_string(height) + "x" +
                     std::to_string(width));
  }
  FeatureMap m;
  m.channels_ = channels;
  m.height_ = height;
  m.width_ = width;
  m.values_ = std::move(values);
  return m;
}

FeatureMap FeatureMap::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t c = rows.size();
  const std::size_t d = c == 0 ? 0 : rows.front().size();
  std::vector<double> values;
  values.reserve(c * d);
  for (const auto& row : rows) {
    if (row.size() != d) throw ShapeError("FeatureMap::from_rows: ragged rows");
    values.insert(values.end(), row.begin(), row.end());
  }
  return from_values(c, 1, d, std::move(values));
}

ConvTensor::ConvTensor(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_h,
                       std::size_t kernel_w, double fill)
    : out_(out_channels), in_(in_channels), kh_(kernel_h), kw_(kernel_w),
      values_(out_channels * in_channels * kernel_h * kernel_w, fill) {
  if (kh_ % 2 == 0 || kw_ % 2 == 0) {
    throw ShapeError("ConvTensor: kernel sides must be odd, got " + std::to_string(kh_) + "x" +
                     std::to_string(kw_));
  }
}

ConvTensor ConvTensor::make_1d(std::size_t out_channels, std::size_t in_channels,
                               std::size_t half_width, double fill) {
  return ConvTensor(out_channels, in_channels, 1, 2 * half_width + 1, fill);
}

ConvTensor ConvTensor::from_values(std::size_t out_channels, std::size_t in_channels,
                                   std::size_t kernel_h, std::size_t kernel_w,
                                   std::vector<double> values) {
  ConvTensor w(out_channels, in_channels, kernel_h, kernel_w);
  if (values.size() != w.values_.size()) {
    throw ShapeError("ConvTensor: " + std::to_string(values.size()) + " values for " +
                     std::to_string(w.values_.size()) + " entries");
  }
  w.values_ = std::move(values);
  return w;
}

double l2_norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

double inner(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("inner: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double normalized_l2_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("normalized_l2_distance: operands have " + std::to_string(a.size()) +
                     " and " + std::to_string(b.size()) + " entries");
  }
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw DomainError("normalized_l2_distance: zero-norm operand");
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    diff += d * d;
  }
  return std::sqrt(diff) / std::sqrt(na * nb);
}

double min_rotation_distance(std::span<const double> a, std::span<const double> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw DomainError("min_rotation_distance: zero-norm operand");
  return std::abs(na - nb) / std::sqrt(na * nb);
}

}  // namespace ticketlab
