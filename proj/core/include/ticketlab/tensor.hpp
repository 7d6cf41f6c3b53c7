#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ticketlab {

/// Channel-first activation array. 1D signals are stored with height 1, so a
/// c x D map and a c x 1 x D map are the same object. Spatial indices wrap.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t channels, std::size_t length, double fill = 0.0);
  FeatureMap(std::size_t channels, std::size_t height, std::size_t width, double fill = 0.0);

  static FeatureMap from_values(std::size_t channels, std::size_t height, std::size_t width,
                                std::vector<double> values);
  /// Builds a 1D map from rows of equal length.
  static FeatureMap from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  /// Spatial length of a 1D map (== width).
  std::size_t length() const noexcept { return width_; }
  std::size_t plane() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool is_1d() const noexcept { return height_ == 1; }

  double& at(std::size_t c, std::size_t j) { return values_[c * plane() + j]; }
  double at(std::size_t c, std::size_t j) const { return values_[c * plane() + j]; }
  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return values_[(c * height_ + y) * width_ + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return values_[(c * height_ + y) * width_ + x];
  }

  std::span<double> channel(std::size_t c) { return {values_.data() + c * plane(), plane()}; }
  std::span<const double> channel(std::size_t c) const {
    return {values_.data() + c * plane(), plane()};
  }

  std::span<double> flat() noexcept { return values_; }
  std::span<const double> flat() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool same_shape(const FeatureMap& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }

  bool operator==(const FeatureMap&) const = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> values_;
};

/// Convolution weights of shape out x in x kh x kw with odd kernel sides.
/// A 1D tensor W in R^{c' x c x (2s+1)} has kh == 1 and tap l in [-s, s]
/// stored at column l + s.
class ConvTensor {
 public:
  ConvTensor() = default;
  ConvTensor(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_h,
             std::size_t kernel_w, double fill = 0.0);

  static ConvTensor make_1d(std::size_t out_channels, std::size_t in_channels,
                            std::size_t half_width, double fill = 0.0);
  static ConvTensor from_values(std::size_t out_channels, std::size_t in_channels,
                                std::size_t kernel_h, std::size_t kernel_w,
                                std::vector<double> values);

  std::size_t out_channels() const noexcept { return out_; }
  std::size_t in_channels() const noexcept { return in_; }
  std::size_t kernel_h() const noexcept { return kh_; }
  std::size_t kernel_w() const noexcept { return kw_; }
  /// Half-width s along the width axis (kernel width 2s+1).
  std::size_t half_width() const noexcept { return kw_ / 2; }
  std::size_t taps() const noexcept { return kh_ * kw_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool is_1d() const noexcept { return kh_ == 1; }

  /// 1D access with signed tap offset l in [-s, s].
  double& tap(std::size_t o, std::size_t i, long l) {
    return values_[(o * in_ + i) * taps() + static_cast<std::size_t>(l + static_cast<long>(half_width()))];
  }
  double tap(std::size_t o, std::size_t i, long l) const {
    return values_[(o * in_ + i) * taps() + static_cast<std::size_t>(l + static_cast<long>(half_width()))];
  }
  double& at(std::size_t o, std::size_t i, std::size_t dy, std::size_t dx) {
    return values_[((o * in_ + i) * kh_ + dy) * kw_ + dx];
  }
  double at(std::size_t o, std::size_t i, std::size_t dy, std::size_t dx) const {
    return values_[((o * in_ + i) * kh_ + dy) * kw_ + dx];
  }

  /// The (o, i) kernel as a contiguous span of kh*kw taps.
  std::span<double> kernel(std::size_t o, std::size_t i) {
    return {values_.data() + (o * in_ + i) * taps(), taps()};
  }
  std::span<const double> kernel(std::size_t o, std::size_t i) const {
    return {values_.data() + (o * in_ + i) * taps(), taps()};
  }
  /// Filter r: all in-channel kernels feeding output channel r.
  std::span<double> filter(std::size_t o) { return {values_.data() + o * in_ * taps(), in_ * taps()}; }
  std::span<const double> filter(std::size_t o) const {
    return {values_.data() + o * in_ * taps(), in_ * taps()};
  }

  std::span<double> flat() noexcept { return values_; }
  std::span<const double> flat() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }
  const std::vector<double>& values() const noexcept { return values_; }

  bool operator==(const ConvTensor&) const = default;

 private:
  std::size_t out_ = 0;
  std::size_t in_ = 0;
  std::size_t kh_ = 0;
  std::size_t kw_ = 0;
  std::vector<double> values_;
};

/// The c x (2s+1) window of a 1D feature map centred at one position.
struct PatchMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::span<const double> flat() const noexcept { return values; }
};

double l2_norm(std::span<const double> a);
double inner(std::span<const double> a, std::span<const double> b);

/// ||A - B|| / sqrt(||A|| ||B||). Throws DomainError when either norm is zero.
double normalized_l2_distance(std::span<const double> a, std::span<const double> b);

/// Minimum of the normalized distance over all orthogonal transforms applied to
/// one argument: |‖A‖-‖B‖| / sqrt(‖A‖‖B‖). Operands of different sizes are
/// compared as if the shorter one were zero-embedded, which keeps its norm.
double min_rotation_distance(std::span<const double> a, std::span<const double> b);

}  // namespace ticketlab
