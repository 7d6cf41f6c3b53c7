#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ticketlab/tensor.hpp"

namespace ticketlab {

struct KernelShape {
  std::size_t out = 0;
  std::size_t in = 0;
  std::size_t kh = 1;
  std::size_t kw = 1;
};

/// Circular cross-correlation on an in x H x W map:
///   out[o,y,x] = sum_i sum_dy sum_dx w[o,i,dy,dx] * in[i, y+dy-kh/2, x+dx-kw/2]
/// with both spatial indices taken modulo the map size. For a 1D map (H = 1,
/// kh = 1) this is (W*x)_{o,j} = sum_i sum_{l=-s..s} w_{oi,l} x_{i,j+l}.
/// `out` is overwritten. Zero weights are skipped, so pruned kernels cost nothing.
void circ_conv_raw(std::span<const double> w, KernelShape shape, std::span<const double> in,
                   std::size_t height, std::size_t width, std::span<double> out);

/// Backward pass of circ_conv_raw. Either gradient output may be empty to skip it;
/// both are accumulated into, not overwritten.
void circ_conv_backward_raw(std::span<const double> w, KernelShape shape,
                            std::span<const double> in, std::size_t height, std::size_t width,
                            std::span<const double> grad_out, std::span<double> grad_in,
                            std::span<double> grad_w);

/// Circular convolution of a feature map. Throws ShapeError on channel mismatch
/// and DomainError on an empty spatial extent.
FeatureMap circ_conv(const ConvTensor& w, const FeatureMap& x);

struct ConvGrads {
  FeatureMap input;
  ConvTensor weights;
};

/// Gradients of sum(grad_out .* circ_conv(w, x)) with respect to x and w.
ConvGrads circ_conv_backward(const ConvTensor& w, const FeatureMap& x, const FeatureMap& grad_out);

/// Per-channel spatial mean.
std::vector<double> avg_pool(const FeatureMap& v);

/// The c x (2s+1) window phi_k(x) around 0-based position k of a 1D map,
/// columns k-s .. k+s taken circularly. Satisfies (W*x)_{r,k} = <W_r, phi_k(x)>.
PatchMatrix extract_patch(const FeatureMap& x, std::size_t position, std::size_t half_width);

/// Circular shift along the width axis: result[.., j] = x[.., j - offset].
FeatureMap circular_shift(const FeatureMap& x, long offset);

}  // namespace ticketlab
