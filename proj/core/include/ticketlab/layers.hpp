#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ticketlab/tensor.hpp"

namespace ticketlab {

// Elementwise ReLU. The subgradient at 0 is taken as 0.
FeatureMap relu(const FeatureMap& x);
/// grad_in = grad_out where pre > 0, else 0.
FeatureMap relu_backward(const FeatureMap& pre, const FeatureMap& grad_out);

/// 2x2 average pooling with stride 2; both spatial sides must be even.
FeatureMap avg_downsample2(const FeatureMap& x);
FeatureMap avg_downsample2_backward(const FeatureMap& grad_out);

/// Nearest-neighbour upsampling by an integer factor on both axes.
FeatureMap upsample_nearest(const FeatureMap& x, std::size_t factor);
FeatureMap upsample_nearest_backward(const FeatureMap& grad_out, std::size_t factor);

/// y = W z + b with W stored row-major (out x in).
std::vector<double> linear(std::span<const double> weight, std::span<const double> bias,
                           std::span<const double> z);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d input
};

/// Softmax cross-entropy of one logit vector against a class index.
LossAndGrad softmax_cross_entropy(std::span<const double> logits, std::size_t label);

/// ||prediction - target||^2 (sum over all entries) and its gradient.
LossAndGrad squared_error(std::span<const double> prediction, std::span<const double> target);

std::size_t argmax(std::span<const double> v);

}  // namespace ticketlab
