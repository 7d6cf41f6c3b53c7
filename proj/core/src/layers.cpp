#include "ticketlab/layers.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ticketlab/errors.hpp"

namespace ticketlab {

FeatureMap relu(const FeatureMap& x) {
  FeatureMap out = x;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

FeatureMap relu_backward(const FeatureMap& pre, const FeatureMap& grad_out) {
  if (!pre.same_shape(grad_out)) throw ShapeError("relu_backward: shape mismatch");
  FeatureMap g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(pre.values()[i] > 0.0)) g.values()[i] = 0.0;
  }
  return g;
}

FeatureMap avg_downsample2(const FeatureMap& x) {
  if (x.height() % 2 != 0 || x.width() % 2 != 0) {
    throw ShapeError("avg_downsample2: odd spatial size " + std::to_string(x.height()) + "x" +
                     std::to_string(x.width()));
  }
  FeatureMap out(x.channels(), x.height() / 2, x.width() / 2);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t y = 0; y < out.height(); ++y) {
      for (std::size_t j = 0; j < out.width(); ++j) {
        out.at(c, y, j) = 0.25 * (x.at(c, 2 * y, 2 * j) + x.at(c, 2 * y, 2 * j + 1) +
                                  x.at(c, 2 * y + 1, 2 * j) + x.at(c, 2 * y + 1, 2 * j + 1));
      }
    }
  }
  return out;
}

FeatureMap avg_downsample2_backward(const FeatureMap& grad_out) {
  FeatureMap g(grad_out.channels(), grad_out.height() * 2, grad_out.width() * 2);
  for (std::size_t c = 0; c < g.channels(); ++c) {
    for (std::size_t y = 0; y < g.height(); ++y) {
      for (std::size_t j = 0; j < g.width(); ++j) g.at(c, y, j) = 0.25 * grad_out.at(c, y / 2, j / 2);
    }
  }
  return g;
}

FeatureMap upsample_nearest(const FeatureMap& x, std::size_t factor) {
  if (factor == 0) throw DomainError("upsample_nearest: factor must be positive");
  FeatureMap out(x.channels(), x.height() * factor, x.width() * factor);
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t y = 0; y < out.height(); ++y) {
      for (std::size_t j = 0; j < out.width(); ++j) out.at(c, y, j) = x.at(c, y / factor, j / factor);
    }
  }
  return out;
}

FeatureMap upsample_nearest_backward(const FeatureMap& grad_out, std::size_t factor) {
  if (factor == 0 || grad_out.height() % factor != 0 || grad_out.width() % factor != 0) {
    throw ShapeError("upsample_nearest_backward: size not divisible by factor");
  }
  FeatureMap g(grad_out.channels(), grad_out.height() / factor, grad_out.width() / factor);
  for (std::size_t c = 0; c < grad_out.channels(); ++c) {
    for (std::size_t y = 0; y < grad_out.height(); ++y) {
      for (std::size_t j = 0; j < grad_out.width(); ++j) {
        g.at(c, y / factor, j / factor) += grad_out.at(c, y, j);
      }
    }
  }
  return g;
}

std::vector<double> linear(std::span<const double> weight, std::span<const double> bias,
                           std::span<const double> z) {
  const std::size_t out = bias.size();
  if (weight.size() != out * z.size()) throw ShapeError("linear: weight shape mismatch");
  std::vector<double> y(out);
  for (std::size_t o = 0; o < out; ++o) {
    double acc = bias[o];
    for (std::size_t i = 0; i < z.size(); ++i) acc += weight[o * z.size() + i] * z[i];
    y[o] = acc;
  }
  return y;
}

LossAndGrad softmax_cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw IndexError("softmax_cross_entropy: label " + std::to_string(label) + " with " +
                     std::to_string(logits.size()) + " classes");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  const double log_z = std::log(z) + mx;
  LossAndGrad r{log_z - logits[label], std::vector<double>(logits.size())};
  for (std::size_t k = 0; k < logits.size(); ++k) r.grad[k] = std::exp(logits[k] - log_z);
  r.grad[label] -= 1.0;
  return r;
}

LossAndGrad squared_error(std::span<const double> prediction, std::span<const double> target) {
  if (prediction.size() != target.size()) throw ShapeError("squared_error: shape mismatch");
  LossAndGrad r{0.0, std::vector<double>(prediction.size())};
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const double d = prediction[i] - target[i];
    r.loss += d * d;
    r.grad[i] = 2.0 * d;
  }
  return r;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace ticketlab
