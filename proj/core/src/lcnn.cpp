#include "ticketlab/lcnn.hpp"

#include <string>

#include "ticketlab/conv.hpp"
#include "ticketlab/errors.hpp"

namespace ticketlab {

Lcnn Lcnn::random(const std::vector<std::size_t>& widths, std::size_t half_width, double init_std,
                  RandomStream& rng) {
  if (widths.size() < 2) throw ShapeError("Lcnn::random: need at least two widths");
  if (!(init_std > 0.0)) throw DomainError("Lcnn::random: init_std must be positive");
  Lcnn m;
  m.init_std = init_std;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    ConvTensor w = ConvTensor::make_1d(widths[l + 1], widths[l], half_width);
    for (double& v : w.values()) v = rng.normal(0.0, init_std);
    m.layers.push_back(std::move(w));
  }
  return m;
}

void check_chain(const std::vector<ConvTensor>& layers) {
  for (std::size_t l = 1; l < layers.size(); ++l) {
    if (layers[l].in_channels() != layers[l - 1].out_channels()) {
      throw ShapeError("layer " + std::to_string(l) + " expects " +
                       std::to_string(layers[l].in_channels()) + " channels, previous layer emits " +
                       std::to_string(layers[l - 1].out_channels()));
    }
  }
}

FeatureMap lcnn_forward(const Lcnn& model, const FeatureMap& x) {
  check_chain(model.layers);
  FeatureMap h = x;
  for (const auto& w : model.layers) h = circ_conv(w, h);
  return h;
}

}  // namespace ticketlab
