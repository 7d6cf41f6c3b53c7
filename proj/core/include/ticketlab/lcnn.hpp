#pragma once

#include <cstddef>
#include <vector>

#include "ticketlab/rng.hpp"
#include "ticketlab/tensor.hpp"

namespace ticketlab {

/// Linear CNN: composed circular convolutions W^L * ... * W^0 * x.
struct Lcnn {
  std::vector<ConvTensor> layers;
  double init_std = 1.0;

  /// Layer l maps widths[l] channels to widths[l+1] channels.
  static Lcnn random(const std::vector<std::size_t>& widths, std::size_t half_width, double init_std,
                     RandomStream& rng);

  std::size_t depth() const noexcept { return layers.size(); }
};

/// Throws ShapeError when adjacent layers do not chain.
void check_chain(const std::vector<ConvTensor>& layers);

FeatureMap lcnn_forward(const Lcnn& model, const FeatureMap& x);

}  // namespace ticketlab
