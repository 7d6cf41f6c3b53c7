#pragma once

#include <cstddef>
#include <vector>

#include "ticketlab/params.hpp"

namespace ticketlab {

struct SgdConfig {
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
  /// Epochs at which the learning rate is multiplied by `decay_factor`.
  std::vector<std::size_t> milestones;
  double decay_factor = 0.1;
  /// Rescales the gradient of the live, non-frozen entries to this global l2
  /// norm when it is larger (0 disables clipping).
  double clip_norm = 0.0;
};

/// Heavy-ball SGD: v = mu v + g (+ wd w), w -= lr v. Frozen groups are never
/// touched, and masked entries receive zero gradient and stay exactly zero.
class MomentumSgd {
 public:
  explicit MomentumSgd(SgdConfig cfg) : cfg_(std::move(cfg)) {}

  void set_epoch(std::size_t epoch);
  double current_lr() const noexcept { return lr_scale_ * cfg_.lr; }

  /// Throws TrainingError when an update produces a non-finite weight.
  void step(ParamStore& params, const GradStore& grads, const PruneMask* mask = nullptr);
  void reset() { velocity_.clear(); }

 private:
  SgdConfig cfg_;
  double lr_scale_ = 1.0;
  GradStore velocity_;
};

}  // namespace ticketlab
