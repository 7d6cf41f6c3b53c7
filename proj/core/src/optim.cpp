#include "ticketlab/optim.hpp"

#include <cmath>

#include "ticketlab/errors.hpp"

namespace ticketlab {

void MomentumSgd::set_epoch(std::size_t epoch) {
  lr_scale_ = 1.0;
  for (std::size_t m : cfg_.milestones) {
    if (epoch >= m) lr_scale_ *= cfg_.decay_factor;
  }
}

namespace {

const std::vector<std::uint8_t>* mask_bits(const PruneMask* mask, const std::string& name) {
  if (!mask) return nullptr;
  auto it = mask->groups().find(name);
  return it == mask->groups().end() ? nullptr : &it->second;
}

}  // namespace

void MomentumSgd::step(ParamStore& params, const GradStore& grads, const PruneMask* mask) {
  double gscale = 1.0;
  if (cfg_.clip_norm > 0.0) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) {
      if (params.at(name).frozen) continue;
      const auto* bits = mask_bits(mask, name);
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (!bits || (*bits)[i]) sq += g[i] * g[i];
      }
    }
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) throw TrainingError("MomentumSgd: non-finite gradient");
    if (norm > cfg_.clip_norm) gscale = cfg_.clip_norm / norm;
  }
  const double lr = current_lr();
  for (const auto& [name, g] : grads) {
    Param& p = params.at(name);
    if (p.frozen) continue;
    if (g.size() != p.values.size()) throw ShapeError("MomentumSgd: gradient size mismatch in '" + name + "'");
    const auto* bits = mask_bits(mask, name);
    auto& v = velocity_[name];
    if (v.size() != g.size()) v.assign(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (bits && !(*bits)[i]) {
        v[i] = 0.0;
        p.values[i] = 0.0;
        continue;
      }
      v[i] = cfg_.momentum * v[i] + gscale * g[i] + cfg_.weight_decay * p.values[i];
      p.values[i] -= lr * v[i];
      if (!std::isfinite(p.values[i])) throw TrainingError("MomentumSgd: non-finite weight in '" + name + "'");
    }
  }
}

}  // namespace ticketlab
