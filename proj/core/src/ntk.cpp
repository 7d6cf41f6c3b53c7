#include "ticketlab/ntk.hpp"

#include <algorithm>
#include <cmath>

#include "ticketlab/errors.hpp"

namespace ticketlab {
namespace {

double max_filter_norm(const ConvTensor& w) {
  double best = 0.0;
  for (std::size_t r = 0; r < w.out_channels(); ++r) best = std::max(best, l2_norm(w.filter(r)));
  return best;
}

double max_filter_distance(const ConvTensor& a, const ConvTensor& b) {
  double best = 0.0;
  for (std::size_t r = 0; r < a.out_channels(); ++r) {
    const auto fa = a.filter(r);
    const auto fb = b.filter(r);
    double s = 0.0;
    for (std::size_t j = 0; j < fa.size(); ++j) s += (fa[j] - fb[j]) * (fa[j] - fb[j]);
    best = std::max(best, std::sqrt(s));
  }
  return best;
}

}  // namespace

GdTrace train_orcnn_gd(Orcnn& model, const PatchData& data, const GdConfig& cfg) {
  if (!(cfg.eta > 0.0)) throw DomainError("train_orcnn_gd: eta must be positive");
  if (!(cfg.lambda0 > 0.0)) throw DomainError("train_orcnn_gd: lambda0 must be positive");
  const double n = static_cast<double>(data.size());
  const double grad_factor = std::sqrt(model.q * n) / std::sqrt(static_cast<double>(model.width()));
  const double decay = 1.0 - cfg.eta * cfg.lambda0 / 2.0;
  const ConvTensor w0 = model.w;

  GdTrace tr;
  OrcnnLossGrad lg = orcnn_loss_and_grad(model, data);
  const double loss0 = lg.residual.squaredNorm();
  tr.movement_bound = 4.0 * grad_factor / cfg.lambda0 * std::sqrt(loss0);
  double envelope = loss0;
  for (std::size_t t = 0;; ++t) {
    const double loss = lg.residual.squaredNorm();
    if (!std::isfinite(loss) || loss > 10.0 * loss0 + 1e-300) {
      throw TrainingError("train_orcnn_gd: diverged at step " + std::to_string(t));
    }
    const double move = t == 0 ? 0.0 : max_filter_distance(model.w, w0);
    const double grad = max_filter_norm(lg.grad);
    tr.loss.push_back(loss);
    tr.max_movement.push_back(move);
    tr.max_grad.push_back(grad);
    if (loss > envelope * (1.0 + cfg.envelope_slack) + 1e-300) {
      if (tr.envelope_ok) tr.first_envelope_violation = t;
      tr.envelope_ok = false;
    }
    if (move > tr.movement_bound) tr.movement_ok = false;
    if (grad > grad_factor * std::sqrt(loss) * (1.0 + 1e-12)) tr.grad_ok = false;
    if (t > 0 && !(loss < tr.loss[t - 1])) tr.strictly_decreasing = false;

    if (t == cfg.max_iterations || loss < cfg.stop_loss) break;
    auto w = model.w.flat();
    const auto g = lg.grad.flat();
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= cfg.eta * g[j];
    ++tr.iterations;
    envelope *= decay;
    lg = orcnn_loss_and_grad(model, data);
  }
  return tr;
}

}  // namespace ticketlab
