#include "ticketlab/lth.hpp"

#include <cmath>

#include "ticketlab/errors.hpp"
#include "ticketlab/pruning.hpp"

namespace ticketlab {

double ladder_sparsity(double keep_rate, std::size_t round) {
  return 1.0 - std::pow(keep_rate, static_cast<double>(round));
}

std::size_t ladder_pruned_count(std::size_t total, double keep_rate, std::size_t round) {
  return floor_count(static_cast<double>(total) * ladder_sparsity(keep_rate, round));
}

std::vector<Ticket> run_lth(const ParamStore& theta_pre, const LthConfig& cfg, const FinetuneFn& finetune,
                            const RoundHook& hook) {
  if (cfg.rounds == 0) throw DomainError("run_lth: rounds must be at least 1");
  if (!(cfg.prune_rate > 0.0 && cfg.prune_rate < 1.0)) throw DomainError("run_lth: prune rate must lie in (0, 1)");
  PruneMask mask = PruneMask::ones_like(theta_pre);
  if (mask.total() == 0) throw DomainError("run_lth: theta_pre has no prunable parameters");

  const double keep = 1.0 - cfg.prune_rate;
  const std::uint64_t rewind_hash = theta_pre.hash();
  ParamStore params = theta_pre;
  std::vector<Ticket> tickets;
  for (std::size_t i = 1; i <= cfg.rounds; ++i) {
    const double loss = finetune(params, mask, i);
    const std::size_t target = ladder_pruned_count(mask.total(), keep, i);
    mask = prune_smallest(params, mask, target - mask.pruned());

    const ParamStore finetuned = params;
    if (cfg.method == LthMethod::ModifiedLth) params.assign_from(theta_pre);
    mask.apply(params);

    Ticket t{i, ladder_sparsity(keep, i), mask.sparsity(), mask, rewind_hash, loss};
    if (hook) hook(t, finetuned, params);
    tickets.push_back(std::move(t));
  }
  return tickets;
}

}  // namespace ticketlab
