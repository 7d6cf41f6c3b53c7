#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ticketlab/params.hpp"

namespace ticketlab {

enum class LthMethod {
  ModifiedLth,  // rewind survivors to theta_pre after every round
  Imp,          // carry finetuned weights into the next round
};

struct LthConfig {
  std::size_t rounds = 7;
  double prune_rate = 0.2;  // fraction removed per round; keep rate r = 1 - prune_rate
  LthMethod method = LthMethod::ModifiedLth;
};

struct Ticket {
  std::size_t round = 0;
  double nominal_sparsity = 0.0;  // 1 - r^i
  double sparsity = 0.0;          // zero bits / total bits of `mask`
  PruneMask mask;
  std::uint64_t rewind_hash = 0;  // ParamStore::hash() of theta_pre
  double finetune_loss = 0.0;
};

/// 1 - r^i.
double ladder_sparsity(double keep_rate, std::size_t round);
/// Cumulative pruned count after round i: floor(total (1 - r^i)).
std::size_t ladder_pruned_count(std::size_t total, double keep_rate, std::size_t round);

/// Trains `params` in place under `mask` and returns the final loss.
using FinetuneFn = std::function<double(ParamStore& params, const PruneMask& mask, std::size_t round)>;
/// Called once per round with the new ticket, the finetuned weights (before
/// pruning and rewind) and the weights the next round starts from.
using RoundHook = std::function<void(const Ticket& ticket, const ParamStore& finetuned,
                                     const ParamStore& next_start)>;

/// Modified LTH (rewind to theta_pre) or IMP over the prunable groups of theta_pre.
/// Per round: finetune under the mask, prune the smallest live weights so the
/// cumulative count reaches floor(N (1 - r^i)), then rewind or carry over.
/// Throws DomainError when theta_pre has no prunable groups.
std::vector<Ticket> run_lth(const ParamStore& theta_pre, const LthConfig& cfg, const FinetuneFn& finetune,
                            const RoundHook& hook = {});

}  // namespace ticketlab
