#pragma once

#include <cstddef>
#include <vector>

#include "ticketlab/orcnn.hpp"
#include "ticketlab/params.hpp"
#include "ticketlab/rng.hpp"
#include "ticketlab/tensor.hpp"

namespace ticketlab {

/// floor(x), except that products within 1e-9 relative of an integer snap to
/// it (1000 * (1 - 0.8) evaluates to 199.99999999999997).
std::size_t floor_count(double x);

struct KernelPruneResult {
  ConvTensor weights;
  std::size_t count = 0;  // kernels zeroed
  double cut = 0.0;       // largest |kernel sum| among the zeroed kernels
};

/// Zeroes the floor(p c' c) kernels (i, j) with the smallest |sum_s w_{ij,s}|,
/// ties broken by (i, j) order. Throws DomainError unless 0 <= p < 1.
KernelPruneResult kernel_sum_prune(const ConvTensor& w, double p);

/// Prunes `count` currently unmasked weights of smallest |w|, pooled over all
/// mask groups in name order; ties go to the lower (group, index) position.
/// Returns the nested mask. Throws DomainError when nothing is live or
/// `count` is zero or exceeds the live count.
PruneMask prune_smallest(const ParamStore& params, const PruneMask& mask, std::size_t count);

/// prune_smallest with count = floor(p * live).
PruneMask global_magnitude_prune(const ParamStore& params, const PruneMask& mask, double p);

enum class FilterCriterion { SmallestNorm, Random };

struct StructuredPruneResult {
  Orcnn model;
  std::vector<std::size_t> kept;  // surviving filter indices in original order
};

/// Removes m p whole filters W_r with their a_r. Survivors keep their values
/// and the model switches to the pruned scale with q = M / m. Throws
/// DomainError unless m (1 - p) is a positive integer. `rng` is required for
/// FilterCriterion::Random.
StructuredPruneResult structured_filter_prune(const Orcnn& model, double p, FilterCriterion criterion,
                                              RandomStream* rng = nullptr);

/// Same selection as structured_filter_prune, applied to arbitrary filters.
std::vector<std::size_t> select_filters(const ConvTensor& w, std::size_t keep, FilterCriterion criterion,
                                        RandomStream* rng);

}  // namespace ticketlab
