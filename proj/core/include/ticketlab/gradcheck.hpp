#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>

#include "ticketlab/params.hpp"

namespace ticketlab {

using LossFn = std::function<double(const ParamStore&)>;
/// Fingerprint of every ReLU activation pattern of a forward pass; two
/// parameter settings with equal fingerprints lie in the same linear piece.
using PatternFn = std::function<std::uint64_t(const ParamStore&)>;

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Entries checked per group, evenly strided; 0 checks every entry.
  std::size_t max_per_group = 0;
  /// Denominator floor of the relative error.
  double abs_floor = 1e-6;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_group;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

/// Compares `analytic` against central differences of `loss` for every group
/// present in `analytic`. An entry is skipped when perturbing it by +-epsilon
/// changes the activation fingerprint. Relative error is
/// |a - n| / max(|a|, |n|, abs_floor). Throws DomainError for epsilon outside
/// [1e-7, 1e-3] and TrainingError on a non-finite loss. `params` is restored.
GradCheckResult grad_check(ParamStore& params, const GradStore& analytic, const LossFn& loss,
                           const GradCheckOptions& options = {}, const PatternFn& pattern = {});

/// FNV-1a accumulation of the sign bits of `values` into `h`.
void hash_signs(std::uint64_t& h, const std::vector<double>& values);

}  // namespace ticketlab
