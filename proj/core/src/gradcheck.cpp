#include "ticketlab/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ticketlab/errors.hpp"

namespace ticketlab {
namespace {

double checked_loss(const LossFn& loss, const ParamStore& params) {
  const double v = loss(params);
  if (!std::isfinite(v)) throw TrainingError("grad_check: non-finite loss");
  return v;
}

}  // namespace

void hash_signs(std::uint64_t& h, const std::vector<double>& values) {
  for (double v : values) {
    h ^= v > 0.0 ? 1u : 0u;
    h *= 0x100000001B3ull;
  }
}

GradCheckResult grad_check(ParamStore& params, const GradStore& analytic, const LossFn& loss,
                           const GradCheckOptions& options, const PatternFn& pattern) {
  const double eps = options.epsilon;
  if (!(eps >= 1e-7 && eps <= 1e-3)) throw DomainError("grad_check: epsilon must lie in [1e-7, 1e-3]");
  checked_loss(loss, params);
  const std::uint64_t base = pattern ? pattern(params) : 0;

  GradCheckResult r;
  for (const auto& [name, grad] : analytic) {
    auto& values = params.at(name).values;
    if (grad.size() != values.size()) throw ShapeError("grad_check: gradient size mismatch in '" + name + "'");
    const std::size_t n = values.size();
    const std::size_t stride =
        options.max_per_group == 0 || n <= options.max_per_group ? 1 : n / options.max_per_group;
    for (std::size_t idx = 0; idx < n; idx += stride) {
      const double saved = values[idx];
      values[idx] = saved + eps;
      const double up = checked_loss(loss, params);
      const bool kink_up = pattern && pattern(params) != base;
      values[idx] = saved - eps;
      const double down = checked_loss(loss, params);
      const bool kink_down = pattern && pattern(params) != base;
      values[idx] = saved;
      if (kink_up || kink_down) {
        ++r.skipped_kinks;
        continue;
      }
      const double numeric = (up - down) / (2.0 * eps);
      const double a = grad[idx];
      const double denom = std::max({std::abs(a), std::abs(numeric), options.abs_floor});
      const double err = std::abs(a - numeric) / denom;
      ++r.checked;
      if (err > r.max_rel_error) {
        r.max_rel_error = err;
        r.worst_group = name;
        r.worst_index = idx;
      }
    }
  }
  return r;
}

}  // namespace ticketlab
