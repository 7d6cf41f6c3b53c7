#include "ticketlab/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ticketlab/errors.hpp"

namespace ticketlab {
namespace {

void check_fraction(double p, const char* who) {
  if (!(p >= 0.0 && p < 1.0)) throw DomainError(std::string(who) + ": p must lie in [0, 1)");
}

}  // namespace

std::size_t floor_count(double x) {
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x))) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::floor(x));
}

KernelPruneResult kernel_sum_prune(const ConvTensor& w, double p) {
  check_fraction(p, "kernel_sum_prune");
  const std::size_t kernels = w.out_channels() * w.in_channels();
  const auto count = floor_count(p * static_cast<double>(kernels));
  std::vector<double> mag(kernels);
  for (std::size_t o = 0; o < w.out_channels(); ++o) {
    for (std::size_t i = 0; i < w.in_channels(); ++i) {
      const auto k = w.kernel(o, i);
      mag[o * w.in_channels() + i] = std::abs(std::accumulate(k.begin(), k.end(), 0.0));
    }
  }
  std::vector<std::size_t> order(kernels);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mag[a] < mag[b]; });

  KernelPruneResult r{w, count, 0.0};
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t idx = order[n];
    auto k = r.weights.kernel(idx / w.in_channels(), idx % w.in_channels());
    std::fill(k.begin(), k.end(), 0.0);
    r.cut = std::max(r.cut, mag[idx]);
  }
  return r;
}

PruneMask prune_smallest(const ParamStore& params, const PruneMask& mask, std::size_t count) {
  struct Entry {
    double mag;
    std::size_t group;
    std::size_t index;
  };
  std::vector<Entry> live;
  std::vector<const std::string*> names;
  for (const auto& [name, bits] : mask.groups()) {
    const auto& v = params.at(name).values;
    if (v.size() != bits.size()) throw ShapeError("prune: mask/parameter size mismatch in '" + name + "'");
    const std::size_t g = names.size();
    names.push_back(&name);
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i]) live.push_back({std::abs(v[i]), g, i});
    }
  }
  if (live.empty()) throw DomainError("prune: every weight is already masked");
  if (count == 0) throw DomainError("prune: round would prune zero weights");
  if (count > live.size()) throw DomainError("prune: requested more weights than are live");

  // live is already in (group, index) order, so a stable selection keeps the tie rule.
  std::stable_sort(live.begin(), live.end(), [](const Entry& a, const Entry& b) { return a.mag < b.mag; });
  PruneMask out = mask;
  for (std::size_t n = 0; n < count; ++n) out.groups().at(*names[live[n].group])[live[n].index] = 0;
  return out;
}

PruneMask global_magnitude_prune(const ParamStore& params, const PruneMask& mask, double p) {
  check_fraction(p, "global_magnitude_prune");
  const auto count = floor_count(p * static_cast<double>(mask.live()));
  return prune_smallest(params, mask, count);
}

std::vector<std::size_t> select_filters(const ConvTensor& w, std::size_t keep, FilterCriterion criterion,
                                        RandomStream* rng) {
  const std::size_t m = w.out_channels();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  if (criterion == FilterCriterion::Random) {
    if (!rng) throw DomainError("select_filters: random criterion needs a random stream");
    rng->shuffle(order);
  } else {
    std::vector<double> norms(m);
    for (std::size_t r = 0; r < m; ++r) norms[r] = l2_norm(w.filter(r));
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });
  }
  order.resize(keep);
  std::sort(order.begin(), order.end());
  return order;
}

StructuredPruneResult structured_filter_prune(const Orcnn& model, double p, FilterCriterion criterion,
                                              RandomStream* rng) {
  check_fraction(p, "structured_filter_prune");
  const std::size_t m = model.width();
  if (p == 0.0) {
    std::vector<std::size_t> all(m);
    std::iota(all.begin(), all.end(), 0);
    return {model, all};
  }
  const double mq = static_cast<double>(m) * (1.0 - p);
  const double rounded = std::round(mq);
  if (std::abs(mq - rounded) > 1e-9 * static_cast<double>(m) || rounded < 1.0) {
    throw DomainError("structured_filter_prune: m(1-p) = " + std::to_string(mq) + " is not a positive integer");
  }
  const auto keep = static_cast<std::size_t>(rounded);
  StructuredPruneResult r;
  r.kept = select_filters(model.w, keep, criterion, rng);

  Orcnn& out = r.model;
  out.original_width = model.original_width;
  out.q = static_cast<double>(keep) / static_cast<double>(m) * model.q;
  out.scale_mode = OrcnnScale::Pruned;
  out.w = ConvTensor::make_1d(keep, model.w.in_channels(), model.w.half_width());
  out.a.resize(keep);
  for (std::size_t n = 0; n < keep; ++n) {
    const auto src = model.w.filter(r.kept[n]);
    std::copy(src.begin(), src.end(), out.w.filter(n).begin());
    out.a[n] = model.a[r.kept[n]];
  }
  return r;
}

}  // namespace ticketlab
