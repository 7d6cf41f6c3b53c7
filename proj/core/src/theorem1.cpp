#include "ticketlab/theorem1.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ticketlab/conv.hpp"
#include "ticketlab/errors.hpp"
#include "ticketlab/lcnn.hpp"
#include "ticketlab/parallel.hpp"
#include "ticketlab/pruning.hpp"
#include "ticketlab/rng.hpp"

namespace ticketlab {
namespace {

double ratio(std::span<const double> ref, std::span<const double> other) {
  double num = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) num += (ref[i] - other[i]) * (ref[i] - other[i]);
  return std::sqrt(num) / l2_norm(ref);
}

}  // namespace

void Theorem1Config::validate() const {
  if (layers == 0 || width == 0 || input_channels == 0 || length == 0) {
    throw ShapeError("theorem1: layers, widths and length must be positive");
  }
  if (!(init_std > 0.0)) throw DomainError("theorem1: init_std must be positive");
  if (p_grid.size() < 2) throw DomainError("theorem1: need at least two grid points");
  for (double p : p_grid) {
    if (!(p > 0.0 && p < 0.11)) throw DomainError("theorem1: p = " + std::to_string(p) + " outside (0, 0.11)");
  }
  if (inputs_per_trial == 0) throw DomainError("theorem1: inputs_per_trial must be positive");
}

std::vector<std::uint64_t> Theorem1Config::seed_list() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> s(20);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("fit_loglog: need at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0;
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw DomainError("fit_loglog: data must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw DomainError("fit_loglog: x values are all equal");
  LogLogFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

ScalingReport theorem1_experiment(const Theorem1Config& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::uint64_t> seeds = cfg.seed_list();
  const std::size_t np = cfg.p_grid.size();

  ScalingReport rep;
  rep.config = cfg;
  rep.points.resize(seeds.size() * np);

  std::vector<std::size_t> widths(cfg.layers + 1, cfg.width);
  widths[0] = cfg.input_channels;

  parallel_for(seeds.size(), cfg.threads, [&](std::size_t si) {
    const std::uint64_t seed = seeds[si];
    RandomStream model_rng(seed, "thm1.model");
    const Lcnn dense = Lcnn::random(widths, cfg.half_width, cfg.init_std, model_rng);

    std::vector<FeatureMap> inputs;
    std::vector<FeatureMap> outputs;
    std::vector<std::vector<double>> pooled;
    RandomStream input_rng(seed, "thm1.input");
    for (std::size_t j = 0; j < cfg.inputs_per_trial; ++j) {
      FeatureMap x(cfg.input_channels, cfg.length);
      for (double& v : x.values()) v = input_rng.normal();
      outputs.push_back(lcnn_forward(dense, x));
      pooled.push_back(avg_pool(outputs.back()));
      inputs.push_back(std::move(x));
    }

    for (std::size_t pi = 0; pi < np; ++pi) {
      Theorem1Point& pt = rep.points[si * np + pi];
      pt.seed = seed;
      pt.p = cfg.p_grid[pi];
      Lcnn pruned = dense;
      for (auto& layer : pruned.layers) {
        KernelPruneResult r = kernel_sum_prune(layer, pt.p);
        pt.pruned_kernels += r.count;
        pt.cut = std::max(pt.cut, r.cut);
        layer = std::move(r.weights);
      }
      for (std::size_t j = 0; j < inputs.size(); ++j) {
        const FeatureMap out = lcnn_forward(pruned, inputs[j]);
        const std::vector<double> pool = avg_pool(out);
        const double mr = ratio(outputs[j].flat(), out.flat());
        pt.pooled_ratio += ratio(pooled[j], pool);
        pt.map_ratio += mr;
        pt.map_ratio_sq += mr * mr;
      }
      const double inv = 1.0 / static_cast<double>(inputs.size());
      pt.pooled_ratio *= inv;
      pt.map_ratio *= inv;
      pt.map_ratio_sq *= inv;
    }
  });

  std::vector<double> xs, pooled_ys, map_ys;
  rep.mean_pooled.assign(np, 0.0);
  rep.mean_map.assign(np, 0.0);
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    const auto& pt = rep.points[i];
    xs.push_back(pt.p);
    pooled_ys.push_back(pt.pooled_ratio);
    map_ys.push_back(pt.map_ratio);
    rep.mean_pooled[i % np] += pt.pooled_ratio / static_cast<double>(seeds.size());
    rep.mean_map[i % np] += pt.map_ratio / static_cast<double>(seeds.size());
  }
  rep.pooled_fit = fit_loglog(xs, pooled_ys);
  rep.map_fit = fit_loglog(xs, map_ys);

  std::vector<std::size_t> order(np);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return cfg.p_grid[a] < cfg.p_grid[b]; });
  rep.pooled_monotone = rep.map_monotone = true;
  for (std::size_t k = 1; k < np; ++k) {
    rep.pooled_monotone &= rep.mean_pooled[order[k]] >= rep.mean_pooled[order[k - 1]];
    rep.map_monotone &= rep.mean_map[order[k]] >= rep.mean_map[order[k - 1]];
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

}  // namespace ticketlab
