#include "ticketlab/theorem2.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ticketlab/dataset.hpp"
#include "ticketlab/errors.hpp"
#include "ticketlab/gram.hpp"
#include "ticketlab/ntk.hpp"
#include "ticketlab/parallel.hpp"

namespace ticketlab {
namespace {

PatchData make_data(const Theorem2Config& cfg, std::uint64_t seed) {
  DatasetConfig dc;
  dc.kind = "orcnn-normalized";
  dc.count = cfg.samples;
  dc.channels = cfg.channels;
  dc.half_width = cfg.half_width;
  dc.label_mode = cfg.label_mode;
  const Dataset d = gen_dataset(dc, seed);
  return make_patch_data(d.inputs, d.targets, cfg.half_width);
}

PhaseSummary run_phase(Orcnn& model, const PatchData& data, double lambda_inf, const Theorem2Config& cfg) {
  PhaseSummary s;
  s.lambda0 = lambda_inf;
  s.lambda0_g0 = min_eigenvalue(gram_empirical(model, data).values);
  const double n = static_cast<double>(data.size());
  s.eta = cfg.eta_factor * lambda_inf / (n * n);
  GdConfig gd;
  gd.eta = s.eta;
  gd.lambda0 = lambda_inf;
  gd.max_iterations = cfg.max_iterations;
  gd.stop_loss = cfg.stop_loss;
  const GdTrace tr = train_orcnn_gd(model, data, gd);
  s.iterations = tr.iterations;
  s.initial_loss = tr.loss.front();
  s.final_loss = tr.loss.back();
  s.max_movement = *std::max_element(tr.max_movement.begin(), tr.max_movement.end());
  s.movement_bound = tr.movement_bound;
  s.envelope_ok = tr.envelope_ok;
  s.movement_ok = tr.movement_ok;
  s.grad_ok = tr.grad_ok;
  s.strictly_decreasing = tr.strictly_decreasing;
  const std::size_t stride = std::max<std::size_t>(1, cfg.trajectory_stride);
  for (std::size_t t = 0; t < tr.loss.size(); t += stride) s.trajectory.emplace_back(t, tr.loss[t]);
  if ((tr.loss.size() - 1) % stride != 0) s.trajectory.emplace_back(tr.loss.size() - 1, tr.loss.back());
  return s;
}

}  // namespace

void Theorem2Config::validate() const {
  if (width == 0 || samples == 0 || channels == 0) throw DomainError("theorem2: sizes must be positive");
  if (!(eta_factor > 0.0 && eta_factor <= 0.5)) throw DomainError("theorem2: eta_factor must lie in (0, 0.5]");
  if (p_grid.empty()) throw DomainError("theorem2: empty p grid");
  for (double p : p_grid) {
    if (!(p >= 0.0 && p < 1.0)) throw DomainError("theorem2: p must lie in [0, 1)");
    if (pruned_width(p) == 0) throw DomainError("theorem2: no filter survives p = " + std::to_string(p));
  }
}

std::size_t Theorem2Config::pruned_width(double p) const {
  return static_cast<std::size_t>(std::llround(static_cast<double>(width) * (1.0 - p)));
}

std::vector<std::uint64_t> Theorem2Config::seed_list() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> s(10);
  std::iota(s.begin(), s.end(), 0);
  return s;
}

double theorem2_prediction(double p) {
  const double q = 1.0 - p;
  return std::pow(q, -0.25) - std::pow(q, 0.25);
}

Theorem2Report theorem2_experiment(const Theorem2Config& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::vector<std::uint64_t> seeds = cfg.seed_list();
  const std::size_t np = cfg.p_grid.size();
  Theorem2Report rep;
  rep.config = cfg;
  rep.runs.resize(seeds.size() * np);

  parallel_for(seeds.size(), cfg.threads, [&](std::size_t si) {
    const std::uint64_t seed = seeds[si];
    const PatchData data = make_data(cfg, seed);
    const double lambda_full = lambda0(gram_infty(data, 1.0));

    RandomStream init_rng(seed, "thm2.init");
    const Orcnn initial = Orcnn::random(cfg.width, cfg.channels, cfg.half_width, init_rng);
    Orcnn pre = initial;
    const PhaseSummary pretrain = run_phase(pre, data, lambda_full, cfg);

    for (std::size_t pi = 0; pi < np; ++pi) {
      Theorem2Run& run = rep.runs[si * np + pi];
      run.seed = seed;
      run.p = cfg.p_grid[pi];
      const double p = 1.0 - static_cast<double>(cfg.pruned_width(run.p)) / static_cast<double>(cfg.width);
      run.p_effective = p;
      run.m = cfg.width;
      run.pretrain = pretrain;

      // Select on the pretrained filters, then reset the survivors to W(0).
      RandomStream prune_rng(seed, "thm2.prune", pi);
      const StructuredPruneResult sel = structured_filter_prune(pre, p, cfg.criterion, &prune_rng);
      Orcnn fin = sel.model;
      for (std::size_t n = 0; n < sel.kept.size(); ++n) {
        const auto src = initial.w.filter(sel.kept[n]);
        std::copy(src.begin(), src.end(), fin.w.filter(n).begin());
      }
      run.pruned_width = fin.width();
      const double lambda_q = lambda0(gram_infty(data, fin.q));
      run.finetune = run_phase(fin, data, lambda_q, cfg);

      run.norm_w0 = l2_norm(initial.w.flat());
      run.norm_pre = l2_norm(pre.w.flat());
      run.norm_fin = l2_norm(fin.w.flat());
      run.distance = min_rotation_distance(fin.w.flat(), pre.w.flat());
      run.bound = p / 2.0;
      run.predicted = theorem2_prediction(p);
      run.bound_ok = run.distance >= run.bound;
      run.prediction_ok = std::abs(run.distance - run.predicted) <= 0.25 * run.predicted;
    }
  });
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::vector<GramCheck> gram_g0_check(const Theorem2Config& cfg, std::size_t width,
                                     const std::vector<std::uint64_t>& seeds, double fraction) {
  std::vector<GramCheck> out(seeds.size());
  parallel_for(seeds.size(), cfg.threads, [&](std::size_t i) {
    const PatchData data = make_data(cfg, seeds[i]);
    RandomStream rng(seeds[i], "thm2.g0");
    const Orcnn model = Orcnn::random(width, cfg.channels, cfg.half_width, rng);
    GramCheck& c = out[i];
    c.seed = seeds[i];
    c.lambda_inf = lambda0(gram_infty(data, 1.0));
    c.lambda_g0 = min_eigenvalue(gram_empirical(model, data).values);
    c.ok = c.lambda_g0 >= fraction * c.lambda_inf;
  });
  return out;
}

}  // namespace ticketlab
