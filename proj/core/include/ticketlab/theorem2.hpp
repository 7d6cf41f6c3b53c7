#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ticketlab/pruning.hpp"

namespace ticketlab {

struct Theorem2Config {
  std::size_t width = 2048;  // m
  std::size_t samples = 8;   // n
  std::size_t channels = 4;  // c
  std::size_t half_width = 2;
  std::vector<double> p_grid{0.2, 0.36, 0.5};
  std::vector<std::uint64_t> seeds;  // empty means 0 .. 9
  double eta_factor = 0.25;          // eta = eta_factor lambda0 / n^2
  std::size_t max_iterations = 5000;
  double stop_loss = 1e-10;
  FilterCriterion criterion = FilterCriterion::Random;
  std::string label_mode = "sign";
  std::size_t threads = 1;
  /// Iteration stride of the stored loss trajectories (1 keeps every step).
  std::size_t trajectory_stride = 50;

  /// Throws DomainError when eta_factor > 0.5, a grid point prunes every filter, or sizes are zero.
  void validate() const;
  /// M = round(m (1 - p)); the run then prunes at the realized rate 1 - M / m.
  std::size_t pruned_width(double p) const;
  std::vector<std::uint64_t> seed_list() const;
};

/// Summary of one gradient-descent phase.
struct PhaseSummary {
  double lambda0 = 0.0;       // least eigenvalue of G_inf at the phase's q
  double lambda0_g0 = 0.0;    // least eigenvalue of G(0) for the phase's starting weights
  double eta = 0.0;
  std::size_t iterations = 0;
  double initial_loss = 0.0;  // ||F(W(0)) - y||^2
  double final_loss = 0.0;
  double max_movement = 0.0;
  double movement_bound = 0.0;
  bool envelope_ok = false;
  bool movement_ok = false;
  bool grad_ok = false;
  bool strictly_decreasing = false;
  std::vector<std::pair<std::size_t, double>> trajectory;  // (t, loss), strided
};

struct Theorem2Run {
  std::uint64_t seed = 0;
  double p = 0.0;            // nominal grid value
  double p_effective = 0.0;  // 1 - M / m, used for the bound and the prediction
  std::size_t m = 0;
  std::size_t pruned_width = 0;  // M
  PhaseSummary pretrain;
  PhaseSummary finetune;
  double norm_w0 = 0.0;
  double norm_pre = 0.0;
  double norm_fin = 0.0;
  double distance = 0.0;   // min-rotation distance between W_fin and W_pre
  double bound = 0.0;      // p / 2
  double predicted = 0.0;  // (1-p)^{-1/4} - (1-p)^{1/4}
  bool bound_ok = false;
  bool prediction_ok = false;  // |distance - predicted| <= 0.25 predicted
};

struct Theorem2Report {
  Theorem2Config config;
  std::vector<Theorem2Run> runs;  // seed-major, grid order within a seed
  double seconds = 0.0;
};

/// (1-p)^{-1/4} - (1-p)^{1/4}.
double theorem2_prediction(double p);

/// Per seed: draw the dataset and W(0), a; pretrain by gradient descent to
/// W_pre; for each p prune filters, reset survivors to W(0), finetune to
/// W_fin and compare norms.
Theorem2Report theorem2_experiment(const Theorem2Config& cfg);

struct GramCheck {
  std::uint64_t seed = 0;
  double lambda_g0 = 0.0;
  double lambda_inf = 0.0;
  bool ok = false;  // lambda_g0 >= fraction * lambda_inf
};

/// Compares the least eigenvalue of G(0) at width `width` with lambda0 of G_inf.
std::vector<GramCheck> gram_g0_check(const Theorem2Config& cfg, std::size_t width,
                                     const std::vector<std::uint64_t>& seeds, double fraction = 0.75);

}  // namespace ticketlab
