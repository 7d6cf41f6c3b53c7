#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace ticketlab {

struct Theorem1Config {
  std::size_t layers = 3;          // number of convolution layers
  std::size_t width = 64;          // channels of every hidden and output layer
  std::size_t input_channels = 64;
  std::size_t half_width = 2;
  std::size_t length = 64;
  double init_std = 1.0;
  std::vector<double> p_grid{0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10};
  std::vector<std::uint64_t> seeds;  // empty means 0 .. 19
  std::size_t inputs_per_trial = 4;
  std::size_t threads = 1;

  /// Throws DomainError for p outside (0, 0.11) and ShapeError for empty sizes.
  void validate() const;
  std::vector<std::uint64_t> seed_list() const;
};

struct Theorem1Point {
  std::uint64_t seed = 0;
  double p = 0.0;
  double pooled_ratio = 0.0;     // mean over inputs of ||P C x - P C' x|| / ||P C x||
  double map_ratio = 0.0;        // mean over inputs of ||C x - C' x|| / ||C x||
  double map_ratio_sq = 0.0;     // mean over inputs of the squared map ratio
  double cut = 0.0;              // largest pruned |kernel sum| across layers
  std::size_t pruned_kernels = 0;
};

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;  // log C
  double r_squared = 0.0;
};

/// Least squares fit of log y = intercept + slope log x. Throws DomainError
/// for non-positive data or fewer than two distinct x values.
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingReport {
  Theorem1Config config;
  std::vector<Theorem1Point> points;  // seed-major, grid order within a seed
  std::vector<double> mean_pooled;    // seed-averaged, per grid point
  std::vector<double> mean_map;
  LogLogFit pooled_fit;               // over all (seed, p) points
  LogLogFit map_fit;
  bool pooled_monotone = false;
  bool map_monotone = false;
  double seconds = 0.0;
};

/// Draws an LCNN per seed, prunes every layer by kernel sum at each p and
/// records the pooled and full feature-map ratios on random inputs.
ScalingReport theorem1_experiment(const Theorem1Config& cfg);

}  // namespace ticketlab
