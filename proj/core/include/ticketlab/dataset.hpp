#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ticketlab/tensor.hpp"

namespace ticketlab {

enum class TaskKind { Classification, Regression, Pixel, Denoise };

enum class Shape { Square, Disk, Triangle, Cross, Ring, Diamond, HBar, VBar };

const char* shape_name(Shape s);
/// Throws ConfigError (key "classes") for an unknown name.
Shape parse_shape(const std::string& name);
/// Membership of the offset (dx, dy) from the centre in a shape of radius r.
bool shape_contains(Shape s, double dx, double dy, double r);

/// Parameters a toy image was rendered from.
struct RenderParams {
  Shape shape = Shape::Square;
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  double intensity = 0.0;
};

struct Dataset {
  TaskKind task = TaskKind::Classification;
  std::vector<FeatureMap> inputs;
  std::vector<std::size_t> labels;                        // classification
  std::vector<double> targets;                            // regression
  std::vector<std::vector<std::uint8_t>> pixel_labels;    // pixel task, H*W per sample
  std::vector<FeatureMap> clean;                          // denoise targets
  std::vector<RenderParams> render;                       // toy generators only
  std::size_t num_classes = 0;
  std::string provenance;

  std::size_t size() const noexcept { return inputs.size(); }
  /// Throws ShapeError when label arrays disagree with the inputs.
  void validate() const;
};

struct DatasetConfig {
  std::string kind = "toy-class";  // orcnn-normalized | toy-class | toy-pixel | toy-denoise
  std::size_t count = 2000;

  // orcnn-normalized
  std::size_t channels = 4;
  std::size_t half_width = 2;
  std::string label_mode = "sign";  // sign | gaussian

  // toy images
  std::size_t image_size = 32;
  std::size_t image_channels = 1;
  std::vector<std::string> classes{"square", "disk", "triangle", "cross"};
  double noise = 0.1;           // uniform background/foreground noise half-range
  double denoise_sigma = 0.2;   // Gaussian corruption of toy-denoise inputs
  double min_radius = 5.0;
  double max_radius = 9.0;
};

/// Background level of toy images before noise.
inline constexpr double kToyBackground = 0.1;
inline constexpr double kToyMinIntensity = 0.6;

/// Pure function of (cfg, seed). Throws ConfigError naming the offending key.
Dataset gen_dataset(const DatasetConfig& cfg, std::uint64_t seed);

}  // namespace ticketlab
