#include "ticketlab/dataset.hpp"

#include <algorithm>
#include <cmath>

#include "ticketlab/errors.hpp"
#include "ticketlab/rng.hpp"

namespace ticketlab {
namespace {

constexpr Shape kAllShapes[] = {Shape::Square, Shape::Disk,    Shape::Triangle, Shape::Cross,
                                Shape::Ring,   Shape::Diamond, Shape::HBar,     Shape::VBar};

Dataset gen_orcnn(const DatasetConfig& cfg, std::uint64_t seed) {
  if (cfg.channels == 0) throw ConfigError("dataset.channels", "must be positive");
  if (cfg.label_mode != "sign" && cfg.label_mode != "gaussian") {
    throw ConfigError("dataset.label_mode", "expected 'sign' or 'gaussian'");
  }
  const std::size_t length = 2 * cfg.half_width + 1;
  Dataset d;
  d.task = TaskKind::Regression;
  d.provenance = "orcnn-normalized seed=" + std::to_string(seed);
  RandomStream rng(seed, "data.orcnn");
  for (std::size_t i = 0; i < cfg.count; ++i) {
    FeatureMap x(cfg.channels, length);
    for (double& v : x.values()) v = rng.normal();
    const double norm = l2_norm(x.flat());
    for (double& v : x.values()) v /= norm;
    d.inputs.push_back(std::move(x));
  }
  for (std::size_t i = 0; i < cfg.count; ++i) {
    d.targets.push_back(cfg.label_mode == "sign" ? rng.sign() : rng.normal());
  }
  return d;
}

struct Rendered {
  FeatureMap image;
  std::vector<std::uint8_t> mask;
  RenderParams params;
};

Rendered render(const DatasetConfig& cfg, Shape shape, RandomStream& rng) {
  const double size = static_cast<double>(cfg.image_size);
  RenderParams p;
  p.shape = shape;
  p.radius = rng.uniform(cfg.min_radius, cfg.max_radius);
  p.cx = rng.uniform(p.radius + 1.0, size - p.radius - 1.0);
  p.cy = rng.uniform(p.radius + 1.0, size - p.radius - 1.0);
  p.intensity = rng.uniform(kToyMinIntensity, 1.0);

  const std::size_t n = cfg.image_size;
  Rendered r{FeatureMap(cfg.image_channels, n, n), std::vector<std::uint8_t>(n * n), p};
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double dx = static_cast<double>(x) + 0.5 - p.cx;
      const double dy = static_cast<double>(y) + 0.5 - p.cy;
      r.mask[y * n + x] = shape_contains(shape, dx, dy, p.radius) ? 1 : 0;
    }
  }
  for (std::size_t c = 0; c < cfg.image_channels; ++c) {
    for (std::size_t j = 0; j < n * n; ++j) {
      const double base = r.mask[j] ? p.intensity : kToyBackground;
      r.image.channel(c)[j] = std::clamp(base + rng.uniform(-cfg.noise, cfg.noise), 0.0, 1.0);
    }
  }
  return r;
}

Dataset gen_toy(const DatasetConfig& cfg, std::uint64_t seed) {
  if (cfg.image_size < 8) throw ConfigError("dataset.image_size", "must be at least 8");
  if (cfg.image_channels == 0) throw ConfigError("dataset.image_channels", "must be positive");
  if (cfg.classes.empty()) throw ConfigError("dataset.classes", "at least one shape class required");
  if (!(cfg.noise >= 0.0 && cfg.noise < 0.25)) throw ConfigError("dataset.noise", "must lie in [0, 0.25)");
  if (!(cfg.min_radius >= 1.0 && cfg.max_radius >= cfg.min_radius &&
        2.0 * cfg.max_radius + 2.0 < static_cast<double>(cfg.image_size))) {
    throw ConfigError("dataset.max_radius", "radius range does not fit the image");
  }
  if (!(cfg.denoise_sigma >= 0.0)) throw ConfigError("dataset.denoise_sigma", "must be non-negative");
  std::vector<Shape> shapes;
  for (const auto& name : cfg.classes) shapes.push_back(parse_shape(name));

  Dataset d;
  d.num_classes = shapes.size();
  d.provenance = cfg.kind + " seed=" + std::to_string(seed);
  if (cfg.kind == "toy-class") d.task = TaskKind::Classification;
  if (cfg.kind == "toy-pixel") d.task = TaskKind::Pixel;
  if (cfg.kind == "toy-denoise") d.task = TaskKind::Denoise;

  RandomStream rng(seed, "data." + cfg.kind);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    const std::size_t label = i % shapes.size();
    Rendered r = render(cfg, shapes[label], rng);
    d.labels.push_back(label);
    d.render.push_back(r.params);
    if (d.task == TaskKind::Pixel) d.pixel_labels.push_back(std::move(r.mask));
    if (d.task == TaskKind::Denoise) {
      FeatureMap noisy = r.image;
      for (double& v : noisy.values()) v += rng.normal(0.0, cfg.denoise_sigma);
      d.clean.push_back(std::move(r.image));
      d.inputs.push_back(std::move(noisy));
    } else {
      d.inputs.push_back(std::move(r.image));
    }
  }
  return d;
}

}  // namespace

const char* shape_name(Shape s) {
  switch (s) {
    case Shape::Square: return "square";
    case Shape::Disk: return "disk";
    case Shape::Triangle: return "triangle";
    case Shape::Cross: return "cross";
    case Shape::Ring: return "ring";
    case Shape::Diamond: return "diamond";
    case Shape::HBar: return "hbar";
    case Shape::VBar: return "vbar";
  }
  return "?";
}

Shape parse_shape(const std::string& name) {
  for (Shape s : kAllShapes) {
    if (name == shape_name(s)) return s;
  }
  throw ConfigError("dataset.classes", "unknown shape '" + name + "'");
}

bool shape_contains(Shape s, double dx, double dy, double r) {
  const double ax = std::abs(dx), ay = std::abs(dy);
  switch (s) {
    case Shape::Square: return ax <= r && ay <= r;
    case Shape::Disk: return dx * dx + dy * dy <= r * r;
    case Shape::Triangle: return dy >= -r && dy <= r && ax <= (dy + r) / 2.0;
    case Shape::Cross: return (ax <= r / 3.0 && ay <= r) || (ay <= r / 3.0 && ax <= r);
    case Shape::Ring: {
      const double d2 = dx * dx + dy * dy;
      return d2 <= r * r && d2 >= r * r / 4.0;
    }
    case Shape::Diamond: return ax + ay <= r;
    case Shape::HBar: return ax <= r && ay <= r / 3.0;
    case Shape::VBar: return ax <= r / 3.0 && ay <= r;
  }
  return false;
}

void Dataset::validate() const {
  const std::size_t n = inputs.size();
  switch (task) {
    case TaskKind::Classification:
      if (labels.size() != n) throw ShapeError("dataset: label count differs from input count");
      for (std::size_t l : labels) {
        if (num_classes != 0 && l >= num_classes) throw ShapeError("dataset: label out of range");
      }
      break;
    case TaskKind::Regression:
      if (targets.size() != n) throw ShapeError("dataset: target count differs from input count");
      break;
    case TaskKind::Pixel:
      if (pixel_labels.size() != n) throw ShapeError("dataset: pixel label count differs from input count");
      for (std::size_t i = 0; i < n; ++i) {
        if (pixel_labels[i].size() != inputs[i].plane()) throw ShapeError("dataset: pixel label map size mismatch");
      }
      break;
    case TaskKind::Denoise:
      if (clean.size() != n) throw ShapeError("dataset: clean target count differs from input count");
      break;
  }
}

Dataset gen_dataset(const DatasetConfig& cfg, std::uint64_t seed) {
  Dataset d;
  if (cfg.kind == "orcnn-normalized") {
    d = gen_orcnn(cfg, seed);
  } else if (cfg.kind == "toy-class" || cfg.kind == "toy-pixel" || cfg.kind == "toy-denoise") {
    d = gen_toy(cfg, seed);
  } else {
    throw ConfigError("dataset.kind", "unknown dataset kind '" + cfg.kind + "'");
  }
  d.validate();
  return d;
}

}  // namespace ticketlab
