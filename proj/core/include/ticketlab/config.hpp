#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <vector>

#include <nlohmann/json.hpp>

#include "ticketlab/pipeline.hpp"
#include "ticketlab/theorem1.hpp"
#include "ticketlab/theorem2.hpp"

namespace ticketlab {

using Json = nlohmann::json;

struct Thm1Settings {
  Theorem1Config experiment;
  double pooled_slope_min = 1.3;
  double pooled_slope_max = 1.7;
  double map_slope_min = 0.35;
  double map_slope_max = 0.65;
  bool require_monotone = true;
  double max_seconds = 300.0;
};

struct Thm2Settings {
  Theorem2Config experiment;
  double bound_fraction = 0.9;        // share of seeds per p that must meet the bound
  double prediction_tolerance = 0.25;  // relative, on the seed-mean distance
  bool require_dynamics = true;        // envelope and movement bounds in every phase
  double max_seconds = 600.0;

  bool gram_check = true;
  std::size_t gram_width = 4096;
  std::size_t gram_seeds = 20;
  double gram_fraction = 0.75;
  double gram_min_pass = 0.9;
};

struct AblateSettings {
  PipelineConfig pipeline;
  std::vector<std::set<std::size_t>> stage_sets{{}, {4}, {3, 4}, {2, 3, 4}, {1, 2, 3, 4}};
};

/// Parses a file as JSON. Throws ConfigError on unreadable or malformed input.
Json load_json_file(const std::filesystem::path& path);

/// Each parser starts from the defaults, overrides the keys present and
/// throws ConfigError with the key path for unknown keys, wrong types and
/// invalid values.
Thm1Settings parse_thm1(const Json& j);
Thm2Settings parse_thm2(const Json& j);
PipelineConfig parse_pipeline(const Json& j);
AblateSettings parse_ablate(const Json& j);

/// Effective configuration with every key spelled out; parse(to_json(x)) == x.
Json to_json(const Thm1Settings& s);
Json to_json(const Thm2Settings& s);
Json to_json(const PipelineConfig& c);
Json to_json(const AblateSettings& s);

const char* method_name(LthMethod m);
LthMethod parse_method(const std::string& name, const std::string& key_path = "lth.method");

}  // namespace ticketlab
