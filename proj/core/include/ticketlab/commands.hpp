#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ticketlab {

struct CommandOptions {
  std::string command;  // thm1 | thm2 | pipeline | compare | ablate
  std::optional<std::filesystem::path> config;
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  std::size_t threads = 1;
  std::optional<std::string> method;  // pipeline / ablate override of lth.method
  std::optional<double> lambda;       // pipeline / ablate override of loss.lambda
  std::vector<std::filesystem::path> runs;  // compare inputs: run directories or ticket CSVs
};

/// One named assertion of a run.
struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct CommandResult {
  std::vector<Check> checks;
  nlohmann::json summary;
  bool passed() const;
};

/// Validates everything first, then writes into `out`: config.json (effective
/// configuration with seed and command), the command's CSVs, summary.json and
/// a checkpoints/ directory. Throws ConfigError (or another exception) before
/// any file is created when the configuration is invalid.
CommandResult run_command(const CommandOptions& opts, std::ostream& log);

/// Exit status for a finished command: 0 iff every check passed.
int exit_status(const CommandResult& result);

/// Joins ticket CSVs on the sparsity column. Throws DomainError naming the
/// first sparsity present in one run but not in another.
struct CompareTable {
  std::vector<std::string> sparsity;
  std::vector<std::string> run_labels;
  // values[run][row][metric]; metrics are cls_accuracy, seg_accuracy, feature_distance.
  std::vector<std::vector<std::vector<std::string>>> values;
};
CompareTable join_ticket_csvs(const std::vector<std::string>& csv_texts, const std::vector<std::string>& labels);
std::string compare_csv(const CompareTable& table);

}  // namespace ticketlab
