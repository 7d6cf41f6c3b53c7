#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ticketlab/autoenc_train.hpp"
#include "ticketlab/autoencoder.hpp"
#include "ticketlab/csv.hpp"
#include "ticketlab/dataset.hpp"
#include "ticketlab/lth.hpp"

namespace ticketlab {

enum class TransferProbe {
  MaskFixed,      // encoder trainable, pruned entries held at zero
  FrozenEncoder,  // only the new head trains
};

struct PipelineConfig {
  AutoencoderConfig model;

  std::size_t train_count = 512;
  std::size_t test_count = 128;
  std::vector<std::string> classes{"square", "disk", "triangle", "cross"};
  std::vector<std::string> transfer_classes{"ring", "diamond", "hbar", "vbar"};
  double noise = 0.1;
  double min_radius = 5.0;
  double max_radius = 9.0;

  TrainConfig pretrain{16, 16, {0.05, 0.9, 0.0, {12}, 0.1}};
  TrainConfig decoder{12, 32, {1e-4, 0.9, 0.0, {}, 0.1, 20.0}};
  LossWeights loss;

  LthConfig lth;
  TrainConfig finetune{2, 32, {1e-3, 0.9, 0.0, {}, 0.1, 20.0}};

  std::vector<std::string> transfer_tasks{"classification", "segmentation"};
  TransferProbe probe = TransferProbe::MaskFixed;
  std::vector<std::size_t> transfer_rounds;  // empty means every round
  std::size_t transfer_train_count = 256;
  TrainConfig transfer{3, 32, {0.02, 0.9, 0.0, {}, 0.1}};

  /// Optional checkpoint holding the pretrained encoder, head and decoder.
  std::string upstream_checkpoint;

  /// Throws ConfigError naming the offending key.
  void validate() const;
  bool transfers_round(std::size_t round) const;
};

struct DownstreamMetrics {
  double classification_accuracy = -1.0;  // -1 when the task is disabled
  double segmentation_accuracy = -1.0;    // per-pixel accuracy
  double classification_loss = -1.0;
  double segmentation_loss = -1.0;
};

struct TicketRecord {
  Ticket ticket;
  ParamStore start;  // weights the ticket is transferred from (masked)
  double upstream_loss = 0.0;        // combined loss after the round's finetune
  double upstream_accuracy = 0.0;    // test accuracy of the finetuned, pruned model
  double feature_distance = 0.0;     // finetuned pruned f_S vs dense f_S on the test set
  double rewind_feature_distance = 0.0;  // ticket weights f_S vs dense f_S
  bool transferred = false;
  DownstreamMetrics downstream;
};

struct UpstreamState {
  ParamStore params;  // encoder, head and decoder after pretraining and decoder training
  std::vector<EpochRecord> pretrain_curve;
  std::vector<EpochRecord> decoder_curve;
  double dense_accuracy = 0.0;
  double decoder_loss = 0.0;   // reconstruction loss on the test set
  double mean_image_loss = 0.0;
};

struct PipelineResult {
  UpstreamState upstream;
  std::vector<TicketRecord> tickets;
  double seconds = 0.0;
};

/// Seed for a named derived stream (test split, transfer data, ...).
std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag);

/// Upstream and downstream datasets of a pipeline run.
struct PipelineData {
  Dataset train;
  Dataset test;
  Dataset cls_train;
  Dataset cls_test;
  Dataset seg_train;
  Dataset seg_test;
};
PipelineData make_pipeline_data(const PipelineConfig& cfg, std::uint64_t seed);

/// Pretrains the encoder on classification, then the decoder with the
/// encoder frozen.
UpstreamState train_upstream(const PipelineConfig& cfg, const PipelineData& data, std::uint64_t seed);

/// Loads theta_pre from `upstream_checkpoint`. Throws ConfigError when the
/// file does not exist.
UpstreamState load_upstream(const PipelineConfig& cfg, const PipelineData& data);

/// Ticket search and transfer starting from an upstream state.
PipelineResult run_pipeline(const PipelineConfig& cfg, const PipelineData& data, const UpstreamState& upstream,
                            std::uint64_t seed);

/// Full pipeline: upstream (trained or loaded), ticket search, transfer.
PipelineResult run_pipeline(const PipelineConfig& cfg, std::uint64_t seed);

/// Normalized l2 distance between the final encoder maps of two parameter sets,
/// with every test image's map stacked into one tensor.
double feature_distance(const ParamStore& a, const ParamStore& b, const AutoencoderConfig& model,
                        const Dataset& data);

double classification_accuracy(const ParamStore& params, const AutoencoderConfig& model, const Dataset& data,
                               const std::string& head);

/// Segmentation head: a 1x1 conv `seg.weight` (2 x C_S) plus `seg.bias` on
/// f_S, nearest-upsampled to the image size, per-pixel cross-entropy.
void init_segmentation_head(ParamStore& params, const AutoencoderConfig& model, RandomStream& rng);
/// Mean per-pixel cross-entropy over `indices`; accumulates gradients when `grads` is set.
double segmentation_loss(const ParamStore& params, const AutoencoderConfig& model, const Dataset& data,
                         std::span<const std::size_t> indices, GradStore* grads);
double segmentation_accuracy(const ParamStore& params, const AutoencoderConfig& model, const Dataset& data);

/// Finetunes a copy of `ticket_params` under `mask` on both downstream tasks
/// and returns test metrics.
DownstreamMetrics transfer_ticket(const PipelineConfig& cfg, const PipelineData& data,
                                  const ParamStore& ticket_params, const PruneMask& mask, std::uint64_t seed);

/// Per-ticket CSV: round, sparsity columns, upstream loss, downstream metrics,
/// feature distances.
CsvTable ticket_table(const PipelineResult& result);
inline constexpr const char* kTicketCsvVersion = "tickets/1";

struct HintAblationRow {
  std::set<std::size_t> stages;
  double decoder_loss = 0.0;
  double segmentation_accuracy = 0.0;  // at the last transferred round
  double classification_accuracy = 0.0;
  bool best = false;
};

/// Runs the pipeline once per hinted stage set and marks the set with the
/// highest downstream segmentation accuracy.
std::vector<HintAblationRow> ablate_hints(const PipelineConfig& cfg, const std::vector<std::set<std::size_t>>& sets,
                                          std::uint64_t seed);

std::string format_stage_set(const std::set<std::size_t>& stages);

}  // namespace ticketlab
