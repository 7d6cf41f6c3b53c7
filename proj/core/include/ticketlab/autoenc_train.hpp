#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ticketlab/autoencoder.hpp"
#include "ticketlab/dataset.hpp"
#include "ticketlab/optim.hpp"
#include "ticketlab/params.hpp"

namespace ticketlab {

/// Reconstruction penalty and feature-map hint settings of the combined loss.
struct LossWeights {
  double lambda = 10.0;
  HintConfig hint{0.1, {3, 4}};

  /// Throws DomainError for lambda < 0 or t outside [0, 1].
  void validate() const;
};

struct LossParts {
  double classification = 0.0;  // mean cross-entropy
  double reconstruction = 0.0;  // mean ||D(F(x)) - x||^2
  double total = 0.0;           // classification + lambda * reconstruction
};

/// (1/N) sum_i ||D(F(x_i)) - x_i||^2 over `indices` with hint mixing.
double recon_loss(const ParamStore& params, const AutoencoderConfig& cfg, const Dataset& data,
                  std::span<const std::size_t> indices, const HintConfig& hint);

/// Cross-entropy plus lambda times the reconstruction loss. When `grads` is
/// non-null, gradients of the total are accumulated into it for every
/// non-frozen group. The reconstruction term is skipped entirely when lambda
/// is 0. Throws ShapeError when the dataset carries no class labels.
LossParts combined_loss(const ParamStore& params, const AutoencoderConfig& cfg, const Dataset& data,
                        std::span<const std::size_t> indices, const LossWeights& weights,
                        GradStore* grads = nullptr);

/// Reconstruction loss with gradients for the decoder only.
double recon_loss_and_grad(const ParamStore& params, const AutoencoderConfig& cfg, const Dataset& data,
                           std::span<const std::size_t> indices, const HintConfig& hint, GradStore& grads);

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  SgdConfig sgd;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double classification = 0.0;
  double reconstruction = 0.0;
  double total = 0.0;
};

/// Loss of one minibatch; accumulates gradients into the store.
using BatchFn = std::function<LossParts(std::span<const std::size_t> batch, GradStore& grads)>;

/// Momentum SGD over `count` examples in a per-epoch shuffled order drawn from
/// (seed, tag, epoch). Returns the example-weighted mean losses per epoch.
/// Throws TrainingError on a non-finite loss.
std::vector<EpochRecord> train_epochs(ParamStore& params, std::size_t count, const TrainConfig& train,
                                      std::uint64_t seed, const std::string& tag, const PruneMask* mask,
                                      const BatchFn& batch_fn);

/// Trains encoder and head on cross-entropy alone.
std::vector<EpochRecord> pretrain_encoder(ParamStore& params, const AutoencoderConfig& cfg,
                                          const Dataset& data, const TrainConfig& train, std::uint64_t seed);

/// Trains the decoder on the reconstruction loss with the encoder and head
/// frozen; their freeze flags are restored afterwards. Throws TrainingError
/// on a non-finite loss.
std::vector<EpochRecord> train_decoder(ParamStore& params, const AutoencoderConfig& cfg, const Dataset& data,
                                       const TrainConfig& train, const HintConfig& hint, std::uint64_t seed);

/// Finetunes encoder and head on the combined loss under `mask` with the
/// decoder frozen. Returns per-epoch mean losses.
std::vector<EpochRecord> finetune_combined(ParamStore& params, const PruneMask& mask,
                                           const AutoencoderConfig& cfg, const Dataset& data,
                                           const TrainConfig& train, const LossWeights& weights,
                                           std::uint64_t seed);

/// Loss of predicting the per-pixel dataset mean for every image.
double mean_image_baseline(const Dataset& data);

/// 0, 1, ..., n-1.
std::vector<std::size_t> all_indices(std::size_t n);

}  // namespace ticketlab
