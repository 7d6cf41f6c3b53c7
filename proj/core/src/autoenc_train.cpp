#include "ticketlab/autoenc_train.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <numeric>

#include "ticketlab/errors.hpp"
#include "ticketlab/layers.hpp"
#include "ticketlab/rng.hpp"

namespace ticketlab {
namespace {

FeatureMap recon_residual_grad(const FeatureMap& recon, const FeatureMap& target, double scale, double& loss) {
  const LossAndGrad se = squared_error(recon.flat(), target.flat());
  loss = se.loss;
  FeatureMap g(recon.channels(), recon.height(), recon.width());
  for (std::size_t i = 0; i < g.size(); ++i) g.values()[i] = scale * se.grad[i];
  return g;
}

// Restores every group's freeze flag on scope exit.
class FreezeGuard {
 public:
  explicit FreezeGuard(ParamStore& params) : params_(params) {
    for (const auto& [name, p] : params.groups()) saved_[name] = p.frozen;
  }
  ~FreezeGuard() {
    for (auto& [name, p] : params_.groups()) p.frozen = saved_[name];
  }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  ParamStore& params_;
  std::map<std::string, bool> saved_;
};

}  // namespace

void LossWeights::validate() const {
  if (!(lambda >= 0.0)) throw DomainError("loss weights: lambda must be non-negative");
  if (!(hint.t >= 0.0 && hint.t <= 1.0)) throw DomainError("loss weights: hint t must lie in [0, 1]");
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

std::vector<EpochRecord> train_epochs(ParamStore& params, std::size_t count, const TrainConfig& train,
                                      std::uint64_t seed, const std::string& tag, const PruneMask* mask,
                                      const BatchFn& batch_fn) {
  if (train.batch_size == 0) throw DomainError("training: batch_size must be positive");
  MomentumSgd opt(train.sgd);
  std::vector<EpochRecord> curve;
  std::vector<std::size_t> order = all_indices(count);
  for (std::size_t epoch = 0; epoch < train.epochs; ++epoch) {
    opt.set_epoch(epoch);
    RandomStream rng(seed, tag, epoch);
    rng.shuffle(order);
    EpochRecord rec{epoch + 1, 0.0, 0.0, 0.0};
    for (std::size_t start = 0; start < order.size(); start += train.batch_size) {
      const std::size_t end = std::min(order.size(), start + train.batch_size);
      const std::span<const std::size_t> batch(order.data() + start, end - start);
      GradStore grads;
      const LossParts parts = batch_fn(batch, grads);
      if (!std::isfinite(parts.total)) throw TrainingError(tag + ": non-finite loss in epoch " + std::to_string(epoch + 1));
      const double w = static_cast<double>(batch.size()) / static_cast<double>(order.size());
      rec.classification += w * parts.classification;
      rec.reconstruction += w * parts.reconstruction;
      rec.total += w * parts.total;
      opt.step(params, grads, mask);
    }
    curve.push_back(rec);
  }
  return curve;
}

double recon_loss(const ParamStore& params, const AutoencoderConfig& cfg, const Dataset& data,
                  std::span<const std::size_t> indices, const HintConfig& hint) {
  if (indices.empty()) throw DomainError("recon_loss: empty batch");
  double total = 0.0;
  for (std::size_t idx : indices) {
    const EncoderTrace enc = encode(params, cfg, data.inputs[idx], "");
    const DecoderTrace dec = decode(params, cfg, enc, hint);
    total += squared_error(dec.recon.flat(), data.inputs[idx].flat()).loss;
  }
  return total / static_cast<double>(indices.size());
}

double recon_loss_and_grad(const ParamStore& params, const AutoencoderConfig& cfg, const Dataset& data,
                           std::span<const std::size_t> indices, const HintConfig& hint, GradStore& grads) {
  if (indices.empty()) throw DomainError("recon_loss: empty batch");
  const double inv = 1.0 / static_cast<double>(indices.size());
  double total = 0.0;
  for (std::size_t idx : indices) {
    const EncoderTrace enc = encode(params, cfg, data.inputs[idx], "");
    const DecoderTrace dec = decode(params, cfg, enc, hint);
    double loss = 0.0;
    const FeatureMap g = recon_residual_grad(dec.recon, data.inputs[idx], inv, loss);
    total += loss;
    std::vector<FeatureMap> grad_f;
    decoder_backward(params, cfg, enc, dec, hint, g, grads, grad_f);
  }
  return total * inv;
}

LossParts combined_loss(const ParamStore& params, const AutoencoderConfig& cfg, const Dataset& data,
                        std::span<const std::size_t> indices, const LossWeights& weights, GradStore* grads) {
  weights.validate();
  if (indices.empty()) throw DomainError("combined_loss: empty batch");
  if (data.labels.size() != data.size()) throw ShapeError("combined_loss: dataset has no class labels");
  const double inv = 1.0 / static_cast<double>(indices.size());
  LossParts parts;
  for (std::size_t idx : indices) {
    const EncoderTrace enc = encode(params, cfg, data.inputs[idx]);
    const LossAndGrad ce = softmax_cross_entropy(enc.logits, data.labels[idx]);
    parts.classification += ce.loss;

    std::vector<FeatureMap> grad_f(cfg.stages());
    if (weights.lambda > 0.0) {
      const DecoderTrace dec = decode(params, cfg, enc, weights.hint);
      double loss = 0.0;
      const FeatureMap g = recon_residual_grad(dec.recon, data.inputs[idx], weights.lambda * inv, loss);
      parts.reconstruction += loss;
      if (grads) decoder_backward(params, cfg, enc, dec, weights.hint, g, *grads, grad_f);
    }
    if (grads) {
      std::vector<double> gl = ce.grad;
      for (double& v : gl) v *= inv;
      encoder_backward(params, cfg, enc, gl, std::move(grad_f), *grads);
    }
  }
  parts.classification *= inv;
  parts.reconstruction *= inv;
  parts.total = parts.classification + weights.lambda * parts.reconstruction;
  return parts;
}

std::vector<EpochRecord> pretrain_encoder(ParamStore& params, const AutoencoderConfig& cfg,
                                          const Dataset& data, const TrainConfig& train, std::uint64_t seed) {
  const LossWeights ce_only{0.0, {}};
  return train_epochs(params, data.size(), train, seed, "train.pretrain", nullptr,
                    [&](std::span<const std::size_t> batch, GradStore& grads) {
                      return combined_loss(params, cfg, data, batch, ce_only, &grads);
                    });
}

std::vector<EpochRecord> train_decoder(ParamStore& params, const AutoencoderConfig& cfg, const Dataset& data,
                                       const TrainConfig& train, const HintConfig& hint, std::uint64_t seed) {
  FreezeGuard guard(params);
  for (auto& [name, p] : params.groups()) {
    if (name.rfind("dec.", 0) != 0) p.frozen = true;
  }
  return train_epochs(params, data.size(), train, seed, "train.decoder", nullptr,
                    [&](std::span<const std::size_t> batch, GradStore& grads) {
                      LossParts parts;
                      parts.reconstruction = recon_loss_and_grad(params, cfg, data, batch, hint, grads);
                      parts.total = parts.reconstruction;
                      return parts;
                    });
}

std::vector<EpochRecord> finetune_combined(ParamStore& params, const PruneMask& mask,
                                           const AutoencoderConfig& cfg, const Dataset& data,
                                           const TrainConfig& train, const LossWeights& weights,
                                           std::uint64_t seed) {
  FreezeGuard guard(params);
  params.set_frozen("dec.", true);
  return train_epochs(params, data.size(), train, seed, "train.finetune", &mask,
                    [&](std::span<const std::size_t> batch, GradStore& grads) {
                      return combined_loss(params, cfg, data, batch, weights, &grads);
                    });
}

double mean_image_baseline(const Dataset& data) {
  if (data.size() == 0) throw DomainError("mean_image_baseline: empty dataset");
  std::vector<double> mean(data.inputs[0].size(), 0.0);
  for (const auto& x : data.inputs) {
    for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += x.values()[j];
  }
  for (double& v : mean) v /= static_cast<double>(data.size());
  double total = 0.0;
  for (const auto& x : data.inputs) total += squared_error(mean, x.flat()).loss;
  return total / static_cast<double>(data.size());
}

}  // namespace ticketlab
