#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"
#include "ticketlab/autoenc_train.hpp"
#include "ticketlab/errors.hpp"
#include "ticketlab/layers.hpp"
#include "ticketlab/optim.hpp"
#include "ticketlab/pruning.hpp"

using namespace ticketlab;

namespace {

AutoencoderConfig small_config() {
  AutoencoderConfig cfg;
  cfg.image_size = 16;
  cfg.channels = {4, 6, 8, 8};
  cfg.num_classes = 2;
  return cfg;
}

Dataset toy(const AutoencoderConfig& cfg, std::size_t n, std::uint64_t seed) {
  DatasetConfig dc;
  dc.count = n;
  dc.image_size = cfg.image_size;
  dc.classes = {"square", "disk"};
  dc.min_radius = 2.0;
  dc.max_radius = 5.0;
  return gen_dataset(dc, seed);
}

ParamStore model(const AutoencoderConfig& cfg, std::uint64_t seed) {
  ParamStore p;
  RandomStream rng(seed, "test.ae");
  init_encoder(p, cfg, rng);
  init_decoder(p, cfg, rng);
  return p;
}

}  // namespace

TEST(ReconLoss, PerImageSumAveragedOverBatch) {
  const AutoencoderConfig cfg = small_config();
  const ParamStore p = model(cfg, 1);  // blank reconstruction
  const Dataset d = toy(cfg, 3, 1);
  double expect = 0.0;
  for (const auto& x : d.inputs) {
    for (double v : x.values()) expect += v * v;
  }
  expect /= 3.0;
  EXPECT_NEAR(recon_loss(p, cfg, d, all_indices(3), {}), expect, 1e-12 * expect);
  EXPECT_THROW(recon_loss(p, cfg, d, {}, {}), DomainError);
}

TEST(CombinedLoss, LambdaZeroIsClassificationAlone) {
  const AutoencoderConfig cfg = small_config();
  const ParamStore p = model(cfg, 2);
  const Dataset d = toy(cfg, 4, 2);
  const auto idx = all_indices(4);
  const LossParts parts = combined_loss(p, cfg, d, idx, {0.0, {}});
  double ce = 0.0;
  for (std::size_t i : idx) ce += softmax_cross_entropy(encode(p, cfg, d.inputs[i]).logits, d.labels[i]).loss;
  EXPECT_NEAR(parts.total, ce / 4, 1e-14);
  EXPECT_EQ(parts.reconstruction, 0.0);
}

TEST(CombinedLoss, TotalIsWeightedSum) {
  const AutoencoderConfig cfg = small_config();
  ParamStore p = model(cfg, 3);
  RandomStream rng(3, "t");
  for (double& v : p.at(kDecOut).values) v = rng.normal(0.0, 0.2);
  const Dataset d = toy(cfg, 4, 3);
  const auto idx = all_indices(4);
  const HintConfig hint{0.1, {3, 4}};
  const LossParts parts = combined_loss(p, cfg, d, idx, {10.0, hint});
  EXPECT_NEAR(parts.reconstruction, recon_loss(p, cfg, d, idx, hint), 1e-12);
  EXPECT_NEAR(parts.total, parts.classification + 10.0 * parts.reconstruction, 1e-12);
  EXPECT_EQ(LossWeights{}.lambda, 10.0);
  EXPECT_THROW(combined_loss(p, cfg, d, idx, {-1.0, hint}), DomainError);
}

TEST(DecoderTraining, ZeroEpochsLeaveEverythingUnchanged) {
  const AutoencoderConfig cfg = small_config();
  ParamStore p = model(cfg, 4);
  const ParamStore before = p;
  const auto curve = train_decoder(p, cfg, toy(cfg, 8, 4), {0, 4, {}}, {}, 4);
  EXPECT_TRUE(curve.empty());
  EXPECT_EQ(p, before);
}

TEST(DecoderTraining, EncoderFrozenAndFlagsRestored) {
  const AutoencoderConfig cfg = small_config();
  ParamStore p = model(cfg, 5);
  const std::uint64_t enc = p.hash("enc."), head = p.hash("head."), dec = p.hash("dec.");
  train_decoder(p, cfg, toy(cfg, 16, 5), {1, 8, {0.01, 0.9}}, {0.1, {3, 4}}, 5);
  EXPECT_EQ(p.hash("enc."), enc);
  EXPECT_EQ(p.hash("head."), head);
  EXPECT_NE(p.hash("dec."), dec);
  for (const auto& [name, g] : p.groups()) EXPECT_FALSE(g.frozen) << name;
}

TEST(DecoderTraining, BeatsMeanImageBaseline) {
  const AutoencoderConfig cfg = small_config();
  ParamStore p = model(cfg, 6);
  const Dataset train = toy(cfg, 96, 6);
  const Dataset test = toy(cfg, 32, 7);
  TrainConfig tc{40, 16, {2e-3, 0.9, 0.0, {30}, 0.1, 20.0}};
  const HintConfig hint{0.1, {3, 4}};
  const auto curve = train_decoder(p, cfg, train, tc, hint, 6);
  ASSERT_EQ(curve.size(), 40u);
  EXPECT_LT(curve.back().reconstruction, curve.front().reconstruction);
  const double loss = recon_loss(p, cfg, test, all_indices(test.size()), hint);
  const double baseline = mean_image_baseline(test);
  EXPECT_LT(loss, baseline) << "decoder " << loss << " baseline " << baseline;
}

TEST(MeanImageBaseline, MatchesDirectComputation) {
  Dataset d;
  d.inputs = {FeatureMap::from_rows({{1, 2}}), FeatureMap::from_rows({{3, 6}})};
  // Mean (2, 4); residuals (-1, -2) and (1, 2): 5 per image.
  EXPECT_DOUBLE_EQ(mean_image_baseline(d), 5.0);
  EXPECT_THROW(mean_image_baseline(Dataset{}), DomainError);
}

TEST(Finetune, DecoderFrozenAndMaskHeld) {
  const AutoencoderConfig cfg = small_config();
  ParamStore p = model(cfg, 8);
  RandomStream rng(8, "t");
  for (double& v : p.at(kDecOut).values) v = rng.normal(0.0, 0.2);
  const PruneMask mask = global_magnitude_prune(p, PruneMask::ones_like(p), 0.5);
  mask.apply(p);
  const std::uint64_t dec = p.hash("dec.");
  const std::uint64_t enc = p.hash("enc.");
  const auto curve = finetune_combined(p, mask, cfg, toy(cfg, 16, 8), {2, 8, {0.01, 0.9}}, {10.0, {0.1, {3, 4}}}, 8);
  EXPECT_EQ(curve.size(), 2u);
  EXPECT_EQ(p.hash("dec."), dec);
  EXPECT_NE(p.hash("enc."), enc);
  for (const auto& [name, bits] : mask.groups())
    for (std::size_t i = 0; i < bits.size(); ++i)
      if (!bits[i]) ASSERT_EQ(p.at(name).values[i], 0.0);
  for (const auto& [name, g] : p.groups()) EXPECT_FALSE(g.frozen) << name;
}

TEST(TrainEpochs, ShuffleIsSeededAndLossesAreWeighted) {
  ParamStore p;
  p.add("w", {1}).values = {0.0};
  std::vector<std::size_t> seen_a, seen_b;
  auto fn = [](std::vector<std::size_t>& seen) {
    return [&seen](std::span<const std::size_t> batch, GradStore& g) {
      seen.insert(seen.end(), batch.begin(), batch.end());
      g["w"] = {0.0};
      LossParts l;
      l.total = static_cast<double>(batch.size());
      return l;
    };
  };
  const auto ca = train_epochs(p, 10, {2, 4, {}}, 1, "t", nullptr, fn(seen_a));
  train_epochs(p, 10, {2, 4, {}}, 1, "t", nullptr, fn(seen_b));
  EXPECT_EQ(seen_a, seen_b);
  // Batches of 4, 4, 2: weighted mean of batch sizes = (16 + 16 + 4) / 10.
  EXPECT_DOUBLE_EQ(ca[0].total, 3.6);
  EXPECT_THROW(train_epochs(p, 10, {1, 0, {}}, 1, "t", nullptr, fn(seen_a)), DomainError);
  auto bad = [](std::span<const std::size_t>, GradStore&) {
    LossParts l;
    l.total = std::nan("");
    return l;
  };
  EXPECT_THROW(train_epochs(p, 4, {1, 4, {}}, 1, "t", nullptr, bad), TrainingError);
}

// ---------------------------------------------------------------- optimizer

TEST(MomentumSgd, HeavyBallUpdate) {
  ParamStore p;
  p.add("w", {2}).values = {1.0, -1.0};
  MomentumSgd opt({0.1, 0.5});
  const GradStore g{{"w", {1.0, 2.0}}};
  opt.step(p, g);
  EXPECT_DOUBLE_EQ(p.at("w").values[0], 0.9);
  opt.step(p, g);  // v = 0.5 * 1 + 1 = 1.5
  EXPECT_DOUBLE_EQ(p.at("w").values[0], 0.9 - 0.15);
  EXPECT_DOUBLE_EQ(p.at("w").values[1], -1.0 - 0.2 - 0.3);
}

TEST(MomentumSgd, FrozenMaskedAndClipped) {
  ParamStore p;
  p.add("a", {2}, true).values = {1.0, 1.0};
  p.add("b", {1}).values = {1.0};
  p.at("b").frozen = true;
  PruneMask mask = PruneMask::ones_like(p);
  mask.groups()["a"][1] = 0;
  MomentumSgd opt({1.0, 0.0, 0.0, {}, 0.1, 0.5});
  opt.step(p, {{"a", {3.0, 4.0}}, {"b", {1.0}}}, &mask);
  // Only the live entry counts toward the clip norm: 3 -> 0.5.
  EXPECT_DOUBLE_EQ(p.at("a").values[0], 0.5);
  EXPECT_EQ(p.at("a").values[1], 0.0);
  EXPECT_EQ(p.at("b").values[0], 1.0);
}

TEST(MomentumSgd, MilestonesDecayRate) {
  MomentumSgd opt({0.1, 0.9, 0.0, {2, 4}, 0.1});
  opt.set_epoch(1);
  EXPECT_DOUBLE_EQ(opt.current_lr(), 0.1);
  opt.set_epoch(2);
  EXPECT_NEAR(opt.current_lr(), 0.01, 1e-15);
  opt.set_epoch(5);
  EXPECT_NEAR(opt.current_lr(), 0.001, 1e-15);
}
