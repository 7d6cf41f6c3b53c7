#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "test_util.hpp"
#include "ticketlab/errors.hpp"
#include "ticketlab/lth.hpp"
#include "ticketlab/orcnn.hpp"
#include "ticketlab/pruning.hpp"

using namespace ticketlab;

namespace {

ParamStore toy_store(std::uint64_t seed) {
  ParamStore s;
  RandomStream rng(seed, "test.store");
  for (const char* name : {"a.conv", "b.conv"}) {
    Param& p = s.add(name, {5, 4, 3}, true);
    for (double& v : p.values) v = rng.normal();
  }
  Param& head = s.add("head", {3});
  for (double& v : head.values) v = rng.normal();
  return s;
}

std::size_t zeros_in(const ParamStore& s) {
  std::size_t z = 0;
  for (const auto& [name, p] : s.groups())
    if (p.prunable) z += static_cast<std::size_t>(std::count(p.values.begin(), p.values.end(), 0.0));
  return z;
}

}  // namespace

// ---------------------------------------------------------------- kernel-sum pruning

TEST(KernelSumPrune, ZeroRateIsIdentity) {
  RandomStream rng(1, "t");
  const ConvTensor w = testutil::random_1d(4, 3, 2, rng);
  const KernelPruneResult r = kernel_sum_prune(w, 0.0);
  EXPECT_EQ(r.weights, w);
  EXPECT_EQ(r.count, 0u);
}

TEST(KernelSumPrune, SmallestAbsoluteSumGoesFirst) {
  // Kernel sums 0.1, -0.05, 2.0, -3.0 laid out as a 2 x 2 tensor with s = 1.
  ConvTensor w = ConvTensor::make_1d(2, 2, 1);
  const double sums[] = {0.1, -0.05, 2.0, -3.0};
  for (std::size_t k = 0; k < 4; ++k) {
    auto ker = w.kernel(k / 2, k % 2);
    ker[0] = sums[k] + 1.0;
    ker[1] = -2.0;
    ker[2] = 1.0;
  }
  const KernelPruneResult r = kernel_sum_prune(w, 0.25);
  EXPECT_EQ(r.count, 1u);
  EXPECT_NEAR(r.cut, 0.05, 1e-15);
  for (std::size_t k = 0; k < 4; ++k) {
    const auto ker = r.weights.kernel(k / 2, k % 2);
    const bool zero = std::all_of(ker.begin(), ker.end(), [](double v) { return v == 0.0; });
    EXPECT_EQ(zero, k == 1) << k;
  }
}

TEST(KernelSumPrune, ExactFractionOnGaussianKernels) {
  RandomStream rng(2, "t");
  const ConvTensor w = testutil::random_1d(16, 12, 2, rng);
  for (double p : {0.01, 0.05, 0.1, 0.37, 0.9}) {
    const KernelPruneResult r = kernel_sum_prune(w, p);
    const auto k = static_cast<std::size_t>(std::floor(p * 192));
    EXPECT_EQ(r.count, k);
    std::size_t zero_kernels = 0;
    for (std::size_t o = 0; o < 16; ++o)
      for (std::size_t i = 0; i < 12; ++i) {
        const auto ker = r.weights.kernel(o, i);
        zero_kernels += std::all_of(ker.begin(), ker.end(), [](double v) { return v == 0.0; });
      }
    EXPECT_EQ(zero_kernels, k);
  }
  EXPECT_THROW(kernel_sum_prune(w, 1.0), DomainError);
  EXPECT_THROW(kernel_sum_prune(w, -0.1), DomainError);
}

TEST(KernelSumPrune, TiesBreakInKernelOrder) {
  ConvTensor w = ConvTensor::make_1d(1, 4, 0, 1.0);
  w.tap(0, 3, 0) = -1.0;
  w.tap(0, 0, 0) = 5.0;
  const KernelPruneResult r = kernel_sum_prune(w, 0.5);
  EXPECT_EQ(r.weights.values(), (std::vector<double>{5.0, 0.0, 0.0, -1.0}));
}

// Rank-based pruning on N(0, D^2) kernels implies a cut eps with
// p ~ 2 Phi(eps / (D sqrt(2s+1))) - 1, the two-sided rate of the kernel sum.
TEST(KernelSumPrune, ImpliedThresholdMatchesGaussianRate) {
  RandomStream rng(3, "t");
  const std::size_t s = 2;
  const double delta = 0.7;
  ConvTensor w = ConvTensor::make_1d(200, 200, s);
  for (double& v : w.values()) v = rng.normal(0.0, delta);
  const double kernels = 200.0 * 200.0;
  for (double p : {0.02, 0.05, 0.1, 0.3}) {
    const KernelPruneResult r = kernel_sum_prune(w, p);
    const double z = r.cut / (delta * std::sqrt(2.0 * s + 1.0));
    const double predicted = std::erf(z / std::sqrt(2.0));
    const double se = std::sqrt(p * (1 - p) / kernels);
    EXPECT_NEAR(predicted, p, 4 * se + 1.0 / kernels) << "p=" << p;
  }
}

// ---------------------------------------------------------------- masks and magnitude pruning

TEST(PruneMask, ApplyIsIdempotentAndSparsityExact) {
  ParamStore s = toy_store(4);
  PruneMask m = global_magnitude_prune(s, PruneMask::ones_like(s), 0.3);
  ParamStore once = s, twice = s;
  m.apply(once);
  m.apply(twice);
  m.apply(twice);
  EXPECT_EQ(once, twice);
  EXPECT_EQ(m.total(), 120u);
  EXPECT_EQ(m.pruned(), 36u);
  EXPECT_DOUBLE_EQ(m.sparsity(), 36.0 / 120.0);
  EXPECT_EQ(zeros_in(once), m.pruned());
  EXPECT_EQ(once.at("head").values, s.at("head").values);
}

TEST(PruneMask, GradientsOfPrunedEntriesVanish) {
  ParamStore s = toy_store(5);
  const PruneMask m = global_magnitude_prune(s, PruneMask::ones_like(s), 0.5);
  GradStore g = zero_grads(s);
  for (auto& [name, v] : g) std::fill(v.begin(), v.end(), 1.0);
  m.apply(g);
  double live = 0.0;
  for (const auto& [name, v] : g)
    if (s.at(name).prunable) live += std::accumulate(v.begin(), v.end(), 0.0);
  EXPECT_EQ(live, static_cast<double>(m.live()));
}

TEST(GlobalMagnitude, FloorCountAndMultiplicativeSchedule) {
  ParamStore s = toy_store(6);
  const PruneMask first = global_magnitude_prune(s, PruneMask::ones_like(s), 0.2);
  EXPECT_EQ(first.pruned(), 24u);  // floor(0.2 * 120)
  const PruneMask second = global_magnitude_prune(s, first, 0.2);
  EXPECT_EQ(second.live(), 120u - 24u - 19u);  // floor(0.2 * 96) = 19
  EXPECT_NEAR(double(second.live()) / 120.0, 0.64, 1.0 / 120.0);
  EXPECT_TRUE(second.nested_in(first));
  EXPECT_FALSE(first.nested_in(second));
}

TEST(GlobalMagnitude, PrunesSmallestMagnitudesAcrossGroups) {
  ParamStore s = toy_store(7);
  const PruneMask m = global_magnitude_prune(s, PruneMask::ones_like(s), 0.25);
  std::vector<double> live, dead;
  for (const auto& [name, bits] : m.groups()) {
    for (std::size_t i = 0; i < bits.size(); ++i) (bits[i] ? live : dead).push_back(std::abs(s.at(name).values[i]));
  }
  EXPECT_LE(*std::max_element(dead.begin(), dead.end()), *std::min_element(live.begin(), live.end()));
}

TEST(GlobalMagnitude, TiesGoToLowerIndex) {
  ParamStore s;
  s.add("conv", {4}, true).values = {0.5, -0.3, 0.3, 2.0};
  const PruneMask m = prune_smallest(s, PruneMask::ones_like(s), 1);
  EXPECT_EQ(m.groups().at("conv"), (std::vector<std::uint8_t>{1, 0, 1, 1}));
  const PruneMask m2 = prune_smallest(s, m, 1);
  EXPECT_EQ(m2.groups().at("conv"), (std::vector<std::uint8_t>{1, 0, 0, 1}));
}

TEST(GlobalMagnitude, ErrorCases) {
  ParamStore s;
  s.add("conv", {2}, true).values = {1.0, 2.0};
  const PruneMask all = prune_smallest(s, PruneMask::ones_like(s), 2);
  EXPECT_THROW(prune_smallest(s, all, 1), DomainError);
  EXPECT_THROW(prune_smallest(s, PruneMask::ones_like(s), 0), DomainError);
  EXPECT_THROW(prune_smallest(s, PruneMask::ones_like(s), 3), DomainError);
  EXPECT_THROW(global_magnitude_prune(s, PruneMask::ones_like(s), 0.2), DomainError);  // floor(0.4) = 0
}

// ---------------------------------------------------------------- structured pruning

TEST(StructuredPrune, WidthArithmeticAndIdentity) {
  RandomStream rng(8, "t");
  const Orcnn model = Orcnn::random(10, 2, 1, rng);
  const StructuredPruneResult same = structured_filter_prune(model, 0.0, FilterCriterion::SmallestNorm);
  EXPECT_EQ(same.model.w, model.w);
  EXPECT_EQ(same.model.a, model.a);
  const StructuredPruneResult r = structured_filter_prune(model, 0.2, FilterCriterion::SmallestNorm);
  EXPECT_EQ(r.model.width(), 8u);
  EXPECT_EQ(r.model.a.size(), 8u);
  EXPECT_EQ(r.model.original_width, 10u);
  EXPECT_DOUBLE_EQ(r.model.q, 0.8);
  EXPECT_EQ(r.model.scale_mode, OrcnnScale::Pruned);
  EXPECT_THROW(structured_filter_prune(model, 0.25, FilterCriterion::SmallestNorm), DomainError);
  EXPECT_THROW(structured_filter_prune(model, 0.2, FilterCriterion::Random), DomainError);
}

TEST(StructuredPrune, SmallestNormFiltersRemoved) {
  RandomStream rng(9, "t");
  Orcnn model = Orcnn::random(10, 1, 0, rng);
  // Filter norms 1..10 in shuffled order.
  const std::vector<double> norms{7, 1, 9, 2, 10, 3, 4, 8, 5, 6};
  for (std::size_t r = 0; r < 10; ++r) model.w.filter(r)[0] = norms[r];
  const StructuredPruneResult res = structured_filter_prune(model, 0.2, FilterCriterion::SmallestNorm);
  EXPECT_EQ(res.kept, (std::vector<std::size_t>{0, 2, 4, 5, 6, 7, 8, 9}));
  for (std::size_t n = 0; n < res.kept.size(); ++n) {
    EXPECT_EQ(res.model.w.filter(n)[0], norms[res.kept[n]]);
    EXPECT_EQ(res.model.a[n], model.a[res.kept[n]]);
  }
}

TEST(StructuredPrune, RandomCriterionIsSeededSubset) {
  RandomStream rng(10, "t");
  const Orcnn model = Orcnn::random(20, 2, 1, rng);
  RandomStream a(1, "sel"), b(1, "sel");
  const auto ka = structured_filter_prune(model, 0.5, FilterCriterion::Random, &a).kept;
  const auto kb = structured_filter_prune(model, 0.5, FilterCriterion::Random, &b).kept;
  EXPECT_EQ(ka, kb);
  EXPECT_EQ(ka.size(), 10u);
  EXPECT_TRUE(std::is_sorted(ka.begin(), ka.end()));
}

TEST(StructuredPrune, MaskedModelEqualsShrunkModel) {
  RandomStream rng(11, "t");
  const Orcnn model = Orcnn::random(40, 3, 2, rng);
  const StructuredPruneResult r = structured_filter_prune(model, 0.25, FilterCriterion::SmallestNorm);
  Orcnn masked = model;
  std::vector<bool> keep(40, false);
  for (std::size_t k : r.kept) keep[k] = true;
  for (std::size_t f = 0; f < 40; ++f)
    if (!keep[f]) std::fill(masked.w.filter(f).begin(), masked.w.filter(f).end(), 0.0);
  for (int t = 0; t < 10; ++t) {
    const FeatureMap x = testutil::random_map(3, 1, 9, rng);
    const double a = orcnn_forward(masked, x), b = orcnn_forward(r.model, x);
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
  }
}

// ---------------------------------------------------------------- LTH drivers

namespace {

// Deterministic stand-in for finetuning: nudges every live prunable weight.
FinetuneFn nudge(double step) {
  return [step](ParamStore& p, const PruneMask& mask, std::size_t round) {
    for (auto& [name, bits] : mask.groups()) {
      auto& v = p.at(name).values;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (bits[i]) v[i] += step * std::sin(double(i + 7 * round));
    }
    return 1.0 / double(round);
  };
}

}  // namespace

TEST(Ladder, SparsityValues) {
  const double reference[] = {0.7903, 0.8322, 0.8658, 0.8926, 0.9141};
  for (std::size_t i = 7; i <= 11; ++i) EXPECT_NEAR(ladder_sparsity(0.8, i), reference[i - 7], 5e-5) << i;
  for (std::size_t i = 1; i <= 11; ++i) EXPECT_EQ(ladder_sparsity(0.8, i), 1.0 - std::pow(0.8, double(i)));
  EXPECT_EQ(ladder_pruned_count(1000, 0.8, 1), 200u);
  EXPECT_EQ(ladder_pruned_count(1000, 0.8, 7), 790u);
}

TEST(ModifiedLth, LadderNestingAndExactRewind) {
  const ParamStore theta = toy_store(12);
  std::vector<ParamStore> starts;
  const auto tickets = run_lth(theta, {11, 0.2, LthMethod::ModifiedLth}, nudge(0.05),
                               [&](const Ticket&, const ParamStore&, const ParamStore& next) { starts.push_back(next); });
  ASSERT_EQ(tickets.size(), 11u);
  const std::size_t total = 120;
  for (std::size_t i = 0; i < 11; ++i) {
    const Ticket& t = tickets[i];
    EXPECT_EQ(t.round, i + 1);
    EXPECT_EQ(t.nominal_sparsity, 1.0 - std::pow(0.8, double(i + 1)));
    EXPECT_EQ(t.mask.pruned(), ladder_pruned_count(total, 0.8, i + 1));
    EXPECT_LE(std::abs(t.sparsity - t.nominal_sparsity), 1.0 / double(total));
    EXPECT_EQ(t.rewind_hash, theta.hash());
    if (i > 0) {
      EXPECT_TRUE(t.mask.nested_in(tickets[i - 1].mask));
    }
    // Survivors equal theta_pre bit for bit; pruned entries are zero.
    for (const auto& [name, bits] : t.mask.groups())
      for (std::size_t j = 0; j < bits.size(); ++j)
        EXPECT_EQ(starts[i].at(name).values[j], bits[j] ? theta.at(name).values[j] : 0.0);
    EXPECT_EQ(starts[i].at("head").values, theta.at("head").values);
  }
}

TEST(Imp, SharesFirstMaskAndLadderButCarriesWeights) {
  const ParamStore theta = toy_store(13);
  std::vector<ParamStore> starts;
  const auto lth = run_lth(theta, {4, 0.2, LthMethod::ModifiedLth}, nudge(0.3));
  const auto imp = run_lth(theta, {4, 0.2, LthMethod::Imp}, nudge(0.3),
                           [&](const Ticket&, const ParamStore&, const ParamStore& next) { starts.push_back(next); });
  EXPECT_EQ(imp[0].mask, lth[0].mask);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(imp[i].sparsity, lth[i].sparsity);
  EXPECT_NE(starts[1].hash("a."), theta.hash("a."));
}

TEST(Lth, Errors) {
  ParamStore none;
  none.add("head", {3});
  EXPECT_THROW(run_lth(none, {}, nudge(0.1)), DomainError);
  EXPECT_THROW(run_lth(toy_store(1), {0, 0.2, LthMethod::Imp}, nudge(0.1)), DomainError);
  EXPECT_THROW(run_lth(toy_store(1), {1, 1.0, LthMethod::Imp}, nudge(0.1)), DomainError);
}

TEST(FloorCount, SnapsRoundingNoiseOnly) {
  EXPECT_EQ(floor_count(1000 * (1 - 0.8)), 200u);
  EXPECT_EQ(floor_count(0.29 * 100), 29u);
  EXPECT_EQ(floor_count(28.5), 28u);
  EXPECT_EQ(floor_count(28.999), 28u);
  EXPECT_EQ(floor_count(0.0), 0u);
}
