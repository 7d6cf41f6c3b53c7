#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles/char_poly.hpp"
#include "test_util.hpp"
#include "ticketlab/dataset.hpp"
#include "ticketlab/errors.hpp"
#include "ticketlab/gram.hpp"
#include "ticketlab/ntk.hpp"
#include "ticketlab/pruning.hpp"
#include "ticketlab/theorem1.hpp"
#include "ticketlab/theorem2.hpp"

using namespace ticketlab;

namespace {

PatchData normalized_data(std::size_t n, std::size_t c, std::size_t s, std::uint64_t seed) {
  DatasetConfig dc;
  dc.kind = "orcnn-normalized";
  dc.count = n;
  dc.channels = c;
  dc.half_width = s;
  const Dataset d = gen_dataset(dc, seed);
  return make_patch_data(d.inputs, d.targets, s);
}

}  // namespace

// ---------------------------------------------------------------- Gram matrices

TEST(Gram, SingleUnitPatchWithPositivePreactivations) {
  std::vector<FeatureMap> xs{FeatureMap::from_rows({{0.6}, {0.8}})};
  const PatchData data = make_patch_data(xs, {1.0}, 0);
  RandomStream rng(1, "t");
  Orcnn model = Orcnn::random(10, 2, 0, rng);
  for (double& v : model.w.values()) v = std::abs(v);
  EXPECT_NEAR(gram_empirical(model, data).values(0, 0), 1.0, 1e-14);
  const Orcnn pruned = structured_filter_prune(model, 0.5, FilterCriterion::SmallestNorm).model;
  EXPECT_NEAR(gram_empirical(pruned, data).values(0, 0), 0.5, 1e-14);
}

TEST(Gram, EmpiricalIsExactlySymmetric) {
  const PatchData data = normalized_data(6, 3, 1, 2);
  RandomStream rng(2, "t");
  const Eigen::MatrixXd g = gram_empirical(Orcnn::random(64, 3, 1, rng), data).values;
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) EXPECT_EQ(g(i, j), g(j, i));
}

TEST(Gram, InfiniteWidthDiagonalAndOrthogonalData) {
  // D = 1 with orthonormal samples: G_inf = (q/2) I.
  std::vector<FeatureMap> xs;
  for (std::size_t i = 0; i < 3; ++i) {
    FeatureMap x(3, 1);
    x.at(i, 0) = 1.0;
    xs.push_back(x);
  }
  const PatchData data = make_patch_data(xs, {1, -1, 1}, 0);
  for (double q : {1.0, 0.64}) {
    const GramMatrix g = gram_infty(data, q);
    EXPECT_TRUE(g.values.isApprox(0.5 * q * Eigen::MatrixXd::Identity(3, 3), 1e-15));
    EXPECT_NEAR(lambda0(g), q / 2, 1e-15);
  }
}

TEST(Gram, DuplicatedSampleIsRejected) {
  const FeatureMap x = FeatureMap::from_rows({{0.6, 0.0, 0.8}});
  const PatchData data = make_patch_data({x, x}, {1.0, -1.0}, 1);
  EXPECT_THROW(lambda0(gram_infty(data, 1.0)), DomainError);
}

TEST(Gram, LeastEigenvalueMatchesCharacteristicPolynomial) {
  for (std::uint64_t seed : {3u, 4u}) {
    const PatchData data = normalized_data(8, 4, 2, seed);
    const GramMatrix g = gram_infty(data, 1.0);
    oracle::Mat m(8, std::vector<double>(8));
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) m[i][j] = g.values(i, j);
    EXPECT_NEAR(lambda0(g), oracle::least_eigenvalue(m), 1e-8);
  }
}

// E over w ~ N(0, I) of 1{<w,u> >= 0} 1{<w,v> >= 0} estimated by direct sampling.
TEST(Gram, InfiniteWidthMatchesMonteCarlo) {
  const std::size_t n = 4, c = 4, s = 2;
  const PatchData data = normalized_data(n, c, s, 5);
  const GramMatrix closed = gram_infty(data, 1.0);
  const auto d = static_cast<double>(data.length);
  const Eigen::Index dim = data.stacked.cols();
  RandomStream rng(5, "t.mc");
  const int draws = 100000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n), sum2 = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd w(dim);
  for (int t = 0; t < draws; ++t) {
    for (Eigen::Index j = 0; j < dim; ++j) w[j] = rng.normal();
    const Eigen::VectorXd act = ((data.stacked * w).array() >= 0.0).cast<double>();
    Eigen::MatrixXd sample(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      // sum_k 1{.} phi_k(x_i): the active patch sum.
      const Eigen::VectorXd vi = data.patches[i].transpose() * act.segment(i * data.length, data.length);
      for (std::size_t j = 0; j <= i; ++j) {
        const Eigen::VectorXd vj = data.patches[j].transpose() * act.segment(j * data.length, data.length);
        sample(i, j) = sample(j, i) = vi.dot(vj) / (d * d);
      }
    }
    sum += sample;
    sum2 += sample.cwiseProduct(sample);
  }
  const Eigen::MatrixXd mean = sum / draws;
  const Eigen::MatrixXd var = sum2 / draws - mean.cwiseProduct(mean);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double se = std::sqrt(var(i, j) / draws);
      EXPECT_LE(std::abs(mean(i, j) - closed.values(i, j)), 3 * se) << i << "," << j;
    }
}

TEST(Gram, EmpiricalConcentratesAtWidth4096) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const PatchData data = normalized_data(8, 4, 2, seed);
    RandomStream rng(seed, "t.conc");
    const Orcnn model = Orcnn::random(4096, 4, 2, rng);
    const double dev = (gram_empirical(model, data).values - gram_infty(data, 1.0).values).cwiseAbs().maxCoeff();
    EXPECT_LE(dev, 4.0 / std::sqrt(4096.0)) << seed;
  }
}

// ---------------------------------------------------------------- gradient descent dynamics

TEST(GradientDescent, ZeroResidualStaysPut) {
  PatchData data = normalized_data(4, 2, 1, 6);
  RandomStream rng(6, "t");
  Orcnn model = Orcnn::random(64, 2, 1, rng);
  data.y = orcnn_outputs(model, data);
  const ConvTensor before = model.w;
  const GdTrace tr = train_orcnn_gd(model, data, {0.1, 0.1, 100, 1e-10});
  EXPECT_EQ(tr.iterations, 0u);
  EXPECT_EQ(model.w, before);
  EXPECT_LE(tr.loss.front(), 1e-30);
}

TEST(GradientDescent, EnvelopeMovementAndGradientBoundsHold) {
  const PatchData data = normalized_data(8, 4, 2, 7);
  const double l0 = lambda0(gram_infty(data, 1.0));
  RandomStream rng(7, "t");
  Orcnn model = Orcnn::random(2048, 4, 2, rng);
  const GdTrace tr = train_orcnn_gd(model, data, {0.25 * l0 / 64.0, l0, 1500, 1e-10});
  EXPECT_TRUE(tr.strictly_decreasing);
  EXPECT_TRUE(tr.envelope_ok) << "first violation at " << tr.first_envelope_violation;
  EXPECT_TRUE(tr.movement_ok);
  EXPECT_TRUE(tr.grad_ok);
  const double rate = 1.0 - 0.25 * l0 / 64.0 * l0 / 2.0;
  for (std::size_t t = 0; t < tr.loss.size(); ++t) {
    ASSERT_LE(tr.loss[t], std::pow(rate, double(t)) * tr.loss[0] * (1 + 1e-9)) << t;
    ASSERT_LE(tr.max_movement[t], tr.movement_bound);
  }
  EXPECT_LT(tr.loss.back(), tr.loss.front());
}

TEST(GradientDescent, RejectsBadStepSizes) {
  const PatchData data = normalized_data(2, 2, 1, 8);
  RandomStream rng(8, "t");
  Orcnn model = Orcnn::random(8, 2, 1, rng);
  EXPECT_THROW(train_orcnn_gd(model, data, {0.0, 1.0}), DomainError);
  EXPECT_THROW(train_orcnn_gd(model, data, {0.1, 0.0}), DomainError);
}

// ---------------------------------------------------------------- structured pruning distance

TEST(Theorem2, PredictionClosedForm) {
  EXPECT_NEAR(theorem2_prediction(0.36), std::pow(0.64, -0.25) - std::pow(0.64, 0.25), 1e-15);
  EXPECT_NEAR(theorem2_prediction(0.36), 0.2236, 5e-5);
  EXPECT_EQ(theorem2_prediction(0.0), 0.0);
  for (double p = 0.01; p < 0.95; p += 0.01) EXPECT_GE(theorem2_prediction(p), p / 2) << p;
}

TEST(Theorem2, ConfigValidation) {
  Theorem2Config cfg;
  cfg.width = 10;
  cfg.p_grid = {0.99};
  EXPECT_THROW(cfg.validate(), DomainError);
  cfg.p_grid = {0.2};
  cfg.eta_factor = 0.6;
  EXPECT_THROW(cfg.validate(), DomainError);
  EXPECT_EQ(Theorem2Config{}.pruned_width(0.36), 1311u);  // round(2048 * 0.64)
  EXPECT_EQ(Theorem2Config{}.seed_list().size(), 10u);
}

TEST(Theorem2, SmallRunShowsZeroDistanceWithoutPruningAndBoundWithIt) {
  Theorem2Config cfg;
  cfg.width = 1024;
  cfg.samples = 4;
  cfg.p_grid = {0.0, 0.5};
  cfg.seeds = {0, 1};
  cfg.max_iterations = 1500;
  const Theorem2Report rep = theorem2_experiment(cfg);
  ASSERT_EQ(rep.runs.size(), 4u);
  for (const Theorem2Run& run : rep.runs) {
    if (run.p == 0.0) {
      EXPECT_LT(run.distance, 1e-2);
      EXPECT_TRUE(run.bound_ok);
    } else {
      EXPECT_EQ(run.pruned_width, 512u);
      EXPECT_GE(run.distance, 0.25);
      EXPECT_NEAR(run.norm_fin / run.norm_pre, std::sqrt(0.5), 0.05);
    }
    EXPECT_TRUE(run.finetune.envelope_ok);
  }
}

// ---------------------------------------------------------------- kernel-sum pruning scaling

TEST(Theorem1, LogLogFitRecoversPowerLaw) {
  std::vector<double> x, y;
  for (double v : {0.01, 0.02, 0.05, 0.1}) {
    x.push_back(v);
    y.push_back(3.0 * std::pow(v, 1.5));
  }
  const LogLogFit f = fit_loglog(x, y);
  EXPECT_NEAR(f.slope, 1.5, 1e-12);
  EXPECT_NEAR(f.intercept, std::log(3.0), 1e-12);
  EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
  EXPECT_THROW(fit_loglog({0.1, 0.1}, {1, 2}), DomainError);
  EXPECT_THROW(fit_loglog({0.1, 0.2}, {1, 0}), DomainError);
}

TEST(Theorem1, SingleLayerSquaredMapRatioIsP) {
  Theorem1Config cfg;
  cfg.layers = 1;
  cfg.half_width = 4;
  cfg.seeds = {0, 1, 2, 3};
  cfg.p_grid = {0.02, 0.05, 0.1};
  const ScalingReport rep = theorem1_experiment(cfg);
  for (std::size_t pi = 0; pi < cfg.p_grid.size(); ++pi) {
    double mean = 0.0;
    for (std::size_t si = 0; si < 4; ++si) mean += rep.points[si * 3 + pi].map_ratio_sq / 4;
    EXPECT_NEAR(mean, cfg.p_grid[pi], 0.2 * cfg.p_grid[pi]) << cfg.p_grid[pi];
  }
}

TEST(Theorem1, RatiosShrinkWithP) {
  Theorem1Config cfg;
  cfg.width = 32;
  cfg.input_channels = 32;
  cfg.length = 32;
  cfg.seeds = {0, 1, 2};
  cfg.p_grid = {0.002, 0.02, 0.1};
  const ScalingReport rep = theorem1_experiment(cfg);
  EXPECT_TRUE(rep.pooled_monotone);
  EXPECT_TRUE(rep.map_monotone);
  EXPECT_LT(rep.mean_pooled[0], rep.mean_pooled[2] / 10);
  EXPECT_LT(rep.mean_map[0], 0.2);
  EXPECT_GT(rep.pooled_fit.slope, rep.map_fit.slope);
  Theorem1Config bad;
  bad.p_grid = {0.05, 0.2};
  EXPECT_THROW(theorem1_experiment(bad), DomainError);
}
