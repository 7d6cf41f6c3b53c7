// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any gating criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oracles/direct_conv.hpp"
#include "test_util.hpp"
#include "ticketlab/autoenc_train.hpp"
#include "ticketlab/commands.hpp"
#include "ticketlab/config.hpp"
#include "ticketlab/conv.hpp"
#include "ticketlab/csv.hpp"
#include "ticketlab/dataset.hpp"
#include "ticketlab/gradcheck.hpp"
#include "ticketlab/gram.hpp"
#include "ticketlab/layers.hpp"
#include "ticketlab/lcnn.hpp"
#include "ticketlab/orcnn.hpp"
#include "ticketlab/pipeline.hpp"
#include "ticketlab/spectral.hpp"

using namespace ticketlab;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kSpectralRelTol = 1e-9;
constexpr double kDftRoundTripTol = 1e-12;
constexpr double kMonteCarloSe = 3.0;
constexpr int kMonteCarloDraws = 100000;
constexpr std::size_t kSpectralInstances = 100;
constexpr double kGradRelTol = 1e-4;
constexpr std::size_t kLadderRounds = 11;
constexpr double kLadderPercentTol = 0.005;
constexpr std::size_t kStudySeeds = 5;
constexpr std::size_t kStudyRound = 7;

struct Outcome {
  bool passed = false;
  bool gating = true;
  std::string detail;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

const Check* find_check(const CommandResult& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

bool checks_with_prefix(const CommandResult& r, const std::string& prefix, std::ostream& detail) {
  bool ok = true, any = false;
  for (const auto& c : r.checks) {
    if (c.name.rfind(prefix, 0) != 0) continue;
    any = true;
    ok = ok && c.passed;
    detail << "; " << c.name << " " << (c.passed ? "ok" : "FAILED") << " (" << c.detail << ")";
  }
  return ok && any;
}

CommandResult run_cli(const std::string& command, const fs::path& out, const Json& config, std::uint64_t seed = 0) {
  fs::remove_all(out);
  fs::create_directories(out.parent_path());
  const fs::path cfg = out.string() + ".json";
  write_file_atomic(cfg, config.dump(2) + "\n");
  CommandOptions o;
  o.command = command;
  o.config = cfg;
  o.seed = seed;
  o.out = out;
  std::ostringstream log;
  return run_command(o, log);
}

// ---------------------------------------------------------------- 1

Outcome criterion1(const fs::path& out) {
  const CommandResult r = run_cli("thm1", out / "thm1", Json::object());
  std::ostringstream d;
  d << "pooled slope " << fmt(r.summary["pooled_fit"]["slope"].get<double>()) << ", map slope "
    << fmt(r.summary["map_fit"]["slope"].get<double>()) << ", " << fmt(r.summary["seconds"].get<double>(), 3)
    << " s";
  return {r.passed(), true, d.str()};
}

// ---------------------------------------------------------------- 2 and 3

struct Thm2Outcomes {
  Outcome bound, dynamics;
};

Thm2Outcomes criteria2and3(const fs::path& out) {
  const CommandResult r = run_cli("thm2", out / "thm2", Json::object());
  Thm2Outcomes o;
  std::ostringstream d2;
  d2 << fmt(r.summary["seconds"].get<double>(), 3) << " s";
  const bool bound = checks_with_prefix(r, "bound", d2);
  const bool pred = checks_with_prefix(r, "prediction", d2);
  const Check* runtime = find_check(r, "runtime");
  o.bound = {bound && pred && runtime && runtime->passed, true, d2.str()};

  std::ostringstream d3;
  const Check* dyn = find_check(r, "dynamics");
  const Check* gram = find_check(r, "gram_g0");
  d3 << "envelope and movement: " << (dyn && dyn->passed ? "every step" : "VIOLATED") << "; G(0): "
     << (gram ? gram->detail : "missing");
  o.dynamics = {dyn && dyn->passed && gram && gram->passed, true, d3.str()};
  return o;
}

// ---------------------------------------------------------------- 4

Outcome criterion4() {
  RandomStream rng(4, "acceptance.spectral");
  double conv_worst = 0.0, lcnn_worst = 0.0, dft_worst = 0.0;
  for (std::size_t t = 0; t < kSpectralInstances; ++t) {
    const std::size_t in = 1 + rng.below(4), out = 1 + rng.below(4), s = rng.below(3);
    const std::size_t d = 2 * s + 1 + rng.below(12);
    const ConvTensor w = testutil::random_1d(out, in, s, rng);
    const FeatureMap x = testutil::random_map(in, 1, d, rng);
    const auto direct = oracle::conv1d(w.values(), out, in, s, x.values(), d);
    conv_worst = std::max(conv_worst, testutil::rel_err(spectral_conv(w, x).flat(), direct));

    const std::size_t layers = 1 + rng.below(4);
    std::vector<std::size_t> widths{in};
    for (std::size_t l = 0; l < layers; ++l) widths.push_back(1 + rng.below(4));
    const Lcnn model = Lcnn::random(widths, s, 1.0, rng);
    std::vector<double> h = x.values();
    for (const auto& layer : model.layers)
      h = oracle::conv1d(layer.values(), layer.out_channels(), layer.in_channels(), s, h, d);
    lcnn_worst = std::max(lcnn_worst, testutil::rel_err(lcnn_spectral_eval(model.layers, x).flat(), h));

    const FeatureMap back = dft_inverse(dft_forward(x));
    dft_worst = std::max(dft_worst, testutil::rel_err(back.flat(), x.flat()));
  }

  // G_inf closed form against sampled filters.
  const std::size_t n = 4, c = 4, s = 2;
  DatasetConfig dc;
  dc.kind = "orcnn-normalized";
  dc.count = n;
  dc.channels = c;
  dc.half_width = s;
  const Dataset ds = gen_dataset(dc, 4);
  const PatchData data = make_patch_data(ds.inputs, ds.targets, s);
  const GramMatrix closed = gram_infty(data, 1.0);
  const auto len = static_cast<double>(data.length);
  const Eigen::Index dim = data.stacked.cols();
  RandomStream mc(4, "acceptance.mc");
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n), sum2 = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd wv(dim);
  for (int t = 0; t < kMonteCarloDraws; ++t) {
    for (Eigen::Index j = 0; j < dim; ++j) wv[j] = mc.normal();
    const Eigen::VectorXd act = ((data.stacked * wv).array() >= 0.0).cast<double>();
    std::vector<Eigen::VectorXd> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = data.patches[i].transpose() * act.segment(i * data.length, data.length);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double sample = v[i].dot(v[j]) / (len * len);
        sum(i, j) += sample;
        sum2(i, j) += sample * sample;
      }
  }
  double worst_z = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double mean = sum(i, j) / kMonteCarloDraws;
      const double se = std::sqrt((sum2(i, j) / kMonteCarloDraws - mean * mean) / kMonteCarloDraws);
      worst_z = std::max(worst_z, std::abs(mean - closed.values(i, j)) / se);
    }

  const bool ok = conv_worst <= kSpectralRelTol && lcnn_worst <= kSpectralRelTol && dft_worst <= kDftRoundTripTol &&
                  worst_z <= kMonteCarloSe;
  return {ok, true,
          "conv rel " + fmt(conv_worst, 3) + ", LCNN rel " + fmt(lcnn_worst, 3) + " over " +
              std::to_string(kSpectralInstances) + " instances; DFT round trip " + fmt(dft_worst, 3) +
              "; G_inf worst |z| " + fmt(worst_z, 3) + " over " + std::to_string(kMonteCarloDraws) + " draws"};
}

// ---------------------------------------------------------------- 5

std::vector<double> numeric_grad(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x) {
  const double eps = 1e-6;
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = f(x);
    x[i] = saved - eps;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> gaussian(std::size_t n, RandomStream& rng) {
  std::vector<double> v(n);
  for (double& e : v) e = rng.normal();
  return v;
}

Outcome criterion5() {
  RandomStream rng(5, "acceptance.grad");
  std::vector<std::pair<std::string, double>> errs;

  {  // circular convolution, both arguments
    ConvTensor w(3, 2, 3, 3);
    for (double& v : w.values()) v = rng.normal();
    const FeatureMap x = testutil::random_map(2, 5, 4, rng);
    const std::vector<double> proj = gaussian(3 * 5 * 4, rng);
    const ConvGrads g = circ_conv_backward(w, x, FeatureMap::from_values(3, 5, 4, proj));
    const auto by_x = [&](const std::vector<double>& v) {
      return dot(circ_conv(w, FeatureMap::from_values(2, 5, 4, v)).flat(), proj);
    };
    const auto by_w = [&](const std::vector<double>& v) {
      return dot(circ_conv(ConvTensor::from_values(3, 2, 3, 3, v), x).flat(), proj);
    };
    errs.emplace_back("conv input", testutil::rel_err(g.input.flat(), numeric_grad(by_x, x.values())));
    errs.emplace_back("conv weights", testutil::rel_err(g.weights.flat(), numeric_grad(by_w, w.values())));
  }
  {  // pooling and upsampling
    const FeatureMap x = testutil::random_map(2, 4, 6, rng);
    const std::vector<double> pd = gaussian(2 * 2 * 3, rng), pu = gaussian(2 * 8 * 12, rng);
    const auto down = [&](const std::vector<double>& v) {
      return dot(avg_downsample2(FeatureMap::from_values(2, 4, 6, v)).flat(), pd);
    };
    const auto up = [&](const std::vector<double>& v) {
      return dot(upsample_nearest(FeatureMap::from_values(2, 4, 6, v), 2).flat(), pu);
    };
    errs.emplace_back("downsample", testutil::rel_err(avg_downsample2_backward(FeatureMap::from_values(2, 2, 3, pd)).flat(),
                                                      numeric_grad(down, x.values())));
    errs.emplace_back("upsample", testutil::rel_err(upsample_nearest_backward(FeatureMap::from_values(2, 8, 12, pu), 2).flat(),
                                                    numeric_grad(up, x.values())));
  }
  {  // losses
    const std::vector<double> logits = gaussian(5, rng), target = gaussian(5, rng);
    const auto ce = [&](const std::vector<double>& v) { return softmax_cross_entropy(v, 3).loss; };
    const auto se = [&](const std::vector<double>& v) { return squared_error(v, target).loss; };
    errs.emplace_back("cross-entropy", testutil::rel_err(softmax_cross_entropy(logits, 3).grad, numeric_grad(ce, logits)));
    errs.emplace_back("squared error", testutil::rel_err(squared_error(logits, target).grad, numeric_grad(se, logits)));
  }
  {  // ReLU away from its kink
    FeatureMap pre = testutil::random_map(2, 3, 3, rng);
    for (double& v : pre.values()) v += v >= 0 ? 0.1 : -0.1;
    const std::vector<double> proj = gaussian(pre.size(), rng);
    const auto f = [&](const std::vector<double>& v) { return dot(relu(FeatureMap::from_values(2, 3, 3, v)).flat(), proj); };
    errs.emplace_back("relu", testutil::rel_err(relu_backward(pre, FeatureMap::from_values(2, 3, 3, proj)).flat(),
                                                numeric_grad(f, pre.values())));
  }
  {  // ORCNN regression loss
    const std::size_t c = 2, s = 1, n = 3;
    Orcnn model = Orcnn::random(8, c, s, rng);
    std::vector<FeatureMap> xs;
    std::vector<double> ys;
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(testutil::random_map(c, 1, 5, rng));
      ys.push_back(rng.normal());
    }
    const PatchData data = make_patch_data(xs, ys, s);
    const OrcnnLossGrad lg = orcnn_loss_and_grad(model, data);
    double worst = 0.0;
    const double eps = 1e-6;
    for (std::size_t j = 0; j < model.w.size(); ++j) {
      const auto filt = model.w.filter(j / (c * (2 * s + 1)));
      const Eigen::Map<const Eigen::VectorXd> wr(filt.data(), static_cast<Eigen::Index>(filt.size()));
      if ((data.stacked * wr).cwiseAbs().minCoeff() < 1e-3) continue;
      const double saved = model.w.values()[j];
      model.w.values()[j] = saved + eps;
      const double up = 0.5 * (orcnn_outputs(model, data) - data.y).squaredNorm();
      model.w.values()[j] = saved - eps;
      const double down = 0.5 * (orcnn_outputs(model, data) - data.y).squaredNorm();
      model.w.values()[j] = saved;
      const double num = (up - down) / (2 * eps), a = lg.grad.values()[j];
      worst = std::max(worst, std::abs(a - num) / std::max({std::abs(a), std::abs(num), 1e-8}));
    }
    errs.emplace_back("orcnn", worst);
  }
  {  // autoencoder losses
    AutoencoderConfig cfg;
    cfg.image_size = 16;
    cfg.channels = {3, 4, 5, 6};
    cfg.num_classes = 3;
    ParamStore params;
    RandomStream init(5, "acceptance.model");
    init_encoder(params, cfg, init);
    init_decoder(params, cfg, init);
    for (double& v : params.at(kDecOut).values) v = init.normal(0.0, 0.3);
    Dataset data;
    data.task = TaskKind::Classification;
    data.num_classes = 3;
    for (std::size_t i = 0; i < 2; ++i) {
      FeatureMap x(1, 16, 16, 0.0);
      for (double& v : x.values()) v = init.uniform();
      data.inputs.push_back(x);
      data.labels.push_back(i);
    }
    const auto idx = all_indices(2);
    const auto pattern = [&](const HintConfig& hint, bool decoder) -> PatternFn {
      return [&, hint, decoder](const ParamStore& p) {
        std::uint64_t h = 0xCBF29CE484222325ull;
        for (const auto& x : data.inputs) {
          const EncoderTrace enc = encode(p, cfg, x);
          for (const auto& m : enc.pre) hash_signs(h, m.values());
          if (decoder) {
            for (const auto& m : decode(p, cfg, enc, hint).pre) hash_signs(h, m.values());
          }
        }
        return h;
      };
    };
    const GradCheckOptions opts{1e-5, 40, 1e-6};

    params.set_frozen("dec.", true);
    const LossWeights combined{10.0, {0.1, {3, 4}}};
    GradStore g1;
    combined_loss(params, cfg, data, idx, combined, &g1);
    const GradCheckResult r1 = grad_check(
        params, g1, [&](const ParamStore& p) { return combined_loss(p, cfg, data, idx, combined).total; }, opts,
        pattern(combined.hint, true));
    errs.emplace_back("combined loss via frozen decoder", r1.max_rel_error);

    params.set_frozen("dec.", false);
    const HintConfig hint{0.3, {2, 4}};
    GradStore g2;
    recon_loss_and_grad(params, cfg, data, idx, hint, g2);
    const GradCheckResult r2 = grad_check(
        params, g2, [&](const ParamStore& p) { return recon_loss(p, cfg, data, idx, hint); }, opts,
        pattern(hint, true));
    errs.emplace_back("decoder", r2.max_rel_error);
  }

  bool ok = true;
  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, e] : errs) {
    ok = ok && e <= kGradRelTol;
    if (e >= worst) {
      worst = e;
      worst_name = name;
    }
  }
  return {ok, true,
          std::to_string(errs.size()) + " gradient checks, worst relative error " + fmt(worst, 3) + " (" + worst_name +
              ")"};
}

// ---------------------------------------------------------------- 6

Json small_pipeline(std::size_t rounds) {
  const auto train = [](std::size_t epochs, double lr, double clip) {
    return Json{{"epochs", epochs}, {"batch_size", 16}, {"lr", lr}, {"momentum", 0.9}, {"clip_norm", clip}};
  };
  return {{"model", {{"image_size", 16}, {"channels", {4, 6, 8, 8}}}},
          {"data", {{"train_count", 64}, {"test_count", 32}, {"min_radius", 2.0}, {"max_radius", 5.0}}},
          {"pretrain", train(2, 0.05, 0.0)},
          {"decoder", train(2, 1e-3, 20.0)},
          {"lth", {{"rounds", rounds}, {"method", "modified-lth"}, {"finetune", train(1, 1e-3, 20.0)}}},
          {"transfer", {{"rounds", {7}}, {"train_count", 32}, {"train", train(1, 0.02, 0.0)}}}};
}

Outcome criterion6(const fs::path& out) {
  const Json cfg = small_pipeline(kLadderRounds);
  const CommandResult a = run_cli("pipeline", out / "ladder_a", cfg, 11);
  run_cli("pipeline", out / "ladder_b", cfg, 11);

  bool ok = true;
  std::ostringstream d;
  for (const char* name : {"sparsity_ladder", "masks_nested", "rewind_exact"}) {
    const Check* c = find_check(a, name);
    ok = ok && c && c->passed;
    d << name << " " << (c && c->passed ? "ok" : "FAILED") << "; ";
  }

  const auto rows = parse_csv(read_file_text(out / "ladder_a" / "tickets.csv"));
  const auto& h = rows.front();
  const auto col = [&](const std::string& n) {
    return static_cast<std::size_t>(std::find(h.begin(), h.end(), n) - h.begin());
  };
  const double reference[] = {79.03, 83.22, 86.58, 89.26, 91.41};
  bool exact = rows.size() == kLadderRounds + 1;
  for (std::size_t i = 1; exact && i <= kLadderRounds; ++i) {
    const double expected = 1.0 - std::pow(0.8, static_cast<double>(i));
    exact = std::stod(rows[i][col("sparsity")]) == expected;
    if (i >= 7) exact = exact && std::abs(100.0 * expected - reference[i - 7]) <= kLadderPercentTol;
  }
  ok = ok && exact;
  d << "sparsity column 1-0.8^i for i=1.." << kLadderRounds << " " << (exact ? "exact" : "MISMATCH") << "; ";

  bool identical = true;
  for (const auto& entry : fs::directory_iterator(out / "ladder_a")) {
    if (entry.path().extension() != ".csv") continue;
    identical = identical && read_file_text(entry.path()) == read_file_text(out / "ladder_b" / entry.path().filename());
  }
  for (const auto& entry : fs::directory_iterator(out / "ladder_a" / "checkpoints")) {
    identical = identical &&
                read_file_text(entry.path()) == read_file_text(out / "ladder_b" / "checkpoints" / entry.path().filename());
  }
  ok = ok && identical;
  d << "repeat run " << (identical ? "byte-identical" : "DIFFERS");
  return {ok, true, d.str()};
}

// ---------------------------------------------------------------- 7

// P(X >= k) for X ~ Binomial(n, 1/2).
double sign_test_p(std::size_t k, std::size_t n) {
  double p = 0.0;
  for (std::size_t i = k; i <= n; ++i) {
    double c = 1.0;
    for (std::size_t j = 0; j < i; ++j) c = c * static_cast<double>(n - j) / static_cast<double>(j + 1);
    p += c;
  }
  return p / std::pow(2.0, static_cast<double>(n));
}

struct StudyOutcome {
  Outcome distance, accuracy;
};

StudyOutcome criterion7(const fs::path& out, std::ostream& log) {
  PipelineConfig cfg;
  cfg.lth.rounds = kStudyRound;
  cfg.transfer_rounds = {kStudyRound};
  cfg.transfer_tasks = {"segmentation"};

  CsvTable table({"seed", "lambda", "sparsity", "rewind_feature_distance", "feature_distance", "seg_accuracy"});
  double rfd[2] = {0, 0}, fd[2] = {0, 0}, seg[2] = {0, 0};
  std::size_t seg_wins = 0, seg_ties = 0;
  for (std::size_t seed = 0; seed < kStudySeeds; ++seed) {
    const PipelineData data = make_pipeline_data(cfg, seed);
    const UpstreamState up = train_upstream(cfg, data, seed);
    double seg_by_lambda[2] = {0, 0};
    for (int li = 0; li < 2; ++li) {
      PipelineConfig c = cfg;
      c.loss.lambda = li == 0 ? 0.0 : 10.0;
      const PipelineResult res = run_pipeline(c, data, up, seed);
      const TicketRecord& t = res.tickets.at(kStudyRound - 1);
      rfd[li] += t.rewind_feature_distance / kStudySeeds;
      fd[li] += t.feature_distance / kStudySeeds;
      seg[li] += t.downstream.segmentation_accuracy / kStudySeeds;
      seg_by_lambda[li] = t.downstream.segmentation_accuracy;
      table.row() << seed << c.loss.lambda << t.ticket.sparsity << t.rewind_feature_distance << t.feature_distance
                  << t.downstream.segmentation_accuracy;
      log << "  [7] seed " << seed << " lambda " << c.loss.lambda << ": ticket distance "
          << fmt(t.rewind_feature_distance) << ", finetuned distance " << fmt(t.feature_distance)
          << ", pixel accuracy " << fmt(t.downstream.segmentation_accuracy) << "\n";
    }
    if (seg_by_lambda[1] > seg_by_lambda[0]) ++seg_wins;
    if (seg_by_lambda[1] == seg_by_lambda[0]) ++seg_ties;
  }
  fs::create_directories(out);
  write_file_atomic(out / "universal_ticket.csv", table.str());

  StudyOutcome o;
  o.distance = {rfd[1] < rfd[0], true,
                "mean ticket distance " + fmt(rfd[1]) + " (lambda 10) vs " + fmt(rfd[0]) +
                    " (lambda 0); finetuned " + fmt(fd[1]) + " vs " + fmt(fd[0]) + "; " +
                    std::to_string(kStudySeeds) + " seeds at sparsity " + fmt(1.0 - std::pow(0.8, kStudyRound))};
  const std::size_t untied = kStudySeeds - seg_ties;
  o.accuracy = {seg[1] >= seg[0], false,
                "mean pixel accuracy " + fmt(seg[1]) + " vs " + fmt(seg[0]) + "; lambda 10 ahead in " +
                    std::to_string(seg_wins) + "/" + std::to_string(untied) + " untied seeds, one-sided sign test p = " +
                    fmt(untied ? sign_test_p(seg_wins, untied) : 1.0, 3)};
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  fs::path out = "acceptance_out";
  std::vector<int> only;
  app.add_option("--out", out, "Directory for run artifacts");
  app.add_option("--only", only, "Run only these criteria (1-7)")->check(CLI::Range(1, 7));
  CLI11_PARSE(app, argc, argv);
  const std::set<int> selected(only.begin(), only.end());
  const auto wanted = [&](int c) { return selected.empty() || selected.count(c) > 0; };

  fs::create_directories(out);
  bool gating_ok = true;
  const auto report = [&](const std::string& label, const Outcome& o) {
    std::cout << (o.passed ? "PASS" : "FAIL") << " " << label << (o.gating ? "" : " [reported, non-gating]") << ": "
              << o.detail << std::endl;
    if (o.gating && !o.passed) gating_ok = false;
  };
  const auto timed = [&](const std::string& label, const std::function<Outcome()>& f) {
    try {
      report(label, f());
    } catch (const std::exception& e) {
      report(label, {false, true, std::string("exception: ") + e.what()});
    }
  };

  if (wanted(1)) timed("1 kernel-sum pruning scaling", [&] { return criterion1(out); });
  if (wanted(2) || wanted(3)) {
    try {
      const Thm2Outcomes o = criteria2and3(out);
      if (wanted(2)) report("2 structured pruning distance bound", o.bound);
      if (wanted(3)) report("3 gradient-descent dynamics", o.dynamics);
    } catch (const std::exception& e) {
      if (wanted(2)) report("2 structured pruning distance bound", {false, true, e.what()});
      if (wanted(3)) report("3 gradient-descent dynamics", {false, true, e.what()});
    }
  }
  if (wanted(4)) timed("4 kernel equivalences", criterion4);
  if (wanted(5)) timed("5 gradient correctness", criterion5);
  if (wanted(6)) timed("6 ticket search mechanics", [&] { return criterion6(out); });
  if (wanted(7)) {
    try {
      const StudyOutcome o = criterion7(out, std::cout);
      report("7a universal ticket feature distance", o.distance);
      report("7b universal ticket pixel accuracy", o.accuracy);
    } catch (const std::exception& e) {
      report("7 universal ticket study", {false, true, e.what()});
    }
  }
  std::cout << (gating_ok ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED") << std::endl;
  return gating_ok ? 0 : 1;
}
