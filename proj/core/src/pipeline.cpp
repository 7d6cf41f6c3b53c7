#include "ticketlab/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "ticketlab/checkpoint.hpp"
#include "ticketlab/errors.hpp"
#include "ticketlab/layers.hpp"
#include "ticketlab/rng.hpp"

namespace ticketlab {
namespace {

constexpr const char* kSegWeight = "seg.weight";
constexpr const char* kSegBias = "seg.bias";
constexpr std::size_t kSegClasses = 2;  // background, shape

void check_train(const TrainConfig& t, const std::string& key) {
  if (t.batch_size == 0) throw ConfigError(key + ".batch_size", "must be positive");
  if (!(t.sgd.lr > 0.0)) throw ConfigError(key + ".lr", "must be positive");
  if (!(t.sgd.momentum >= 0.0 && t.sgd.momentum < 1.0)) throw ConfigError(key + ".momentum", "must lie in [0, 1)");
  if (!(t.sgd.weight_decay >= 0.0)) throw ConfigError(key + ".weight_decay", "must be non-negative");
  if (!(t.sgd.decay_factor > 0.0)) throw ConfigError(key + ".decay_factor", "must be positive");
  if (!(t.sgd.clip_norm >= 0.0)) throw ConfigError(key + ".clip_norm", "must be non-negative");
}

DatasetConfig toy_config(const PipelineConfig& cfg, const std::string& kind, std::size_t count,
                         const std::vector<std::string>& classes) {
  DatasetConfig dc;
  dc.kind = kind;
  dc.count = count;
  dc.image_size = cfg.model.image_size;
  dc.image_channels = cfg.model.input_channels;
  dc.classes = classes;
  dc.noise = cfg.noise;
  dc.min_radius = cfg.min_radius;
  dc.max_radius = cfg.max_radius;
  return dc;
}

bool has_task(const PipelineConfig& cfg, const std::string& task) {
  return std::find(cfg.transfer_tasks.begin(), cfg.transfer_tasks.end(), task) != cfg.transfer_tasks.end();
}

std::vector<double>& grad_slot(GradStore& grads, const ParamStore& params, const std::string& name) {
  std::vector<double>& g = grads[name];
  if (g.empty()) g.assign(params.at(name).values.size(), 0.0);
  return g;
}

// 1x1 conv logits on the final encoder map (kSegClasses x h x w).
FeatureMap seg_logits(const ParamStore& params, const FeatureMap& f) {
  const auto& w = params.at(kSegWeight).values;
  const auto& b = params.at(kSegBias).values;
  FeatureMap out(kSegClasses, f.height(), f.width());
  for (std::size_t k = 0; k < kSegClasses; ++k) {
    auto o = out.channel(k);
    std::fill(o.begin(), o.end(), b[k]);
    for (std::size_t c = 0; c < f.channels(); ++c) {
      const double wk = w[k * f.channels() + c];
      const auto x = f.channel(c);
      for (std::size_t j = 0; j < o.size(); ++j) o[j] += wk * x[j];
    }
  }
  return out;
}

double evaluate_loss(const ParamStore& params, const PipelineConfig& cfg, const Dataset& data) {
  const std::vector<std::size_t> idx = all_indices(data.size());
  return combined_loss(params, cfg.model, data, idx, cfg.loss).total;
}

void check_upstream_groups(const ParamStore& params, const AutoencoderConfig& model) {
  std::vector<std::string> needed{kHeadWeight, kHeadBias, kDecOut};
  for (std::size_t i = 1; i <= model.stages(); ++i) {
    needed.push_back(enc_conv_name(i));
    needed.push_back(dec_conv_name(i));
  }
  for (const auto& n : needed) {
    if (!params.contains(n)) throw ConfigError("upstream_checkpoint", "checkpoint lacks parameter group '" + n + "'");
  }
}

void fill_upstream_metrics(UpstreamState& up, const PipelineConfig& cfg, const PipelineData& data) {
  up.dense_accuracy = classification_accuracy(up.params, cfg.model, data.test, "head");
  up.decoder_loss = recon_loss(up.params, cfg.model, data.test, all_indices(data.test.size()), cfg.loss.hint);
  up.mean_image_loss = mean_image_baseline(data.test);
}

}  // namespace

void PipelineConfig::validate() const {
  try {
    model.validate();
  } catch (const ConfigError& e) {
    throw ConfigError("model." + e.key_path(), e.what());
  }
  if (classes.size() != model.num_classes) {
    throw ConfigError("data.classes", "expected " + std::to_string(model.num_classes) + " classes");
  }
  if (train_count == 0) throw ConfigError("data.train_count", "must be positive");
  if (test_count == 0) throw ConfigError("data.test_count", "must be positive");
  for (const auto& c : classes) parse_shape(c);
  for (const auto& c : transfer_classes) parse_shape(c);
  if (has_task(*this, "classification")) {
    if (transfer_classes.size() < 2) throw ConfigError("data.transfer_classes", "at least two classes required");
    for (const auto& c : transfer_classes) {
      if (std::find(classes.begin(), classes.end(), c) != classes.end()) {
        throw ConfigError("data.transfer_classes", "shape '" + c + "' also appears in data.classes");
      }
    }
  }
  for (const auto& t : transfer_tasks) {
    if (t != "classification" && t != "segmentation") {
      throw ConfigError("transfer.tasks", "unknown task '" + t + "'");
    }
  }
  if (transfer_train_count == 0) throw ConfigError("transfer.train_count", "must be positive");
  try {
    loss.validate();
  } catch (const DomainError& e) {
    throw ConfigError("loss", e.what());
  }
  for (std::size_t s : loss.hint.stages) {
    if (s < 1 || s > model.stages()) throw ConfigError("loss.hint_stages", "stage out of range");
  }
  if (lth.rounds == 0) throw ConfigError("lth.rounds", "must be at least 1");
  if (!(lth.prune_rate > 0.0 && lth.prune_rate < 1.0)) throw ConfigError("lth.prune_rate", "must lie in (0, 1)");
  for (std::size_t r : transfer_rounds) {
    if (r < 1 || r > lth.rounds) throw ConfigError("transfer.rounds", "round out of range");
  }
  check_train(pretrain, "pretrain");
  check_train(decoder, "decoder");
  check_train(finetune, "lth.finetune");
  check_train(transfer, "transfer");
}

bool PipelineConfig::transfers_round(std::size_t round) const {
  if (transfer_tasks.empty()) return false;
  if (transfer_rounds.empty()) return true;
  return std::find(transfer_rounds.begin(), transfer_rounds.end(), round) != transfer_rounds.end();
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& tag) { return stream_id(tag, seed); }

PipelineData make_pipeline_data(const PipelineConfig& cfg, std::uint64_t seed) {
  PipelineData d;
  d.train = gen_dataset(toy_config(cfg, "toy-class", cfg.train_count, cfg.classes), derive_seed(seed, "split.train"));
  d.test = gen_dataset(toy_config(cfg, "toy-class", cfg.test_count, cfg.classes), derive_seed(seed, "split.test"));
  if (has_task(cfg, "classification")) {
    const auto& tc = cfg.transfer_classes;
    d.cls_train = gen_dataset(toy_config(cfg, "toy-class", cfg.transfer_train_count, tc),
                              derive_seed(seed, "split.cls.train"));
    d.cls_test = gen_dataset(toy_config(cfg, "toy-class", cfg.test_count, tc), derive_seed(seed, "split.cls.test"));
  }
  if (has_task(cfg, "segmentation")) {
    d.seg_train = gen_dataset(toy_config(cfg, "toy-pixel", cfg.transfer_train_count, cfg.classes),
                              derive_seed(seed, "split.seg.train"));
    d.seg_test = gen_dataset(toy_config(cfg, "toy-pixel", cfg.test_count, cfg.classes),
                             derive_seed(seed, "split.seg.test"));
  }
  return d;
}

UpstreamState train_upstream(const PipelineConfig& cfg, const PipelineData& data, std::uint64_t seed) {
  UpstreamState up;
  RandomStream enc_rng(seed, "pipeline.encoder");
  init_encoder(up.params, cfg.model, enc_rng);
  up.pretrain_curve = pretrain_encoder(up.params, cfg.model, data.train, cfg.pretrain, seed);
  RandomStream dec_rng(seed, "pipeline.decoder");
  init_decoder(up.params, cfg.model, dec_rng);
  up.decoder_curve = train_decoder(up.params, cfg.model, data.train, cfg.decoder, cfg.loss.hint, seed);
  fill_upstream_metrics(up, cfg, data);
  return up;
}

UpstreamState load_upstream(const PipelineConfig& cfg, const PipelineData& data) {
  const std::filesystem::path path(cfg.upstream_checkpoint);
  if (!std::filesystem::exists(path)) {
    throw ConfigError("upstream_checkpoint", "no such file '" + cfg.upstream_checkpoint + "'");
  }
  UpstreamState up;
  up.params = load_checkpoint(path).params;
  check_upstream_groups(up.params, cfg.model);
  fill_upstream_metrics(up, cfg, data);
  return up;
}

double feature_distance(const ParamStore& a, const ParamStore& b, const AutoencoderConfig& model,
                        const Dataset& data) {
  std::vector<double> fa, fb;
  for (const auto& x : data.inputs) {
    const EncoderTrace ta = encode(a, model, x, "");
    const EncoderTrace tb = encode(b, model, x, "");
    const auto va = ta.f.back().flat();
    const auto vb = tb.f.back().flat();
    fa.insert(fa.end(), va.begin(), va.end());
    fb.insert(fb.end(), vb.begin(), vb.end());
  }
  if (l2_norm(fa) == 0.0 || l2_norm(fb) == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return normalized_l2_distance(fa, fb);
}

double classification_accuracy(const ParamStore& params, const AutoencoderConfig& model, const Dataset& data,
                               const std::string& head) {
  if (data.size() == 0) throw DomainError("classification_accuracy: empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (argmax(encode(params, model, data.inputs[i], head).logits) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void init_segmentation_head(ParamStore& params, const AutoencoderConfig& model, RandomStream& rng) {
  const std::size_t in = model.channels.back();
  Param& w = params.add(kSegWeight, {kSegClasses, in});
  const double sd = std::sqrt(2.0 / static_cast<double>(in));
  for (double& v : w.values) v = rng.normal(0.0, sd);
  params.add(kSegBias, {kSegClasses});
}

double segmentation_loss(const ParamStore& params, const AutoencoderConfig& model, const Dataset& data,
                         std::span<const std::size_t> indices, GradStore* grads) {
  if (indices.empty()) throw DomainError("segmentation_loss: empty batch");
  if (data.pixel_labels.size() != data.size()) throw ShapeError("segmentation_loss: dataset has no pixel labels");
  const double inv = 1.0 / static_cast<double>(indices.size());
  double total = 0.0;
  for (std::size_t idx : indices) {
    const EncoderTrace enc = encode(params, model, data.inputs[idx], "");
    const FeatureMap& f = enc.f.back();
    const std::size_t factor = model.image_size / f.height();
    const FeatureMap up = upsample_nearest(seg_logits(params, f), factor);
    const std::size_t plane = up.plane();
    const double pix = 1.0 / static_cast<double>(plane);
    FeatureMap grad_up(kSegClasses, up.height(), up.width());
    double loss = 0.0;
    std::vector<double> z(kSegClasses);
    for (std::size_t j = 0; j < plane; ++j) {
      for (std::size_t k = 0; k < kSegClasses; ++k) z[k] = up.channel(k)[j];
      const LossAndGrad ce = softmax_cross_entropy(z, data.pixel_labels[idx][j]);
      loss += ce.loss;
      for (std::size_t k = 0; k < kSegClasses; ++k) grad_up.channel(k)[j] = ce.grad[k] * pix * inv;
    }
    total += loss * pix;
    if (!grads) continue;

    const FeatureMap grad_lo = upsample_nearest_backward(grad_up, factor);
    const auto& w = params.at(kSegWeight).values;
    auto& gw = grad_slot(*grads, params, kSegWeight);
    auto& gb = grad_slot(*grads, params, kSegBias);
    FeatureMap grad_f(f.channels(), f.height(), f.width());
    for (std::size_t k = 0; k < kSegClasses; ++k) {
      const auto gl = grad_lo.channel(k);
      for (double v : gl) gb[k] += v;
      for (std::size_t c = 0; c < f.channels(); ++c) {
        const auto x = f.channel(c);
        auto gf = grad_f.channel(c);
        const double wk = w[k * f.channels() + c];
        double acc = 0.0;
        for (std::size_t j = 0; j < gl.size(); ++j) {
          acc += gl[j] * x[j];
          gf[j] += wk * gl[j];
        }
        gw[k * f.channels() + c] += acc;
      }
    }
    std::vector<FeatureMap> gfs(model.stages());
    gfs.back() = std::move(grad_f);
    encoder_backward(params, model, enc, {}, std::move(gfs), *grads, "");
  }
  return total * inv;
}

double segmentation_accuracy(const ParamStore& params, const AutoencoderConfig& model, const Dataset& data) {
  if (data.size() == 0) throw DomainError("segmentation_accuracy: empty dataset");
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const FeatureMap& f = encode(params, model, data.inputs[i], "").f.back();
    const std::size_t factor = model.image_size / f.height();
    const FeatureMap up = upsample_nearest(seg_logits(params, f), factor);
    for (std::size_t j = 0; j < up.plane(); ++j) {
      const std::size_t pred = up.channel(1)[j] > up.channel(0)[j] ? 1 : 0;
      if (pred == data.pixel_labels[i][j]) ++correct;
      ++total;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

DownstreamMetrics transfer_ticket(const PipelineConfig& cfg, const PipelineData& data,
                                  const ParamStore& ticket_params, const PruneMask& mask, std::uint64_t seed) {
  DownstreamMetrics m;
  const ParamStore encoder = ticket_params.subset({"enc."});
  const bool freeze = cfg.probe == TransferProbe::FrozenEncoder;

  if (has_task(cfg, "classification")) {
    ParamStore p = encoder;
    RandomStream rng(seed, "transfer.cls.head");
    init_linear_head(p, "cls", cfg.model.channels.back(), cfg.transfer_classes.size(), rng);
    if (freeze) p.set_frozen("enc.", true);
    const Dataset& d = data.cls_train;
    const auto curve = train_epochs(p, d.size(), cfg.transfer, seed, "transfer.cls", &mask,
                                    [&](std::span<const std::size_t> batch, GradStore& grads) {
                                      const double inv = 1.0 / static_cast<double>(batch.size());
                                      LossParts parts;
                                      for (std::size_t idx : batch) {
                                        const EncoderTrace enc = encode(p, cfg.model, d.inputs[idx], "cls");
                                        LossAndGrad ce = softmax_cross_entropy(enc.logits, d.labels[idx]);
                                        parts.classification += ce.loss * inv;
                                        for (double& g : ce.grad) g *= inv;
                                        encoder_backward(p, cfg.model, enc, ce.grad, {}, grads, "cls");
                                      }
                                      parts.total = parts.classification;
                                      return parts;
                                    });
    m.classification_loss = curve.empty() ? 0.0 : curve.back().total;
    m.classification_accuracy = classification_accuracy(p, cfg.model, data.cls_test, "cls");
  }

  if (has_task(cfg, "segmentation")) {
    ParamStore p = encoder;
    RandomStream rng(seed, "transfer.seg.head");
    init_segmentation_head(p, cfg.model, rng);
    if (freeze) p.set_frozen("enc.", true);
    const Dataset& d = data.seg_train;
    const auto curve = train_epochs(p, d.size(), cfg.transfer, seed, "transfer.seg", &mask,
                                    [&](std::span<const std::size_t> batch, GradStore& grads) {
                                      LossParts parts;
                                      parts.total = segmentation_loss(p, cfg.model, d, batch, &grads);
                                      parts.classification = parts.total;
                                      return parts;
                                    });
    m.segmentation_loss = curve.empty() ? 0.0 : curve.back().total;
    m.segmentation_accuracy = segmentation_accuracy(p, cfg.model, data.seg_test);
  }
  return m;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const PipelineData& data, const UpstreamState& upstream,
                            std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  PipelineResult res;
  res.upstream = upstream;
  const ParamStore& theta_pre = upstream.params;

  const FinetuneFn finetune = [&](ParamStore& params, const PruneMask& mask, std::size_t round) {
    const auto curve = finetune_combined(params, mask, cfg.model, data.train, cfg.finetune, cfg.loss,
                                         stream_id("pipeline.finetune", seed, round));
    return curve.empty() ? evaluate_loss(params, cfg, data.train) : curve.back().total;
  };
  const RoundHook hook = [&](const Ticket& ticket, const ParamStore& finetuned, const ParamStore& next_start) {
    TicketRecord rec;
    rec.ticket = ticket;
    rec.start = next_start;
    rec.upstream_loss = ticket.finetune_loss;
    ParamStore pruned = finetuned;
    ticket.mask.apply(pruned);
    rec.upstream_accuracy = classification_accuracy(pruned, cfg.model, data.test, "head");
    rec.feature_distance = feature_distance(pruned, theta_pre, cfg.model, data.test);
    rec.rewind_feature_distance = feature_distance(next_start, theta_pre, cfg.model, data.test);
    if (cfg.transfers_round(ticket.round)) {
      rec.transferred = true;
      rec.downstream = transfer_ticket(cfg, data, next_start, ticket.mask, stream_id("pipeline.transfer", seed, ticket.round));
    }
    res.tickets.push_back(std::move(rec));
  };
  run_lth(theta_pre, cfg.lth, finetune, hook);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const PipelineData data = make_pipeline_data(cfg, seed);
  const UpstreamState up = cfg.upstream_checkpoint.empty() ? train_upstream(cfg, data, seed)
                                                           : load_upstream(cfg, data);
  return run_pipeline(cfg, data, up, seed);
}

CsvTable ticket_table(const PipelineResult& result) {
  CsvTable t({"round", "sparsity", "realized_sparsity", "upstream_loss", "upstream_accuracy",
              "cls_accuracy", "cls_loss", "seg_accuracy", "seg_loss", "feature_distance",
              "rewind_feature_distance"});
  const auto metric = [](double v) { return v < 0.0 ? std::string() : format_double(v); };
  for (const auto& r : result.tickets) {
    t.row() << r.ticket.round << r.ticket.nominal_sparsity << r.ticket.sparsity << r.upstream_loss
            << r.upstream_accuracy << metric(r.downstream.classification_accuracy)
            << metric(r.downstream.classification_loss) << metric(r.downstream.segmentation_accuracy)
            << metric(r.downstream.segmentation_loss) << r.feature_distance << r.rewind_feature_distance;
  }
  return t;
}

std::string format_stage_set(const std::set<std::size_t>& stages) {
  std::string s = "{";
  for (auto it = stages.begin(); it != stages.end(); ++it) {
    if (it != stages.begin()) s += ' ';
    s += std::to_string(*it);
  }
  return s + "}";
}

std::vector<HintAblationRow> ablate_hints(const PipelineConfig& cfg, const std::vector<std::set<std::size_t>>& sets,
                                          std::uint64_t seed) {
  if (sets.empty()) throw ConfigError("ablate.sets", "no stage sets given");
  std::vector<HintAblationRow> rows;
  for (const auto& s : sets) {
    PipelineConfig c = cfg;
    c.loss.hint.stages = s;
    c.upstream_checkpoint.clear();
    const PipelineResult r = run_pipeline(c, seed);
    HintAblationRow row;
    row.stages = s;
    row.decoder_loss = r.upstream.decoder_loss;
    for (const auto& t : r.tickets) {
      if (!t.transferred) continue;
      row.segmentation_accuracy = t.downstream.segmentation_accuracy;
      row.classification_accuracy = t.downstream.classification_accuracy;
    }
    rows.push_back(row);
  }
  auto best = std::max_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.segmentation_accuracy < b.segmentation_accuracy;
  });
  best->best = true;
  return rows;
}

}  // namespace ticketlab
