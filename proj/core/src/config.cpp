#include "ticketlab/config.hpp"

#include <concepts>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>

#include "ticketlab/errors.hpp"

namespace ticketlab {
namespace {

// Walks one JSON object, remembering which keys were consumed.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* find(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void get(const std::string& key, double& out) {
    if (const Json* v = find(key)) out = as_double(*v, key_path(key));
  }
  void get(const std::string& key, std::size_t& out) {
    if (const Json* v = find(key)) out = as_size(*v, key_path(key));
  }
  void get(const std::string& key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(key_path(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void get(const std::string& key, std::string& out) {
    if (const Json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  void get(const std::string& key, std::vector<double>& out) {
    if (const Json* v = find(key)) {
      const std::string kp = key_path(key);
      out.clear();
      for (const auto& e : array(*v, kp)) out.push_back(as_double(e, kp));
    }
  }
  template <std::unsigned_integral T>
  void get(const std::string& key, std::vector<T>& out) {
    if (const Json* v = find(key)) {
      const std::string kp = key_path(key);
      out.clear();
      for (const auto& e : array(*v, kp)) out.push_back(as_size(e, kp));
    }
  }
  void get(const std::string& key, std::vector<std::string>& out) {
    if (const Json* v = find(key)) {
      const std::string kp = key_path(key);
      out.clear();
      for (const auto& e : array(*v, kp)) {
        if (!e.is_string()) throw ConfigError(kp, "expected an array of strings");
        out.push_back(e.get<std::string>());
      }
    }
  }
  void get(const std::string& key, std::set<std::size_t>& out) {
    std::vector<std::size_t> tmp(out.begin(), out.end());
    get(key, tmp);
    out = std::set<std::size_t>(tmp.begin(), tmp.end());
  }

  /// Reader over a nested object, or nullopt when absent.
  std::optional<Reader> child(const std::string& key) {
    if (const Json* v = find(key)) return Reader(*v, key_path(key));
    return std::nullopt;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
    }
  }

  static double as_double(const Json& v, const std::string& kp) {
    if (!v.is_number()) throw ConfigError(kp, "expected a number");
    return v.get<double>();
  }
  static std::size_t as_size(const Json& v, const std::string& kp) {
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      throw ConfigError(kp, "expected a non-negative integer");
    }
    return v.get<std::size_t>();
  }
  static const Json& array(const Json& v, const std::string& kp) {
    if (!v.is_array()) throw ConfigError(kp, "expected an array");
    return v;
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_train(Reader& parent, const std::string& key, TrainConfig& t) {
  auto r = parent.child(key);
  if (!r) return;
  r->get("epochs", t.epochs);
  r->get("batch_size", t.batch_size);
  r->get("lr", t.sgd.lr);
  r->get("momentum", t.sgd.momentum);
  r->get("weight_decay", t.sgd.weight_decay);
  r->get("milestones", t.sgd.milestones);
  r->get("decay_factor", t.sgd.decay_factor);
  r->get("clip_norm", t.sgd.clip_norm);
  r->finish();
}

Json train_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},         {"batch_size", t.batch_size},   {"lr", t.sgd.lr},
          {"momentum", t.sgd.momentum}, {"weight_decay", t.sgd.weight_decay},
          {"milestones", t.sgd.milestones}, {"decay_factor", t.sgd.decay_factor}, {"clip_norm", t.sgd.clip_norm}};
}

void read_range(Reader& r, const std::string& key, double& lo, double& hi) {
  std::vector<double> v{lo, hi};
  r.get(key, v);
  if (v.size() != 2 || !(v[0] <= v[1])) throw ConfigError(r.key_path(key), "expected [min, max]");
  lo = v[0];
  hi = v[1];
}

const char* criterion_name(FilterCriterion c) {
  return c == FilterCriterion::Random ? "random" : "smallest-norm";
}

FilterCriterion parse_criterion(const std::string& s) {
  if (s == "random") return FilterCriterion::Random;
  if (s == "smallest-norm") return FilterCriterion::SmallestNorm;
  throw ConfigError("criterion", "expected 'random' or 'smallest-norm'");
}

const char* probe_name(TransferProbe p) { return p == TransferProbe::MaskFixed ? "mask-fixed" : "frozen-encoder"; }

TransferProbe parse_probe(const std::string& s) {
  if (s == "mask-fixed") return TransferProbe::MaskFixed;
  if (s == "frozen-encoder") return TransferProbe::FrozenEncoder;
  throw ConfigError("transfer.probe", "expected 'mask-fixed' or 'frozen-encoder'");
}

void read_pipeline(Reader& r, PipelineConfig& c) {
  if (auto m = r.child("model")) {
    m->get("input_channels", c.model.input_channels);
    m->get("image_size", c.model.image_size);
    m->get("channels", c.model.channels);
    m->get("kernel", c.model.kernel);
    m->finish();
  }
  if (auto d = r.child("data")) {
    d->get("train_count", c.train_count);
    d->get("test_count", c.test_count);
    d->get("classes", c.classes);
    d->get("transfer_classes", c.transfer_classes);
    d->get("noise", c.noise);
    d->get("min_radius", c.min_radius);
    d->get("max_radius", c.max_radius);
    d->finish();
  }
  c.model.num_classes = c.classes.size();
  read_train(r, "pretrain", c.pretrain);
  read_train(r, "decoder", c.decoder);
  if (auto l = r.child("loss")) {
    l->get("lambda", c.loss.lambda);
    l->get("hint_t", c.loss.hint.t);
    l->get("hint_stages", c.loss.hint.stages);
    l->finish();
  }
  if (auto l = r.child("lth")) {
    std::string method = method_name(c.lth.method);
    l->get("method", method);
    c.lth.method = parse_method(method);
    l->get("rounds", c.lth.rounds);
    l->get("prune_rate", c.lth.prune_rate);
    read_train(*l, "finetune", c.finetune);
    l->finish();
  }
  if (auto t = r.child("transfer")) {
    t->get("tasks", c.transfer_tasks);
    std::string probe = probe_name(c.probe);
    t->get("probe", probe);
    c.probe = parse_probe(probe);
    t->get("rounds", c.transfer_rounds);
    t->get("train_count", c.transfer_train_count);
    read_train(*t, "train", c.transfer);
    t->finish();
  }
  r.get("upstream_checkpoint", c.upstream_checkpoint);
}

template <typename F>
auto rethrow_domain(F&& f) {
  try {
    return f();
  } catch (const DomainError& e) {
    throw ConfigError("", e.what());
  } catch (const ShapeError& e) {
    throw ConfigError("", e.what());
  }
}

}  // namespace

const char* method_name(LthMethod m) { return m == LthMethod::ModifiedLth ? "modified-lth" : "imp"; }

LthMethod parse_method(const std::string& name, const std::string& key_path) {
  if (name == "modified-lth") return LthMethod::ModifiedLth;
  if (name == "imp") return LthMethod::Imp;
  throw ConfigError(key_path, "expected 'modified-lth' or 'imp', got '" + name + "'");
}

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    throw ConfigError("", "malformed JSON in '" + path.string() + "': " + e.what());
  }
}

Thm1Settings parse_thm1(const Json& j) {
  Thm1Settings s;
  Theorem1Config& e = s.experiment;
  Reader r(j, "");
  r.get("layers", e.layers);
  r.get("width", e.width);
  r.get("input_channels", e.input_channels);
  r.get("half_width", e.half_width);
  r.get("length", e.length);
  r.get("init_std", e.init_std);
  r.get("p_grid", e.p_grid);
  r.get("seeds", e.seeds);
  r.get("inputs_per_trial", e.inputs_per_trial);
  if (auto a = r.child("assertions")) {
    read_range(*a, "pooled_slope", s.pooled_slope_min, s.pooled_slope_max);
    read_range(*a, "map_slope", s.map_slope_min, s.map_slope_max);
    a->get("monotone", s.require_monotone);
    a->get("max_seconds", s.max_seconds);
    a->finish();
  }
  r.finish();
  if (!(e.init_std > 0.0)) throw ConfigError("init_std", "must be positive");
  if (e.inputs_per_trial == 0) throw ConfigError("inputs_per_trial", "must be positive");
  rethrow_domain([&] {
    e.validate();
    return 0;
  });
  return s;
}

Json to_json(const Thm1Settings& s) {
  const Theorem1Config& e = s.experiment;
  return {{"layers", e.layers},
          {"width", e.width},
          {"input_channels", e.input_channels},
          {"half_width", e.half_width},
          {"length", e.length},
          {"init_std", e.init_std},
          {"p_grid", e.p_grid},
          {"seeds", e.seed_list()},
          {"inputs_per_trial", e.inputs_per_trial},
          {"assertions",
           {{"pooled_slope", {s.pooled_slope_min, s.pooled_slope_max}},
            {"map_slope", {s.map_slope_min, s.map_slope_max}},
            {"monotone", s.require_monotone},
            {"max_seconds", s.max_seconds}}}};
}

Thm2Settings parse_thm2(const Json& j) {
  Thm2Settings s;
  Theorem2Config& e = s.experiment;
  Reader r(j, "");
  r.get("width", e.width);
  r.get("samples", e.samples);
  r.get("channels", e.channels);
  r.get("half_width", e.half_width);
  r.get("p_grid", e.p_grid);
  r.get("seeds", e.seeds);
  r.get("eta_factor", e.eta_factor);
  r.get("max_iterations", e.max_iterations);
  r.get("stop_loss", e.stop_loss);
  std::string criterion = criterion_name(e.criterion);
  r.get("criterion", criterion);
  e.criterion = parse_criterion(criterion);
  r.get("label_mode", e.label_mode);
  r.get("trajectory_stride", e.trajectory_stride);
  if (auto g = r.child("gram_check")) {
    g->get("enabled", s.gram_check);
    g->get("width", s.gram_width);
    g->get("seeds", s.gram_seeds);
    g->get("fraction", s.gram_fraction);
    g->get("min_pass", s.gram_min_pass);
    g->finish();
  }
  if (auto a = r.child("assertions")) {
    a->get("bound_fraction", s.bound_fraction);
    a->get("prediction_tolerance", s.prediction_tolerance);
    a->get("dynamics", s.require_dynamics);
    a->get("max_seconds", s.max_seconds);
    a->finish();
  }
  r.finish();
  if (e.label_mode != "sign" && e.label_mode != "gaussian") {
    throw ConfigError("label_mode", "expected 'sign' or 'gaussian'");
  }
  if (s.gram_check && (s.gram_width == 0 || s.gram_seeds == 0)) {
    throw ConfigError("gram_check", "width and seeds must be positive");
  }
  rethrow_domain([&] {
    e.validate();
    return 0;
  });
  return s;
}

Json to_json(const Thm2Settings& s) {
  const Theorem2Config& e = s.experiment;
  return {{"width", e.width},
          {"samples", e.samples},
          {"channels", e.channels},
          {"half_width", e.half_width},
          {"p_grid", e.p_grid},
          {"seeds", e.seed_list()},
          {"eta_factor", e.eta_factor},
          {"max_iterations", e.max_iterations},
          {"stop_loss", e.stop_loss},
          {"criterion", criterion_name(e.criterion)},
          {"label_mode", e.label_mode},
          {"trajectory_stride", e.trajectory_stride},
          {"gram_check",
           {{"enabled", s.gram_check},
            {"width", s.gram_width},
            {"seeds", s.gram_seeds},
            {"fraction", s.gram_fraction},
            {"min_pass", s.gram_min_pass}}},
          {"assertions",
           {{"bound_fraction", s.bound_fraction},
            {"prediction_tolerance", s.prediction_tolerance},
            {"dynamics", s.require_dynamics},
            {"max_seconds", s.max_seconds}}}};
}

PipelineConfig parse_pipeline(const Json& j) {
  PipelineConfig c;
  Reader r(j, "");
  read_pipeline(r, c);
  r.finish();
  c.validate();
  return c;
}

Json to_json(const PipelineConfig& c) {
  return {{"model",
           {{"input_channels", c.model.input_channels},
            {"image_size", c.model.image_size},
            {"channels", c.model.channels},
            {"kernel", c.model.kernel}}},
          {"data",
           {{"train_count", c.train_count},
            {"test_count", c.test_count},
            {"classes", c.classes},
            {"transfer_classes", c.transfer_classes},
            {"noise", c.noise},
            {"min_radius", c.min_radius},
            {"max_radius", c.max_radius}}},
          {"pretrain", train_json(c.pretrain)},
          {"decoder", train_json(c.decoder)},
          {"loss", {{"lambda", c.loss.lambda}, {"hint_t", c.loss.hint.t}, {"hint_stages", c.loss.hint.stages}}},
          {"lth",
           {{"method", method_name(c.lth.method)},
            {"rounds", c.lth.rounds},
            {"prune_rate", c.lth.prune_rate},
            {"finetune", train_json(c.finetune)}}},
          {"transfer",
           {{"tasks", c.transfer_tasks},
            {"probe", probe_name(c.probe)},
            {"rounds", c.transfer_rounds},
            {"train_count", c.transfer_train_count},
            {"train", train_json(c.transfer)}}},
          {"upstream_checkpoint", c.upstream_checkpoint}};
}

AblateSettings parse_ablate(const Json& j) {
  AblateSettings s;
  Reader r(j, "");
  read_pipeline(r, s.pipeline);
  if (const Json* v = r.find("stage_sets")) {
    s.stage_sets.clear();
    for (const auto& set : Reader::array(*v, "stage_sets")) {
      std::set<std::size_t> stages;
      for (const auto& e : Reader::array(set, "stage_sets")) stages.insert(Reader::as_size(e, "stage_sets"));
      s.stage_sets.push_back(std::move(stages));
    }
  }
  r.finish();
  s.pipeline.validate();
  if (s.stage_sets.empty()) throw ConfigError("stage_sets", "at least one stage set required");
  for (const auto& set : s.stage_sets) {
    for (std::size_t st : set) {
      if (st < 1 || st > s.pipeline.model.stages()) throw ConfigError("stage_sets", "stage out of range");
    }
  }
  return s;
}

Json to_json(const AblateSettings& s) {
  Json j = to_json(s.pipeline);
  Json sets = Json::array();
  for (const auto& set : s.stage_sets) sets.push_back(set);
  j["stage_sets"] = sets;
  return j;
}

}  // namespace ticketlab
