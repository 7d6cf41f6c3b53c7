#include "ticketlab/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>

#include "ticketlab/checkpoint.hpp"
#include "ticketlab/config.hpp"
#include "ticketlab/csv.hpp"
#include "ticketlab/errors.hpp"
#include "ticketlab/lth.hpp"
#include "ticketlab/pipeline.hpp"
#include "ticketlab/theorem1.hpp"
#include "ticketlab/theorem2.hpp"

namespace ticketlab {
namespace {

namespace fs = std::filesystem;

constexpr const char* kTransferNote =
    "fixed-budget toy-scale transfer protocol: an analogue of full-scale transfer recipes, not a reproduction";
const char* const kCompareMetrics[] = {"cls_accuracy", "seg_accuracy", "feature_distance"};

Json load_or_empty(const CommandOptions& opts) {
  return opts.config ? load_json_file(*opts.config) : Json::object();
}

std::vector<std::uint64_t> offset_seeds(const std::vector<std::uint64_t>& base, std::uint64_t seed) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t s : base) out.push_back(seed + s);
  return out;
}

void add_check(CommandResult& r, std::string name, bool ok, std::string detail) {
  r.checks.push_back({std::move(name), ok, std::move(detail)});
}

void prepare_out(const fs::path& out, const Json& echo) {
  fs::create_directories(out / "checkpoints");
  write_file_atomic(out / "config.json", echo.dump(2) + "\n");
}

void finish_summary(CommandResult& r, const std::string& command, std::uint64_t seed, const fs::path& out) {
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  r.summary["command"] = command;
  r.summary["seed"] = seed;
  r.summary["checks"] = checks;
  r.summary["passed"] = r.passed();
  write_file_atomic(out / "summary.json", r.summary.dump(2) + "\n");
}

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------- thm1

CommandResult cmd_thm1(const CommandOptions& opts, std::ostream& log) {
  Thm1Settings s = parse_thm1(load_or_empty(opts));
  s.experiment.seeds = offset_seeds(s.experiment.seed_list(), opts.seed);
  s.experiment.threads = opts.threads;
  Json echo = {{"command", "thm1"}, {"seed", opts.seed}, {"config", to_json(s)}};
  prepare_out(opts.out, echo);

  log << "thm1: " << s.experiment.seeds.size() << " seeds x " << s.experiment.p_grid.size() << " p values\n";
  const ScalingReport rep = theorem1_experiment(s.experiment);

  CsvTable points({"seed", "p", "pooled_ratio", "map_ratio", "map_ratio_sq", "cut", "pruned_kernels"});
  for (const auto& p : rep.points) {
    points.row() << p.seed << p.p << p.pooled_ratio << p.map_ratio << p.map_ratio_sq << p.cut << p.pruned_kernels;
  }
  CsvTable curve({"p", "mean_pooled_ratio", "mean_map_ratio"});
  for (std::size_t i = 0; i < s.experiment.p_grid.size(); ++i) {
    curve.row() << s.experiment.p_grid[i] << rep.mean_pooled[i] << rep.mean_map[i];
  }
  write_file_atomic(opts.out / "thm1_points.csv", points.str());
  write_file_atomic(opts.out / "thm1_curve.csv", curve.str());

  CommandResult r;
  const double ps = rep.pooled_fit.slope, ms = rep.map_fit.slope;
  add_check(r, "pooled_slope", ps >= s.pooled_slope_min && ps <= s.pooled_slope_max,
            fmt(ps) + " in [" + fmt(s.pooled_slope_min) + ", " + fmt(s.pooled_slope_max) + "]");
  add_check(r, "map_slope", ms >= s.map_slope_min && ms <= s.map_slope_max,
            fmt(ms) + " in [" + fmt(s.map_slope_min) + ", " + fmt(s.map_slope_max) + "]");
  if (s.require_monotone) {
    add_check(r, "pooled_monotone", rep.pooled_monotone, "seed-averaged pooled ratio non-decreasing in p");
    add_check(r, "map_monotone", rep.map_monotone, "seed-averaged map ratio non-decreasing in p");
  }
  add_check(r, "runtime", rep.seconds < s.max_seconds, fmt(rep.seconds) + " s < " + fmt(s.max_seconds) + " s");

  r.summary = {{"pooled_fit", {{"slope", ps}, {"intercept", rep.pooled_fit.intercept}, {"r_squared", rep.pooled_fit.r_squared}}},
               {"map_fit", {{"slope", ms}, {"intercept", rep.map_fit.intercept}, {"r_squared", rep.map_fit.r_squared}}},
               {"seconds", rep.seconds},
               {"csv_schemas", {{"thm1_points.csv", "thm1_points/1"}, {"thm1_curve.csv", "thm1_curve/1"}}}};
  log << "thm1: pooled slope " << ps << ", map slope " << ms << " (" << rep.seconds << " s)\n";
  return r;
}

// ---------------------------------------------------------------- thm2

CommandResult cmd_thm2(const CommandOptions& opts, std::ostream& log) {
  Thm2Settings s = parse_thm2(load_or_empty(opts));
  s.experiment.seeds = offset_seeds(s.experiment.seed_list(), opts.seed);
  s.experiment.threads = opts.threads;
  Json echo = {{"command", "thm2"}, {"seed", opts.seed}, {"config", to_json(s)}};
  prepare_out(opts.out, echo);

  log << "thm2: " << s.experiment.seeds.size() << " seeds x " << s.experiment.p_grid.size() << " p values\n";
  const Theorem2Report rep = theorem2_experiment(s.experiment);

  CsvTable runs({"seed", "p", "p_effective", "m", "pruned_width", "distance", "bound", "predicted", "bound_ok",
                 "prediction_ok", "norm_w0", "norm_pre", "norm_fin", "lambda0_pre", "lambda0_fin",
                 "lambda0_g0_pre", "lambda0_g0_fin", "eta_pre", "eta_fin", "iterations_pre", "iterations_fin",
                 "final_loss_pre", "final_loss_fin", "max_movement_pre", "movement_bound_pre",
                 "max_movement_fin", "movement_bound_fin", "envelope_ok", "movement_ok", "grad_ok"});
  CsvTable traj({"seed", "p", "phase", "t", "loss"});
  bool dynamics_ok = true;
  for (const auto& run : rep.runs) {
    const auto& a = run.pretrain;
    const auto& b = run.finetune;
    const bool env = a.envelope_ok && b.envelope_ok;
    const bool mov = a.movement_ok && b.movement_ok;
    const bool grad = a.grad_ok && b.grad_ok;
    dynamics_ok = dynamics_ok && env && mov;
    runs.row() << run.seed << run.p << run.p_effective << run.m << run.pruned_width << run.distance << run.bound
               << run.predicted << run.bound_ok << run.prediction_ok << run.norm_w0 << run.norm_pre << run.norm_fin
               << a.lambda0 << b.lambda0 << a.lambda0_g0 << b.lambda0_g0 << a.eta << b.eta << a.iterations
               << b.iterations << a.final_loss << b.final_loss << a.max_movement << a.movement_bound
               << b.max_movement << b.movement_bound << env << mov << grad;
    for (const auto& [t, l] : b.trajectory) traj.row() << run.seed << run.p << "finetune" << t << l;
  }
  // Pretraining is shared by every p of a seed; emit it once.
  const std::size_t np = s.experiment.p_grid.size();
  for (std::size_t i = 0; i < rep.runs.size(); i += np) {
    for (const auto& [t, l] : rep.runs[i].pretrain.trajectory) traj.row() << rep.runs[i].seed << "" << "pretrain" << t << l;
  }

  CommandResult r;
  Json per_p = Json::array();
  for (std::size_t pi = 0; pi < np; ++pi) {
    std::size_t ok = 0, count = 0;
    double mean = 0.0, predicted = 0.0, p_eff = 0.0;
    for (std::size_t i = pi; i < rep.runs.size(); i += np) {
      ok += rep.runs[i].bound_ok ? 1 : 0;
      mean += rep.runs[i].distance;
      predicted = rep.runs[i].predicted;
      p_eff = rep.runs[i].p_effective;
      ++count;
    }
    mean /= static_cast<double>(count);
    const double p = s.experiment.p_grid[pi];
    const double frac = static_cast<double>(ok) / static_cast<double>(count);
    const bool near = std::abs(mean - predicted) <= s.prediction_tolerance * predicted + 1e-12;
    add_check(r, "bound p=" + fmt(p), frac >= s.bound_fraction,
              std::to_string(ok) + "/" + std::to_string(count) + " seeds with distance >= p/2");
    add_check(r, "prediction p=" + fmt(p), near,
              "mean distance " + fmt(mean) + " vs predicted " + fmt(predicted));
    per_p.push_back({{"p", p}, {"p_effective", p_eff}, {"bound_pass", ok}, {"seeds", count},
                     {"mean_distance", mean}, {"predicted", predicted}});
  }
  if (s.require_dynamics) add_check(r, "dynamics", dynamics_ok, "loss envelope and filter movement bounds at every step");

  Json gram = nullptr;
  if (s.gram_check) {
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < s.gram_seeds; ++i) seeds.push_back(opts.seed + i);
    const auto checks = gram_g0_check(s.experiment, s.gram_width, seeds, s.gram_fraction);
    CsvTable g({"seed", "width", "lambda_g0", "lambda_inf", "ok"});
    std::size_t ok = 0;
    for (const auto& c : checks) {
      g.row() << c.seed << s.gram_width << c.lambda_g0 << c.lambda_inf << c.ok;
      ok += c.ok ? 1 : 0;
    }
    write_file_atomic(opts.out / "thm2_gram.csv", g.str());
    const double frac = static_cast<double>(ok) / static_cast<double>(checks.size());
    add_check(r, "gram_g0", frac >= s.gram_min_pass,
              std::to_string(ok) + "/" + std::to_string(checks.size()) + " seeds with lambda_min(G(0)) >= " +
                  fmt(s.gram_fraction) + " lambda0");
    gram = {{"width", s.gram_width}, {"pass", ok}, {"seeds", checks.size()}};
  }
  add_check(r, "runtime", rep.seconds < s.max_seconds, fmt(rep.seconds) + " s < " + fmt(s.max_seconds) + " s");

  write_file_atomic(opts.out / "thm2_runs.csv", runs.str());
  write_file_atomic(opts.out / "thm2_trajectories.csv", traj.str());
  r.summary = {{"per_p", per_p},
               {"gram_check", gram},
               {"seconds", rep.seconds},
               {"csv_schemas",
                {{"thm2_runs.csv", "thm2_runs/1"}, {"thm2_trajectories.csv", "thm2_trajectories/1"},
                 {"thm2_gram.csv", "thm2_gram/1"}}}};
  log << "thm2: done in " << rep.seconds << " s\n";
  return r;
}

// ---------------------------------------------------------------- pipeline

void apply_overrides(const CommandOptions& opts, PipelineConfig& c) {
  if (opts.method) c.lth.method = parse_method(*opts.method, "--method");
  if (opts.lambda) {
    if (!(*opts.lambda >= 0.0)) throw ConfigError("--lambda", "must be non-negative");
    c.loss.lambda = *opts.lambda;
  }
  c.validate();
  if (!c.upstream_checkpoint.empty() && !fs::exists(c.upstream_checkpoint)) {
    throw ConfigError("upstream_checkpoint", "no such file '" + c.upstream_checkpoint + "'");
  }
}

CsvTable curve_table(const UpstreamState& up) {
  CsvTable t({"stage", "epoch", "classification", "reconstruction", "total"});
  for (const auto& e : up.pretrain_curve) t.row() << "pretrain" << e.epoch << e.classification << e.reconstruction << e.total;
  for (const auto& e : up.decoder_curve) t.row() << "decoder" << e.epoch << e.classification << e.reconstruction << e.total;
  return t;
}

CommandResult cmd_pipeline(const CommandOptions& opts, std::ostream& log) {
  PipelineConfig c = parse_pipeline(load_or_empty(opts));
  apply_overrides(opts, c);
  Json echo = {{"command", "pipeline"}, {"seed", opts.seed}, {"config", to_json(c)}};
  prepare_out(opts.out, echo);

  log << "pipeline: " << method_name(c.lth.method) << ", lambda " << c.loss.lambda << ", " << c.lth.rounds
      << " rounds\n";
  const PipelineResult res = run_pipeline(c, opts.seed);
  const fs::path ck = opts.out / "checkpoints";
  save_checkpoint({res.upstream.params, {}, opts.seed, to_json(c)}, ck / "theta_pre.ckpt");
  for (const auto& t : res.tickets) {
    save_checkpoint({t.start, t.ticket.mask, opts.seed, to_json(c)}, ck / ("ticket_" + std::to_string(t.ticket.round) + ".ckpt"));
  }
  write_file_atomic(opts.out / "tickets.csv", ticket_table(res).str());
  write_file_atomic(opts.out / "upstream_curve.csv", curve_table(res.upstream).str());

  CommandResult r;
  const double keep = 1.0 - c.lth.prune_rate;
  bool ladder = true, nested = true, rewind = true;
  const PruneMask* prev = nullptr;
  const std::size_t total = res.tickets.empty() ? 1 : res.tickets.front().ticket.mask.total();
  for (const auto& t : res.tickets) {
    const double expected = 1.0 - std::pow(keep, static_cast<double>(t.ticket.round));
    ladder = ladder && t.ticket.nominal_sparsity == expected &&
             std::abs(t.ticket.sparsity - expected) <= 1.0 / static_cast<double>(total);
    if (prev) nested = nested && t.ticket.mask.nested_in(*prev);
    prev = &t.ticket.mask;
    if (c.lth.method == LthMethod::ModifiedLth) {
      for (const auto& [name, bits] : t.ticket.mask.groups()) {
        const auto& now = t.start.at(name).values;
        const auto& pre = res.upstream.params.at(name).values;
        for (std::size_t i = 0; i < bits.size(); ++i) {
          if (bits[i] ? now[i] != pre[i] : now[i] != 0.0) rewind = false;
        }
      }
    }
  }
  add_check(r, "sparsity_ladder", ladder, "ticket i has sparsity 1 - r^i within one weight");
  add_check(r, "masks_nested", nested, "pruned weights stay pruned across rounds");
  if (c.lth.method == LthMethod::ModifiedLth) add_check(r, "rewind_exact", rewind, "survivors bit-equal theta_pre");
  add_check(r, "decoder_beats_baseline", res.upstream.decoder_loss < res.upstream.mean_image_loss,
            "reconstruction loss " + fmt(res.upstream.decoder_loss) + " vs mean-image " +
                fmt(res.upstream.mean_image_loss));

  r.summary = {{"method", method_name(c.lth.method)},
               {"lambda", c.loss.lambda},
               {"dense_accuracy", res.upstream.dense_accuracy},
               {"decoder_loss", res.upstream.decoder_loss},
               {"mean_image_loss", res.upstream.mean_image_loss},
               {"seconds", res.seconds},
               {"note", kTransferNote},
               {"csv_schemas", {{"tickets.csv", kTicketCsvVersion}, {"upstream_curve.csv", "upstream_curve/1"}}}};
  log << "pipeline: " << res.tickets.size() << " tickets\n";
  return r;
}

// ---------------------------------------------------------------- ablate

CommandResult cmd_ablate(const CommandOptions& opts, std::ostream& log) {
  AblateSettings s = parse_ablate(load_or_empty(opts));
  apply_overrides(opts, s.pipeline);
  Json echo = {{"command", "ablate"}, {"seed", opts.seed}, {"config", to_json(s)}};
  prepare_out(opts.out, echo);

  log << "ablate: " << s.stage_sets.size() << " hint stage sets\n";
  const auto rows = ablate_hints(s.pipeline, s.stage_sets, opts.seed);
  CsvTable t({"hint_stages", "decoder_loss", "seg_accuracy", "cls_accuracy", "best"});
  Json best = nullptr;
  for (const auto& row : rows) {
    t.row() << format_stage_set(row.stages) << row.decoder_loss << row.segmentation_accuracy
            << row.classification_accuracy << row.best;
    if (row.best) best = format_stage_set(row.stages);
  }
  write_file_atomic(opts.out / "ablate.csv", t.str());
  CommandResult r;
  r.summary = {{"best_stage_set", best},
               {"note", kTransferNote},
               {"csv_schemas", {{"ablate.csv", "ablate/1"}}}};
  return r;
}

// ---------------------------------------------------------------- compare

double parse_number(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw FormatError("not a number: '" + s + "'", 0);
  return v;
}

CommandResult cmd_compare(const CommandOptions& opts, std::ostream& log) {
  if (opts.runs.size() < 2) throw ConfigError("--runs", "compare needs at least two runs");
  std::vector<std::string> texts, labels;
  for (const auto& p : opts.runs) {
    const fs::path csv = fs::is_directory(p) ? p / "tickets.csv" : p;
    if (!fs::exists(csv)) throw ConfigError("--runs", "no ticket CSV at '" + csv.string() + "'");
    texts.push_back(read_file_text(csv));
    labels.push_back(p.string());
  }
  const CompareTable table = join_ticket_csvs(texts, labels);
  Json echo = {{"command", "compare"}, {"seed", opts.seed}, {"runs", labels}};
  prepare_out(opts.out, echo);
  write_file_atomic(opts.out / "compare.csv", compare_csv(table));
  CommandResult r;
  r.summary = {{"runs", labels},
               {"rows", table.sparsity.size()},
               {"note", kTransferNote},
               {"reference_annotations",
                Json::array({{{"sparsity", "0.7902"},
                              {"note", "full-scale reference, not reproduced here: detection mAP 32.7 (modified LTH) vs "
                                       "32.1 (IMP)"}}})},
               {"csv_schemas", {{"compare.csv", "compare/1"}}}};
  log << "compare: " << table.sparsity.size() << " sparsity levels across " << labels.size() << " runs\n";
  return r;
}

}  // namespace

bool CommandResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

int exit_status(const CommandResult& result) { return result.passed() ? 0 : 1; }

CompareTable join_ticket_csvs(const std::vector<std::string>& csv_texts, const std::vector<std::string>& labels) {
  if (csv_texts.size() != labels.size()) throw ShapeError("join_ticket_csvs: one label per run required");
  CompareTable t;
  t.run_labels = labels;
  std::vector<std::map<std::string, std::vector<std::string>>> by_sparsity;
  for (std::size_t r = 0; r < csv_texts.size(); ++r) {
    const auto rows = parse_csv(csv_texts[r]);
    if (rows.empty()) throw FormatError("ticket CSV of '" + labels[r] + "' is empty", 0);
    const auto& header = rows.front();
    const auto col = [&](const std::string& name) {
      const auto it = std::find(header.begin(), header.end(), name);
      if (it == header.end()) throw FormatError("ticket CSV of '" + labels[r] + "' lacks column '" + name + "'", 0);
      return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t sp = col("sparsity");
    std::vector<std::size_t> cols;
    for (const char* m : kCompareMetrics) cols.push_back(col(m));
    std::map<std::string, std::vector<std::string>> m;
    std::vector<std::string> order;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      std::vector<std::string> v;
      for (std::size_t c : cols) v.push_back(rows[i].at(c));
      m[rows[i].at(sp)] = v;
      order.push_back(rows[i].at(sp));
    }
    if (r == 0) t.sparsity = order;
    by_sparsity.push_back(std::move(m));
  }
  for (std::size_t r = 1; r < by_sparsity.size(); ++r) {
    for (const auto& s : t.sparsity) {
      if (!by_sparsity[r].count(s)) throw DomainError("sparsity grid mismatch: " + s + " missing from '" + labels[r] + "'");
    }
    for (const auto& [s, _] : by_sparsity[r]) {
      if (!by_sparsity[0].count(s)) throw DomainError("sparsity grid mismatch: " + s + " missing from '" + labels[0] + "'");
    }
  }
  for (const auto& m : by_sparsity) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : t.sparsity) rows.push_back(m.at(s));
    t.values.push_back(std::move(rows));
  }
  return t;
}

std::string compare_csv(const CompareTable& table) {
  std::vector<std::string> header{"sparsity"};
  const std::size_t runs = table.run_labels.size();
  for (std::size_t r = 0; r < runs; ++r) {
    for (const char* m : kCompareMetrics) header.push_back(std::string(m) + "_" + std::to_string(r));
  }
  for (std::size_t r = 1; r < runs; ++r) {
    for (const char* m : kCompareMetrics) header.push_back("delta_" + std::string(m) + "_" + std::to_string(r));
  }
  CsvTable out(header);
  for (std::size_t i = 0; i < table.sparsity.size(); ++i) {
    auto row = out.row();
    row << table.sparsity[i];
    for (std::size_t r = 0; r < runs; ++r) {
      for (const auto& v : table.values[r][i]) row << v;
    }
    for (std::size_t r = 1; r < runs; ++r) {
      for (std::size_t k = 0; k < std::size(kCompareMetrics); ++k) {
        const std::string& a = table.values[0][i][k];
        const std::string& b = table.values[r][i][k];
        if (a.empty() || b.empty()) {
          row << std::string();
        } else {
          row << parse_number(b) - parse_number(a);
        }
      }
    }
  }
  return out.str();
}

CommandResult run_command(const CommandOptions& opts, std::ostream& log) {
  CommandResult r;
  if (opts.command == "thm1") {
    r = cmd_thm1(opts, log);
  } else if (opts.command == "thm2") {
    r = cmd_thm2(opts, log);
  } else if (opts.command == "pipeline") {
    r = cmd_pipeline(opts, log);
  } else if (opts.command == "ablate") {
    r = cmd_ablate(opts, log);
  } else if (opts.command == "compare") {
    r = cmd_compare(opts, log);
  } else {
    throw ConfigError("command", "unknown subcommand '" + opts.command + "'");
  }
  finish_summary(r, opts.command, opts.seed, opts.out);
  for (const auto& c : r.checks) log << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  return r;
}

}  // namespace ticketlab
