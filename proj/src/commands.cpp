#include "roadlayout/commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "roadlayout/inference.hpp"
#include "roadlayout/metrics.hpp"
#include "roadlayout/oracle.hpp"
#include "roadlayout/render.hpp"
#include "roadlayout/rng.hpp"

namespace roadlayout::cli {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  int threads = std::min(thread_budget(), n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
          fn(i);
        }
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

ordered_json prior_to_json(const PriorConfig& p) {
  ordered_json j;
  j["side_road_left"] = p.side_road_left;
  j["side_road_right"] = p.side_road_right;
  j["main_road_ends"] = p.main_road_ends;
  j["crosswalk_near_at_intersection"] = p.crosswalk_near_at_intersection;
  j["crosswalk_near_plain"] = p.crosswalk_near_plain;
  j["crosswalk_far"] = p.crosswalk_far;
  j["crosswalk_left"] = p.crosswalk_left;
  j["crosswalk_right"] = p.crosswalk_right;
  j["oneway_main"] = p.oneway_main;
  j["delimiter_median"] = p.delimiter_median;
  j["sidewalk_left"] = p.sidewalk_left;
  j["sidewalk_right"] = p.sidewalk_right;
  j["delimiter_with_sidewalk"] = p.delimiter_with_sidewalk;
  j["delimiter_without_sidewalk"] = p.delimiter_without_sidewalk;
  j["main_road_curved"] = p.main_road_curved;
  j["lanes_left_twoway"] = p.lanes_left_twoway;
  j["lanes_left_oneway"] = p.lanes_left_oneway;
  j["lanes_right"] = p.lanes_right;
  j["lane_width_mean"] = p.lane_width_mean;
  j["lane_width_std"] = p.lane_width_std;
  j["curvature_dead_zone"] = p.curvature_dead_zone;
  return j;
}

class ManifestWriter {
 public:
  ManifestWriter(std::string command, std::vector<std::string> argv)
      : command_(std::move(command)),
        argv_(std::move(argv)),
        start_(std::chrono::steady_clock::now()) {}

  void set_seed(std::uint64_t seed) { seed_ = seed; }
  void set_config(ordered_json config) { config_ = std::move(config); }
  void add_input(const std::string& path) { inputs_.push_back(path); }
  void add_output(const std::string& path) { outputs_.push_back(path); }

  void write(const std::string& path) const {
    auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                 start_)
                       .count();
    ordered_json j;
    j["command"] = command_;
    j["argv"] = argv_;
    j["seed"] = seed_;
    j["config"] = config_;
    j["tool_version"] = kToolVersion;
    j["inputs"] = inputs_;
    j["outputs"] = outputs_;
    j["duration_seconds"] = elapsed;
    std::ofstream out(path);
    if (!out) {
      throw std::runtime_error("cannot write manifest '" + path + "'");
    }
    out << j.dump(2) << "\n";
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::uint64_t seed_ = 0;
  ordered_json config_;
  std::vector<std::string> inputs_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

AnnotationMask load_mask(const std::string& path, const AttributeSchema& schema) {
  AnnotationMask mask = AnnotationMask::all_annotated();
  if (path.empty()) return mask;
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open mask file '" + path + "'");
  }
  nlohmann::json j;
  in >> j;
  if (!j.is_object()) {
    throw std::runtime_error("mask file must hold a JSON object of attribute flags");
  }
  for (const auto& [key, value] : j.items()) {
    bool found = false;
    for (int i = 0; i < kNumBinary; ++i) {
      if (schema.binary_names[i] == key) {
        mask.binary[i] = value.get<bool>();
        found = true;
      }
    }
    for (int m = 0; m < kNumMulticlass; ++m) {
      if (schema.multiclass_names[m] == key) {
        mask.multiclass[m] = value.get<bool>();
        found = true;
      }
    }
    for (int m = 0; m < kNumContinuous; ++m) {
      if (schema.continuous[m].name == key) {
        mask.continuous[m] = value.get<bool>();
        found = true;
      }
    }
    if (!found) {
      throw std::runtime_error("mask file names unknown attribute '" + key + "'");
    }
  }
  return mask;
}

std::string six_digits(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", i);
  return buf;
}

}  // namespace

int thread_budget() {
  unsigned hw = std::thread::hardware_concurrency();
  int budget = hw == 0 ? 1 : static_cast<int>(hw);
  if (const char* env = std::getenv("ROADLAYOUT_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) budget = std::min(budget, cap);
  }
  return budget;
}

std::vector<SceneParams> read_scenes(const std::string& path,
                                     const AttributeSchema& schema) {
  auto lines = read_lines(path);
  std::vector<SceneParams> scenes;
  scenes.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      scenes.push_back(deserialize_scene(lines[i], schema));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return scenes;
}

void write_scenes(const std::string& path, std::span<const SceneParams> scenes,
                  const AttributeSchema& schema) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  for (const auto& s : scenes) {
    out << serialize_scene(s, schema) << "\n";
  }
  if (!out) {
    throw std::runtime_error("failed writing '" + path + "'");
  }
}

std::vector<AttributePrediction> read_predictions(
    const std::string& path, const AttributeSchema& schema,
    const std::array<BinSpec, kNumContinuous>& specs) {
  auto lines = read_lines(path);
  std::vector<AttributePrediction> preds;
  preds.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      preds.push_back(deserialize_prediction(lines[i], schema, specs));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return preds;
}

void write_predictions(const std::string& path,
                       std::span<const AttributePrediction> preds,
                       const AttributeSchema& schema) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  for (const auto& p : preds) {
    out << serialize_prediction(p, schema) << "\n";
  }
  if (!out) {
    throw std::runtime_error("failed writing '" + path + "'");
  }
}

int cmd_generate(const GenerateOptions& opts, const std::vector<std::string>& argv) {
  const auto& schema = default_schema();
  PriorConfig prior;
  if (!opts.config_path.empty()) {
    prior = load_prior_config(opts.config_path);
  }
  validate_prior(prior, schema);

  ManifestWriter manifest("generate", argv);
  manifest.set_seed(opts.seed);
  manifest.set_config(prior_to_json(prior));

  fs::create_directories(opts.out_dir);
  std::string params_path = (fs::path(opts.out_dir) / "params.jsonl").string();

  std::vector<SceneParams> scenes(opts.n);
  std::vector<std::string> lines(opts.n);
  if (opts.render) {
    fs::create_directories(fs::path(opts.out_dir) / "renders");
  }
  RenderConfig cfg;
  parallel_for(opts.n, [&](int i) {
    std::uint64_t sub = split_seed(opts.seed, static_cast<std::uint64_t>(i));
    scenes[i] = sample_scene(prior, sub, schema);
    lines[i] = serialize_scene(scenes[i], schema);
    if (opts.render) {
      SemanticTopView view = render(scenes[i], cfg, schema);
      std::string png_path =
          (fs::path(opts.out_dir) / "renders" / (six_digits(i) + ".png")).string();
      write_png(view, png_path);
    }
  });

  std::ofstream out(params_path);
  if (!out) {
    throw std::runtime_error("cannot open '" + params_path + "' for writing");
  }
  for (const auto& line : lines) out << line << "\n";
  out.close();

  manifest.add_output(params_path);
  if (opts.render) {
    manifest.add_output((fs::path(opts.out_dir) / "renders").string());
  }
  manifest.write((fs::path(opts.out_dir) / "manifest.json").string());
  return 0;
}

int cmd_corrupt(const CorruptOptions& opts, const std::vector<std::string>& argv) {
  const auto& schema = default_schema();
  auto specs = default_bin_specs(schema);
  auto scenes = read_scenes(opts.input, schema);

  NoiseConfig cfg;
  cfg.flip_rate = opts.flip_rate;
  cfg.temperature = opts.temperature;
  cfg.jitter_fraction = opts.jitter_fraction;
  validate_noise_config(cfg);
  if (opts.frames < 1) {
    throw std::runtime_error("corrupt needs --frames >= 1");
  }

  std::vector<AttributePrediction> preds;
  preds.reserve(scenes.size() * opts.frames);
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    NoiseConfig scene_cfg = cfg;
    scene_cfg.seed = split_seed(opts.seed, i);
    auto frames = corrupt_sequence(scenes[i], opts.frames, scene_cfg, schema, specs);
    for (auto& f : frames) preds.push_back(std::move(f));
  }
  write_predictions(opts.output, preds, schema);

  ManifestWriter manifest("corrupt", argv);
  manifest.set_seed(opts.seed);
  ordered_json config;
  config["flip_rate"] = cfg.flip_rate;
  config["temperature"] = cfg.temperature;
  config["jitter_fraction"] = cfg.jitter_fraction;
  config["frames"] = opts.frames;
  manifest.set_config(config);
  manifest.add_input(opts.input);
  manifest.add_output(opts.output);
  manifest.write(opts.output + ".manifest.json");
  return 0;
}

int cmd_infer(const InferOptions& opts, const std::vector<std::string>& argv) {
  const auto& schema = default_schema();
  auto specs = default_bin_specs(schema);
  auto preds = read_predictions(opts.input, schema, specs);
  if (preds.empty()) {
    throw std::runtime_error("prediction file '" + opts.input + "' is empty");
  }

  PriorConfig prior;
  if (!opts.config_path.empty()) {
    prior = load_prior_config(opts.config_path);
  }
  validate_prior(prior, schema);
  auto cooc_batch = sample_batch(prior, opts.cooc_seed, opts.cooc_n, schema);
  auto cooc = CooccurrenceTables::estimate(cooc_batch.scenes);

  std::vector<SceneParams> results;
  ordered_json diag_frames = ordered_json::array();
  InferenceOptions inf_opts;

  if (opts.mode == "temporal") {
    auto model = build_energy(preds, cooc, schema, specs);
    InferenceDiagnostics diag;
    auto labelings = minimize_temporal(model, inf_opts, &diag);
    results.reserve(labelings.size());
    for (const auto& labels : labelings) {
      results.push_back(labeling_to_params(labels, schema, specs));
    }
    ordered_json d;
    d["initial_energy"] = diag.initial_energy;
    d["final_energy"] = diag.final_energy;
    d["iterations"] = diag.iterations;
    d["restarts"] = diag.restarts_used;
    diag_frames.push_back(d);
  } else if (opts.mode == "single") {
    results.resize(preds.size());
    std::vector<InferenceDiagnostics> diags(preds.size());
    parallel_for(static_cast<int>(preds.size()), [&](int i) {
      std::span<const AttributePrediction> one(&preds[i], 1);
      auto model = build_energy(one, cooc, schema, specs);
      InferenceDiagnostics diag;
      auto labels = minimize_energy(model, argmax_labels(model), inf_opts, &diag);
      results[i] = labeling_to_params(labels, schema, specs);
      diags[i] = diag;
    });
    for (const auto& diag : diags) {
      ordered_json d;
      d["initial_energy"] = diag.initial_energy;
      d["final_energy"] = diag.final_energy;
      d["iterations"] = diag.iterations;
      d["restarts"] = diag.restarts_used;
      diag_frames.push_back(d);
    }
  } else {
    throw std::runtime_error("--mode must be 'single' or 'temporal'");
  }

  write_scenes(opts.output, results, schema);
  ordered_json diag;
  diag["mode"] = opts.mode;
  diag["records"] = diag_frames;
  std::ofstream diag_out(opts.output + ".diag.json");
  diag_out << diag.dump(2) << "\n";

  ManifestWriter manifest("infer", argv);
  manifest.set_seed(opts.cooc_seed);
  ordered_json config;
  config["mode"] = opts.mode;
  config["cooc_seed"] = opts.cooc_seed;
  config["cooc_n"] = opts.cooc_n;
  config["prior"] = prior_to_json(prior);
  manifest.set_config(config);
  manifest.add_input(opts.input);
  manifest.add_output(opts.output);
  manifest.add_output(opts.output + ".diag.json");
  manifest.write(opts.output + ".manifest.json");
  return 0;
}

int cmd_eval(const EvalOptions& opts, const std::vector<std::string>& argv) {
  const auto& schema = default_schema();
  auto preds = read_scenes(opts.pred_path, schema);
  auto gts = read_scenes(opts.gt_path, schema);
  if (preds.size() != gts.size() || preds.empty()) {
    throw std::runtime_error("prediction and ground-truth files must align");
  }
  AnnotationMask mask = load_mask(opts.mask_path, schema);

  MetricsReport report;
  report.samples = preds.size();
  report.has_accuracy = true;
  report.accu_binary = accu_binary(preds, gts, &mask);
  report.accu_multiclass = accu_multiclass(preds, gts, &mask);
  report.mse = mse_regression(preds, gts, schema, &mask);

  report.has_iou = true;
  RenderConfig cfg;
  std::array<double, 4> inter{};
  std::array<double, 4> uni{};
  std::vector<std::array<double, 8>> partial(preds.size());
  std::vector<char> skipped(preds.size(), 0);
  parallel_for(static_cast<int>(preds.size()), [&](int i) {
    partial[i] = {};
    try {
      SemanticTopView pv = render(preds[i], cfg, schema);
      SceneParams gt_side = preds[i];
      for (int b = 0; b < kNumBinary; ++b) {
        if (mask.binary[b]) gt_side.binary[b] = gts[i].binary[b];
      }
      for (int m = 0; m < kNumMulticlass; ++m) {
        if (mask.multiclass[m]) gt_side.multiclass[m] = gts[i].multiclass[m];
      }
      for (int m = 0; m < kNumContinuous; ++m) {
        if (mask.continuous[m]) gt_side.continuous[m] = gts[i].continuous[m];
      }
      SemanticTopView gv = render(gt_side, cfg, schema);
      for (std::size_t k = 0; k < pv.cells.size(); ++k) {
        int a = pv.cells[k];
        int b = gv.cells[k];
        if (a == b && a != kClassBackground) partial[i][a - 1] += 1.0;
        if (a != kClassBackground) partial[i][4 + a - 1] += 1.0;
        if (b != kClassBackground && a != b) partial[i][4 + b - 1] += 1.0;
      }
    } catch (const FeasibilityError&) {
      skipped[i] = 1;
    }
  });
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (skipped[i]) {
      ++report.iou_skipped_infeasible;
      continue;
    }
    for (int c = 0; c < 4; ++c) {
      inter[c] += partial[i][c];
      uni[c] += partial[i][4 + c];
    }
  }
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < 4; ++c) {
    report.iou_class_present[c] = uni[c] > 0.0;
    report.iou_per_class[c] = uni[c] > 0.0 ? inter[c] / uni[c] : 0.0;
    if (report.iou_class_present[c]) {
      sum += report.iou_per_class[c];
      ++counted;
    }
  }
  report.iou_mean = counted > 0 ? sum / counted : 0.0;

  std::ofstream out(opts.out_path);
  if (!out) {
    throw std::runtime_error("cannot write report '" + opts.out_path + "'");
  }
  out << report_to_json(report) << "\n";
  out.close();
  if (opts.format == "json") {
    std::fputs((report_to_json(report) + "\n").c_str(), stdout);
  } else {
    std::fputs(report_to_text(report).c_str(), stdout);
  }

  ManifestWriter manifest("eval", argv);
  ordered_json config;
  config["mask"] = opts.mask_path;
  manifest.set_config(config);
  manifest.add_input(opts.pred_path);
  manifest.add_input(opts.gt_path);
  manifest.add_output(opts.out_path);
  manifest.write(opts.out_path + ".manifest.json");
  return 0;
}

int cmd_consistency(const ConsistencyOptions& opts,
                    const std::vector<std::string>& argv) {
  const auto& schema = default_schema();
  auto specs = default_bin_specs(schema);
  if (opts.sequence_files.empty()) {
    throw std::runtime_error("consistency needs at least one sequence file");
  }

  MetricsReport report;
  report.has_consistency = true;
  report.sequences = opts.sequence_files.size();
  double conflict_sum = 0.0;
  std::size_t frame_count = 0;
  double change_sum = 0.0;
  for (const auto& path : opts.sequence_files) {
    auto scenes = read_scenes(path, schema);
    if (scenes.size() < 2) {
      throw std::runtime_error("sequence '" + path + "' needs at least two frames");
    }
    std::vector<Labeling> labelings;
    labelings.reserve(scenes.size());
    for (const auto& s : scenes) {
      conflict_sum += static_cast<double>(semantic_conflicts(s, schema));
      labelings.push_back(params_to_labeling(s, schema, specs));
    }
    frame_count += scenes.size();
    change_sum += temporal_changes(labelings);
  }
  report.samples = frame_count;
  report.semantic_conflicts = conflict_sum / static_cast<double>(frame_count);
  report.temporal_changes = change_sum / static_cast<double>(opts.sequence_files.size());

  std::ofstream out(opts.out_path);
  if (!out) {
    throw std::runtime_error("cannot write report '" + opts.out_path + "'");
  }
  out << report_to_json(report) << "\n";
  out.close();
  if (opts.format == "json") {
    std::fputs((report_to_json(report) + "\n").c_str(), stdout);
  } else {
    std::fputs(report_to_text(report).c_str(), stdout);
  }

  ManifestWriter manifest("consistency", argv);
  for (const auto& f : opts.sequence_files) manifest.add_input(f);
  manifest.add_output(opts.out_path);
  manifest.write(opts.out_path + ".manifest.json");
  return 0;
}

int cmd_replay(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw std::runtime_error("cannot open manifest '" + manifest_path + "'");
  }
  nlohmann::json j;
  in >> j;
  if (!j.contains("argv") || !j["argv"].is_array()) {
    throw std::runtime_error("manifest has no argv to replay");
  }
  std::vector<std::string> args;
  for (const auto& a : j["argv"]) args.push_back(a.get<std::string>());
  return dispatch(args);
}

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"parametric top-view road-layout toolkit"};
  app.require_subcommand(1);

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "sample scenes from the prior");
  generate->add_option("--n", gen.n, "number of scenes")
      ->required()
      ->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen.seed, "base seed")->required();
  generate->add_option("--out", gen.out_dir, "output directory")->required();
  generate->add_option("--config", gen.config_path, "prior overrides (INI)");
  generate->add_flag("--render", gen.render, "write a PNG render per scene");

  CorruptOptions cor;
  auto* corrupt = app.add_subcommand("corrupt", "emit noisy predictions for scenes");
  corrupt->add_option("--in", cor.input, "scene JSONL")->required();
  corrupt->add_option("--out", cor.output, "prediction JSONL")->required();
  corrupt->add_option("--seed", cor.seed, "noise seed")->required();
  corrupt->add_option("--eps", cor.flip_rate, "discrete flip rate");
  corrupt->add_option("--temperature", cor.temperature, "multi-class temperature");
  corrupt->add_option("--sigma", cor.jitter_fraction, "jitter fraction of range");
  corrupt->add_option("--frames", cor.frames, "frames per scene (sequences)");

  InferOptions inf;
  auto* infer = app.add_subcommand("infer", "CRF MAP inference over predictions");
  infer->add_option("--in", inf.input, "prediction JSONL")->required();
  infer->add_option("--out", inf.output, "labeled scene JSONL")->required();
  infer->add_option("--mode", inf.mode, "single | temporal")
      ->check(CLI::IsMember({"single", "temporal"}));
  infer->add_option("--config", inf.config_path, "prior overrides for co-occurrence");
  infer->add_option("--cooc-seed", inf.cooc_seed, "co-occurrence batch seed");
  infer->add_option("--cooc-n", inf.cooc_n, "co-occurrence batch size");

  EvalOptions ev;
  auto* eval = app.add_subcommand("eval", "accuracy / MSE / rendered IoU");
  eval->add_option("--pred", ev.pred_path, "predicted scene JSONL")->required();
  eval->add_option("--gt", ev.gt_path, "ground-truth scene JSONL")->required();
  eval->add_option("--mask", ev.mask_path, "annotation mask JSON");
  eval->add_option("--out", ev.out_path, "report JSON path")->required();
  eval->add_option("--format", ev.format, "stdout format: text | json")
      ->check(CLI::IsMember({"text", "json"}));

  ConsistencyOptions con;
  auto* consistency =
      app.add_subcommand("consistency", "semantic and temporal consistency");
  consistency->add_option("--seq", con.sequence_files, "sequence JSONL files")
      ->required();
  consistency->add_option("--out", con.out_path, "report JSON path")->required();
  consistency->add_option("--format", con.format, "stdout format: text | json")
      ->check(CLI::IsMember({"text", "json"}));

  std::string manifest_path;
  auto* replay = app.add_subcommand("replay", "re-run a command from its manifest");
  replay->add_option("manifest", manifest_path, "manifest.json path")->required();

  try {
    // CLI11 parses argv-style reversed vectors.
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*generate) return cmd_generate(gen, args);
  if (*corrupt) return cmd_corrupt(cor, args);
  if (*infer) return cmd_infer(inf, args);
  if (*eval) return cmd_eval(ev, args);
  if (*consistency) return cmd_consistency(con, args);
  if (*replay) return cmd_replay(manifest_path);
  return 1;
}

}  // namespace roadlayout::cli
