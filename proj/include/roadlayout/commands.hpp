#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "roadlayout/prediction.hpp"
#include "roadlayout/sampler.hpp"

namespace roadlayout::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// JSONL helpers shared by the commands and the test suites. Errors carry
// 1-based line numbers.
std::vector<SceneParams> read_scenes(const std::string& path,
                                     const AttributeSchema& schema);
void write_scenes(const std::string& path, std::span<const SceneParams> scenes,
                  const AttributeSchema& schema);
std::vector<AttributePrediction> read_predictions(
    const std::string& path, const AttributeSchema& schema,
    const std::array<BinSpec, kNumContinuous>& specs);
void write_predictions(const std::string& path,
                       std::span<const AttributePrediction> preds,
                       const AttributeSchema& schema);

// Ordered parallel map honoring the ROADLAYOUT_THREADS cap.
int thread_budget();

struct GenerateOptions {
  int n = 0;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string config_path;  // optional prior overrides
  bool render = false;
};

struct CorruptOptions {
  std::string input;
  std::string output;
  std::uint64_t seed = 0;
  double flip_rate = 0.15;
  double temperature = 0.6;
  double jitter_fraction = 0.1;
  int frames = 1;  // frames per input scene; >1 emits sequences
};

struct InferOptions {
  std::string input;
  std::string output;
  std::string mode = "single";  // or "temporal": the file is one sequence
  std::string config_path;      // prior used for co-occurrence estimation
  std::uint64_t cooc_seed = 424242;
  int cooc_n = 10000;
};

struct EvalOptions {
  std::string pred_path;
  std::string gt_path;
  std::string mask_path;  // optional JSON {attribute: bool}
  std::string out_path;
  std::string format = "text";  // stdout format: text | json
};

struct ConsistencyOptions {
  std::vector<std::string> sequence_files;
  std::string out_path;
  std::string format = "text";
};

int cmd_generate(const GenerateOptions& opts, const std::vector<std::string>& argv);
int cmd_corrupt(const CorruptOptions& opts, const std::vector<std::string>& argv);
int cmd_infer(const InferOptions& opts, const std::vector<std::string>& argv);
int cmd_eval(const EvalOptions& opts, const std::vector<std::string>& argv);
int cmd_consistency(const ConsistencyOptions& opts,
                    const std::vector<std::string>& argv);
// Re-runs the argv recorded in a manifest; outputs are byte-identical because
// every command is seeded.
int cmd_replay(const std::string& manifest_path);

// Full argument-vector entry point used by main() and replay.
int dispatch(const std::vector<std::string>& args);

}  // namespace roadlayout::cli
