#include "roadlayout/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "roadlayout/rng.hpp"

namespace roadlayout {

void validate_noise_config(const NoiseConfig& cfg) {
  if (!(cfg.flip_rate >= 0.0 && cfg.flip_rate <= 1.0)) {
    throw std::runtime_error("flip rate must lie in [0,1]");
  }
  if (!(cfg.temperature > 0.0)) {
    throw std::runtime_error("temperature must be positive");
  }
  if (!(cfg.jitter_fraction >= 0.0)) {
    throw std::runtime_error("jitter fraction must be nonnegative");
  }
}

AttributePrediction corrupt(const SceneParams& gt, const NoiseConfig& cfg,
                            const AttributeSchema& schema,
                            const std::array<BinSpec, kNumContinuous>& specs) {
  (void)schema;
  validate_noise_config(cfg);
  SplitMix64 rng(cfg.seed);
  AttributePrediction pred;

  for (int i = 0; i < kNumBinary; ++i) {
    bool favored = gt.binary[i];
    if (rng.bernoulli(cfg.flip_rate)) favored = !favored;
    pred.binary[i] = favored ? 1.0 - cfg.flip_rate : cfg.flip_rate;
  }

  double hot = std::exp(1.0 / cfg.temperature);
  for (int m = 0; m < kNumMulticlass; ++m) {
    int favored = gt.multiclass[m];
    bool flip = rng.bernoulli(cfg.flip_rate);
    if (flip) {
      int pick = static_cast<int>(rng.uniform() * (kLaneCountClasses - 1));
      pick = std::min(pick, kLaneCountClasses - 2);
      favored = pick >= favored ? pick + 1 : pick;
    }
    double denom = hot + (kLaneCountClasses - 1);
    for (int k = 0; k < kLaneCountClasses; ++k) {
      pred.multiclass[m][k] = (k == favored ? hot : 1.0) / denom;
    }
  }

  for (int m = 0; m < kNumContinuous; ++m) {
    const auto& spec = specs[m];
    if (gt.continuous[m]) {
      double range = spec.max_value - spec.min_value;
      double jitter = cfg.jitter_fraction * range * inverse_normal_cdf(rng.uniform());
      pred.continuous[m] = discretize(*gt.continuous[m] + jitter, spec);
    } else {
      pred.continuous[m].weights.assign(spec.distribution_size(), 0.0);
      pred.continuous[m].weights[0] = 1.0 - cfg.flip_rate;
      for (int k = 1; k < spec.distribution_size(); ++k) {
        pred.continuous[m].weights[k] = cfg.flip_rate / spec.bins;
      }
    }
  }
  return pred;
}

std::vector<AttributePrediction> corrupt_sequence(
    const SceneParams& gt, int frames, const NoiseConfig& cfg,
    const AttributeSchema& schema, const std::array<BinSpec, kNumContinuous>& specs) {
  if (frames < 1) {
    throw std::runtime_error("corrupt_sequence needs at least one frame");
  }
  std::vector<AttributePrediction> out;
  out.reserve(frames);
  for (int t = 0; t < frames; ++t) {
    NoiseConfig frame_cfg = cfg;
    // Frame 0 keeps the seed itself so a one-frame sequence equals corrupt().
    if (t > 0) frame_cfg.seed = split_seed(cfg.seed, static_cast<std::uint64_t>(t));
    out.push_back(corrupt(gt, frame_cfg, schema, specs));
  }
  return out;
}

}  // namespace roadlayout
