#pragma once

#include <cstdint>
#include <vector>

#include "roadlayout/prediction.hpp"

namespace roadlayout {

// Calibrated synthetic-noise model standing in for the perception network.
struct NoiseConfig {
  double flip_rate = 0.15;       // epsilon: chance the favored discrete label flips
  double temperature = 0.6;      // softmax temperature of the multi-class outputs
  double jitter_fraction = 0.1;  // continuous jitter std as a fraction of the range
  std::uint64_t seed = 0;
};

void validate_noise_config(const NoiseConfig& cfg);

// Noisy prediction for one ground-truth scene. Binary outputs put mass
// 1 - flip_rate on the favored (possibly flipped) class; multi-class outputs
// are a tempered softmax of the favored one-hot; continuous values are
// jittered then discretized, and inactive attributes keep mass 1 - flip_rate
// on the inactive bin. Deterministic in the seed.
AttributePrediction corrupt(const SceneParams& gt, const NoiseConfig& cfg,
                            const AttributeSchema& schema,
                            const std::array<BinSpec, kNumContinuous>& specs);

// Independent per-frame corruptions of a static scene. Frame 0 uses the seed
// itself (a one-frame sequence equals corrupt); frame t > 0 uses sub-seed
// split_seed(cfg.seed, t).
std::vector<AttributePrediction> corrupt_sequence(
    const SceneParams& gt, int frames, const NoiseConfig& cfg,
    const AttributeSchema& schema, const std::array<BinSpec, kNumContinuous>& specs);

}  // namespace roadlayout
