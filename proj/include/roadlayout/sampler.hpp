#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "roadlayout/schema.hpp"

namespace roadlayout {

// Hand-specified prior over the attribute DAG. Bernoulli probabilities are
// conditional where noted; lane-count weights are categorical over {0..6}
// (index 0 of the two-way vector is ignored at draw time because a two-way
// road keeps at least one opposing lane).
struct PriorConfig {
  double side_road_left = 0.3;
  double side_road_right = 0.3;
  double main_road_ends = 0.25;  // given at least one side road
  double crosswalk_near_at_intersection = 0.4;
  double crosswalk_near_plain = 0.05;
  double crosswalk_far = 0.3;  // given an intersection and a continuing main road
  double crosswalk_left = 0.5;   // given side_road_left
  double crosswalk_right = 0.5;  // given side_road_right
  double oneway_main = 0.15;
  double delimiter_median = 0.2;  // given two-way traffic
  double sidewalk_left = 0.5;
  double sidewalk_right = 0.5;
  double delimiter_with_sidewalk = 0.6;
  double delimiter_without_sidewalk = 0.1;
  double main_road_curved = 0.2;

  std::array<double, kLaneCountClasses> lanes_left_twoway = {0.0,  0.45, 0.3, 0.15,
                                                             0.05, 0.03, 0.02};
  std::array<double, kLaneCountClasses> lanes_left_oneway = {0.5,  0.25, 0.12, 0.06,
                                                             0.04, 0.02, 0.01};
  std::array<double, kLaneCountClasses> lanes_right = {0.5,  0.25, 0.12, 0.06,
                                                       0.04, 0.02, 0.01};

  double lane_width_mean = 3.5;
  double lane_width_std = 0.5;
  // Curvature is uniform over the schema range minus this symmetric dead zone,
  // so curved scenes stay visibly curved.
  double curvature_dead_zone = 0.002;
};

// Throws if probabilities, weights, or distribution parameters are invalid.
void validate_prior(const PriorConfig& prior, const AttributeSchema& schema);

// Applies dotted-key overrides ("prior.side_road_left = 0.25") from an
// INI-style stream; '#' starts a comment. Lane-count vectors take seven
// comma-separated weights.
PriorConfig apply_prior_overrides(std::istream& in, PriorConfig base = PriorConfig{});
PriorConfig load_prior_config(const std::string& path, PriorConfig base = PriorConfig{});

struct SampleBatch {
  std::vector<SceneParams> scenes;
  std::vector<std::uint64_t> sub_seeds;
};

// One ancestral-sampling pass over the DAG (topology binaries, lane counts,
// existence binaries, continuous values). Always feasible; deterministic in
// (prior, seed).
SceneParams sample_scene(const PriorConfig& prior, std::uint64_t seed,
                         const AttributeSchema& schema = default_schema());

// Element i uses sub-seed split_seed(base_seed, i), so any prefix of a larger
// batch reproduces a smaller one.
SampleBatch sample_batch(const PriorConfig& prior, std::uint64_t base_seed, int n,
                         const AttributeSchema& schema = default_schema());

// Laplace-smoothed (alpha = 1) pairwise joint tables over the 14 binary
// attributes. Entries are strictly positive and each table sums to 1.
class CooccurrenceTables {
 public:
  static CooccurrenceTables estimate(std::span<const SceneParams> scenes);
  // Neutral tables: every joint cell is 0.25.
  static CooccurrenceTables uniform();

  double joint(int i, int j, int value_i, int value_j) const {
    return p_[((i * kNumBinary) + j) * 4 + value_i * 2 + value_j];
  }
  void set_joint(int i, int j, int value_i, int value_j, double p) {
    p_[((i * kNumBinary) + j) * 4 + value_i * 2 + value_j] = p;
  }
  int sample_count() const { return samples_; }

 private:
  std::array<double, kNumBinary * kNumBinary * 4> p_{};
  int samples_ = 0;
};

}  // namespace roadlayout
