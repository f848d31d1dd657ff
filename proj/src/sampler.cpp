#include "roadlayout/sampler.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "roadlayout/rng.hpp"

namespace roadlayout {
namespace {

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::runtime_error(std::string("prior probability out of [0,1]: ") + name);
  }
}

void check_weights(const std::array<double, kLaneCountClasses>& w, const char* name) {
  double total = 0.0;
  for (double x : w) {
    if (!(x >= 0.0)) {
      throw std::runtime_error(std::string("negative categorical weight: ") + name);
    }
    total += x;
  }
  if (!(total > 0.0)) {
    throw std::runtime_error(std::string("categorical weights sum to zero: ") + name);
  }
}

double twoway_left_mass(const PriorConfig& prior) {
  double total = 0.0;
  for (int i = 1; i < kLaneCountClasses; ++i) total += prior.lanes_left_twoway[i];
  return total;
}

}  // namespace

void validate_prior(const PriorConfig& prior, const AttributeSchema& schema) {
  check_probability(prior.side_road_left, "side_road_left");
  check_probability(prior.side_road_right, "side_road_right");
  check_probability(prior.main_road_ends, "main_road_ends");
  check_probability(prior.crosswalk_near_at_intersection,
                    "crosswalk_near_at_intersection");
  check_probability(prior.crosswalk_near_plain, "crosswalk_near_plain");
  check_probability(prior.crosswalk_far, "crosswalk_far");
  check_probability(prior.crosswalk_left, "crosswalk_left");
  check_probability(prior.crosswalk_right, "crosswalk_right");
  check_probability(prior.oneway_main, "oneway_main");
  check_probability(prior.delimiter_median, "delimiter_median");
  check_probability(prior.sidewalk_left, "sidewalk_left");
  check_probability(prior.sidewalk_right, "sidewalk_right");
  check_probability(prior.delimiter_with_sidewalk, "delimiter_with_sidewalk");
  check_probability(prior.delimiter_without_sidewalk, "delimiter_without_sidewalk");
  check_probability(prior.main_road_curved, "main_road_curved");
  check_weights(prior.lanes_left_twoway, "lanes_left_twoway");
  check_weights(prior.lanes_left_oneway, "lanes_left_oneway");
  check_weights(prior.lanes_right, "lanes_right");
  if (!(prior.lane_width_std > 0.0)) {
    throw std::runtime_error("lane_width_std must be positive");
  }
  const auto& ego = schema.continuous[kEgoLaneWidth];
  if (prior.lane_width_mean < ego.min_value || prior.lane_width_mean > ego.max_value) {
    throw std::runtime_error("lane_width_mean outside the schema lane-width range");
  }
  const auto& curv = schema.continuous[kCurvature];
  if (!(prior.curvature_dead_zone >= 0.0 &&
        prior.curvature_dead_zone < curv.max_value)) {
    throw std::runtime_error("curvature_dead_zone outside the schema curvature range");
  }
}

SceneParams sample_scene(const PriorConfig& prior, std::uint64_t seed,
                         const AttributeSchema& schema) {
  SplitMix64 rng(seed);
  SceneParams p;

  // Topology binaries. Every binary consumes exactly one uniform draw, with
  // gated attributes drawn at effective probability zero.
  bool srl = rng.bernoulli(prior.side_road_left);
  bool srr = rng.bernoulli(prior.side_road_right);
  bool any_side = srl || srr;
  bool ends = rng.bernoulli(any_side ? prior.main_road_ends : 0.0);
  // A two-way road needs an opposing lane; if the two-way lane prior has no
  // mass on {1..6}, one-way is the only feasible choice.
  double oneway_p = twoway_left_mass(prior) > 0.0 ? prior.oneway_main : 1.0;
  bool oneway = rng.bernoulli(oneway_p);
  bool curved = rng.bernoulli(prior.main_road_curved);

  // Lane counts.
  int lanes_left;
  if (oneway) {
    lanes_left = rng.categorical(prior.lanes_left_oneway.data(), kLaneCountClasses);
  } else {
    auto w = prior.lanes_left_twoway;
    w[0] = 0.0;
    lanes_left = rng.categorical(w.data(), kLaneCountClasses);
  }
  int lanes_right = rng.categorical(prior.lanes_right.data(), kLaneCountClasses);

  // Existence binaries.
  bool cw_near = rng.bernoulli(any_side ? prior.crosswalk_near_at_intersection
                                        : prior.crosswalk_near_plain);
  bool cw_far = rng.bernoulli(any_side && !ends ? prior.crosswalk_far : 0.0);
  bool cw_left = rng.bernoulli(srl ? prior.crosswalk_left : 0.0);
  bool cw_right = rng.bernoulli(srr ? prior.crosswalk_right : 0.0);
  bool median =
      rng.bernoulli(!oneway && lanes_left >= 1 ? prior.delimiter_median : 0.0);
  bool sw_left = rng.bernoulli(prior.sidewalk_left);
  bool sw_right = rng.bernoulli(prior.sidewalk_right);
  bool dl_left = rng.bernoulli(sw_left ? prior.delimiter_with_sidewalk
                                       : prior.delimiter_without_sidewalk);
  bool dl_right = rng.bernoulli(sw_right ? prior.delimiter_with_sidewalk
                                         : prior.delimiter_without_sidewalk);

  p.binary[kSideRoadLeft] = srl;
  p.binary[kSideRoadRight] = srr;
  p.binary[kMainRoadEnds] = ends;
  p.binary[kCrosswalkNear] = cw_near;
  p.binary[kCrosswalkFar] = cw_far;
  p.binary[kCrosswalkLeft] = cw_left;
  p.binary[kCrosswalkRight] = cw_right;
  p.binary[kSidewalkLeft] = sw_left;
  p.binary[kSidewalkRight] = sw_right;
  p.binary[kDelimiterLeft] = dl_left;
  p.binary[kDelimiterRight] = dl_right;
  p.binary[kDelimiterMedian] = median;
  p.binary[kOnewayMain] = oneway;
  p.binary[kMainRoadCurved] = curved;
  p.multiclass[kLanesLeftCount] = lanes_left;
  p.multiclass[kLanesRightCount] = lanes_right;

  // Continuous values, schema order, drawn only when active.
  auto lane_width = [&](int index) {
    const auto& info = schema.continuous[index];
    return truncated_normal(rng, prior.lane_width_mean, prior.lane_width_std,
                            info.min_value, info.max_value);
  };
  auto uniform_in = [&](int index) {
    const auto& info = schema.continuous[index];
    return rng.uniform(info.min_value, info.max_value);
  };

  p.continuous[kEgoLaneWidth] = lane_width(kEgoLaneWidth);
  for (int i = 0; i < lanes_left; ++i) {
    p.continuous[kLaneWidthLeft1 + i] = lane_width(kLaneWidthLeft1 + i);
  }
  for (int i = 0; i < lanes_right; ++i) {
    p.continuous[kLaneWidthRight1 + i] = lane_width(kLaneWidthRight1 + i);
  }
  if (srl) {
    p.continuous[kDistSideRoadLeft] = uniform_in(kDistSideRoadLeft);
    p.continuous[kSideRoadWidthLeft] = uniform_in(kSideRoadWidthLeft);
  }
  if (srr) {
    p.continuous[kDistSideRoadRight] = uniform_in(kDistSideRoadRight);
    p.continuous[kSideRoadWidthRight] = uniform_in(kSideRoadWidthRight);
  }
  if (dl_left) p.continuous[kDelimiterWidthLeft] = uniform_in(kDelimiterWidthLeft);
  if (dl_right) p.continuous[kDelimiterWidthRight] = uniform_in(kDelimiterWidthRight);
  if (sw_left) p.continuous[kSidewalkWidthLeft] = uniform_in(kSidewalkWidthLeft);
  if (sw_right) p.continuous[kSidewalkWidthRight] = uniform_in(kSidewalkWidthRight);
  if (curved) {
    // Uniform over the range minus the dead zone: draw on the left segment
    // plus the shifted right segment.
    const auto& info = schema.continuous[kCurvature];
    double dead = prior.curvature_dead_zone;
    double v = info.min_value +
               rng.uniform() * (info.max_value - info.min_value - 2.0 * dead);
    if (v > -dead) v += 2.0 * dead;
    p.continuous[kCurvature] = v;
  }
  return p;
}

SampleBatch sample_batch(const PriorConfig& prior, std::uint64_t base_seed, int n,
                         const AttributeSchema& schema) {
  if (n < 1) {
    throw std::runtime_error("sample_batch requires n >= 1");
  }
  SampleBatch batch;
  batch.scenes.reserve(n);
  batch.sub_seeds.reserve(n);
  for (int i = 0; i < n; ++i) {
    std::uint64_t sub = split_seed(base_seed, static_cast<std::uint64_t>(i));
    batch.sub_seeds.push_back(sub);
    batch.scenes.push_back(sample_scene(prior, sub, schema));
  }
  return batch;
}

CooccurrenceTables CooccurrenceTables::uniform() {
  CooccurrenceTables tables;
  tables.p_.fill(0.25);
  tables.samples_ = 0;
  return tables;
}

CooccurrenceTables CooccurrenceTables::estimate(std::span<const SceneParams> scenes) {
  if (scenes.empty()) {
    throw std::runtime_error("co-occurrence estimation requires a nonempty batch");
  }
  CooccurrenceTables tables;
  tables.samples_ = static_cast<int>(scenes.size());
  double n = static_cast<double>(scenes.size());
  for (int i = 0; i < kNumBinary; ++i) {
    for (int j = 0; j < kNumBinary; ++j) {
      if (i == j) {
        // Diagonal holds the smoothed marginal on the matching cells.
        double count_true = 0.0;
        for (const auto& s : scenes) count_true += s.binary[i] ? 1.0 : 0.0;
        tables.p_[((i * kNumBinary) + i) * 4 + 0] = (n - count_true + 1.0) / (n + 2.0);
        tables.p_[((i * kNumBinary) + i) * 4 + 3] = (count_true + 1.0) / (n + 2.0);
        continue;
      }
      double counts[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
      for (const auto& s : scenes) {
        counts[s.binary[i] ? 1 : 0][s.binary[j] ? 1 : 0] += 1.0;
      }
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          tables.p_[((i * kNumBinary) + j) * 4 + a * 2 + b] =
              (counts[a][b] + 1.0) / (n + 4.0);
        }
      }
    }
  }
  return tables;
}

namespace {

std::array<double, kLaneCountClasses> parse_weights(const std::string& value,
                                                    const std::string& key) {
  std::array<double, kLaneCountClasses> w{};
  std::stringstream ss(value);
  std::string item;
  int count = 0;
  while (std::getline(ss, item, ',')) {
    if (count >= kLaneCountClasses) {
      throw std::runtime_error("too many weights for " + key);
    }
    w[count++] = std::stod(item);
  }
  if (count != kLaneCountClasses) {
    throw std::runtime_error(key + " needs exactly 7 comma-separated weights");
  }
  return w;
}

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  auto end = s.find_last_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  return s.substr(begin, end - begin + 1);
}

}  // namespace

PriorConfig apply_prior_overrides(std::istream& in, PriorConfig base) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("prior config line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto set = [&](const char* name, double& field) {
      if (key == std::string("prior.") + name) {
        field = std::stod(value);
        return true;
      }
      return false;
    };
    bool handled =
        set("side_road_left", base.side_road_left) ||
        set("side_road_right", base.side_road_right) ||
        set("main_road_ends", base.main_road_ends) ||
        set("crosswalk_near_at_intersection", base.crosswalk_near_at_intersection) ||
        set("crosswalk_near_plain", base.crosswalk_near_plain) ||
        set("crosswalk_far", base.crosswalk_far) ||
        set("crosswalk_left", base.crosswalk_left) ||
        set("crosswalk_right", base.crosswalk_right) ||
        set("oneway_main", base.oneway_main) ||
        set("delimiter_median", base.delimiter_median) ||
        set("sidewalk_left", base.sidewalk_left) ||
        set("sidewalk_right", base.sidewalk_right) ||
        set("delimiter_with_sidewalk", base.delimiter_with_sidewalk) ||
        set("delimiter_without_sidewalk", base.delimiter_without_sidewalk) ||
        set("main_road_curved", base.main_road_curved) ||
        set("lane_width_mean", base.lane_width_mean) ||
        set("lane_width_std", base.lane_width_std) ||
        set("curvature_dead_zone", base.curvature_dead_zone);
    if (!handled) {
      if (key == "prior.lanes_left_twoway") {
        base.lanes_left_twoway = parse_weights(value, key);
      } else if (key == "prior.lanes_left_oneway") {
        base.lanes_left_oneway = parse_weights(value, key);
      } else if (key == "prior.lanes_right") {
        base.lanes_right = parse_weights(value, key);
      } else {
        throw std::runtime_error("unknown prior config key '" + key + "'");
      }
    }
  }
  return base;
}

PriorConfig load_prior_config(const std::string& path, PriorConfig base) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open prior config '" + path + "'");
  }
  return apply_prior_overrides(in, base);
}

}  // namespace roadlayout
