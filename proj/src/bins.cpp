#include "roadlayout/bins.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace roadlayout {

int BinSpec::label_of_value(double value) const {
  double clamped = std::clamp(value, min_value, max_value);
  int bin = static_cast<int>((clamped - min_value) / bin_width());
  bin = std::clamp(bin, 0, bins - 1);
  return has_inactive ? bin + 1 : bin;
}

BinSpec bin_spec_for(const AttributeSchema& schema, int cont_index, int bins) {
  const auto& info = schema.continuous[cont_index];
  BinSpec spec;
  spec.bins = bins;
  spec.min_value = info.min_value;
  spec.max_value = info.max_value;
  spec.sigma = spec.bin_width();
  spec.has_inactive = info.activatable();
  return spec;
}

std::array<BinSpec, kNumContinuous> default_bin_specs(const AttributeSchema& schema) {
  std::array<BinSpec, kNumContinuous> specs;
  for (int m = 0; m < kNumContinuous; ++m) {
    specs[m] = bin_spec_for(schema, m);
  }
  return specs;
}

BinDistribution discretize(std::optional<double> value, const BinSpec& spec) {
  if (spec.bins < 2) {
    throw std::runtime_error("bin spec requires at least 2 bins");
  }
  if (!(spec.sigma > 0.0)) {
    throw std::runtime_error("bin spec requires positive sigma");
  }

  BinDistribution dist;
  dist.weights.assign(spec.distribution_size(), 0.0);
  if (!value) {
    if (!spec.has_inactive) {
      throw std::runtime_error("inactive value for a bin spec with no inactive bin");
    }
    dist.weights[0] = 1.0;
    return dist;
  }

  double v = *value;
  if (v < spec.min_value || v > spec.max_value) {
    v = std::clamp(v, spec.min_value, spec.max_value);
    dist.clamped_input = true;
  }

  // Shift exponents so the best bin has weight 1; keeps the sum away from
  // underflow even for tiny sigma.
  int offset = spec.has_inactive ? 1 : 0;
  double min_sq = std::numeric_limits<double>::infinity();
  std::vector<double> sq(spec.bins);
  for (int j = 0; j < spec.bins; ++j) {
    double d = (spec.center(j) - v) / spec.sigma;
    sq[j] = 0.5 * d * d;
    min_sq = std::min(min_sq, sq[j]);
  }
  double total = 0.0;
  for (int j = 0; j < spec.bins; ++j) {
    double w = std::exp(min_sq - sq[j]);
    dist.weights[offset + j] = w;
    total += w;
  }
  for (int j = 0; j < spec.bins; ++j) {
    dist.weights[offset + j] /= total;
  }
  return dist;
}

int argmax_weight_index(const BinDistribution& dist) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(dist.weights.size()); ++i) {
    if (dist.weights[i] > dist.weights[best]) best = i;
  }
  return best;
}

std::optional<double> decode_expectation(const BinDistribution& dist,
                                         const BinSpec& spec) {
  if (static_cast<int>(dist.weights.size()) != spec.distribution_size()) {
    throw std::runtime_error("bin distribution size does not match spec");
  }
  if (spec.has_inactive && argmax_weight_index(dist) == 0) {
    return std::nullopt;
  }
  int offset = spec.has_inactive ? 1 : 0;
  double mass = 0.0;
  double mean = 0.0;
  for (int j = 0; j < spec.bins; ++j) {
    double w = dist.weights[offset + j];
    mass += w;
    mean += w * spec.center(j);
  }
  return mean / mass;
}

std::optional<double> decode_argmax(const BinDistribution& dist, const BinSpec& spec) {
  if (static_cast<int>(dist.weights.size()) != spec.distribution_size()) {
    throw std::runtime_error("bin distribution size does not match spec");
  }
  int best = argmax_weight_index(dist);
  if (spec.has_inactive && best == 0) {
    return std::nullopt;
  }
  return spec.center(spec.active_bin_of_label(best));
}

}  // namespace roadlayout
