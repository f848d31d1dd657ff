#pragma once

#include <array>
#include <optional>
#include <vector>

#include "roadlayout/schema.hpp"

namespace roadlayout {

inline constexpr int kDefaultBinCount = 64;

// K uniform bins over [min_value, max_value]. Activatable attributes carry an
// extra "inactive" sentinel bin at distribution index 0; active bin j then
// lives at distribution index j+1.
struct BinSpec {
  int bins = kDefaultBinCount;
  double min_value = 0.0;
  double max_value = 1.0;
  double sigma = 0.0;  // Gaussian std in value units
  bool has_inactive = false;

  double bin_width() const { return (max_value - min_value) / bins; }
  int distribution_size() const { return bins + (has_inactive ? 1 : 0); }
  double center(int active_bin) const {
    return min_value + (active_bin + 0.5) * bin_width();
  }
  // Label-space index of an active value (sentinel offset applied).
  int label_of_value(double value) const;
  // Active-bin index of a label, or -1 for the inactive label.
  int active_bin_of_label(int label) const {
    return has_inactive ? label - 1 : label;
  }
};

// Spec for one schema attribute: K bins over the schema range, sigma of one
// bin width, inactive bin present iff the attribute is activatable.
BinSpec bin_spec_for(const AttributeSchema& schema, int cont_index,
                     int bins = kDefaultBinCount);
std::array<BinSpec, kNumContinuous> default_bin_specs(const AttributeSchema& schema);

struct BinDistribution {
  std::vector<double> weights;
  bool clamped_input = false;  // set when an active value fell outside the range
};

// Gaussian-smoothed soft label: weights proportional to the density of
// N(value, sigma^2) at the bin centers, renormalized. Inactive input yields a
// one-hot on the sentinel bin.
BinDistribution discretize(std::optional<double> value, const BinSpec& spec);

// Index of the largest weight; ties resolve to the lower index.
int argmax_weight_index(const BinDistribution& dist);

// Probability-weighted mean of the active bin centers, or nullopt when the
// sentinel bin wins the argmax.
std::optional<double> decode_expectation(const BinDistribution& dist,
                                         const BinSpec& spec);

// Center of the argmax bin, or nullopt when the sentinel bin wins.
std::optional<double> decode_argmax(const BinDistribution& dist, const BinSpec& spec);

}  // namespace roadlayout
