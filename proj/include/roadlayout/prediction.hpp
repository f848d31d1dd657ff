#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>

#include "roadlayout/bins.hpp"
#include "roadlayout/schema.hpp"

namespace roadlayout {

// Probability floor applied before any log, so degenerate predictions stay
// finite while exact ones cost exactly zero.
inline constexpr double kProbabilityFloor = 1e-9;

inline double neg_log_prob(double p) {
  return -std::log(std::max(p, kProbabilityFloor));
}

// Per-attribute probabilistic outputs: P(true) per binary, a 7-way categorical
// per lane count, and a bin distribution per continuous attribute.
struct AttributePrediction {
  std::array<double, kNumBinary> binary{};
  std::array<std::array<double, kLaneCountClasses>, kNumMulticlass> multiclass{};
  std::array<BinDistribution, kNumContinuous> continuous{};
};

// Checks shapes, value ranges, and normalization (1e-6 tolerance). Throws.
void validate_prediction(const AttributePrediction& pred,
                         const std::array<BinSpec, kNumContinuous>& specs);

// JSONL prediction record; arrays are ordered by schema.
std::string serialize_prediction(const AttributePrediction& pred,
                                 const AttributeSchema& schema);
AttributePrediction deserialize_prediction(
    std::string_view line, const AttributeSchema& schema,
    const std::array<BinSpec, kNumContinuous>& specs);

// Hard decode: argmax for binary/multi-class, expectation for continuous.
// The result may be infeasible; that is what the CRF is for.
SceneParams decode_prediction(const AttributePrediction& pred,
                              const AttributeSchema& schema,
                              const std::array<BinSpec, kNumContinuous>& specs);

}  // namespace roadlayout
