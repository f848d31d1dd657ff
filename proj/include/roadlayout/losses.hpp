#pragma once

#include <array>
#include <span>

#include "roadlayout/prediction.hpp"

namespace roadlayout {

// Which attributes carry annotation; unannotated ones contribute no loss.
struct AnnotationMask {
  std::array<bool, kNumBinary> binary{};
  std::array<bool, kNumMulticlass> multiclass{};
  std::array<bool, kNumContinuous> continuous{};

  static AnnotationMask all_annotated() {
    AnnotationMask m;
    m.binary.fill(true);
    m.multiclass.fill(true);
    m.continuous.fill(true);
    return m;
  }
};

struct LossTerms {
  double bce = 0.0;  // binary cross-entropy, summed over annotated binaries
  double ce = 0.0;   // cross-entropy over annotated multi-class attributes
  double l1 = 0.0;   // elementwise l1 between bin distributions
  double total() const { return bce + ce + l1; }
};

struct LossBreakdown {
  LossTerms real;
  LossTerms sim;
  double lambda_real = 1.0;
  double lambda_sim = 1.0;
  double bce_total = 0.0;
  double ce_total = 0.0;
  double l1_total = 0.0;
  double combined = 0.0;  // lambda_real * real.total() + lambda_sim * sim.total()
};

// One sample: sums over annotated attributes. Continuous targets are the
// Gaussian-smoothed discretizations of the ground-truth values.
LossTerms supervised_loss(const AttributePrediction& pred, const SceneParams& gt,
                          const AnnotationMask& mask, const AttributeSchema& schema,
                          const std::array<BinSpec, kNumContinuous>& specs);

// Mean of the per-sample terms.
LossTerms batch_supervised_loss(std::span<const AttributePrediction> preds,
                                std::span<const SceneParams> gts,
                                const AnnotationMask& mask,
                                const AttributeSchema& schema,
                                const std::array<BinSpec, kNumContinuous>& specs);

LossBreakdown combine_losses(const LossTerms& real, const LossTerms& sim,
                             double lambda_real, double lambda_sim);

}  // namespace roadlayout
