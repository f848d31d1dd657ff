#include "roadlayout/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace roadlayout {

LossTerms supervised_loss(const AttributePrediction& pred, const SceneParams& gt,
                          const AnnotationMask& mask, const AttributeSchema& schema,
                          const std::array<BinSpec, kNumContinuous>& specs) {
  LossTerms terms;
  for (int i = 0; i < kNumBinary; ++i) {
    if (!mask.binary[i]) continue;
    double p = pred.binary[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::runtime_error("binary probability for " + schema.binary_names[i] +
                               " outside [0,1]");
    }
    terms.bce += neg_log_prob(gt.binary[i] ? p : 1.0 - p);
  }
  for (int m = 0; m < kNumMulticlass; ++m) {
    if (!mask.multiclass[m]) continue;
    double p = pred.multiclass[m][gt.multiclass[m]];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::runtime_error("multiclass probability for " +
                               schema.multiclass_names[m] + " outside [0,1]");
    }
    terms.ce += neg_log_prob(p);
  }
  for (int m = 0; m < kNumContinuous; ++m) {
    if (!mask.continuous[m]) continue;
    BinDistribution target = discretize(gt.continuous[m], specs[m]);
    const auto& w = pred.continuous[m].weights;
    if (w.size() != target.weights.size()) {
      throw std::runtime_error("prediction for " + schema.continuous[m].name +
                               " has wrong bin arity");
    }
    for (std::size_t k = 0; k < w.size(); ++k) {
      if (!(w[k] >= 0.0 && w[k] <= 1.0)) {
        throw std::runtime_error("bin weight for " + schema.continuous[m].name +
                                 " outside [0,1]");
      }
      terms.l1 += std::abs(w[k] - target.weights[k]);
    }
  }
  return terms;
}

LossTerms batch_supervised_loss(std::span<const AttributePrediction> preds,
                                std::span<const SceneParams> gts,
                                const AnnotationMask& mask,
                                const AttributeSchema& schema,
                                const std::array<BinSpec, kNumContinuous>& specs) {
  if (preds.size() != gts.size() || preds.empty()) {
    throw std::runtime_error("loss batch needs equal, nonempty prediction/target lists");
  }
  LossTerms sum;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    LossTerms t = supervised_loss(preds[i], gts[i], mask, schema, specs);
    sum.bce += t.bce;
    sum.ce += t.ce;
    sum.l1 += t.l1;
  }
  double n = static_cast<double>(preds.size());
  return {sum.bce / n, sum.ce / n, sum.l1 / n};
}

LossBreakdown combine_losses(const LossTerms& real, const LossTerms& sim,
                             double lambda_real, double lambda_sim) {
  LossBreakdown out;
  out.real = real;
  out.sim = sim;
  out.lambda_real = lambda_real;
  out.lambda_sim = lambda_sim;
  out.bce_total = lambda_real * real.bce + lambda_sim * sim.bce;
  out.ce_total = lambda_real * real.ce + lambda_sim * sim.ce;
  out.l1_total = lambda_real * real.l1 + lambda_sim * sim.l1;
  out.combined = lambda_real * real.total() + lambda_sim * sim.total();
  return out;
}

}  // namespace roadlayout
