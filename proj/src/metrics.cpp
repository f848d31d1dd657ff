#include "roadlayout/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace roadlayout {
namespace {

void check_aligned(std::span<const SceneParams> preds, std::span<const SceneParams> gts) {
  if (preds.size() != gts.size() || preds.empty()) {
    throw std::runtime_error("metric inputs must be nonempty and equally sized");
  }
}

}  // namespace

double accu_binary(std::span<const SceneParams> preds, std::span<const SceneParams> gts,
                   const AnnotationMask* mask) {
  check_aligned(preds, gts);
  double total = 0.0;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    int counted = 0;
    int correct = 0;
    for (int i = 0; i < kNumBinary; ++i) {
      if (mask != nullptr && !mask->binary[i]) continue;
      ++counted;
      correct += preds[s].binary[i] == gts[s].binary[i];
    }
    if (counted > 0) total += static_cast<double>(correct) / counted;
  }
  return total / static_cast<double>(preds.size());
}

double accu_multiclass(std::span<const SceneParams> preds,
                       std::span<const SceneParams> gts, const AnnotationMask* mask) {
  check_aligned(preds, gts);
  double total = 0.0;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    int counted = 0;
    int correct = 0;
    for (int m = 0; m < kNumMulticlass; ++m) {
      if (mask != nullptr && !mask->multiclass[m]) continue;
      ++counted;
      correct += preds[s].multiclass[m] == gts[s].multiclass[m];
    }
    if (counted > 0) total += static_cast<double>(correct) / counted;
  }
  return total / static_cast<double>(preds.size());
}

double mse_regression(std::span<const SceneParams> preds,
                      std::span<const SceneParams> gts, const AttributeSchema& schema,
                      const AnnotationMask* mask) {
  check_aligned(preds, gts);
  double total = 0.0;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    double sum = 0.0;
    int active = 0;
    for (int m = 0; m < kNumContinuous; ++m) {
      if (mask != nullptr && !mask->continuous[m]) continue;
      if (!gts[s].continuous[m]) continue;  // GT-inactive attributes are excluded
      ++active;
      if (!preds[s].continuous[m]) {
        sum += 1.0;
        continue;
      }
      const auto& info = schema.continuous[m];
      double range = info.max_value - info.min_value;
      double err = (*preds[s].continuous[m] - *gts[s].continuous[m]) / range;
      sum += err * err;
    }
    if (active > 0) total += sum / active;
  }
  return total / static_cast<double>(preds.size());
}

double ClassIou::mean() const {
  double sum = 0.0;
  int counted = 0;
  for (int c = 0; c < 4; ++c) {
    if (present[c]) {
      sum += iou[c];
      ++counted;
    }
  }
  return counted > 0 ? sum / counted : 0.0;
}

ClassIou rendered_iou(const SceneParams& pred, const SceneParams& gt,
                      const AnnotationMask& annotated, const AttributeSchema& schema,
                      const RenderConfig& cfg) {
  // GT side: annotated attributes from the ground truth, predicted elsewhere.
  SceneParams gt_side = pred;
  for (int i = 0; i < kNumBinary; ++i) {
    if (annotated.binary[i]) gt_side.binary[i] = gt.binary[i];
  }
  for (int m = 0; m < kNumMulticlass; ++m) {
    if (annotated.multiclass[m]) gt_side.multiclass[m] = gt.multiclass[m];
  }
  for (int m = 0; m < kNumContinuous; ++m) {
    if (annotated.continuous[m]) gt_side.continuous[m] = gt.continuous[m];
  }

  SemanticTopView pred_view = render(pred, cfg, schema);
  SemanticTopView gt_view = render(gt_side, cfg, schema);

  std::array<double, 4> intersection{};
  std::array<double, 4> unions{};
  for (std::size_t k = 0; k < pred_view.cells.size(); ++k) {
    int a = pred_view.cells[k];
    int b = gt_view.cells[k];
    if (a == b && a != kClassBackground) intersection[a - 1] += 1.0;
    if (a != kClassBackground) unions[a - 1] += 1.0;
    if (b != kClassBackground && a != b) unions[b - 1] += 1.0;
  }

  ClassIou out;
  for (int c = 0; c < 4; ++c) {
    out.present[c] = unions[c] > 0.0;
    out.iou[c] = out.present[c] ? intersection[c] / unions[c] : 0.0;
  }
  return out;
}

std::size_t semantic_conflicts(const SceneParams& params,
                               const AttributeSchema& schema) {
  return validate(params, schema).size();
}

double mean_semantic_conflicts(std::span<const SceneParams> batch,
                               const AttributeSchema& schema) {
  if (batch.empty()) {
    throw std::runtime_error("conflict metric needs a nonempty batch");
  }
  double total = 0.0;
  for (const auto& p : batch) {
    total += static_cast<double>(semantic_conflicts(p, schema));
  }
  return total / static_cast<double>(batch.size());
}

double temporal_changes(std::span<const Labeling> sequence) {
  if (sequence.size() < 2) {
    throw std::runtime_error("temporal consistency needs at least two frames");
  }
  std::size_t vars = sequence.front().size();
  for (const auto& frame : sequence) {
    if (frame.size() != vars) {
      throw std::runtime_error("sequence frames disagree on variable count");
    }
  }
  double changes = 0.0;
  for (std::size_t v = 0; v < vars; ++v) {
    for (std::size_t t = 0; t + 1 < sequence.size(); ++t) {
      changes += sequence[t][v] != sequence[t + 1][v];
    }
  }
  return changes / static_cast<double>(vars);
}

std::string report_to_json(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["samples"] = report.samples;
  if (report.has_accuracy) {
    j["accu_binary"] = report.accu_binary;
    j["accu_multiclass"] = report.accu_multiclass;
    j["mse"] = report.mse;
  }
  if (report.has_iou) {
    j["iou_mean"] = report.iou_mean;
    nlohmann::ordered_json per;
    static const char* names[4] = {"road", "sidewalk", "lane_boundary", "crosswalk"};
    for (int c = 0; c < 4; ++c) {
      if (report.iou_class_present[c]) {
        per[names[c]] = report.iou_per_class[c];
      } else {
        per[names[c]] = nullptr;
      }
    }
    j["iou_per_class"] = per;
    j["iou_skipped_infeasible"] = report.iou_skipped_infeasible;
  }
  if (report.has_consistency) {
    j["semantic_conflicts"] = report.semantic_conflicts;
    j["temporal_changes"] = report.temporal_changes;
    j["sequences"] = report.sequences;
  }
  return j.dump(2);
}

std::string report_to_text(const MetricsReport& report) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(3);
  if (report.has_accuracy) {
    os << "Accu-Bi (up)   Accu-Mc (up)   MSE (down)   IoU (up)\n";
    os << "  " << report.accu_binary << "          " << report.accu_multiclass
       << "          " << report.mse << "        ";
    if (report.has_iou) {
      os << report.iou_mean;
    } else {
      os << "n/a";
    }
    os << "\n";
  }
  if (report.has_consistency) {
    os << "seman. (down)   temp. (down)\n";
    os << "  " << report.semantic_conflicts << "           " << report.temporal_changes
       << "\n";
  }
  os << "samples: " << report.samples;
  if (report.has_consistency) os << "  sequences: " << report.sequences;
  if (report.has_iou && report.iou_skipped_infeasible > 0) {
    os << "  iou skipped (infeasible): " << report.iou_skipped_infeasible;
  }
  os << "\n";
  return os.str();
}

}  // namespace roadlayout
