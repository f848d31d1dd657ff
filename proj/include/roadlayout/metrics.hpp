#pragma once

#include <array>
#include <span>
#include <string>

#include "roadlayout/energy.hpp"
#include "roadlayout/losses.hpp"
#include "roadlayout/render.hpp"

namespace roadlayout {

struct MetricsReport {
  double accu_binary = 0.0;
  double accu_multiclass = 0.0;
  double mse = 0.0;
  double iou_mean = 0.0;
  std::array<double, 4> iou_per_class{};     // classes 1..4
  std::array<bool, 4> iou_class_present{};   // class had pixels in some union
  double semantic_conflicts = 0.0;           // mean per frame
  double temporal_changes = 0.0;             // mean per attribute per sequence
  std::size_t samples = 0;
  std::size_t sequences = 0;
  std::size_t iou_skipped_infeasible = 0;
  bool has_accuracy = false;
  bool has_iou = false;
  bool has_consistency = false;
};

std::string report_to_json(const MetricsReport& report);
// Text table mirroring the usual column layout (Accu-Bi up, Accu-Mc up,
// MSE down, IoU up / seman. down, temp. down).
std::string report_to_text(const MetricsReport& report);

// Fraction of matching hard labels, per sample over the (annotated) binary or
// multi-class attributes, averaged over samples.
double accu_binary(std::span<const SceneParams> preds, std::span<const SceneParams> gts,
                   const AnnotationMask* mask = nullptr);
double accu_multiclass(std::span<const SceneParams> preds,
                       std::span<const SceneParams> gts,
                       const AnnotationMask* mask = nullptr);

// Squared error on range-normalized values over GT-active (annotated)
// attributes, averaged per sample then over samples. An activity mismatch
// counts as a full-range error of 1.
double mse_regression(std::span<const SceneParams> preds,
                      std::span<const SceneParams> gts, const AttributeSchema& schema,
                      const AnnotationMask* mask = nullptr);

struct ClassIou {
  std::array<double, 4> iou{};
  std::array<bool, 4> present{};
  double mean() const;
};

// Renders both sides with the same config and compares per class (classes
// absent from both renders are excluded from the mean). The GT side keeps
// annotated attributes and takes predicted values elsewhere. Throws
// FeasibilityError if either side is infeasible.
ClassIou rendered_iou(const SceneParams& pred, const SceneParams& gt,
                      const AnnotationMask& annotated, const AttributeSchema& schema,
                      const RenderConfig& cfg);

std::size_t semantic_conflicts(const SceneParams& params, const AttributeSchema& schema);
double mean_semantic_conflicts(std::span<const SceneParams> batch,
                               const AttributeSchema& schema);

// Per-attribute count of frame-to-frame label changes (continuous attributes
// compared by bin index), averaged over the attributes. Requires T >= 2.
double temporal_changes(std::span<const Labeling> sequence);

}  // namespace roadlayout
