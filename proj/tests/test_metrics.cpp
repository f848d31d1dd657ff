#include "doctest.h"

#include <cmath>

#include "roadlayout/metrics.hpp"
#include "roadlayout/oracle.hpp"
#include "roadlayout/rng.hpp"
#include "roadlayout/sampler.hpp"

using namespace roadlayout;

namespace {

struct Fixture {
  const AttributeSchema& schema = default_schema();
  std::array<BinSpec, kNumContinuous> specs = default_bin_specs(schema);
  PriorConfig prior;
};

}  // namespace

TEST_CASE("accuracies count matching hard labels") {
  Fixture fix;
  std::vector<SceneParams> gts, preds;
  for (int seed = 0; seed < 10; ++seed) {
    gts.push_back(sample_scene(fix.prior, seed, fix.schema));
    preds.push_back(gts.back());
  }
  CHECK(accu_binary(preds, gts) == 1.0);
  CHECK(accu_multiclass(preds, gts) == 1.0);

  // Flip 7 of 14 binaries on one single-sample batch.
  std::vector<SceneParams> one_gt{gts[0]};
  std::vector<SceneParams> one_pred{gts[0]};
  for (int i = 0; i < 7; ++i) one_pred[0].binary[i] = !one_pred[0].binary[i];
  CHECK(accu_binary(one_pred, one_gt) == doctest::Approx(0.5));

  // Random batches match an independent counting pass.
  SplitMix64 rng(3);
  std::vector<SceneParams> noisy = gts;
  for (auto& p : noisy) {
    for (int i = 0; i < kNumBinary; ++i) {
      if (rng.uniform() < 0.3) p.binary[i] = !p.binary[i];
    }
    for (int m = 0; m < kNumMulticlass; ++m) {
      if (rng.uniform() < 0.3) p.multiclass[m] = (p.multiclass[m] + 1) % 7;
    }
  }
  double bi = 0.0, mc = 0.0;
  for (std::size_t s = 0; s < gts.size(); ++s) {
    int cb = 0, cm = 0;
    for (int i = 0; i < kNumBinary; ++i) cb += noisy[s].binary[i] == gts[s].binary[i];
    for (int m = 0; m < kNumMulticlass; ++m) {
      cm += noisy[s].multiclass[m] == gts[s].multiclass[m];
    }
    bi += cb / 14.0;
    mc += cm / 2.0;
  }
  CHECK(accu_binary(noisy, gts) == doctest::Approx(bi / gts.size()).epsilon(1e-12));
  CHECK(accu_multiclass(noisy, gts) == doctest::Approx(mc / gts.size()).epsilon(1e-12));
}

TEST_CASE("regression MSE normalizes by range and masks inactive attributes") {
  Fixture fix;
  SceneParams gt;
  gt.binary[kOnewayMain] = true;
  gt.binary[kSideRoadLeft] = true;
  gt.binary[kSidewalkLeft] = true;
  gt.binary[kSidewalkRight] = true;
  gt.binary[kDelimiterLeft] = true;
  gt.binary[kDelimiterRight] = true;
  gt.multiclass[kLanesLeftCount] = 2;
  gt.multiclass[kLanesRightCount] = 1;
  gt.continuous[kEgoLaneWidth] = 3.0;
  gt.continuous[kLaneWidthLeft1] = 3.0;
  gt.continuous[kLaneWidthLeft1 + 1] = 3.0;
  gt.continuous[kLaneWidthRight1] = 3.0;
  gt.continuous[kDistSideRoadLeft] = 10.0;
  gt.continuous[kSideRoadWidthLeft] = 8.0;
  gt.continuous[kSidewalkWidthLeft] = 2.0;
  gt.continuous[kSidewalkWidthRight] = 2.0;
  gt.continuous[kDelimiterWidthLeft] = 1.0;
  gt.continuous[kDelimiterWidthRight] = 1.0;
  REQUIRE(validate(gt, fix.schema).ok());
  // Exactly 10 active continuous attributes.
  int active = 0;
  for (const auto& c : gt.continuous) active += c.has_value();
  REQUIRE(active == 10);

  std::vector<SceneParams> gts{gt};
  std::vector<SceneParams> preds{gt};
  CHECK(mse_regression(preds, gts, fix.schema) == 0.0);

  // Offset one attribute by exactly half its range.
  preds[0].continuous[kDistSideRoadLeft] = 10.0 + 0.5 * (40.0 - 6.0);
  CHECK(mse_regression(preds, gts, fix.schema) == doctest::Approx(0.25 / 10.0));

  // Touching a GT-inactive attribute's prediction changes nothing... the
  // prediction keeps inactive ones inactive here, so drop one instead.
  preds[0].continuous[kDistSideRoadLeft] = 10.0;
  SceneParams gt2 = gt;
  gt2.binary[kCrosswalkNear] = false;  // stays inactive either way
  std::vector<SceneParams> gts2{gt2};
  CHECK(mse_regression(preds, gts2, fix.schema) == 0.0);

  // An activity mismatch counts as a full normalized error.
  preds[0].continuous[kDistSideRoadLeft] = std::nullopt;
  CHECK(mse_regression(preds, gts, fix.schema) == doctest::Approx(1.0 / 10.0));
}

TEST_CASE("rendered IoU is exact for identical scenes and per-class otherwise") {
  Fixture fix;
  RenderConfig cfg;
  AnnotationMask full = AnnotationMask::all_annotated();
  for (int seed = 0; seed < 20; ++seed) {
    SceneParams gt = sample_scene(fix.prior, seed, fix.schema);
    ClassIou iou = rendered_iou(gt, gt, full, fix.schema, cfg);
    CHECK(iou.mean() == 1.0);
    for (int c = 0; c < 4; ++c) {
      if (iou.present[c]) CHECK(iou.iou[c] == 1.0);
    }
  }
}

TEST_CASE("dropping both sidewalks zeroes the sidewalk IoU only") {
  Fixture fix;
  RenderConfig cfg;
  SceneParams gt;
  gt.binary[kOnewayMain] = true;
  gt.binary[kSidewalkLeft] = true;
  gt.binary[kSidewalkRight] = true;
  gt.continuous[kEgoLaneWidth] = 4.0;
  gt.continuous[kSidewalkWidthLeft] = 2.0;
  gt.continuous[kSidewalkWidthRight] = 2.0;
  REQUIRE(validate(gt, fix.schema).ok());

  SceneParams pred = gt;
  pred.binary[kSidewalkLeft] = false;
  pred.binary[kSidewalkRight] = false;
  pred.continuous[kSidewalkWidthLeft] = std::nullopt;
  pred.continuous[kSidewalkWidthRight] = std::nullopt;

  ClassIou iou = rendered_iou(pred, gt, AnnotationMask::all_annotated(), fix.schema,
                              cfg);
  CHECK(iou.present[kClassRoad - 1]);
  CHECK(iou.iou[kClassRoad - 1] == 1.0);
  CHECK(iou.present[kClassSidewalk - 1]);
  CHECK(iou.iou[kClassSidewalk - 1] == 0.0);
  CHECK(!iou.present[kClassLaneBoundary - 1]);
  CHECK(!iou.present[kClassCrosswalk - 1]);
}

TEST_CASE("rendered IoU agrees with a direct pixel-count oracle") {
  Fixture fix;
  RenderConfig cfg;
  AnnotationMask full = AnnotationMask::all_annotated();
  SplitMix64 rng(6);
  int done = 0;
  for (std::uint64_t seed = 0; done < 10; ++seed) {
    SceneParams a = sample_scene(fix.prior, seed, fix.schema);
    SceneParams b = sample_scene(fix.prior, seed + 1000, fix.schema);
    ClassIou iou = rendered_iou(a, b, full, fix.schema, cfg);

    SemanticTopView va = render(a, cfg, fix.schema);
    SemanticTopView vb = render(b, cfg, fix.schema);
    for (int c = 1; c <= 4; ++c) {
      double inter = 0.0, uni = 0.0;
      for (std::size_t k = 0; k < va.cells.size(); ++k) {
        bool in_a = va.cells[k] == c;
        bool in_b = vb.cells[k] == c;
        inter += in_a && in_b;
        uni += in_a || in_b;
      }
      if (uni == 0.0) {
        CHECK(!iou.present[c - 1]);
      } else {
        CHECK(iou.present[c - 1]);
        CHECK(iou.iou[c - 1] == doctest::Approx(inter / uni).epsilon(1e-12));
      }
    }
    ++done;
  }
}

TEST_CASE("IoU with a full mask is symmetric in its arguments") {
  Fixture fix;
  RenderConfig cfg;
  AnnotationMask full = AnnotationMask::all_annotated();
  for (std::uint64_t seed = 40; seed < 50; ++seed) {
    SceneParams a = sample_scene(fix.prior, seed, fix.schema);
    SceneParams b = sample_scene(fix.prior, seed + 77, fix.schema);
    ClassIou ab = rendered_iou(a, b, full, fix.schema, cfg);
    ClassIou ba = rendered_iou(b, a, full, fix.schema, cfg);
    CHECK(ab.mean() == doctest::Approx(ba.mean()).epsilon(1e-12));
  }
}

TEST_CASE("the GT side takes predicted values where annotation is missing") {
  Fixture fix;
  RenderConfig cfg;
  SceneParams gt = sample_scene(fix.prior, 5, fix.schema);
  SceneParams pred = sample_scene(fix.prior, 1005, fix.schema);
  // Nothing annotated: the GT side IS the prediction, IoU is 1.
  AnnotationMask none{};
  ClassIou iou = rendered_iou(pred, gt, none, fix.schema, cfg);
  CHECK(iou.mean() == 1.0);
}

TEST_CASE("semantic conflicts mirror the validation report") {
  Fixture fix;
  for (int seed = 0; seed < 50; ++seed) {
    SceneParams p = sample_scene(fix.prior, seed, fix.schema);
    CHECK(semantic_conflicts(p, fix.schema) == 0);
  }
  SceneParams q;
  q.binary[kOnewayMain] = true;
  q.continuous[kEgoLaneWidth] = 4.0;
  q.continuous[kDistSideRoadLeft] = 12.0;  // q1
  CHECK(semantic_conflicts(q, fix.schema) == 1);

  q.binary[kCrosswalkLeft] = true;  // c1
  q.binary[kMainRoadEnds] = true;   // c4
  CHECK(semantic_conflicts(q, fix.schema) == 3);

  std::vector<SceneParams> batch{q, sample_scene(fix.prior, 3, fix.schema)};
  CHECK(mean_semantic_conflicts(batch, fix.schema) == doctest::Approx(1.5));
}

TEST_CASE("temporal changes count per-attribute label flips") {
  Fixture fix;
  SceneParams gt = sample_scene(fix.prior, 9, fix.schema);
  Labeling base = params_to_labeling(gt, fix.schema, fix.specs);

  std::vector<Labeling> constant(5, base);
  CHECK(temporal_changes(constant) == 0.0);

  // One binary alternating over five frames: 4 changes over 38 attributes.
  std::vector<Labeling> alternating = constant;
  for (int t = 0; t < 5; ++t) {
    alternating[t][kVarBinaryOffset + kCrosswalkNear] = t % 2;
  }
  CHECK(temporal_changes(alternating) == doctest::Approx(4.0 / 38.0));

  // Random sequences match an independent recount.
  SplitMix64 rng(12);
  std::vector<Labeling> random_seq;
  for (int t = 0; t < 6; ++t) {
    Labeling l = base;
    for (int v = 0; v < kNumAttributes; ++v) {
      if (rng.uniform() < 0.3) l[v] = (l[v] + 1) % 2;
    }
    random_seq.push_back(l);
  }
  double recount = 0.0;
  for (int v = 0; v < kNumAttributes; ++v) {
    for (int t = 0; t + 1 < 6; ++t) {
      recount += random_seq[t][v] != random_seq[t + 1][v];
    }
  }
  CHECK(temporal_changes(random_seq) == doctest::Approx(recount / 38.0));

  std::vector<Labeling> too_short{base};
  CHECK_THROWS_AS(temporal_changes(too_short), std::runtime_error);
}

TEST_CASE("reports serialize to JSON and text") {
  MetricsReport r;
  r.has_accuracy = true;
  r.accu_binary = 0.9;
  r.accu_multiclass = 0.8;
  r.mse = 0.01;
  r.samples = 7;
  std::string json = report_to_json(r);
  CHECK(json.find("\"accu_binary\"") != std::string::npos);
  std::string text = report_to_text(r);
  CHECK(text.find("Accu-Bi") != std::string::npos);
}
