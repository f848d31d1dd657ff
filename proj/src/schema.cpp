#include "roadlayout/schema.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace roadlayout {
namespace {

using ordered_json = nlohmann::ordered_json;

Controller binary_switch(int index) {
  return Controller{Controller::kBinarySwitch, index, 0};
}

Controller lane_slot(int mc_index, int slot) {
  return Controller{Controller::kLaneCountAtLeast, mc_index, slot};
}

void add_constraint(AttributeSchema& s, std::string id, ConstraintDef::Kind kind, int a,
                    int b, int c, int slot, std::string description) {
  ConstraintDef def;
  def.id = std::move(id);
  def.kind = kind;
  def.a = a;
  def.b = b;
  def.c = c;
  def.slot = slot;
  def.description = std::move(description);
  s.constraints.push_back(std::move(def));
}

}  // namespace

AttributeSchema make_default_schema() {
  AttributeSchema s;
  s.binary_names = {
      "side_road_left",  "side_road_right", "main_road_ends",  "crosswalk_near",
      "crosswalk_far",   "crosswalk_left",  "crosswalk_right", "sidewalk_left",
      "sidewalk_right",  "delimiter_left",  "delimiter_right", "delimiter_median",
      "oneway_main",     "main_road_curved",
  };
  s.multiclass_names = {"lanes_left_count", "lanes_right_count"};
  s.multiclass_domain = {kLaneCountClasses, kLaneCountClasses};

  auto& c = s.continuous;
  c[kEgoLaneWidth] = {"ego_lane_width", 2.5, 5.0, Controller{}};
  for (int i = 1; i <= kMaxLanesPerSide; ++i) {
    c[kLaneWidthLeft1 + i - 1] = {"lane_width_left_" + std::to_string(i), 2.5, 5.0,
                                  lane_slot(kLanesLeftCount, i)};
    c[kLaneWidthRight1 + i - 1] = {"lane_width_right_" + std::to_string(i), 2.5, 5.0,
                                   lane_slot(kLanesRightCount, i)};
  }
  c[kDistSideRoadLeft] = {"dist_side_road_left", 6.0, 40.0, binary_switch(kSideRoadLeft)};
  c[kDistSideRoadRight] = {"dist_side_road_right", 6.0, 40.0,
                           binary_switch(kSideRoadRight)};
  c[kSideRoadWidthLeft] = {"side_road_width_left", 4.0, 16.0,
                           binary_switch(kSideRoadLeft)};
  c[kSideRoadWidthRight] = {"side_road_width_right", 4.0, 16.0,
                            binary_switch(kSideRoadRight)};
  c[kDelimiterWidthLeft] = {"delimiter_width_left", 0.5, 2.0,
                            binary_switch(kDelimiterLeft)};
  c[kDelimiterWidthRight] = {"delimiter_width_right", 0.5, 2.0,
                             binary_switch(kDelimiterRight)};
  c[kSidewalkWidthLeft] = {"sidewalk_width_left", 1.0, 3.0, binary_switch(kSidewalkLeft)};
  c[kSidewalkWidthRight] = {"sidewalk_width_right", 1.0, 3.0,
                            binary_switch(kSidewalkRight)};
  c[kCurvature] = {"curvature", -0.02, 0.02, binary_switch(kMainRoadCurved)};

  // Q: binary existence vs. continuous activity.
  add_constraint(s, "q1", ConstraintDef::kBinaryActivity, kSideRoadLeft,
                 kDistSideRoadLeft, -1, 0,
                 "side_road_left and dist_side_road_left activity must agree");
  add_constraint(s, "q2", ConstraintDef::kBinaryActivity, kSideRoadLeft,
                 kSideRoadWidthLeft, -1, 0,
                 "side_road_left and side_road_width_left activity must agree");
  add_constraint(s, "q3", ConstraintDef::kBinaryActivity, kSideRoadRight,
                 kDistSideRoadRight, -1, 0,
                 "side_road_right and dist_side_road_right activity must agree");
  add_constraint(s, "q4", ConstraintDef::kBinaryActivity, kSideRoadRight,
                 kSideRoadWidthRight, -1, 0,
                 "side_road_right and side_road_width_right activity must agree");
  add_constraint(s, "q5", ConstraintDef::kBinaryActivity, kSidewalkLeft,
                 kSidewalkWidthLeft, -1, 0,
                 "sidewalk_left and sidewalk_width_left activity must agree");
  add_constraint(s, "q6", ConstraintDef::kBinaryActivity, kSidewalkRight,
                 kSidewalkWidthRight, -1, 0,
                 "sidewalk_right and sidewalk_width_right activity must agree");
  add_constraint(s, "q7", ConstraintDef::kBinaryActivity, kDelimiterLeft,
                 kDelimiterWidthLeft, -1, 0,
                 "delimiter_left and delimiter_width_left activity must agree");
  add_constraint(s, "q8", ConstraintDef::kBinaryActivity, kDelimiterRight,
                 kDelimiterWidthRight, -1, 0,
                 "delimiter_right and delimiter_width_right activity must agree");
  add_constraint(s, "q9", ConstraintDef::kBinaryActivity, kMainRoadCurved, kCurvature, -1,
                 0, "main_road_curved and curvature activity must agree");

  // S: binary vs. multi-class.
  add_constraint(s, "s1", ConstraintDef::kTwoWayNeedsLeftLane, kOnewayMain,
                 kLanesLeftCount, -1, 0, "two-way traffic requires lanes_left_count >= 1");
  add_constraint(s, "s2", ConstraintDef::kMedianNeedsLeftLane, kDelimiterMedian,
                 kLanesLeftCount, -1, 0,
                 "median delimiter requires lanes_left_count >= 1");

  // C: higher-order conflict cliques.
  add_constraint(s, "c1", ConstraintDef::kImplies, kCrosswalkLeft, kSideRoadLeft, -1, 0,
                 "crosswalk_left requires side_road_left");
  add_constraint(s, "c2", ConstraintDef::kImplies, kCrosswalkRight, kSideRoadRight, -1, 0,
                 "crosswalk_right requires side_road_right");
  add_constraint(s, "c3", ConstraintDef::kMutualExclusion, kCrosswalkFar, kMainRoadEnds,
                 -1, 0, "crosswalk_far requires the main road to continue");
  add_constraint(s, "c4", ConstraintDef::kNeedsAnySideRoad, kMainRoadEnds, kSideRoadLeft,
                 kSideRoadRight, 0, "main_road_ends requires at least one side road");
  add_constraint(s, "c5", ConstraintDef::kMutualExclusion, kDelimiterMedian, kOnewayMain,
                 -1, 0, "median delimiter requires two-way traffic");

  int next = 6;
  for (int side = 0; side < 2; ++side) {
    int mc = side == 0 ? kLanesLeftCount : kLanesRightCount;
    int base = side == 0 ? kLaneWidthLeft1 : kLaneWidthRight1;
    for (int slot = 1; slot <= kMaxLanesPerSide; ++slot) {
      add_constraint(s, "c" + std::to_string(next++), ConstraintDef::kLaneSlotActivity,
                     mc, base + slot - 1, -1, slot,
                     s.continuous[base + slot - 1].name +
                         " must be active exactly when the lane count reaches slot " +
                         std::to_string(slot));
    }
  }
  return s;
}

const AttributeSchema& default_schema() {
  static const AttributeSchema schema = make_default_schema();
  return schema;
}

namespace {

bool continuous_active(const SceneParams& p, int index) {
  return p.continuous[index].has_value();
}

}  // namespace

bool constraint_conflicts(const ConstraintDef& def, const SceneParams& p) {
  switch (def.kind) {
    case ConstraintDef::kBinaryActivity:
      return p.binary[def.a] != continuous_active(p, def.b);
    case ConstraintDef::kTwoWayNeedsLeftLane:
      return !p.binary[def.a] && p.multiclass[def.b] == 0;
    case ConstraintDef::kMedianNeedsLeftLane:
      return p.binary[def.a] && p.multiclass[def.b] == 0;
    case ConstraintDef::kImplies:
      return p.binary[def.a] && !p.binary[def.b];
    case ConstraintDef::kMutualExclusion:
      return p.binary[def.a] && p.binary[def.b];
    case ConstraintDef::kNeedsAnySideRoad:
      return p.binary[def.a] && !p.binary[def.b] && !p.binary[def.c];
    case ConstraintDef::kLaneSlotActivity:
      return (p.multiclass[def.a] >= def.slot) != continuous_active(p, def.b);
  }
  return false;
}

ValidationReport validate(const SceneParams& params, const AttributeSchema& schema) {
  if (schema.continuous.size() != kNumContinuous ||
      schema.binary_names.size() != kNumBinary) {
    throw std::runtime_error("schema mismatch: unexpected attribute count");
  }

  ValidationReport report;
  for (int m = 0; m < kNumMulticlass; ++m) {
    int v = params.multiclass[m];
    if (v < 0 || v >= schema.multiclass_domain[m]) {
      report.violations.push_back(
          {"range:" + schema.multiclass_names[m],
           schema.multiclass_names[m] + " = " + std::to_string(v) + " outside {0.." +
               std::to_string(schema.multiclass_domain[m] - 1) + "}"});
    }
  }
  for (int m = 0; m < kNumContinuous; ++m) {
    const auto& info = schema.continuous[m];
    const auto& value = params.continuous[m];
    if (value && !(*value >= info.min_value && *value <= info.max_value)) {
      std::ostringstream os;
      os << info.name << " = " << *value << " outside [" << info.min_value << ", "
         << info.max_value << "]";
      report.violations.push_back({"range:" + info.name, os.str()});
    }
  }
  for (const auto& def : schema.constraints) {
    if (constraint_conflicts(def, params)) {
      report.violations.push_back({def.id, def.description});
    }
  }
  return report;
}

SceneParams mirrored(const SceneParams& params) {
  SceneParams m = params;
  auto swap_bin = [&](int a, int b) { std::swap(m.binary[a], m.binary[b]); };
  swap_bin(kSideRoadLeft, kSideRoadRight);
  swap_bin(kCrosswalkLeft, kCrosswalkRight);
  swap_bin(kSidewalkLeft, kSidewalkRight);
  swap_bin(kDelimiterLeft, kDelimiterRight);
  std::swap(m.multiclass[kLanesLeftCount], m.multiclass[kLanesRightCount]);

  auto swap_cont = [&](int a, int b) { std::swap(m.continuous[a], m.continuous[b]); };
  for (int i = 0; i < kMaxLanesPerSide; ++i) {
    swap_cont(kLaneWidthLeft1 + i, kLaneWidthRight1 + i);
  }
  swap_cont(kDistSideRoadLeft, kDistSideRoadRight);
  swap_cont(kSideRoadWidthLeft, kSideRoadWidthRight);
  swap_cont(kDelimiterWidthLeft, kDelimiterWidthRight);
  swap_cont(kSidewalkWidthLeft, kSidewalkWidthRight);
  if (m.continuous[kCurvature]) {
    m.continuous[kCurvature] = -*m.continuous[kCurvature];
  }
  return m;
}

std::string serialize_scene(const SceneParams& params, const AttributeSchema& schema) {
  ordered_json j;
  j["schema_version"] = kSchemaVersion;
  for (int i = 0; i < kNumBinary; ++i) {
    j[schema.binary_names[i]] = params.binary[i];
  }
  for (int m = 0; m < kNumMulticlass; ++m) {
    j[schema.multiclass_names[m]] = params.multiclass[m];
  }
  for (int m = 0; m < kNumContinuous; ++m) {
    if (params.continuous[m]) {
      j[schema.continuous[m].name] = *params.continuous[m];
    } else {
      j[schema.continuous[m].name] = nullptr;
    }
  }
  return j.dump();
}

SceneParams deserialize_scene(std::string_view line, const AttributeSchema& schema) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("scene record is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) {
    throw std::runtime_error("scene record must be a JSON object");
  }

  auto require = [&](const std::string& key) -> const nlohmann::json& {
    auto it = j.find(key);
    if (it == j.end()) {
      throw std::runtime_error("scene record missing field '" + key + "'");
    }
    return *it;
  };

  const auto& version = require("schema_version");
  if (!version.is_number_integer() || version.get<int>() != kSchemaVersion) {
    throw std::runtime_error("field 'schema_version': expected " +
                             std::to_string(kSchemaVersion));
  }

  SceneParams p;
  for (int i = 0; i < kNumBinary; ++i) {
    const auto& v = require(schema.binary_names[i]);
    if (!v.is_boolean()) {
      throw std::runtime_error("field '" + schema.binary_names[i] +
                               "': expected boolean");
    }
    p.binary[i] = v.get<bool>();
  }
  for (int m = 0; m < kNumMulticlass; ++m) {
    const auto& v = require(schema.multiclass_names[m]);
    if (!v.is_number_integer()) {
      throw std::runtime_error("field '" + schema.multiclass_names[m] +
                               "': expected integer");
    }
    int count = v.get<int>();
    if (count < 0 || count >= schema.multiclass_domain[m]) {
      throw std::runtime_error("field '" + schema.multiclass_names[m] + "': value " +
                               std::to_string(count) + " outside {0.." +
                               std::to_string(schema.multiclass_domain[m] - 1) + "}");
    }
    p.multiclass[m] = count;
  }
  for (int m = 0; m < kNumContinuous; ++m) {
    const auto& info = schema.continuous[m];
    const auto& v = require(info.name);
    if (v.is_null()) {
      p.continuous[m] = std::nullopt;
      continue;
    }
    if (!v.is_number()) {
      throw std::runtime_error("field '" + info.name + "': expected number or null");
    }
    double value = v.get<double>();
    if (!(value >= info.min_value && value <= info.max_value)) {
      std::ostringstream os;
      os << "field '" << info.name << "': value " << value << " outside ["
         << info.min_value << ", " << info.max_value << "]";
      throw std::runtime_error(os.str());
    }
    p.continuous[m] = value;
  }

  std::size_t known = 1 + kNumBinary + kNumMulticlass + kNumContinuous;
  if (j.size() != known) {
    for (const auto& [key, value] : j.items()) {
      (void)value;
      bool recognized = key == "schema_version";
      for (const auto& n : schema.binary_names) recognized |= (key == n);
      for (const auto& n : schema.multiclass_names) recognized |= (key == n);
      for (const auto& info : schema.continuous) recognized |= (key == info.name);
      if (!recognized) {
        throw std::runtime_error("scene record has unknown field '" + key + "'");
      }
    }
  }
  return p;
}

}  // namespace roadlayout
