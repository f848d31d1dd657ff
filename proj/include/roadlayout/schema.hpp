#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace roadlayout {

inline constexpr int kNumBinary = 14;
inline constexpr int kNumMulticlass = 2;
inline constexpr int kNumContinuous = 22;
inline constexpr int kNumAttributes = kNumBinary + kNumMulticlass + kNumContinuous;
inline constexpr int kLaneCountClasses = 7;  // lane counts live in {0..6}
inline constexpr int kMaxLanesPerSide = 6;
inline constexpr int kSchemaVersion = 1;

// Binary attributes, in canonical (serialization) order.
enum BinaryAttr : int {
  kSideRoadLeft = 0,
  kSideRoadRight,
  kMainRoadEnds,
  kCrosswalkNear,
  kCrosswalkFar,
  kCrosswalkLeft,
  kCrosswalkRight,
  kSidewalkLeft,
  kSidewalkRight,
  kDelimiterLeft,
  kDelimiterRight,
  kDelimiterMedian,
  kOnewayMain,
  kMainRoadCurved,
};

enum MulticlassAttr : int {
  kLanesLeftCount = 0,
  kLanesRightCount = 1,
};

// Continuous attributes, in canonical order. Lane-width slots 1..6 per side
// follow the ego lane width.
enum ContinuousAttr : int {
  kEgoLaneWidth = 0,
  kLaneWidthLeft1 = 1,    // slots 1..6 occupy indices 1..6
  kLaneWidthRight1 = 7,   // slots 1..6 occupy indices 7..12
  kDistSideRoadLeft = 13,
  kDistSideRoadRight = 14,
  kSideRoadWidthLeft = 15,
  kSideRoadWidthRight = 16,
  kDelimiterWidthLeft = 17,
  kDelimiterWidthRight = 18,
  kSidewalkWidthLeft = 19,
  kSidewalkWidthRight = 20,
  kCurvature = 21,
};

// What switches an activatable continuous attribute on.
struct Controller {
  enum Kind { kAlwaysActive, kBinarySwitch, kLaneCountAtLeast };
  Kind kind = kAlwaysActive;
  int index = -1;     // binary index or multiclass index
  int min_count = 0;  // threshold for kLaneCountAtLeast
};

struct ContinuousInfo {
  std::string name;
  double min_value = 0.0;
  double max_value = 0.0;  // meters, except curvature (1/m)
  Controller controller;
  bool activatable() const { return controller.kind != Controller::kAlwaysActive; }
};

// One feasibility rule. The same definitions drive validate() and the CRF's
// hard-constraint cliques.
struct ConstraintDef {
  enum Kind {
    kBinaryActivity,       // q*: binary existence must equal continuous activity
    kTwoWayNeedsLeftLane,  // s1: oneway=false requires lanes_left >= 1
    kMedianNeedsLeftLane,  // s2: median delimiter requires lanes_left >= 1
    kImplies,              // c1,c2: a=true requires b=true
    kMutualExclusion,      // c3,c5: a and b cannot both be true
    kNeedsAnySideRoad,     // c4: main_road_ends requires a side road
    kLaneSlotActivity,     // c6..c17: lane count >= slot iff slot width active
  };
  std::string id;
  Kind kind;
  int a = -1;    // binary index (or multiclass index for kLaneSlotActivity)
  int b = -1;    // second index; meaning depends on kind
  int c = -1;    // third index (kNeedsAnySideRoad only)
  int slot = 0;  // lane slot for kLaneSlotActivity
  std::string description;
};

struct AttributeSchema {
  std::array<std::string, kNumBinary> binary_names;
  std::array<std::string, kNumMulticlass> multiclass_names;
  std::array<int, kNumMulticlass> multiclass_domain;
  std::array<ContinuousInfo, kNumContinuous> continuous;
  std::vector<ConstraintDef> constraints;
};

// Builds a fresh copy of the fixed registry.
AttributeSchema make_default_schema();

// Cached immutable instance of make_default_schema().
const AttributeSchema& default_schema();

// One full scene: 14 booleans, 2 lane counts, 22 optional continuous values
// (absent = inactive).
struct SceneParams {
  std::array<bool, kNumBinary> binary{};
  std::array<int, kNumMulticlass> multiclass{};
  std::array<std::optional<double>, kNumContinuous> continuous{};

  bool operator==(const SceneParams&) const = default;
};

struct Violation {
  std::string constraint_id;
  std::string description;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::size_t size() const { return violations.size(); }
};

// Checks ranges plus every constraint in the schema catalog. Pure; ordering
// of the report is the fixed catalog order.
ValidationReport validate(const SceneParams& params, const AttributeSchema& schema);

// True if the given constraint is violated by the assignment.
bool constraint_conflicts(const ConstraintDef& def, const SceneParams& params);

// Left/right reflection: swaps all left/right attributes and negates the
// curvature.
SceneParams mirrored(const SceneParams& params);

// JSONL scene record, canonical key order (schema_version first, then the
// attributes in schema order). Absent continuous values encode as null.
std::string serialize_scene(const SceneParams& params, const AttributeSchema& schema);
SceneParams deserialize_scene(std::string_view line, const AttributeSchema& schema);

class FeasibilityError : public std::runtime_error {
 public:
  FeasibilityError(const std::string& what, ValidationReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

}  // namespace roadlayout
