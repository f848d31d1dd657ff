#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "roadlayout/schema.hpp"

namespace roadlayout {

// Semantic classes of the top view.
enum SemanticClass : std::uint8_t {
  kClassBackground = 0,
  kClassRoad = 1,
  kClassSidewalk = 2,
  kClassLaneBoundary = 3,
  kClassCrosswalk = 4,
};
inline constexpr int kNumSemanticClasses = 5;

// Fixed indexed-PNG palette, one RGB triple per class.
inline constexpr std::array<std::array<std::uint8_t, 3>, kNumSemanticClasses> kPalette = {
    {{0, 0, 0},        // background
     {128, 64, 128},   // road
     {244, 35, 232},   // sidewalk
     {255, 255, 255},  // lane boundary
     {250, 170, 30}}   // crosswalk
};

struct RenderConfig {
  int height = 192;  // rows, forward axis
  int width = 192;   // columns, lateral axis
  double meters_per_pixel = 0.25;

  double forward_extent() const { return height * meters_per_pixel; }
  double lateral_extent() const { return width * meters_per_pixel; }
};

void validate_config(const RenderConfig& cfg);

// Row-major grid of class indices; the camera sits at the bottom-center pixel
// (width/2, height-1) looking up.
struct SemanticTopView {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> cells;

  std::uint8_t at(int row, int col) const { return cells[row * width + col]; }
  std::uint8_t& at(int row, int col) { return cells[row * width + col]; }
  bool operator==(const SemanticTopView&) const = default;
};

// Deterministic rasterization: each cell takes the class of its center point.
// Throws FeasibilityError for infeasible params.
SemanticTopView render(const SceneParams& params, const RenderConfig& cfg,
                       const AttributeSchema& schema = default_schema());

// C = 4 indicator channels (background dropped); channel c marks class c+1.
struct OccupancyStack {
  int height = 0;
  int width = 0;
  static constexpr int kChannels = kNumSemanticClasses - 1;
  std::vector<std::uint8_t> planes;  // channel-major, row-major within channel

  std::uint8_t at(int channel, int row, int col) const {
    return planes[(channel * height + row) * width + col];
  }
};

OccupancyStack to_onehot(const SemanticTopView& view);

// 8-bit indexed PNG with the fixed palette above.
void write_png(const SemanticTopView& view, const std::string& path);

// Raw export: 16-byte header (magic "BEVR", u32 height, u32 width,
// u32 version, little-endian) followed by height*width class bytes.
void write_raw(const SemanticTopView& view, const std::string& path);
SemanticTopView read_raw(const std::string& path);

}  // namespace roadlayout
