#include "roadlayout/render.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace roadlayout {
namespace {

constexpr double kCrosswalkBand = 3.0;  // meters, across the road
// Crossing location used for near/far crosswalks when no side road exists.
constexpr double kDefaultCrossingDistance = 20.0;
constexpr double kStraightCurvatureEps = 1e-12;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Frame of one side road: attach point on the centerline plus the local
// tangent and outward normal of that side.
struct SideRoadFrame {
  bool exists = false;
  Vec2 attach;
  Vec2 tangent;
  Vec2 outward;
  double half_width = 0.0;
};

// Everything derived from SceneParams that the per-pixel test needs.
struct Geometry {
  double curvature = 0.0;  // 0 for straight
  double edge_left = 0.0;  // lateral offset of the left road edge (positive)
  double edge_right = 0.0;
  std::vector<double> boundaries_left;   // interior lane boundaries, positive lat
  std::vector<double> boundaries_right;  // stored positive, applied at -lat
  bool sidewalk_left = false, sidewalk_right = false;
  double sidewalk_left_lo = 0.0, sidewalk_left_hi = 0.0;
  double sidewalk_right_lo = 0.0, sidewalk_right_hi = 0.0;
  SideRoadFrame side_left, side_right;
  double junction_near = kDefaultCrossingDistance;
  double junction_far = kDefaultCrossingDistance;
  double s_max = std::numeric_limits<double>::infinity();
  // Junction bands that interrupt the sidewalks (the side road crosses them).
  bool clip_left = false, clip_right = false;
  double clip_left_lo = 0.0, clip_left_hi = 0.0;
  double clip_right_lo = 0.0, clip_right_hi = 0.0;
  bool crosswalk_near = false, crosswalk_far = false;
  bool crosswalk_left = false, crosswalk_right = false;
};

Vec2 centerline_point(double curvature, double s) {
  if (std::abs(curvature) < kStraightCurvatureEps) return {0.0, s};
  return {(1.0 - std::cos(curvature * s)) / curvature, std::sin(curvature * s) / curvature};
}

Vec2 centerline_tangent(double curvature, double s) {
  if (std::abs(curvature) < kStraightCurvatureEps) return {0.0, 1.0};
  return {std::sin(curvature * s), std::cos(curvature * s)};
}

// Arc-length coordinate along the centerline and signed lateral offset
// (positive = driver's left = -x side). Exactly odd/even under the mirror map
// (x, curvature) -> (-x, -curvature).
void main_frame(double curvature, double x, double y, double& s, double& lat) {
  if (std::abs(curvature) < kStraightCurvatureEps) {
    s = y;
    lat = -x;
    return;
  }
  double cx = 1.0 / curvature;
  double wx = x - cx;
  double r = std::sqrt(wx * wx + y * y);
  double sign = curvature > 0.0 ? 1.0 : -1.0;
  lat = sign * r - cx;
  s = std::atan2(y, -sign * wx) / std::abs(curvature);
}

Geometry build_geometry(const SceneParams& p, const AttributeSchema& schema) {
  Geometry g;
  g.curvature = p.binary[kMainRoadCurved] ? *p.continuous[kCurvature] : 0.0;

  double ego = *p.continuous[kEgoLaneWidth];
  int lanes_left = p.multiclass[kLanesLeftCount];
  int lanes_right = p.multiclass[kLanesRightCount];

  g.edge_left = 0.5 * ego;
  for (int i = 0; i < lanes_left; ++i) {
    g.boundaries_left.push_back(g.edge_left);
    g.edge_left += *p.continuous[kLaneWidthLeft1 + i];
  }
  g.edge_right = 0.5 * ego;
  for (int i = 0; i < lanes_right; ++i) {
    g.boundaries_right.push_back(g.edge_right);
    g.edge_right += *p.continuous[kLaneWidthRight1 + i];
  }

  double delim_left = p.binary[kDelimiterLeft] ? *p.continuous[kDelimiterWidthLeft] : 0.0;
  double delim_right =
      p.binary[kDelimiterRight] ? *p.continuous[kDelimiterWidthRight] : 0.0;
  g.sidewalk_left = p.binary[kSidewalkLeft];
  if (g.sidewalk_left) {
    g.sidewalk_left_lo = g.edge_left + delim_left;
    g.sidewalk_left_hi = g.sidewalk_left_lo + *p.continuous[kSidewalkWidthLeft];
  }
  g.sidewalk_right = p.binary[kSidewalkRight];
  if (g.sidewalk_right) {
    g.sidewalk_right_lo = g.edge_right + delim_right;
    g.sidewalk_right_hi = g.sidewalk_right_lo + *p.continuous[kSidewalkWidthRight];
  }

  auto make_side = [&](bool exists, int dist_idx, int width_idx,
                       bool left) -> SideRoadFrame {
    SideRoadFrame f;
    f.exists = exists;
    if (!exists) return f;
    double d = *p.continuous[dist_idx];
    f.attach = centerline_point(g.curvature, d);
    f.tangent = centerline_tangent(g.curvature, d);
    // Left normal is the tangent rotated +90 degrees; left = -x at s=0.
    Vec2 left_normal{-f.tangent.y, f.tangent.x};
    f.outward = left ? left_normal : Vec2{-left_normal.x, -left_normal.y};
    f.half_width = 0.5 * *p.continuous[width_idx];
    return f;
  };
  g.side_left = make_side(p.binary[kSideRoadLeft], kDistSideRoadLeft,
                          kSideRoadWidthLeft, true);
  g.side_right = make_side(p.binary[kSideRoadRight], kDistSideRoadRight,
                           kSideRoadWidthRight, false);

  bool any_side = g.side_left.exists || g.side_right.exists;
  if (any_side) {
    g.junction_near = std::numeric_limits<double>::infinity();
    g.junction_far = -std::numeric_limits<double>::infinity();
    if (g.side_left.exists) {
      double d = *p.continuous[kDistSideRoadLeft];
      g.clip_left = true;
      g.clip_left_lo = d - g.side_left.half_width;
      g.clip_left_hi = d + g.side_left.half_width;
      g.junction_near = std::min(g.junction_near, g.clip_left_lo);
      g.junction_far = std::max(g.junction_far, g.clip_left_hi);
    }
    if (g.side_right.exists) {
      double d = *p.continuous[kDistSideRoadRight];
      g.clip_right = true;
      g.clip_right_lo = d - g.side_right.half_width;
      g.clip_right_hi = d + g.side_right.half_width;
      g.junction_near = std::min(g.junction_near, g.clip_right_lo);
      g.junction_far = std::max(g.junction_far, g.clip_right_hi);
    }
  }
  if (p.binary[kMainRoadEnds]) {
    g.s_max = g.junction_far;
  }
  g.crosswalk_near = p.binary[kCrosswalkNear];
  g.crosswalk_far = p.binary[kCrosswalkFar];
  g.crosswalk_left = p.binary[kCrosswalkLeft];
  g.crosswalk_right = p.binary[kCrosswalkRight];
  (void)schema;
  return g;
}

bool in_side_road(const SideRoadFrame& f, double x, double y) {
  if (!f.exists) return false;
  double dx = x - f.attach.x;
  double dy = y - f.attach.y;
  double along = dx * f.tangent.x + dy * f.tangent.y;
  double out = dx * f.outward.x + dy * f.outward.y;
  return std::abs(along) <= f.half_width && out >= 0.0;
}

std::uint8_t classify(const Geometry& g, double x, double y, double half_pixel) {
  double s, lat;
  main_frame(g.curvature, x, y, s, lat);

  bool on_main = s >= 0.0 && s <= g.s_max && lat >= -g.edge_right && lat <= g.edge_left;
  bool on_left = in_side_road(g.side_left, x, y);
  bool on_right = in_side_road(g.side_right, x, y);

  std::uint8_t cls = kClassBackground;
  if (on_main || on_left || on_right) cls = kClassRoad;

  // Sidewalk bands run along the main road and break where a side road on the
  // same side crosses them.
  if (g.sidewalk_left && s >= 0.0 && s <= g.s_max && lat >= g.sidewalk_left_lo &&
      lat <= g.sidewalk_left_hi &&
      !(g.clip_left && s >= g.clip_left_lo && s <= g.clip_left_hi)) {
    cls = kClassSidewalk;
  }
  if (g.sidewalk_right && s >= 0.0 && s <= g.s_max && lat <= -g.sidewalk_right_lo &&
      lat >= -g.sidewalk_right_hi &&
      !(g.clip_right && s >= g.clip_right_lo && s <= g.clip_right_hi)) {
    cls = kClassSidewalk;
  }

  if (s >= 0.0 && s <= g.s_max) {
    for (double b : g.boundaries_left) {
      if (std::abs(lat - b) <= half_pixel) {
        cls = kClassLaneBoundary;
        break;
      }
    }
    if (cls != kClassLaneBoundary) {
      for (double b : g.boundaries_right) {
        if (std::abs(lat + b) <= half_pixel) {
          cls = kClassLaneBoundary;
          break;
        }
      }
    }
  }

  if (on_main && g.crosswalk_near && s >= g.junction_near - kCrosswalkBand &&
      s <= g.junction_near) {
    cls = kClassCrosswalk;
  }
  if (on_main && g.crosswalk_far && s >= g.junction_far &&
      s <= g.junction_far + kCrosswalkBand) {
    cls = kClassCrosswalk;
  }
  if (on_left && g.crosswalk_left && lat >= g.edge_left &&
      lat <= g.edge_left + kCrosswalkBand) {
    cls = kClassCrosswalk;
  }
  if (on_right && g.crosswalk_right && lat <= -g.edge_right &&
      lat >= -g.edge_right - kCrosswalkBand) {
    cls = kClassCrosswalk;
  }
  return cls;
}

}  // namespace

void validate_config(const RenderConfig& cfg) {
  if (cfg.height <= 0 || cfg.width <= 0 || !(cfg.meters_per_pixel > 0.0)) {
    throw std::runtime_error("render config dimensions must be positive");
  }
}

SemanticTopView render(const SceneParams& params, const RenderConfig& cfg,
                       const AttributeSchema& schema) {
  validate_config(cfg);
  ValidationReport report = validate(params, schema);
  if (!report.ok()) {
    std::string what = "cannot render infeasible scene (" +
                       report.violations.front().constraint_id + " and " +
                       std::to_string(report.size() - 1) + " more)";
    throw FeasibilityError(what, std::move(report));
  }

  Geometry g = build_geometry(params, schema);
  SemanticTopView view;
  view.height = cfg.height;
  view.width = cfg.width;
  view.cells.assign(static_cast<std::size_t>(cfg.height) * cfg.width, 0);

  double mpp = cfg.meters_per_pixel;
  double half_pixel = 0.5 * mpp;
  double half_width = 0.5 * cfg.width;
  for (int row = 0; row < cfg.height; ++row) {
    // Camera at the bottom edge; row centers count up from y = mpp/2.
    double y = (cfg.height - 1 - row + 0.5) * mpp;
    for (int col = 0; col < cfg.width; ++col) {
      double x = (col + 0.5 - half_width) * mpp;
      view.at(row, col) = classify(g, x, y, half_pixel);
    }
  }
  return view;
}

OccupancyStack to_onehot(const SemanticTopView& view) {
  OccupancyStack stack;
  stack.height = view.height;
  stack.width = view.width;
  stack.planes.assign(
      static_cast<std::size_t>(OccupancyStack::kChannels) * view.height * view.width, 0);
  for (int row = 0; row < view.height; ++row) {
    for (int col = 0; col < view.width; ++col) {
      std::uint8_t cls = view.at(row, col);
      if (cls >= 1) {
        stack.planes[((cls - 1) * view.height + row) * view.width + col] = 1;
      }
    }
  }
  return stack;
}

namespace {

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void write_chunk(std::ofstream& out, const char type[4],
                 const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> header;
  put_u32_be(header, static_cast<std::uint32_t>(data.size()));
  out.write(reinterpret_cast<const char*>(header.data()), 4);
  out.write(type, 4);
  if (!data.empty()) {
    out.write(reinterpret_cast<const char*>(data.data()), data.size());
  }
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(type), 4);
  if (!data.empty()) crc = crc32(crc, data.data(), static_cast<uInt>(data.size()));
  std::vector<std::uint8_t> crc_bytes;
  put_u32_be(crc_bytes, static_cast<std::uint32_t>(crc));
  out.write(reinterpret_cast<const char*>(crc_bytes.data()), 4);
}

}  // namespace

void write_png(const SemanticTopView& view, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  static const std::uint8_t signature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  out.write(reinterpret_cast<const char*>(signature), 8);

  std::vector<std::uint8_t> ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(view.width));
  put_u32_be(ihdr, static_cast<std::uint32_t>(view.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(3);  // color type: indexed
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter
  ihdr.push_back(0);  // interlace
  write_chunk(out, "IHDR", ihdr);

  std::vector<std::uint8_t> plte;
  for (const auto& rgb : kPalette) {
    plte.push_back(rgb[0]);
    plte.push_back(rgb[1]);
    plte.push_back(rgb[2]);
  }
  write_chunk(out, "PLTE", plte);

  // One filter byte (0 = none) per scanline.
  std::vector<std::uint8_t> raster;
  raster.reserve(static_cast<std::size_t>(view.height) * (view.width + 1));
  for (int row = 0; row < view.height; ++row) {
    raster.push_back(0);
    for (int col = 0; col < view.width; ++col) {
      raster.push_back(view.at(row, col));
    }
  }
  uLongf bound = compressBound(static_cast<uLong>(raster.size()));
  std::vector<std::uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raster.data(),
                static_cast<uLong>(raster.size()), Z_BEST_COMPRESSION) != Z_OK) {
    throw std::runtime_error("zlib compression failed writing '" + path + "'");
  }
  compressed.resize(bound);
  write_chunk(out, "IDAT", compressed);
  write_chunk(out, "IEND", {});
  if (!out) {
    throw std::runtime_error("failed writing '" + path + "'");
  }
}

namespace {

constexpr char kRawMagic[4] = {'B', 'E', 'V', 'R'};
constexpr std::uint32_t kRawVersion = 1;

void put_u32_le(std::ofstream& out, std::uint32_t v) {
  char bytes[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                   static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
  out.write(bytes, 4);
}

std::uint32_t get_u32_le(std::ifstream& in) {
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

}  // namespace

void write_raw(const SemanticTopView& view, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot open '" + path + "' for writing");
  }
  out.write(kRawMagic, 4);
  put_u32_le(out, static_cast<std::uint32_t>(view.height));
  put_u32_le(out, static_cast<std::uint32_t>(view.width));
  put_u32_le(out, kRawVersion);
  out.write(reinterpret_cast<const char*>(view.cells.data()), view.cells.size());
  if (!out) {
    throw std::runtime_error("failed writing '" + path + "'");
  }
}

SemanticTopView read_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kRawMagic, 4) != 0) {
    throw std::runtime_error("'" + path + "' is not a BEVR raw export");
  }
  SemanticTopView view;
  view.height = static_cast<int>(get_u32_le(in));
  view.width = static_cast<int>(get_u32_le(in));
  std::uint32_t version = get_u32_le(in);
  if (version != kRawVersion) {
    throw std::runtime_error("unsupported BEVR version in '" + path + "'");
  }
  view.cells.resize(static_cast<std::size_t>(view.height) * view.width);
  in.read(reinterpret_cast<char*>(view.cells.data()), view.cells.size());
  if (!in) {
    throw std::runtime_error("truncated BEVR file '" + path + "'");
  }
  return view;
}

}  // namespace roadlayout
