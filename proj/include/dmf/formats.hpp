#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dmf/types.hpp"

namespace dmf {

// ---------------------------------------------------------------------------
// FMAP feature maps
//
//   "FMAP" | u32 version = 1 | u32 H | u32 W | u32 D | H*W*D float32
//
// All integers and floats little-endian, row-major, channel fastest.
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kFeatureMapVersion = 1;

void write_feature_map(const std::filesystem::path& path, const FeatureMap& map);
FeatureMap read_feature_map(const std::filesystem::path& path);

std::vector<char> encode_feature_map(const FeatureMap& map);
FeatureMap decode_feature_map(const std::vector<char>& bytes);

/// Per-point features stored as an N x 1 x D map. Values are narrowed to float32.
void write_feature_rows(const std::filesystem::path& path, const FeatureMatrix& rows);
FeatureMatrix read_feature_rows(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// PLY
// ---------------------------------------------------------------------------

enum class ColorMode { kRgb, kPerViewPalette, kLabelPalette };

ColorMode parse_color_mode(const std::string& name);

/// Deterministic, pairwise distinct colors for small indices.
Rgb palette_color(std::size_t index);

/// Writes binary_little_endian PLY with float32 x,y,z and uchar red,green,blue.
/// Throws InputError for an empty cloud and IoError (naming the path) on
/// write failure.
void write_ply(const std::filesystem::path& path, const std::vector<Eigen::Vector3d>& positions,
               const std::vector<Rgb>& colors);

/// kRgb uses the stored colors (white if absent); kLabelPalette needs labels.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud, ColorMode mode);

/// kPerViewPalette assigns one palette entry per distinct source view, in
/// ascending view-id order.
void write_ply(const std::filesystem::path& path, const FeatureCloud& cloud, ColorMode mode);

/// Reads the vertex element of an ascii or binary_little_endian PLY. Any
/// scalar property types are accepted; x,y,z are required, red/green/blue
/// and label are picked up when present. Later elements (faces) are ignored.
PointCloud read_ply(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

/// 16-bit grayscale PNG in millimeters; 0 stays invalid.
DepthImage read_depth_png(const std::filesystem::path& path, double divisor = 1000.0);
void write_depth_png(const std::filesystem::path& path, const DepthImage& depth,
                     double divisor = 1000.0);

/// Raw float32 depth stored as an H x W x 1 feature map.
DepthImage read_depth_raw(const std::filesystem::path& path);
void write_depth_raw(const std::filesystem::path& path, const DepthImage& depth);

RgbImage read_color_png(const std::filesystem::path& path);
void write_color_png(const std::filesystem::path& path, const RgbImage& image);

// ---------------------------------------------------------------------------
// Text matrices (poses, intrinsics, labels)
// ---------------------------------------------------------------------------

/// Whitespace-separated numbers; values are written with round-trip precision.
std::vector<double> read_numbers(const std::filesystem::path& path);

Pose read_pose(const std::filesystem::path& path, PoseConvention convention,
               double tolerance = 1e-3);
void write_pose(const std::filesystem::path& path, const Pose& pose);

/// Accepts a 3x3 or 4x4 matrix; only fx, fy, cx, cy are used.
CameraIntrinsics read_intrinsics(const std::filesystem::path& path, int width, int height);
void write_intrinsics(const std::filesystem::path& path, const CameraIntrinsics& intr);

std::vector<int> read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const std::vector<int>& labels);

}  // namespace dmf
