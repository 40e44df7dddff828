#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dmf/geometry.hpp"

namespace dmf {

using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rgb = std::array<std::uint8_t, 3>;

/// H x W x D float32 values, row-major with the channel index fastest.
struct FeatureMap {
  int height = 0;
  int width = 0;
  int depth = 0;
  std::vector<float> values;

  FeatureMap() = default;
  FeatureMap(int h, int w, int d, float fill = 0.0f);

  float* pixel(int x, int y) {
    return values.data() + (static_cast<std::size_t>(y) * width + x) * depth;
  }
  const float* pixel(int x, int y) const {
    return values.data() + (static_cast<std::size_t>(y) * width + x) * depth;
  }

  bool operator==(const FeatureMap&) const = default;
};

/// Row-major 8-bit RGB.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = {0, 0, 0});

  Rgb at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
    data[i] = c[0];
    data[i + 1] = c[1];
    data[i + 2] = c[2];
  }

  bool operator==(const RgbImage&) const = default;
};

struct PointCloud {
  std::vector<Eigen::Vector3d> positions;
  std::vector<Rgb> colors;   // empty or one per point
  std::vector<int> labels;   // empty or one per point

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  bool has_colors() const { return !colors.empty(); }
  bool has_labels() const { return !labels.empty(); }

  /// Throws ValidationError on length mismatch or non-finite coordinates.
  void validate() const;

  bool operator==(const PointCloud&) const = default;
};

/// Points with one D-dimensional feature row each.
struct FeatureCloud {
  std::vector<Eigen::Vector3d> positions;
  FeatureMatrix features;
  std::vector<int> source_view;  // empty or one frame id per point
  std::vector<Rgb> colors;       // empty or one per point

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  int dim() const { return static_cast<int>(features.cols()); }

  /// Throws DimensionError when row counts disagree.
  void validate() const;

  /// Appends `other`; feature dimensions must match unless this cloud is empty.
  void append(const FeatureCloud& other);
};

struct CameraFrame {
  int frame_id = 0;
  CameraIntrinsics intrinsics;
  Pose pose;
  DepthImage depth;
  RgbImage color;
  std::optional<FeatureMap> feature_map;

  /// Throws DimensionError when depth, color, feature map and intrinsics
  /// disagree on image size.
  void validate() const;
};

struct Scene {
  std::string scene_id;
  PointCloud points;
  std::vector<CameraFrame> frames;

  const CameraFrame* find_frame(int frame_id) const;
};

}  // namespace dmf
