#include "dmf/types.hpp"

#include <string>

#include "dmf/errors.hpp"

namespace dmf {

FeatureMap::FeatureMap(int h, int w, int d, float fill)
    : height(h), width(w), depth(d), values(static_cast<std::size_t>(h) * w * d, fill) {}

RgbImage::RgbImage(int w, int h, Rgb fill)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3) {
  for (std::size_t i = 0; i < data.size(); i += 3) {
    data[i] = fill[0];
    data[i + 1] = fill[1];
    data[i + 2] = fill[2];
  }
}

void PointCloud::validate() const {
  if (!colors.empty() && colors.size() != positions.size()) {
    throw ValidationError("point cloud: color count does not match point count");
  }
  if (!labels.empty() && labels.size() != positions.size()) {
    throw ValidationError("point cloud: label count does not match point count");
  }
  for (const auto& p : positions) {
    if (!p.allFinite()) throw ValidationError("point cloud: non-finite coordinate");
  }
}

void FeatureCloud::validate() const {
  const auto n = static_cast<Eigen::Index>(positions.size());
  if (features.rows() != n) throw DimensionError("feature cloud: feature rows != point count");
  if (!source_view.empty() && source_view.size() != positions.size()) {
    throw DimensionError("feature cloud: source_view length != point count");
  }
  if (!colors.empty() && colors.size() != positions.size()) {
    throw DimensionError("feature cloud: color count != point count");
  }
}

void FeatureCloud::append(const FeatureCloud& other) {
  if (other.empty()) return;
  if (empty()) {
    *this = other;
    return;
  }
  if (other.dim() != dim()) {
    throw DimensionError("feature cloud: cannot append D=" + std::to_string(other.dim()) +
                         " to D=" + std::to_string(dim()));
  }
  const bool keep_views = !source_view.empty() && !other.source_view.empty();
  const bool keep_colors = !colors.empty() && !other.colors.empty();
  const Eigen::Index old_rows = features.rows();
  positions.insert(positions.end(), other.positions.begin(), other.positions.end());
  FeatureMatrix merged(old_rows + other.features.rows(), features.cols());
  merged.topRows(old_rows) = features;
  merged.bottomRows(other.features.rows()) = other.features;
  features = std::move(merged);
  if (keep_views) {
    source_view.insert(source_view.end(), other.source_view.begin(), other.source_view.end());
  } else {
    source_view.clear();
  }
  if (keep_colors) {
    colors.insert(colors.end(), other.colors.begin(), other.colors.end());
  } else {
    colors.clear();
  }
}

void CameraFrame::validate() const {
  const int w = intrinsics.width;
  const int h = intrinsics.height;
  if (depth.width != w || depth.height != h) {
    throw DimensionError("frame " + std::to_string(frame_id) + ": depth is " +
                         std::to_string(depth.width) + "x" + std::to_string(depth.height) +
                         " but intrinsics say " + std::to_string(w) + "x" + std::to_string(h));
  }
  if (color.width != w || color.height != h) {
    throw DimensionError("frame " + std::to_string(frame_id) + ": color size mismatch");
  }
  if (feature_map && (feature_map->width != w || feature_map->height != h)) {
    throw DimensionError("frame " + std::to_string(frame_id) + ": feature map is " +
                         std::to_string(feature_map->width) + "x" +
                         std::to_string(feature_map->height) + ", expected " + std::to_string(w) +
                         "x" + std::to_string(h));
  }
}

const CameraFrame* Scene::find_frame(int frame_id) const {
  for (const auto& f : frames) {
    if (f.frame_id == frame_id) return &f;
  }
  return nullptr;
}

}  // namespace dmf
