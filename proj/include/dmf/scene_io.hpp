#pragma once

#include <filesystem>
#include <string>

#include "dmf/types.hpp"

namespace dmf {

/// On-disk layout of one scene (ScanNet-like):
///
///   <root>/<scene_id>/<scene_id>_vh_clean_2.ply   scene points + colors
///   <root>/<scene_id>/<scene_id>_labels.txt       optional, one id per line
///   <root>/<scene_id>/intrinsic/intrinsic_depth.txt
///   <root>/<scene_id>/pose/<frame_id>.txt         4x4 row-major
///   <root>/<scene_id>/depth/<frame_id>.png        16-bit mm, or
///   <root>/<scene_id>/depth/<frame_id>.depth      raw FMAP float32 (D = 1)
///   <root>/<scene_id>/color/<frame_id>.png        8-bit RGB, aligned to depth
struct SceneLayout {
  std::filesystem::path dir;
  std::string scene_id;

  SceneLayout(const std::filesystem::path& root, std::string id);

  std::filesystem::path cloud() const;
  std::filesystem::path labels() const;
  std::filesystem::path intrinsics() const;
  std::filesystem::path pose_dir() const { return dir / "pose"; }
  std::filesystem::path depth_dir() const { return dir / "depth"; }
  std::filesystem::path color_dir() const { return dir / "color"; }
};

struct LoadOptions {
  PoseConvention pose_convention = PoseConvention::kCameraToWorld;
  double pose_tolerance = 1e-3;
  double depth_divisor = 1000.0;
};

/// Throws LoadError naming the missing path, ValidationError for bad poses.
/// Frames come back sorted by frame_id.
Scene load_scene(const std::filesystem::path& root, const std::string& scene_id,
                 const LoadOptions& options = {});

/// Writes the layout above. Depth goes to the raw float32 format so a reload
/// is bit-identical.
void write_scene(const std::filesystem::path& root, const Scene& scene);

/// Color is resampled bilinearly, depth (and any feature map) by nearest
/// neighbour; intrinsics scale with the image.
CameraFrame resample_frame(const CameraFrame& frame, int out_w, int out_h);

}  // namespace dmf
