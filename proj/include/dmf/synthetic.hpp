#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dmf/json_util.hpp"
#include "dmf/types.hpp"

namespace dmf {

enum class PrimitiveKind { kBox, kSphere };

struct Primitive {
  PrimitiveKind kind = PrimitiveKind::kBox;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();  // full extents, boxes only
  double radius = 0.5;                             // spheres only
  int class_id = 0;
  Rgb color = {200, 200, 200};
};

/// Axis-aligned room enclosing the cameras. Its walls are rendered as
/// background; they enter the scene cloud only when class_id >= 0.
struct RoomSpec {
  Eigen::Vector3d min{-3.0, -3.0, 0.0};
  Eigen::Vector3d max{3.0, 3.0, 3.0};
  Rgb color = {128, 128, 128};
  int class_id = -1;
};

/// Cameras evenly spaced on a horizontal arc, all looking at `target`.
struct OrbitSpec {
  int count = 8;
  double radius = 2.5;
  double height = 1.5;
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
  double start_deg = 0.0;
  double arc_deg = 360.0;
};

struct CameraSpec {
  Eigen::Vector3d eye;
  Eigen::Vector3d target;
};

struct ImageSpec {
  int width = 80;
  int height = 60;
  double fx = 60.0;
  double fy = 60.0;
};

struct SyntheticSpec {
  std::string scene_id = "synthetic";
  std::optional<RoomSpec> room;
  std::vector<Primitive> objects;
  OrbitSpec orbit;
  std::vector<CameraSpec> cameras;  // appended after the orbit
  ImageSpec image;
  double point_density = 400.0;     // scene points per square meter
  double color_noise = 0.0;         // max per-channel jitter in frame colors
  bool skip_box_bottoms = true;     // bottom faces never sampled into the cloud

  /// Throws SpecError for zero objects, non-positive sizes, or no cameras.
  void validate() const;

  /// Strict parse: unknown keys are SpecErrors.
  static SyntheticSpec from_json(const Json& j);
  Json to_json() const;
};

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

/// Intrinsics shared by every synthetic frame; the principal point sits on an
/// integer pixel so the center pixel is exactly the optical axis.
CameraIntrinsics synthetic_intrinsics(const ImageSpec& image);

/// Distance along the optical axis (camera z) to the first surface hit by
/// the ray through `px`, or nullopt when the ray escapes.
std::optional<double> cast_depth(const SyntheticSpec& spec, const CameraIntrinsics& intr,
                                 const Pose& pose, Pixel px);

/// Deterministic for a fixed seed. Depth and color come from exact ray /
/// primitive intersection; scene points are sampled uniformly over primitive
/// surfaces (float32-representable) with their class ids as labels. Frames
/// without a single valid depth pixel are dropped.
Scene generate_synthetic_scene(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace dmf
