#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <optional>
#include <vector>

namespace dmf {

struct CameraFrame;
struct FeatureCloud;

/// Pinhole intrinsics. Pixel (i, j) has continuous coordinates (u, v) = (i, j);
/// there is no half-pixel offset.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// Throws ValidationError when any invariant is broken.
  void validate() const;

  Eigen::Matrix3d matrix() const;

  /// Intrinsics for the same camera rendered at out_w x out_h.
  CameraIntrinsics scaled(int out_w, int out_h) const;

  bool operator==(const CameraIntrinsics&) const = default;
};

enum class PoseConvention { kCameraToWorld, kWorldToCamera };

/// Rigid transform together with the direction it maps in.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  PoseConvention convention = PoseConvention::kCameraToWorld;

  static Pose identity(PoseConvention convention = PoseConvention::kCameraToWorld);

  /// Builds a pose from a homogeneous 4x4 matrix. Throws ValidationError if
  /// the rotation block is not orthonormal with det +1 within `tolerance`
  /// (measured as max |R^T R - I|) or the bottom row is not (0 0 0 1).
  static Pose from_matrix(const Eigen::Matrix4d& m, PoseConvention convention,
                          double tolerance = 1e-6);

  /// Camera pose whose optical axis points from `eye` toward `target`.
  static Pose look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                      const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ());

  Eigen::Matrix4d matrix() const;

  /// The same physical pose expressed in the opposite convention.
  Pose inverse() const;

  Eigen::Vector3d camera_to_world(const Eigen::Vector3d& p_cam) const;
  Eigen::Vector3d world_to_camera(const Eigen::Vector3d& p_world) const;

  /// max |R^T R - I| over all entries.
  double orthonormality_error() const;
};

/// Row-major depth in meters; a value of 0 marks a missing measurement.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  DepthImage() = default;
  DepthImage(int w, int h, float fill = 0.0f);

  float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  bool valid(int x, int y) const { return at(x, y) > 0.0f; }
  std::size_t valid_count() const;

  bool operator==(const DepthImage&) const = default;
};

struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

using WorldPoint = Eigen::Vector3d;

struct Projection {
  Pixel pixel;
  double depth = 0.0;
};

/// Lifts a pixel with known depth into world coordinates:
/// camera point = depth * K^-1 (u, v, 1), then the rigid transform of `pose`.
/// Throws InvalidDepthError for depth <= 0 (or non-finite) and
/// OutOfBoundsError when the pixel lies outside [0,width) x [0,height).
WorldPoint backproject_pixel(const CameraIntrinsics& intr, const Pose& pose, Pixel px,
                             double depth_m);

/// Projects a world point into the image. Returns nullopt when the point is
/// on or behind the image plane (camera z <= 0). Bounds are not checked.
std::optional<Projection> project_point(const CameraIntrinsics& intr, const Pose& pose,
                                        const WorldPoint& p);

/// One world point per valid-depth pixel on the stride lattice. Points carry
/// the attached feature map, or RGB scaled to [0, 1] when there is none.
FeatureCloud backproject_frame(const CameraFrame& frame, int stride);

}  // namespace dmf
