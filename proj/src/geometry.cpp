#include "dmf/geometry.hpp"

#include <cmath>
#include <string>

#include "dmf/errors.hpp"
#include "dmf/types.hpp"

namespace dmf {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("intrinsics: focal lengths must be positive");
  if (width < 1 || height < 1) throw ValidationError("intrinsics: image size must be at least 1x1");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw ValidationError("intrinsics: principal point outside the image");
  }
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

CameraIntrinsics CameraIntrinsics::scaled(int out_w, int out_h) const {
  const double sx = static_cast<double>(out_w) / width;
  const double sy = static_cast<double>(out_h) / height;
  return {fx * sx, fy * sy, cx * sx, cy * sy, out_w, out_h};
}

Pose Pose::identity(PoseConvention convention) {
  Pose p;
  p.convention = convention;
  return p;
}

Pose Pose::from_matrix(const Eigen::Matrix4d& m, PoseConvention convention, double tolerance) {
  if (!m.allFinite()) throw ValidationError("pose: non-finite entries");
  if (std::abs(m(3, 0)) > tolerance || std::abs(m(3, 1)) > tolerance ||
      std::abs(m(3, 2)) > tolerance || std::abs(m(3, 3) - 1.0) > tolerance) {
    throw ValidationError("pose: bottom row must be (0 0 0 1)");
  }
  Pose p;
  p.rotation = m.topLeftCorner<3, 3>();
  p.translation = m.topRightCorner<3, 1>();
  p.convention = convention;
  const double err = p.orthonormality_error();
  if (err > tolerance) {
    throw ValidationError("pose: rotation is not orthonormal (|R^T R - I| = " +
                          std::to_string(err) + ")");
  }
  if (p.rotation.determinant() < 0.0) throw ValidationError("pose: rotation has determinant -1");
  return p;
}

Pose Pose::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                   const Eigen::Vector3d& up) {
  // OpenCV camera axes: x right, y down, z forward.
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d right = forward.cross(up);
  if (right.norm() < 1e-9) {
    // Looking along `up`; any perpendicular works.
    const Eigen::Vector3d alt =
        std::abs(forward.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
    right = forward.cross(alt);
  }
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);
  Pose p;
  p.rotation.col(0) = right;
  p.rotation.col(1) = down;
  p.rotation.col(2) = forward;
  p.translation = eye;
  p.convention = PoseConvention::kCameraToWorld;
  return p;
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Pose Pose::inverse() const {
  Pose p;
  p.rotation = rotation.transpose();
  p.translation = -(p.rotation * translation);
  p.convention = convention == PoseConvention::kCameraToWorld ? PoseConvention::kWorldToCamera
                                                              : PoseConvention::kCameraToWorld;
  return p;
}

Eigen::Vector3d Pose::camera_to_world(const Eigen::Vector3d& p_cam) const {
  if (convention == PoseConvention::kCameraToWorld) return rotation * p_cam + translation;
  return rotation.transpose() * (p_cam - translation);
}

Eigen::Vector3d Pose::world_to_camera(const Eigen::Vector3d& p_world) const {
  if (convention == PoseConvention::kWorldToCamera) return rotation * p_world + translation;
  return rotation.transpose() * (p_world - translation);
}

double Pose::orthonormality_error() const {
  return (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

DepthImage::DepthImage(int w, int h, float fill)
    : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

std::size_t DepthImage::valid_count() const {
  std::size_t n = 0;
  for (float d : values) n += d > 0.0f ? 1 : 0;
  return n;
}

WorldPoint backproject_pixel(const CameraIntrinsics& intr, const Pose& pose, Pixel px,
                             double depth_m) {
  if (!(depth_m > 0.0) || !std::isfinite(depth_m)) {
    throw InvalidDepthError("backproject_pixel: depth must be positive, got " +
                            std::to_string(depth_m));
  }
  if (!(px.u >= 0.0 && px.u < intr.width && px.v >= 0.0 && px.v < intr.height)) {
    throw OutOfBoundsError("backproject_pixel: pixel (" + std::to_string(px.u) + ", " +
                           std::to_string(px.v) + ") outside " + std::to_string(intr.width) +
                           "x" + std::to_string(intr.height));
  }
  const Eigen::Vector3d cam((px.u - intr.cx) / intr.fx * depth_m,
                            (px.v - intr.cy) / intr.fy * depth_m, depth_m);
  return pose.camera_to_world(cam);
}

std::optional<Projection> project_point(const CameraIntrinsics& intr, const Pose& pose,
                                        const WorldPoint& p) {
  const Eigen::Vector3d cam = pose.world_to_camera(p);
  if (!(cam.z() > 0.0)) return std::nullopt;
  Projection out;
  out.pixel.u = intr.fx * cam.x() / cam.z() + intr.cx;
  out.pixel.v = intr.fy * cam.y() / cam.z() + intr.cy;
  out.depth = cam.z();
  return out;
}

FeatureCloud backproject_frame(const CameraFrame& frame, int stride) {
  if (stride < 1) throw InputError("backproject_frame: stride must be >= 1");
  frame.validate();
  const auto& depth = frame.depth;
  const bool has_map = frame.feature_map.has_value();
  const int dim = has_map ? frame.feature_map->depth : 3;

  std::vector<std::pair<int, int>> pixels;
  for (int y = 0; y < depth.height; y += stride) {
    for (int x = 0; x < depth.width; x += stride) {
      if (depth.valid(x, y)) pixels.emplace_back(x, y);
    }
  }

  FeatureCloud cloud;
  cloud.positions.reserve(pixels.size());
  cloud.features.resize(static_cast<Eigen::Index>(pixels.size()), dim);
  cloud.source_view.assign(pixels.size(), frame.frame_id);
  cloud.colors.reserve(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    const auto [x, y] = pixels[i];
    cloud.positions.push_back(backproject_pixel(frame.intrinsics, frame.pose,
                                                {static_cast<double>(x), static_cast<double>(y)},
                                                depth.at(x, y)));
    const Rgb c = frame.color.at(x, y);
    cloud.colors.push_back(c);
    const auto row = static_cast<Eigen::Index>(i);
    if (has_map) {
      const float* f = frame.feature_map->pixel(x, y);
      for (int d = 0; d < dim; ++d) cloud.features(row, d) = f[d];
    } else {
      for (int d = 0; d < 3; ++d) cloud.features(row, d) = c[d] / 255.0;
    }
  }
  return cloud;
}

}  // namespace dmf
