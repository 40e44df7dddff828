#include <gtest/gtest.h>

#include <random>

#include "dmf/errors.hpp"
#include "dmf/geometry.hpp"
#include "dmf/types.hpp"

using namespace dmf;

namespace {

CameraIntrinsics intr(double fx, double fy, double cx, double cy, int w, int h) {
  CameraIntrinsics k;
  k.fx = fx;
  k.fy = fy;
  k.cx = cx;
  k.cy = cy;
  k.width = w;
  k.height = h;
  return k;
}

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  Pose p;
  p.rotation = q.toRotationMatrix();
  p.translation = Eigen::Vector3d(n(rng), n(rng), n(rng));
  return p;
}

}  // namespace

TEST(Intrinsics, Validation) {
  EXPECT_NO_THROW(intr(100, 100, 50, 50, 100, 100).validate());
  EXPECT_THROW(intr(0, 100, 50, 50, 100, 100).validate(), ValidationError);
  EXPECT_THROW(intr(100, -1, 50, 50, 100, 100).validate(), ValidationError);
  EXPECT_THROW(intr(100, 100, 100, 50, 100, 100).validate(), ValidationError);
  EXPECT_THROW(intr(100, 100, 50, -0.5, 100, 100).validate(), ValidationError);
  EXPECT_THROW(intr(100, 100, 0, 0, 0, 100).validate(), ValidationError);
}

TEST(Intrinsics, ScaledHalvesEverything) {
  const auto k = intr(580, 581, 320, 240, 640, 480).scaled(320, 240);
  EXPECT_DOUBLE_EQ(k.fx, 290);
  EXPECT_DOUBLE_EQ(k.fy, 290.5);
  EXPECT_DOUBLE_EQ(k.cx, 160);
  EXPECT_DOUBLE_EQ(k.cy, 120);
  EXPECT_EQ(k.width, 320);
  EXPECT_EQ(k.height, 240);
}

TEST(Backproject, PrincipalRay) {
  const auto k = intr(100, 100, 50, 40, 100, 80);
  const auto p = backproject_pixel(k, Pose::identity(), {50, 40}, 2.0);
  EXPECT_EQ(p, Eigen::Vector3d(0, 0, 2.0));
}

TEST(Backproject, HandEvaluatedTranslation) {
  Pose pose;
  pose.translation = {1, 0, 0};
  const auto p = backproject_pixel(intr(100, 100, 50, 50, 200, 100), pose, {150, 50}, 1.0);
  EXPECT_NEAR(p.x(), 2.0, 1e-15);
  EXPECT_NEAR(p.y(), 0.0, 1e-15);
  EXPECT_NEAR(p.z(), 1.0, 1e-15);
}

TEST(Backproject, Errors) {
  const auto k = intr(100, 100, 50, 50, 100, 100);
  EXPECT_THROW(backproject_pixel(k, Pose::identity(), {10, 10}, 0.0), InvalidDepthError);
  EXPECT_THROW(backproject_pixel(k, Pose::identity(), {10, 10}, -1.0), InvalidDepthError);
  EXPECT_THROW(backproject_pixel(k, Pose::identity(), {10, 10}, std::nan("")), InvalidDepthError);
  EXPECT_THROW(backproject_pixel(k, Pose::identity(), {100, 10}, 1.0), OutOfBoundsError);
  EXPECT_THROW(backproject_pixel(k, Pose::identity(), {-0.1, 10}, 1.0), OutOfBoundsError);
  EXPECT_NO_THROW(backproject_pixel(k, Pose::identity(), {99.9, 99.9}, 1.0));
}

TEST(Project, OnAxisAndBehind) {
  const auto k = intr(100, 100, 50, 40, 100, 80);
  const auto pr = project_point(k, Pose::identity(), {0, 0, 2.0});
  ASSERT_TRUE(pr);
  EXPECT_EQ(pr->pixel.u, 50);
  EXPECT_EQ(pr->pixel.v, 40);
  EXPECT_EQ(pr->depth, 2.0);
  EXPECT_FALSE(project_point(k, Pose::identity(), {0, 0, -1.0}));
  EXPECT_FALSE(project_point(k, Pose::identity(), {1, 1, 0.0}));
  // Out-of-image points still project; bounds are the caller's business.
  EXPECT_TRUE(project_point(k, Pose::identity(), {100, 0, 1.0}));
}

TEST(Project, RoundTripRandom) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int s = 0; s < 500; ++s) {
    const int w = 32 + static_cast<int>(u01(rng) * 600);
    const int h = 32 + static_cast<int>(u01(rng) * 400);
    const auto k = intr(50 + 900 * u01(rng), 50 + 900 * u01(rng), u01(rng) * (w - 1), u01(rng) * (h - 1), w, h);
    Pose pose = random_pose(rng);
    if (s % 2) pose.convention = PoseConvention::kWorldToCamera;
    const Pixel px{u01(rng) * w * 0.999, u01(rng) * h * 0.999};
    const double d = 0.1 + 10 * u01(rng);
    const auto pr = project_point(k, pose, backproject_pixel(k, pose, px, d));
    ASSERT_TRUE(pr);
    EXPECT_NEAR(pr->pixel.u, px.u, 1e-6);
    EXPECT_NEAR(pr->pixel.v, px.v, 1e-6);
    EXPECT_LE(std::abs(pr->depth - d) / d, 1e-9);
  }
}

TEST(Pose, ConventionConsistency) {
  std::mt19937_64 rng(11);
  const auto k = intr(300, 310, 160, 120, 320, 240);
  for (int s = 0; s < 100; ++s) {
    const Pose c2w = random_pose(rng);
    const Pose w2c = c2w.inverse();
    EXPECT_EQ(w2c.convention, PoseConvention::kWorldToCamera);
    const Pixel px{static_cast<double>(s * 3 % 320), static_cast<double>(s * 7 % 240)};
    const auto a = backproject_pixel(k, c2w, px, 1.5);
    const auto b = backproject_pixel(k, w2c, px, 1.5);
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Pose, RigidInvariance) {
  std::mt19937_64 rng(13);
  const auto k = intr(300, 300, 160, 120, 320, 240);
  for (int s = 0; s < 50; ++s) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    const Pose g = random_pose(rng);  // common change of world frame
    Pose ga = a, gb = b;
    ga.rotation = g.rotation * a.rotation;
    ga.translation = g.rotation * a.translation + g.translation;
    gb.rotation = g.rotation * b.rotation;
    gb.translation = g.rotation * b.translation + g.translation;
    const double d0 = (backproject_pixel(k, a, {10, 20}, 2.0) - backproject_pixel(k, b, {300, 200}, 3.0)).norm();
    const double d1 = (backproject_pixel(k, ga, {10, 20}, 2.0) - backproject_pixel(k, gb, {300, 200}, 3.0)).norm();
    EXPECT_LE(std::abs(d0 - d1) / d0, 1e-9);
  }
}

TEST(Pose, FromMatrixValidates) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.block<3, 1>(0, 3) = Eigen::Vector3d(1, 2, 3);
  const Pose p = Pose::from_matrix(m, PoseConvention::kCameraToWorld);
  EXPECT_EQ(p.translation, Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(p.matrix(), m);

  Eigen::Matrix4d scaled = m;
  scaled.block<3, 3>(0, 0) *= 2.0;
  EXPECT_THROW(Pose::from_matrix(scaled, PoseConvention::kCameraToWorld), ValidationError);

  Eigen::Matrix4d reflect = m;
  reflect(0, 0) = -1.0;
  EXPECT_THROW(Pose::from_matrix(reflect, PoseConvention::kCameraToWorld), ValidationError);

  Eigen::Matrix4d bottom = m;
  bottom(3, 0) = 0.5;
  EXPECT_THROW(Pose::from_matrix(bottom, PoseConvention::kCameraToWorld), ValidationError);
}

TEST(Pose, LookAtPointsOpticalAxis) {
  const Eigen::Vector3d eye(2, 1, 1.5), target(0, 0, 0.5);
  const Pose p = Pose::look_at(eye, target);
  EXPECT_LE(p.orthonormality_error(), 1e-12);
  EXPECT_NEAR(p.rotation.determinant(), 1.0, 1e-12);
  const Eigen::Vector3d cam = p.world_to_camera(target);
  EXPECT_NEAR(cam.x(), 0.0, 1e-12);
  EXPECT_NEAR(cam.y(), 0.0, 1e-12);
  EXPECT_NEAR(cam.z(), (eye - target).norm(), 1e-12);
  // Straight down the up axis still yields a proper rotation.
  const Pose down = Pose::look_at({0, 0, 3}, {0, 0, 0});
  EXPECT_LE(down.orthonormality_error(), 1e-12);
  EXPECT_NEAR(down.world_to_camera({0, 0, 0}).z(), 3.0, 1e-12);
}

namespace {

CameraFrame flat_frame(int w, int h, float depth) {
  CameraFrame f;
  f.frame_id = 4;
  f.intrinsics = intr(10, 10, w / 2, h / 2, w, h);
  f.depth = DepthImage(w, h, depth);
  f.color = RgbImage(w, h, {255, 0, 51});
  return f;
}

}  // namespace

TEST(BackprojectFrame, AllZeroDepthIsEmpty) {
  const auto cloud = backproject_frame(flat_frame(4, 4, 0.0f), 1);
  EXPECT_TRUE(cloud.empty());
}

TEST(BackprojectFrame, TwoByTwoMatchesPixelwise) {
  const CameraFrame f = flat_frame(2, 2, 1.0f);
  const auto cloud = backproject_frame(f, 1);
  ASSERT_EQ(cloud.size(), 4u);
  std::size_t i = 0;
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 2; ++x, ++i) {
      EXPECT_EQ(cloud.positions[i], backproject_pixel(f.intrinsics, f.pose, {double(x), double(y)}, 1.0));
      EXPECT_EQ(cloud.source_view[i], 4);
      EXPECT_DOUBLE_EQ(cloud.features(static_cast<Eigen::Index>(i), 0), 1.0);
      EXPECT_DOUBLE_EQ(cloud.features(static_cast<Eigen::Index>(i), 2), 0.2);
    }
  }
}

TEST(BackprojectFrame, StrideBoundAndMissingDepth) {
  CameraFrame f = flat_frame(320, 240, 2.0f);
  EXPECT_EQ(backproject_frame(f, 2).size(), 160u * 120u);
  EXPECT_EQ(backproject_frame(f, 3).size(), 107u * 80u);
  f.depth.at(0, 0) = 0.0f;
  EXPECT_EQ(backproject_frame(f, 2).size(), 160u * 120u - 1);
  EXPECT_THROW(backproject_frame(f, 0), InputError);
}

TEST(BackprojectFrame, CarriesFeatureMap) {
  CameraFrame f = flat_frame(3, 2, 1.0f);
  FeatureMap m(2, 3, 5);
  for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = static_cast<float>(i);
  f.feature_map = m;
  const auto cloud = backproject_frame(f, 1);
  ASSERT_EQ(cloud.dim(), 5);
  EXPECT_EQ(cloud.features(4, 3), m.pixel(1, 1)[3]);
  f.feature_map = FeatureMap(2, 2, 5);
  EXPECT_THROW(backproject_frame(f, 1), DimensionError);
}
