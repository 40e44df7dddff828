#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "dmf/errors.hpp"
#include "dmf/features.hpp"
#include "dmf/formats.hpp"
#include "dmf/knn.hpp"
#include "test_support.hpp"

using namespace dmf;
using dmf::testing::brute_knn;

namespace {

std::vector<Eigen::Vector3d> random_points(std::mt19937_64& rng, std::size_t n, double extent = 1.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  std::vector<Eigen::Vector3d> pts(n);
  for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
  return pts;
}

FeatureMatrix random_features(std::mt19937_64& rng, std::size_t n, int d) {
  std::normal_distribution<double> g;
  FeatureMatrix f(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = g(rng);
  return f;
}

FusionConfig cfg(int k, int d2) {
  FusionConfig c;
  c.k = k;
  c.d2 = d2;
  return c;
}

}  // namespace

// --- kd-tree ----------------------------------------------------------------

TEST(KdTree, SinglePoint) {
  const KdTree t({Eigen::Vector3d(1, 2, 3)});
  const auto r = t.knn({-10, 4, 0.5}, 1);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].index, 0u);
  EXPECT_EQ(r[0].distance_sq, 11 * 11 + 4 + 2.5 * 2.5);
  EXPECT_EQ(t.knn({0, 0, 0}, 5).size(), 1u);
}

TEST(KdTree, MatchesBruteForce) {
  std::mt19937_64 rng(1);
  for (std::size_t n : {1000u, 37u, 2000u}) {
    const auto pts = random_points(rng, n);
    const KdTree tree(pts);
    for (const auto& q : random_points(rng, 100, 1.3)) {
      for (std::size_t k : {1u, 3u, 5u, 16u}) {
        const auto got = tree.knn(q, k);
        const auto want = brute_knn(pts, q, k);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
          EXPECT_EQ(got[i].index, want[i].index);
          EXPECT_EQ(got[i].distance_sq, want[i].distance_sq);
        }
      }
    }
  }
}

TEST(KdTree, DuplicatesAndTies) {
  std::vector<Eigen::Vector3d> pts(50, Eigen::Vector3d(0.5, 0.5, 0.5));
  for (int i = 0; i < 30; ++i) pts.emplace_back(i * 0.1, 0, 0);
  const KdTree tree(pts, 4);
  const auto r = tree.knn({0.5, 0.5, 0.5}, 50);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(r[i].index, i);
  // Grid points at equal distance resolve by index.
  std::vector<Eigen::Vector3d> grid;
  for (int x = -2; x <= 2; ++x)
    for (int y = -2; y <= 2; ++y)
      for (int z = -2; z <= 2; ++z) grid.emplace_back(x, y, z);
  const KdTree g(grid, 2);
  for (std::size_t k : {1u, 7u, 19u, 27u}) {
    const auto got = g.knn({0, 0, 0}, k);
    const auto want = brute_knn(grid, {0, 0, 0}, k);
    for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(got[i].index, want[i].index);
  }
}

TEST(KdTree, RadiusSearch) {
  std::mt19937_64 rng(2);
  const auto pts = random_points(rng, 500);
  const KdTree tree(pts);
  for (const auto& q : random_points(rng, 20)) {
    const auto got = tree.radius_search(q, 0.3);
    auto want = brute_knn(pts, q, pts.size());
    while (!want.empty() && want.back().distance_sq > 0.09) want.pop_back();
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].index, want[i].index);
  }
}

TEST(KdTree, EmptyRejected) { EXPECT_THROW(KdTree(std::vector<Eigen::Vector3d>{}), InputError); }

// --- integration and fusion -------------------------------------------------------

TEST(Integrate, IdentityWithK1) {
  std::mt19937_64 rng(3);
  const auto pts = random_points(rng, 40);
  FeatureCloud bp;
  bp.positions = pts;
  bp.features.resize(40, 1);
  for (int i = 0; i < 40; ++i) bp.features(i, 0) = i;
  const auto r = integrate_2d(pts, bp, cfg(1, 1));
  for (int i = 0; i < 40; ++i) EXPECT_EQ(r.features(i, 0), i);
}

TEST(Integrate, OnesSumToK) {
  std::mt19937_64 rng(4);
  FeatureCloud bp;
  bp.positions = random_points(rng, 30);
  bp.features = FeatureMatrix::Ones(30, 4);
  const auto r = integrate_2d(random_points(rng, 12), bp, cfg(3, 4));
  EXPECT_TRUE((r.features.array() == 3.0).all());
  EXPECT_EQ(r.effective_k, 3u);
  EXPECT_FALSE(r.clamped);
  FusionConfig mean = cfg(3, 4);
  mean.aggregation = Aggregation::kMean;
  EXPECT_TRUE((integrate_2d(random_points(rng, 5), bp, mean).features.array() == 1.0).all());
}

TEST(Integrate, MatchesBruteForceExactly) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto original = random_points(rng, 50);
    FeatureCloud bp;
    bp.positions = random_points(rng, 200);
    bp.features = random_features(rng, 200, 8);
    const auto r = integrate_2d(original, bp, cfg(3, 8));
    const Eigen::MatrixXd want = dmf::testing::brute_integrate(original, bp.positions, bp.features, 3);
    EXPECT_EQ(Eigen::MatrixXd(r.features), want);
  }
}

TEST(Integrate, PermutationInvariant) {
  std::mt19937_64 rng(6);
  const auto original = random_points(rng, 60);
  FeatureCloud bp;
  bp.positions = random_points(rng, 300);
  bp.features = random_features(rng, 300, 5);
  std::vector<std::size_t> perm(300);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  FeatureCloud shuffled;
  shuffled.features.resize(300, 5);
  for (std::size_t i = 0; i < 300; ++i) {
    shuffled.positions.push_back(bp.positions[perm[i]]);
    shuffled.features.row(static_cast<Eigen::Index>(i)) = bp.features.row(static_cast<Eigen::Index>(perm[i]));
  }
  EXPECT_EQ(integrate_2d(original, bp, cfg(3, 5)).features, integrate_2d(original, shuffled, cfg(3, 5)).features);
}

TEST(Integrate, TranslationLocality) {
  std::mt19937_64 rng(7);
  auto original = random_points(rng, 60);
  FeatureCloud bp;
  bp.positions = random_points(rng, 300);
  bp.features = random_features(rng, 300, 5);
  const FeatureMatrix before = integrate_2d(original, bp, cfg(3, 5)).features;
  const Eigen::Vector3d shift(12.5, -3.25, 0.75);
  for (auto& p : original) p += shift;
  for (auto& p : bp.positions) p += shift;
  const FeatureMatrix after = integrate_2d(original, bp, cfg(3, 5)).features;
  EXPECT_LE((before - after).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Integrate, ClampsKAndThreadIndependent) {
  std::mt19937_64 rng(8);
  FeatureCloud bp;
  bp.positions = random_points(rng, 2);
  bp.features = random_features(rng, 2, 3);
  const auto r = integrate_2d(random_points(rng, 4), bp, cfg(5, 3));
  EXPECT_TRUE(r.clamped);
  EXPECT_EQ(r.effective_k, 2u);
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(r.features.row(i), (bp.features.row(0) + bp.features.row(1)).eval()) ;
  }

  const auto original = random_points(rng, 500);
  FeatureCloud big;
  big.positions = random_points(rng, 900);
  big.features = random_features(rng, 900, 6);
  FusionConfig one = cfg(3, 6), many = cfg(3, 6);
  one.threads = 1;
  many.threads = 5;
  EXPECT_EQ(integrate_2d(original, big, one).features, integrate_2d(original, big, many).features);
}

TEST(Integrate, Errors) {
  FeatureCloud empty;
  empty.features.resize(0, 4);
  EXPECT_THROW(integrate_2d({Eigen::Vector3d::Zero()}, empty, cfg(3, 4)), InputError);
  FeatureCloud bp;
  bp.positions = {Eigen::Vector3d::Zero()};
  bp.features = FeatureMatrix::Ones(1, 3);
  EXPECT_THROW(integrate_2d({Eigen::Vector3d::Zero()}, bp, cfg(3, 4)), DimensionError);
  EXPECT_THROW(cfg(0, 4).validate(), InputError);
  EXPECT_THROW(parse_aggregation("max"), InputError);
}

TEST(Fuse, ConcatenatesTwoDFirst) {
  std::mt19937_64 rng(9);
  const FeatureMatrix a = random_features(rng, 10, 64);
  const FeatureMatrix b = random_features(rng, 10, 64);
  const FeatureMatrix f = fuse(a, b);
  EXPECT_EQ(f.cols(), 128);
  EXPECT_EQ(FeatureMatrix(f.leftCols(64)), a);
  EXPECT_EQ(FeatureMatrix(f.rightCols(64)), b);
  const FeatureMatrix z = fuse(a, FeatureMatrix::Zero(10, 3));
  EXPECT_TRUE((z.rightCols(3).array() == 0.0).all());
  EXPECT_THROW(fuse(a, FeatureMatrix::Zero(9, 3)), DimensionError);
}

// --- extractors -----------------------------------------------------------------------

namespace {

CameraFrame frame(int w, int h, Rgb fill) {
  CameraFrame f;
  f.frame_id = 3;
  f.intrinsics.width = w;
  f.intrinsics.height = h;
  f.intrinsics.fx = f.intrinsics.fy = 50;
  f.intrinsics.cx = w / 2;
  f.intrinsics.cy = h / 2;
  f.depth = DepthImage(w, h, 1.0f);
  f.color = RgbImage(w, h, fill);
  return f;
}

}  // namespace

TEST(Extract2D, FilterBankConstantImage) {
  const FilterBankExtractor2D ex(10);
  const FeatureMap m = ex.extract(frame(9, 7, {51, 102, 204}));
  ASSERT_EQ(m.depth, 10);
  ASSERT_EQ(m.width, 9);
  for (int y = 0; y < 7; ++y) {
    for (int x = 0; x < 9; ++x) {
      const float* p = m.pixel(x, y);
      EXPECT_FLOAT_EQ(p[0], 0.2f);
      EXPECT_FLOAT_EQ(p[2], 0.8f);
      EXPECT_EQ(p[4], 0.0f);  // gradient x
      EXPECT_EQ(p[5], 0.0f);  // gradient y
      EXPECT_NEAR(p[6], p[3], 1e-6);
      EXPECT_NEAR(p[7], 0.0f, 1e-6);
      EXPECT_EQ(p[8], 0.0f);  // padding
    }
  }
  EXPECT_EQ(FilterBankExtractor2D(3).extract(frame(4, 4, {0, 0, 0})).depth, 3);
}

TEST(Extract2D, FilterBankGradientSign) {
  CameraFrame f = frame(5, 3, {0, 0, 0});
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 5; ++x) f.color.set(x, y, {static_cast<std::uint8_t>(x * 50), static_cast<std::uint8_t>(x * 50), static_cast<std::uint8_t>(x * 50)});
  const FeatureMap m = FilterBankExtractor2D(8).extract(f);
  EXPECT_GT(m.pixel(2, 1)[4], 0.0f);
  EXPECT_EQ(m.pixel(2, 1)[5], 0.0f);
}

TEST(Extract2D, RandomProjectionSeeded) {
  CameraFrame f = frame(12, 8, {0, 0, 0});
  std::mt19937_64 rng(10);
  for (auto& c : f.color.data) c = static_cast<std::uint8_t>(rng());
  const auto a = RandomProjectionExtractor2D(16, 5).extract(f);
  const auto b = RandomProjectionExtractor2D(16, 5).extract(f);
  const auto c = RandomProjectionExtractor2D(16, 6).extract(f);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  EXPECT_EQ(a.depth, 16);
}

TEST(Extract2D, ExternalRoundTrip) {
  dmf::testing::TempDir dir;
  const CameraFrame f = frame(6, 4, {1, 2, 3});
  FeatureMap m(4, 6, 5);
  for (std::size_t i = 0; i < m.values.size(); ++i) m.values[i] = static_cast<float>(i) * 0.5f;
  write_feature_map(dir / "3.fmap", m);
  const ExternalExtractor2D ex(dir.path(), 5);
  EXPECT_EQ(ex.extract(f), m);
  const CameraFrame withf = attach_features(f, ex);
  ASSERT_TRUE(withf.feature_map);
  EXPECT_EQ(*withf.feature_map, m);
  EXPECT_THROW(ExternalExtractor2D(dir.path(), 4).extract(f), DimensionError);
  CameraFrame other = f;
  other.frame_id = 4;
  EXPECT_THROW(ex.extract(other), LoadError);
}

TEST(Extract2D, Factory) {
  EXPECT_EQ(make_extractor_2d("none", 8, 0, {}), nullptr);
  EXPECT_EQ(make_extractor_2d("filterbank", 8, 0, {})->name(), "filterbank");
  EXPECT_EQ(make_extractor_2d("random", 8, 0, {})->dim(), 8);
  EXPECT_THROW(make_extractor_2d("external", 8, 0, {}), InputError);
  EXPECT_THROW(make_extractor_2d("unet", 8, 0, {}), InputError);
  EXPECT_EQ(make_extractor_3d("none", 8, 0), nullptr);
  EXPECT_EQ(make_extractor_3d("geometric", 8, 0)->dim(), 8);
  EXPECT_THROW(make_extractor_3d("pointnet", 8, 0), InputError);
}

TEST(Extract3D, GeometricChannels) {
  // A flat 1 m square at z = 0.2 plus a single raised point.
  PointCloud c;
  for (int x = 0; x < 20; ++x)
    for (int y = 0; y < 20; ++y) c.positions.emplace_back(x * 0.05, y * 0.05, 0.2);
  c.positions.emplace_back(0.5, 0.5, 1.2);
  const FeatureMatrix f = GeometricExtractor3D(4).extract(c);
  ASSERT_EQ(f.rows(), 401);
  ASSERT_EQ(f.cols(), 4);
  EXPECT_EQ(f(0, 0), 0.0);
  EXPECT_NEAR(f(400, 0), 1.0, 1e-12);
  EXPECT_NEAR(f(210, 2), 1.0, 1e-9);  // horizontal plane: |n_z| = 1
  EXPECT_GT(f(210, 1), f(0, 1));      // interior is denser than a corner
  EXPECT_EQ(f(5, 3), 0.0);
  EXPECT_EQ(GeometricExtractor3D(2).extract(c).cols(), 2);
}

TEST(Extract3D, RandomAndRgb) {
  std::mt19937_64 rng(11);
  PointCloud c;
  c.positions = random_points(rng, 30);
  EXPECT_EQ(RandomProjectionExtractor3D(6, 1).extract(c), RandomProjectionExtractor3D(6, 1).extract(c));
  EXPECT_NE(RandomProjectionExtractor3D(6, 1).extract(c), RandomProjectionExtractor3D(6, 2).extract(c));
  EXPECT_LE(RandomProjectionExtractor3D(6, 1).extract(c).cwiseAbs().maxCoeff(), 1.0);
  EXPECT_THROW(PassThroughRgbExtractor3D(4).extract(c), InputError);
  c.colors.assign(30, Rgb{255, 0, 51});
  const FeatureMatrix f = PassThroughRgbExtractor3D(4).extract(c);
  EXPECT_EQ(f(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(f(0, 2), 0.2);
  EXPECT_EQ(f(0, 3), 0.0);
}
