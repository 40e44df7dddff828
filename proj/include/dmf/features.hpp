#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "dmf/knn.hpp"
#include "dmf/types.hpp"

namespace dmf {

enum class Aggregation { kSum, kMean };

struct FusionConfig {
  int k = 3;
  int d2 = 64;
  int d3 = 64;
  Aggregation aggregation = Aggregation::kSum;
  unsigned threads = 0;

  void validate() const;
};

Aggregation parse_aggregation(const std::string& name);
std::string to_string(Aggregation a);

struct Integration {
  FeatureMatrix features;       // N x d2
  std::size_t effective_k = 0;  // min(k, back-projected point count)
  bool clamped = false;         // true when k exceeded the available points
};

/// For every original point, aggregates the features of its k nearest
/// back-projected points (sum by default). Neighbours are added in
/// (distance, index) order. Throws InputError for an empty back-projected
/// cloud and DimensionError when its feature width differs from cfg.d2.
Integration integrate_2d(const std::vector<Eigen::Vector3d>& original, const FeatureCloud& backproj,
                         const FusionConfig& cfg);

/// Same, reusing an index built over backproj.positions.
Integration integrate_2d(const std::vector<Eigen::Vector3d>& original, const KdTree& index,
                         const FeatureMatrix& backproj_features, const FusionConfig& cfg);

/// Row-wise [f2d | f3d]. Throws DimensionError on a row-count mismatch.
FeatureMatrix fuse(const FeatureMatrix& f2d, const FeatureMatrix& f3d);

// --- 2D extractors (frozen stand-ins for a pretrained image network) ------

class FeatureExtractor2D {
 public:
  virtual ~FeatureExtractor2D() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  /// H x W x dim() map for the frame; deterministic.
  virtual FeatureMap extract(const CameraFrame& frame) const = 0;
};

/// Channels: R, G, B, luminance, luminance gradient x and y (central
/// differences, clamped at the border), 3x3 local mean and 3x3 local standard
/// deviation of luminance. Truncated or zero-padded to `dim`.
class FilterBankExtractor2D final : public FeatureExtractor2D {
 public:
  static constexpr int kBaseChannels = 8;
  explicit FilterBankExtractor2D(int dim);
  int dim() const override { return dim_; }
  std::string name() const override { return "filterbank"; }
  FeatureMap extract(const CameraFrame& frame) const override;

 private:
  int dim_;
};

/// Fixed Gaussian projection of the (2r+1)^2 RGB patch around each pixel.
class RandomProjectionExtractor2D final : public FeatureExtractor2D {
 public:
  RandomProjectionExtractor2D(int dim, std::uint64_t seed, int patch_radius = 1);
  int dim() const override { return dim_; }
  std::string name() const override { return "random"; }
  FeatureMap extract(const CameraFrame& frame) const override;

 private:
  int dim_;
  int radius_;
  Eigen::MatrixXd weights_;  // dim x patch values
};

/// Reads <directory>/<frame_id>.fmap as produced by an external network.
class ExternalExtractor2D final : public FeatureExtractor2D {
 public:
  ExternalExtractor2D(std::filesystem::path directory, int dim);
  int dim() const override { return dim_; }
  std::string name() const override { return "external"; }
  FeatureMap extract(const CameraFrame& frame) const override;

 private:
  std::filesystem::path directory_;
  int dim_;
};

/// Copy of `frame` with the extractor's feature map attached.
CameraFrame attach_features(const CameraFrame& frame, const FeatureExtractor2D& extractor);

// --- 3D extractors ---------------------------------------------------------

class FeatureExtractor3D {
 public:
  virtual ~FeatureExtractor3D() = default;
  virtual int dim() const = 0;
  virtual std::string name() const = 0;
  /// N x dim() features for the cloud; deterministic.
  virtual FeatureMatrix extract(const PointCloud& cloud) const = 0;
};

/// Channels: height above the lowest point, neighbour count within `radius`,
/// and |n_z| of the PCA normal over the k nearest neighbours. Truncated or
/// zero-padded to `dim`.
class GeometricExtractor3D final : public FeatureExtractor3D {
 public:
  static constexpr int kBaseChannels = 3;
  explicit GeometricExtractor3D(int dim, int neighbors = 16, double radius = 0.1);
  int dim() const override { return dim_; }
  std::string name() const override { return "geometric"; }
  FeatureMatrix extract(const PointCloud& cloud) const override;

 private:
  int dim_;
  int neighbors_;
  double radius_;
};

/// tanh(W p + b) with a seeded Gaussian W and b.
class RandomProjectionExtractor3D final : public FeatureExtractor3D {
 public:
  RandomProjectionExtractor3D(int dim, std::uint64_t seed);
  int dim() const override { return dim_; }
  std::string name() const override { return "random"; }
  FeatureMatrix extract(const PointCloud& cloud) const override;

 private:
  int dim_;
  Eigen::MatrixXd weights_;
  Eigen::VectorXd bias_;
};

/// Point colors scaled to [0, 1], zero-padded to `dim`.
class PassThroughRgbExtractor3D final : public FeatureExtractor3D {
 public:
  explicit PassThroughRgbExtractor3D(int dim);
  int dim() const override { return dim_; }
  std::string name() const override { return "rgb"; }
  FeatureMatrix extract(const PointCloud& cloud) const override;

 private:
  int dim_;
};

/// "filterbank" | "random" | "external"; returns nullptr for "none".
std::unique_ptr<FeatureExtractor2D> make_extractor_2d(const std::string& name, int dim,
                                                      std::uint64_t seed,
                                                      const std::filesystem::path& external_dir);
/// "geometric" | "random" | "rgb"; returns nullptr for "none".
std::unique_ptr<FeatureExtractor3D> make_extractor_3d(const std::string& name, int dim,
                                                      std::uint64_t seed);

}  // namespace dmf
