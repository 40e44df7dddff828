#include "dmf/features.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>

#include "dmf/errors.hpp"
#include "dmf/formats.hpp"
#include "dmf/parallel.hpp"

namespace dmf {

void FusionConfig::validate() const {
  if (k < 1) throw InputError("fusion: k must be >= 1");
  if (d2 < 1 || d3 < 1) throw InputError("fusion: feature dimensions must be >= 1");
}

Aggregation parse_aggregation(const std::string& name) {
  if (name == "sum") return Aggregation::kSum;
  if (name == "mean") return Aggregation::kMean;
  throw InputError("unknown aggregation '" + name + "'");
}

std::string to_string(Aggregation a) { return a == Aggregation::kSum ? "sum" : "mean"; }

Integration integrate_2d(const std::vector<Eigen::Vector3d>& original, const KdTree& index,
                         const FeatureMatrix& backproj_features, const FusionConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(backproj_features.rows()) != index.size()) {
    throw DimensionError("integrate_2d: feature rows do not match indexed points");
  }
  if (backproj_features.cols() != cfg.d2) {
    throw DimensionError("integrate_2d: back-projected features have D=" +
                         std::to_string(backproj_features.cols()) + ", expected d2=" +
                         std::to_string(cfg.d2));
  }
  Integration out;
  out.effective_k = std::min<std::size_t>(static_cast<std::size_t>(cfg.k), index.size());
  out.clamped = out.effective_k < static_cast<std::size_t>(cfg.k);
  out.features = FeatureMatrix::Zero(static_cast<Eigen::Index>(original.size()), cfg.d2);
  const double scale = cfg.aggregation == Aggregation::kMean ? 1.0 / static_cast<double>(out.effective_k) : 1.0;
  parallel_for(
      original.size(),
      [&](std::size_t i) {
        const auto row = static_cast<Eigen::Index>(i);
        for (const Neighbor& n : index.knn(original[i], out.effective_k)) {
          out.features.row(row) += backproj_features.row(static_cast<Eigen::Index>(n.index));
        }
        if (cfg.aggregation == Aggregation::kMean) out.features.row(row) *= scale;
      },
      cfg.threads);
  return out;
}

Integration integrate_2d(const std::vector<Eigen::Vector3d>& original, const FeatureCloud& backproj,
                         const FusionConfig& cfg) {
  cfg.validate();
  if (backproj.empty()) throw InputError("integrate_2d: back-projected cloud is empty");
  backproj.validate();
  const KdTree index(backproj.positions);
  return integrate_2d(original, index, backproj.features, cfg);
}

FeatureMatrix fuse(const FeatureMatrix& f2d, const FeatureMatrix& f3d) {
  if (f2d.rows() != f3d.rows()) {
    throw DimensionError("fuse: f2d has " + std::to_string(f2d.rows()) + " rows, f3d has " +
                         std::to_string(f3d.rows()));
  }
  FeatureMatrix out(f2d.rows(), f2d.cols() + f3d.cols());
  out.leftCols(f2d.cols()) = f2d;
  out.rightCols(f3d.cols()) = f3d;
  return out;
}

// --- 2D --------------------------------------------------------------------

FilterBankExtractor2D::FilterBankExtractor2D(int dim) : dim_(dim) {
  if (dim < 1) throw InputError("filterbank: dim must be >= 1");
}

FeatureMap FilterBankExtractor2D::extract(const CameraFrame& frame) const {
  const RgbImage& img = frame.color;
  const int w = img.width;
  const int h = img.height;
  std::vector<double> lum(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rgb c = img.at(x, y);
      lum[static_cast<std::size_t>(y) * w + x] = (0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]) / 255.0;
    }
  }
  const auto l = [&](int x, int y) {
    x = std::clamp(x, 0, w - 1);
    y = std::clamp(y, 0, h - 1);
    return lum[static_cast<std::size_t>(y) * w + x];
  };

  FeatureMap map(h, w, dim_);
  std::array<double, kBaseChannels> base{};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rgb c = img.at(x, y);
      double sum = 0.0, sum_sq = 0.0;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const double v = l(x + dx, y + dy);
          sum += v;
          sum_sq += v * v;
        }
      }
      const double mean = sum / 9.0;
      base = {c[0] / 255.0,
              c[1] / 255.0,
              c[2] / 255.0,
              l(x, y),
              (l(x + 1, y) - l(x - 1, y)) / 2.0,
              (l(x, y + 1) - l(x, y - 1)) / 2.0,
              mean,
              std::sqrt(std::max(0.0, sum_sq / 9.0 - mean * mean))};
      float* out = map.pixel(x, y);
      for (int d = 0; d < std::min(dim_, kBaseChannels); ++d) out[d] = static_cast<float>(base[d]);
    }
  }
  return map;
}

RandomProjectionExtractor2D::RandomProjectionExtractor2D(int dim, std::uint64_t seed, int patch_radius)
    : dim_(dim), radius_(patch_radius) {
  if (dim < 1) throw InputError("random 2D extractor: dim must be >= 1");
  if (patch_radius < 0) throw InputError("random 2D extractor: patch radius must be >= 0");
  const int side = 2 * radius_ + 1;
  const int inputs = side * side * 3;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(inputs)));
  weights_.resize(dim_, inputs);
  for (Eigen::Index r = 0; r < weights_.rows(); ++r) {
    for (Eigen::Index c = 0; c < weights_.cols(); ++c) weights_(r, c) = gauss(rng);
  }
}

FeatureMap RandomProjectionExtractor2D::extract(const CameraFrame& frame) const {
  const RgbImage& img = frame.color;
  FeatureMap map(img.height, img.width, dim_);
  Eigen::VectorXd patch(weights_.cols());
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      Eigen::Index j = 0;
      for (int dy = -radius_; dy <= radius_; ++dy) {
        for (int dx = -radius_; dx <= radius_; ++dx) {
          const Rgb c = img.at(std::clamp(x + dx, 0, img.width - 1), std::clamp(y + dy, 0, img.height - 1));
          for (int ch = 0; ch < 3; ++ch) patch[j++] = c[ch] / 255.0;
        }
      }
      const Eigen::VectorXd f = weights_ * patch;
      float* out = map.pixel(x, y);
      for (int d = 0; d < dim_; ++d) out[d] = static_cast<float>(f[d]);
    }
  }
  return map;
}

ExternalExtractor2D::ExternalExtractor2D(std::filesystem::path directory, int dim)
    : directory_(std::move(directory)), dim_(dim) {
  if (dim < 1) throw InputError("external extractor: dim must be >= 1");
}

FeatureMap ExternalExtractor2D::extract(const CameraFrame& frame) const {
  const auto path = directory_ / (std::to_string(frame.frame_id) + ".fmap");
  if (!std::filesystem::exists(path)) throw LoadError("missing external feature map: " + path.string());
  FeatureMap map = read_feature_map(path);
  if (map.depth != dim_) {
    throw DimensionError(path.string() + ": D=" + std::to_string(map.depth) + ", expected " +
                         std::to_string(dim_));
  }
  if (map.width != frame.intrinsics.width || map.height != frame.intrinsics.height) {
    throw DimensionError(path.string() + ": feature map size does not match the frame");
  }
  return map;
}

CameraFrame attach_features(const CameraFrame& frame, const FeatureExtractor2D& extractor) {
  CameraFrame out = frame;
  out.feature_map = extractor.extract(frame);
  out.validate();
  return out;
}

// --- 3D --------------------------------------------------------------------

GeometricExtractor3D::GeometricExtractor3D(int dim, int neighbors, double radius)
    : dim_(dim), neighbors_(neighbors), radius_(radius) {
  if (dim < 1) throw InputError("geometric extractor: dim must be >= 1");
  if (neighbors < 3) throw InputError("geometric extractor: needs >= 3 neighbours for normals");
  if (!(radius > 0.0)) throw InputError("geometric extractor: radius must be positive");
}

FeatureMatrix GeometricExtractor3D::extract(const PointCloud& cloud) const {
  FeatureMatrix out = FeatureMatrix::Zero(static_cast<Eigen::Index>(cloud.size()), dim_);
  if (cloud.empty()) return out;
  const KdTree index(cloud.positions);
  double floor_z = cloud.positions.front().z();
  for (const auto& p : cloud.positions) floor_z = std::min(floor_z, p.z());

  parallel_for(cloud.size(), [&](std::size_t i) {
    const Eigen::Vector3d& p = cloud.positions[i];
    const auto nn = index.knn(p, static_cast<std::size_t>(neighbors_));
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (const auto& n : nn) mean += cloud.positions[n.index];
    mean /= static_cast<double>(nn.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& n : nn) {
      const Eigen::Vector3d d = cloud.positions[n.index] - mean;
      cov += d * d.transpose();
    }
    double normal_z = 0.0;
    if (nn.size() >= 3) {
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
      normal_z = std::abs(eig.eigenvectors().col(0).z());
    }
    const std::array<double, kBaseChannels> base = {
        p.z() - floor_z, static_cast<double>(index.radius_search(p, radius_).size()), normal_z};
    const auto row = static_cast<Eigen::Index>(i);
    for (int d = 0; d < std::min(dim_, kBaseChannels); ++d) out(row, d) = base[d];
  });
  return out;
}

RandomProjectionExtractor3D::RandomProjectionExtractor3D(int dim, std::uint64_t seed) : dim_(dim) {
  if (dim < 1) throw InputError("random 3D extractor: dim must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  weights_.resize(dim_, 3);
  bias_.resize(dim_);
  for (int r = 0; r < dim_; ++r) {
    for (int c = 0; c < 3; ++c) weights_(r, c) = gauss(rng);
    bias_[r] = gauss(rng);
  }
}

FeatureMatrix RandomProjectionExtractor3D::extract(const PointCloud& cloud) const {
  FeatureMatrix out(static_cast<Eigen::Index>(cloud.size()), dim_);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = (weights_ * cloud.positions[i] + bias_).array().tanh().transpose();
  }
  return out;
}

PassThroughRgbExtractor3D::PassThroughRgbExtractor3D(int dim) : dim_(dim) {
  if (dim < 1) throw InputError("rgb 3D extractor: dim must be >= 1");
}

FeatureMatrix PassThroughRgbExtractor3D::extract(const PointCloud& cloud) const {
  if (!cloud.has_colors()) throw InputError("rgb 3D extractor: cloud has no colors");
  FeatureMatrix out = FeatureMatrix::Zero(static_cast<Eigen::Index>(cloud.size()), dim_);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int c = 0; c < std::min(dim_, 3); ++c) out(static_cast<Eigen::Index>(i), c) = cloud.colors[i][c] / 255.0;
  }
  return out;
}

std::unique_ptr<FeatureExtractor2D> make_extractor_2d(const std::string& name, int dim,
                                                      std::uint64_t seed,
                                                      const std::filesystem::path& external_dir) {
  if (name == "none") return nullptr;
  if (name == "filterbank") return std::make_unique<FilterBankExtractor2D>(dim);
  if (name == "random") return std::make_unique<RandomProjectionExtractor2D>(dim, seed);
  if (name == "external") {
    if (external_dir.empty()) throw InputError("external 2D features need a feature directory");
    return std::make_unique<ExternalExtractor2D>(external_dir, dim);
  }
  throw InputError("unknown 2D extractor '" + name + "'");
}

std::unique_ptr<FeatureExtractor3D> make_extractor_3d(const std::string& name, int dim,
                                                      std::uint64_t seed) {
  if (name == "none") return nullptr;
  if (name == "geometric") return std::make_unique<GeometricExtractor3D>(dim);
  if (name == "random") return std::make_unique<RandomProjectionExtractor3D>(dim, seed);
  if (name == "rgb") return std::make_unique<PassThroughRgbExtractor3D>(dim);
  throw InputError("unknown 3D extractor '" + name + "'");
}

}  // namespace dmf
