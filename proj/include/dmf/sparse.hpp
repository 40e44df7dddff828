#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "dmf/types.hpp"

namespace dmf {

struct VoxelGridSpec {
  double voxel_size = 0.05;
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();

  void validate() const;
};

using VoxelCoord = std::array<std::int32_t, 3>;

struct VoxelHash {
  std::size_t operator()(const VoxelCoord& c) const {
    return static_cast<std::size_t>(static_cast<std::uint32_t>(c[0]) * 73856093u ^
                                    static_cast<std::uint32_t>(c[1]) * 19349669u ^
                                    static_cast<std::uint32_t>(c[2]) * 83492791u);
  }
};

struct SparseTensor {
  std::vector<VoxelCoord> coords;       // unique
  FeatureMatrix features;               // one row per voxel
  VoxelGridSpec spec;
  std::vector<std::size_t> point_map;   // input point -> voxel row
  std::vector<int> labels;              // optional per-voxel majority label

  std::size_t size() const { return coords.size(); }
  int channels() const { return static_cast<int>(features.cols()); }

  /// Throws DimensionError/InputError if rows disagree, coordinates repeat or
  /// the point map points outside the tensor.
  void validate() const;
};

/// coord = floor((p - origin) / voxel_size) per axis. Voxel features are the
/// mean of member features; labels (when given) are the majority vote with
/// ties going to the smallest class id. Voxels come out in lexicographic
/// coordinate order. Throws InputError for empty or non-finite input.
SparseTensor voxelize(const std::vector<Eigen::Vector3d>& points, const FeatureMatrix& features,
                      std::span<const int> labels, const VoxelGridSpec& spec);

/// Number of input points per voxel.
std::vector<std::size_t> voxel_counts(const SparseTensor& tensor);

/// The 3x3x3 neighbourhood. Offset o = (dx+1)*9 + (dy+1)*3 + (dz+1); the
/// center is 13 and offset 26 - o is the mirror of o.
inline constexpr int kKernelVolume = 27;
inline constexpr int kCenterOffset = 13;
VoxelCoord kernel_offset(int o);

/// For each voxel and offset, the row of the occupied neighbour or -1.
class KernelMap {
 public:
  explicit KernelMap(std::span<const VoxelCoord> coords);

  std::size_t size() const { return size_; }
  std::int32_t neighbor(std::size_t voxel, int offset) const {
    return table_[voxel * kKernelVolume + static_cast<std::size_t>(offset)];
  }

 private:
  std::size_t size_;
  std::vector<std::int32_t> table_;
};

/// 3x3x3 submanifold convolution weights. Block o of `weights` (rows
/// o*c_in .. (o+1)*c_in) maps a neighbour's features to the output channels.
using WeightMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct SparseConvLayer {
  int c_in = 0;
  int c_out = 0;
  WeightMatrix weights;     // (27 * c_in) x c_out
  Eigen::VectorXd bias;     // c_out

  static SparseConvLayer zeros(int c_in, int c_out);
  auto block(int o) { return weights.middleRows(static_cast<Eigen::Index>(o) * c_in, c_in); }
  auto block(int o) const { return weights.middleRows(static_cast<Eigen::Index>(o) * c_in, c_in); }
};

/// out(v) = bias + sum over offsets o of W_o^T in(v + o) for occupied v + o.
/// Offsets are accumulated in ascending order so results do not depend on
/// `threads`.
FeatureMatrix sparse_conv(const FeatureMatrix& input, const KernelMap& map,
                          const SparseConvLayer& layer, unsigned threads = 0);

/// Output lives on the input's coordinates. Throws DimensionError when the
/// layer's c_in differs from the tensor's channel count.
SparseTensor sparse_conv(const SparseTensor& input, const SparseConvLayer& layer, unsigned threads = 0);

/// Per-row argmax; ties go to the smallest class id.
std::vector<int> argmax_rows(const FeatureMatrix& logits);

/// Every point inherits the argmax class of its voxel.
std::vector<int> devoxelize(const FeatureMatrix& voxel_logits, std::span<const std::size_t> point_map);

}  // namespace dmf
