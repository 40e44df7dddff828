#include "dmf/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

#include "dmf/errors.hpp"
#include "dmf/parallel.hpp"

namespace dmf {

void VoxelGridSpec::validate() const {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) throw InputError("voxel_size must be positive");
  if (!origin.allFinite()) throw InputError("voxel grid origin must be finite");
}

void SparseTensor::validate() const {
  if (static_cast<std::size_t>(features.rows()) != coords.size()) {
    throw DimensionError("sparse tensor: feature rows != voxel count");
  }
  if (!labels.empty() && labels.size() != coords.size()) {
    throw DimensionError("sparse tensor: label count != voxel count");
  }
  std::unordered_map<VoxelCoord, std::size_t, VoxelHash> seen;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (!seen.emplace(coords[i], i).second) throw InputError("sparse tensor: duplicate coordinate");
  }
  for (std::size_t v : point_map) {
    if (v >= coords.size()) throw InputError("sparse tensor: point map refers to a missing voxel");
  }
}

SparseTensor voxelize(const std::vector<Eigen::Vector3d>& points, const FeatureMatrix& features,
                      std::span<const int> labels, const VoxelGridSpec& spec) {
  spec.validate();
  if (points.empty()) throw InputError("voxelize: no points");
  if (static_cast<std::size_t>(features.rows()) != points.size()) {
    throw DimensionError("voxelize: feature rows != point count");
  }
  if (!labels.empty() && labels.size() != points.size()) {
    throw DimensionError("voxelize: label count != point count");
  }

  std::vector<VoxelCoord> point_coords(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) throw InputError("voxelize: non-finite coordinate at point " + std::to_string(i));
    for (int a = 0; a < 3; ++a) {
      const double q = std::floor((points[i][a] - spec.origin[a]) / spec.voxel_size);
      if (q < std::numeric_limits<std::int32_t>::min() || q > std::numeric_limits<std::int32_t>::max()) {
        throw InputError("voxelize: coordinate out of the int32 voxel range");
      }
      point_coords[i][a] = static_cast<std::int32_t>(q);
    }
  }

  std::vector<VoxelCoord> unique = point_coords;
  std::sort(unique.begin(), unique.end());
  unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
  std::unordered_map<VoxelCoord, std::size_t, VoxelHash> row_of;
  row_of.reserve(unique.size());
  for (std::size_t v = 0; v < unique.size(); ++v) row_of.emplace(unique[v], v);

  SparseTensor t;
  t.spec = spec;
  t.coords = std::move(unique);
  t.point_map.resize(points.size());
  t.features = FeatureMatrix::Zero(static_cast<Eigen::Index>(t.coords.size()), features.cols());
  std::vector<std::size_t> counts(t.coords.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::size_t v = row_of.at(point_coords[i]);
    t.point_map[i] = v;
    ++counts[v];
    t.features.row(static_cast<Eigen::Index>(v)) += features.row(static_cast<Eigen::Index>(i));
  }
  for (std::size_t v = 0; v < counts.size(); ++v) {
    t.features.row(static_cast<Eigen::Index>(v)) /= static_cast<double>(counts[v]);
  }

  if (!labels.empty()) {
    std::vector<std::map<int, std::size_t>> votes(t.coords.size());
    for (std::size_t i = 0; i < points.size(); ++i) ++votes[t.point_map[i]][labels[i]];
    t.labels.resize(t.coords.size());
    for (std::size_t v = 0; v < votes.size(); ++v) {
      // std::map iterates ascending, so the first maximum is the smallest id.
      int best = 0;
      std::size_t best_count = 0;
      for (const auto& [label, count] : votes[v]) {
        if (count > best_count) {
          best = label;
          best_count = count;
        }
      }
      t.labels[v] = best;
    }
  }
  return t;
}

std::vector<std::size_t> voxel_counts(const SparseTensor& tensor) {
  std::vector<std::size_t> counts(tensor.size(), 0);
  for (std::size_t v : tensor.point_map) ++counts.at(v);
  return counts;
}

VoxelCoord kernel_offset(int o) { return {o / 9 - 1, (o / 3) % 3 - 1, o % 3 - 1}; }

KernelMap::KernelMap(std::span<const VoxelCoord> coords)
    : size_(coords.size()), table_(coords.size() * kKernelVolume, -1) {
  if (coords.size() > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
    throw InputError("KernelMap: too many voxels");
  }
  std::unordered_map<VoxelCoord, std::int32_t, VoxelHash> row_of;
  row_of.reserve(coords.size());
  for (std::size_t v = 0; v < coords.size(); ++v) row_of.emplace(coords[v], static_cast<std::int32_t>(v));
  for (std::size_t v = 0; v < coords.size(); ++v) {
    for (int o = 0; o < kKernelVolume; ++o) {
      const VoxelCoord d = kernel_offset(o);
      const VoxelCoord n = {coords[v][0] + d[0], coords[v][1] + d[1], coords[v][2] + d[2]};
      const auto it = row_of.find(n);
      if (it != row_of.end()) table_[v * kKernelVolume + o] = it->second;
    }
  }
}

SparseConvLayer SparseConvLayer::zeros(int c_in, int c_out) {
  if (c_in < 1 || c_out < 1) throw InputError("sparse conv: channel counts must be >= 1");
  SparseConvLayer layer;
  layer.c_in = c_in;
  layer.c_out = c_out;
  layer.weights = WeightMatrix::Zero(static_cast<Eigen::Index>(kKernelVolume) * c_in, c_out);
  layer.bias = Eigen::VectorXd::Zero(c_out);
  return layer;
}

FeatureMatrix sparse_conv(const FeatureMatrix& input, const KernelMap& map, const SparseConvLayer& layer,
                          unsigned threads) {
  if (input.cols() != layer.c_in) {
    throw DimensionError("sparse_conv: layer expects " + std::to_string(layer.c_in) +
                         " input channels, tensor has " + std::to_string(input.cols()));
  }
  if (static_cast<std::size_t>(input.rows()) != map.size()) {
    throw DimensionError("sparse_conv: kernel map does not match the input");
  }
  const int ci = layer.c_in;
  const int co = layer.c_out;
  FeatureMatrix out(input.rows(), co);
  parallel_for(
      map.size(),
      [&](std::size_t v) {
        double* dst = out.data() + v * co;
        for (int j = 0; j < co; ++j) dst[j] = layer.bias[j];
        for (int o = 0; o < kKernelVolume; ++o) {
          const std::int32_t n = map.neighbor(v, o);
          if (n < 0) continue;
          const double* src = input.data() + static_cast<std::size_t>(n) * ci;
          const double* w = layer.weights.data() + static_cast<std::size_t>(o) * ci * co;
          for (int i = 0; i < ci; ++i) {
            const double x = src[i];
            if (x == 0.0) continue;
            const double* w_row = w + static_cast<std::size_t>(i) * co;
            for (int j = 0; j < co; ++j) dst[j] += x * w_row[j];
          }
        }
      },
      threads);
  return out;
}

SparseTensor sparse_conv(const SparseTensor& input, const SparseConvLayer& layer, unsigned threads) {
  const KernelMap map(input.coords);
  SparseTensor out;
  out.coords = input.coords;
  out.spec = input.spec;
  out.point_map = input.point_map;
  out.labels = input.labels;
  out.features = sparse_conv(input.features, map, layer, threads);
  return out;
}

std::vector<int> argmax_rows(const FeatureMatrix& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()), 0);
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  return out;
}

std::vector<int> devoxelize(const FeatureMatrix& voxel_logits, std::span<const std::size_t> point_map) {
  const std::vector<int> voxel_class = argmax_rows(voxel_logits);
  std::vector<int> out(point_map.size());
  for (std::size_t i = 0; i < point_map.size(); ++i) {
    if (point_map[i] >= voxel_class.size()) throw InputError("devoxelize: point map refers to a missing voxel");
    out[i] = voxel_class[point_map[i]];
  }
  return out;
}

}  // namespace dmf
