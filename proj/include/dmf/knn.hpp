#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace dmf {

struct Neighbor {
  std::size_t index = 0;
  double distance_sq = 0.0;

  double distance() const { return std::sqrt(distance_sq); }
  bool operator==(const Neighbor&) const = default;
};

/// Squared Euclidean distance summed in x, y, z order. Every search path in
/// this library goes through this function so results are reproducible
/// bit-for-bit by an independent loop that uses the same expression.
inline double squared_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

/// Static 3-d tree for exact nearest-neighbour search. Build once, then query
/// concurrently from any number of threads.
class KdTree {
 public:
  /// Throws InputError for an empty point set.
  explicit KdTree(std::vector<Eigen::Vector3d> points, std::size_t leaf_size = 12);

  std::size_t size() const { return points_.size(); }
  const std::vector<Eigen::Vector3d>& points() const { return points_; }

  /// min(k, size()) neighbours sorted by (distance, index); equal distances
  /// resolve to the lowest point index.
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, std::size_t k) const;

  /// All points with distance <= radius, sorted by (distance, index).
  std::vector<Neighbor> radius_search(const Eigen::Vector3d& query, double radius) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;   // -1 marks a leaf
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void knn_recurse(std::int32_t node, const Eigen::Vector3d& q, std::size_t k,
                   std::vector<Neighbor>& heap) const;
  void radius_recurse(std::int32_t node, const Eigen::Vector3d& q, double r_sq,
                      std::vector<Neighbor>& out) const;

  std::vector<Eigen::Vector3d> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

}  // namespace dmf
