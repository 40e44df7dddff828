#include "dmf/knn.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "dmf/errors.hpp"

namespace dmf {
namespace {

bool closer(const Neighbor& a, const Neighbor& b) {
  return a.distance_sq < b.distance_sq || (a.distance_sq == b.distance_sq && a.index < b.index);
}

}  // namespace

KdTree::KdTree(std::vector<Eigen::Vector3d> points, std::size_t leaf_size)
    : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  if (points_.empty()) throw InputError("KdTree: cannot index an empty point set");
  if (points_.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw InputError("KdTree: too many points");
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, 0, 0.0});
  if (end - begin <= leaf_size_) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (!(hi[axis] > lo[axis])) return id;  // all points identical: keep one leaf

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node& n = nodes_[id];
  n.axis = axis;
  n.split = split;
  n.left = left;
  n.right = right;
  return id;
}

void KdTree::knn_recurse(std::int32_t node_id, const Eigen::Vector3d& q, std::size_t k,
                         std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const Neighbor cand{order_[i], squared_distance(points_[order_[i]], q)};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  // Left holds coordinates <= split, right holds coordinates >= split.
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  knn_recurse(near, q, k, heap);
  // Equal bounds are still visited: a tie there may carry a lower index.
  if (heap.size() < k || diff * diff <= heap.front().distance_sq) knn_recurse(far, q, k, heap);
}

std::vector<Neighbor> KdTree::knn(const Eigen::Vector3d& query, std::size_t k) const {
  k = std::min(k, points_.size());
  std::vector<Neighbor> heap;
  if (k == 0) return heap;
  heap.reserve(k);
  knn_recurse(0, query, k, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

void KdTree::radius_recurse(std::int32_t node_id, const Eigen::Vector3d& q, double r_sq,
                            std::vector<Neighbor>& out) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const double d = squared_distance(points_[order_[i]], q);
      if (d <= r_sq) out.push_back({order_[i], d});
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  radius_recurse(near, q, r_sq, out);
  if (diff * diff <= r_sq) radius_recurse(far, q, r_sq, out);
}

std::vector<Neighbor> KdTree::radius_search(const Eigen::Vector3d& query, double radius) const {
  std::vector<Neighbor> out;
  if (!(radius >= 0.0)) return out;
  radius_recurse(0, query, radius * radius, out);
  std::sort(out.begin(), out.end(), closer);
  return out;
}

}  // namespace dmf
