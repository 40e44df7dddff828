#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

#include "dmf/json_util.hpp"
#include "dmf/types.hpp"

namespace dmf {

using CoverageMask = boost::dynamic_bitset<std::uint64_t>;

struct CoverageParams {
  double threshold = 0.90;
  double depth_tolerance = 0.05;  // meters
  int stride = 1;                 // depth lookups snap to this pixel lattice
  std::optional<int> max_views;
  unsigned threads = 0;           // 0 = hardware concurrency

  /// Throws InputError unless 0 < threshold <= 1, tolerance > 0, stride >= 1
  /// and max_views >= 1 when set.
  void validate() const;
};

enum class Termination {
  kThresholdMet,  // cumulative coverage reached the threshold
  kExhausted,     // no remaining frame adds a single new point
  kCapped,        // max_views reached first
};

std::string to_string(Termination t);
Termination termination_from_string(const std::string& s);

struct CoveragePlan {
  std::string scene_id;
  CoverageParams params;
  std::size_t num_points = 0;
  std::vector<int> selected;              // frame ids in pick order
  std::vector<std::size_t> gain;          // newly covered points per step
  std::vector<double> coverage_after;     // cumulative fraction per step
  Termination termination = Termination::kThresholdMet;
  CoverageMask covered_mask;              // not serialized

  Json to_json() const;
  /// Inverse of to_json; the covered mask comes back empty.
  static CoveragePlan from_json(const Json& j);
};

/// Point i is covered when it projects in front of the camera onto an in-bounds
/// pixel (nearest lattice pixel) whose depth is valid and within
/// depth_tolerance of the point's camera depth.
CoverageMask frame_covers(const PointCloud& points, const CameraFrame& frame,
                          const CoverageParams& params);

/// Greedy max-gain selection over precomputed masks (one per frame id).
/// Ties go to the lowest frame id; zero-gain frames are never picked.
CoveragePlan select_greedy(std::span<const CoverageMask> masks, std::span<const int> frame_ids,
                           std::size_t num_points, const CoverageParams& params);

/// Computes all frame masks (in parallel) and runs select_greedy. Throws
/// InputError when the scene has no frames or no points.
CoveragePlan select_views(const Scene& scene, const CoverageParams& params);

}  // namespace dmf
