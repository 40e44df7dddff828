#include "dmf/view_select.hpp"

#include <cmath>

#include "dmf/errors.hpp"
#include "dmf/geometry.hpp"
#include "dmf/parallel.hpp"

namespace dmf {

void CoverageParams::validate() const {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw InputError("coverage threshold must be in (0, 1]");
  if (!(depth_tolerance > 0.0)) throw InputError("coverage depth_tolerance must be positive");
  if (stride < 1) throw InputError("coverage stride must be >= 1");
  if (max_views && *max_views < 1) throw InputError("coverage max_views must be >= 1");
}

std::string to_string(Termination t) {
  switch (t) {
    case Termination::kThresholdMet: return "threshold_met";
    case Termination::kExhausted: return "exhausted";
    case Termination::kCapped: return "capped";
  }
  return "unknown";
}

Termination termination_from_string(const std::string& s) {
  if (s == "threshold_met") return Termination::kThresholdMet;
  if (s == "exhausted") return Termination::kExhausted;
  if (s == "capped") return Termination::kCapped;
  throw FormatError("plan: unknown termination '" + s + "'");
}

Json CoveragePlan::to_json() const {
  Json j;
  j["scene_id"] = scene_id;
  j["params"] = {{"threshold", params.threshold},
                 {"depth_tolerance", params.depth_tolerance},
                 {"stride", params.stride},
                 {"max_views", params.max_views ? Json(*params.max_views) : Json(nullptr)}};
  j["num_points"] = num_points;
  j["selected"] = selected;
  j["gains"] = gain;
  j["coverage_after"] = coverage_after;
  j["termination"] = to_string(termination);
  return j;
}

CoveragePlan CoveragePlan::from_json(const Json& j) {
  try {
    require_known_keys<FormatError>(
        j, {"scene_id", "params", "num_points", "selected", "gains", "coverage_after", "termination"},
        "plan");
    CoveragePlan plan;
    plan.scene_id = j.at("scene_id").get<std::string>();
    const Json& p = j.at("params");
    require_known_keys<FormatError>(p, {"threshold", "depth_tolerance", "stride", "max_views"},
                                    "plan.params");
    plan.params.threshold = p.at("threshold").get<double>();
    plan.params.depth_tolerance = p.at("depth_tolerance").get<double>();
    plan.params.stride = p.at("stride").get<int>();
    if (p.contains("max_views") && !p.at("max_views").is_null()) {
      plan.params.max_views = p.at("max_views").get<int>();
    }
    plan.num_points = j.at("num_points").get<std::size_t>();
    plan.selected = j.at("selected").get<std::vector<int>>();
    plan.gain = j.at("gains").get<std::vector<std::size_t>>();
    plan.coverage_after = j.at("coverage_after").get<std::vector<double>>();
    plan.termination = termination_from_string(j.at("termination").get<std::string>());
    if (plan.gain.size() != plan.selected.size() || plan.coverage_after.size() != plan.selected.size()) {
      throw FormatError("plan: selected/gains/coverage_after lengths differ");
    }
    return plan;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("plan: ") + e.what());
  }
}

CoverageMask frame_covers(const PointCloud& points, const CameraFrame& frame,
                          const CoverageParams& params) {
  params.validate();
  CoverageMask mask(points.size());
  const auto& intr = frame.intrinsics;
  const int s = params.stride;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto proj = project_point(intr, frame.pose, points.positions[i]);
    if (!proj) continue;
    const long x = std::lround(proj->pixel.u / s) * s;
    const long y = std::lround(proj->pixel.v / s) * s;
    if (x < 0 || y < 0 || x >= intr.width || y >= intr.height) continue;
    const float d = frame.depth.at(static_cast<int>(x), static_cast<int>(y));
    if (d <= 0.0f) continue;
    if (std::abs(proj->depth - static_cast<double>(d)) <= params.depth_tolerance) mask.set(i);
  }
  return mask;
}

CoveragePlan select_greedy(std::span<const CoverageMask> masks, std::span<const int> frame_ids,
                           std::size_t num_points, const CoverageParams& params) {
  params.validate();
  if (masks.empty()) throw InputError("select_views: no frames to choose from");
  if (masks.size() != frame_ids.size()) throw DimensionError("select_views: masks/frame ids mismatch");
  if (num_points == 0) throw InputError("select_views: scene has no points");
  for (const auto& m : masks) {
    if (m.size() != num_points) throw DimensionError("select_views: mask length != point count");
  }

  CoveragePlan plan;
  plan.params = params;
  plan.num_points = num_points;
  plan.covered_mask = CoverageMask(num_points);
  std::vector<bool> used(masks.size(), false);
  std::size_t covered = 0;

  for (;;) {
    if (static_cast<double>(covered) / static_cast<double>(num_points) >= params.threshold) {
      plan.termination = Termination::kThresholdMet;
      break;
    }
    if (params.max_views && plan.selected.size() >= static_cast<std::size_t>(*params.max_views)) {
      plan.termination = Termination::kCapped;
      break;
    }
    std::size_t best = masks.size();
    std::size_t best_gain = 0;
    for (std::size_t f = 0; f < masks.size(); ++f) {
      if (used[f]) continue;
      const std::size_t g = (masks[f] - plan.covered_mask).count();
      if (g > best_gain || (g == best_gain && g > 0 && frame_ids[f] < frame_ids[best])) {
        best = f;
        best_gain = g;
      }
    }
    if (best_gain == 0) {
      plan.termination = Termination::kExhausted;
      break;
    }
    used[best] = true;
    plan.covered_mask |= masks[best];
    covered += best_gain;
    plan.selected.push_back(frame_ids[best]);
    plan.gain.push_back(best_gain);
    plan.coverage_after.push_back(static_cast<double>(covered) / static_cast<double>(num_points));
  }
  return plan;
}

CoveragePlan select_views(const Scene& scene, const CoverageParams& params) {
  params.validate();
  if (scene.frames.empty()) throw InputError("select_views: scene " + scene.scene_id + " has no frames");
  std::vector<CoverageMask> masks(scene.frames.size());
  std::vector<int> ids(scene.frames.size());
  parallel_for(
      scene.frames.size(),
      [&](std::size_t f) {
        masks[f] = frame_covers(scene.points, scene.frames[f], params);
        ids[f] = scene.frames[f].frame_id;
      },
      params.threads);
  CoveragePlan plan = select_greedy(masks, ids, scene.points.size(), params);
  plan.scene_id = scene.scene_id;
  return plan;
}

}  // namespace dmf
