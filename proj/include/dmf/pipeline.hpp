#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dmf/eval.hpp"
#include "dmf/features.hpp"
#include "dmf/json_util.hpp"
#include "dmf/network.hpp"
#include "dmf/scene_io.hpp"
#include "dmf/sparse.hpp"
#include "dmf/view_select.hpp"

namespace dmf {

/// Everything one pipeline run needs. Parsed from a single JSON document in
/// which every key is optional and unknown keys are rejected:
///
///   { "paths":      {"scene_root", "output_dir"},
///     "coverage":   {"threshold", "depth_tolerance", "stride", "max_views"},
///     "fusion":     {"k", "d2", "d3", "aggregation"},
///     "voxel":      {"voxel_size", "origin"},
///     "train":      {"learning_rate", "epochs", "schedule", "min_learning_rate", "seed"},
///     "network":    {"hidden", "num_classes", "seed"},
///     "extractors": {"features_2d", "features_3d", "seed_2d", "seed_3d", "external_dir"},
///     "backproject":{"stride"},
///     "resample":   {"width", "height"},
///     "scene":      {"pose_convention", "depth_divisor"},
///     "eval":       {"ignore_label"},
///     "threads": 0 }
struct PipelineConfig {
  std::filesystem::path scene_root = ".";
  std::filesystem::path output_dir = "out";
  CoverageParams coverage;
  FusionConfig fusion;
  VoxelGridSpec voxel;
  TrainConfig train;
  std::vector<int> hidden = {32, 32};
  std::optional<int> num_classes;  // inferred from labels when unset
  std::uint64_t network_seed = 0;
  std::string features_2d = "filterbank";
  std::string features_3d = "geometric";
  std::uint64_t seed_2d = 0;
  std::uint64_t seed_3d = 0;
  std::filesystem::path external_dir;
  int backproject_stride = 1;
  int resample_width = 320;
  int resample_height = 240;
  LoadOptions load;
  std::optional<int> ignore_label;
  unsigned threads = 0;

  /// Throws InputError for out-of-range values or unknown extractor names.
  void validate() const;

  static PipelineConfig from_json(const Json& j);
  static PipelineConfig load_file(const std::filesystem::path& path);
  Json to_json() const;
};

/// Per-scene artifact paths below output_dir/<scene_id>/.
struct ArtifactLayout {
  std::filesystem::path dir;

  ArtifactLayout(const std::filesystem::path& output_dir, const std::string& scene_id);

  std::filesystem::path plan() const { return dir / "plan.json"; }
  std::filesystem::path backproj_ply() const { return dir / "backproj.ply"; }
  std::filesystem::path backproj_points() const { return dir / "backproj_points.fmap"; }
  std::filesystem::path backproj_features() const { return dir / "backproj_features.fmap"; }
  std::filesystem::path fused() const { return dir / "fused.fmap"; }
  std::filesystem::path checkpoint() const { return dir / "model.dmfn"; }
  std::filesystem::path loss_history() const { return dir / "loss.csv"; }
  std::filesystem::path predictions() const { return dir / "pred.txt"; }
  std::filesystem::path metrics() const { return dir / "metrics.json"; }
};

/// Loads the scene and resamples every frame to the configured size.
Scene prepare_scene(const PipelineConfig& cfg, const std::string& scene_id);

/// Frames of `scene` listed in the plan, in plan order. Throws InputError for
/// ids the scene does not contain.
std::vector<const CameraFrame*> planned_frames(const Scene& scene, const CoveragePlan& plan);

/// Back-projects the planned frames, attaching 2D features first when an
/// extractor is given (raw RGB otherwise), and concatenates the clouds.
FeatureCloud backproject_plan(const Scene& scene, const CoveragePlan& plan, const FeatureExtractor2D* extractor,
                              int stride, unsigned threads = 0);

/// Stage name and wall time, in execution order.
struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct SegmentOutcome {
  CoveragePlan plan;
  std::size_t backprojected_points = 0;
  FeatureMatrix fused;
  SparseTensor voxels;
  SegNet net;
  std::vector<EpochRecord> history;
  std::vector<int> predictions;
  std::optional<ConfusionMatrix> confusion;  // set when the scene has labels
  std::vector<StageTiming> timings;
};

/// select -> backproject -> extract -> integrate -> fuse -> voxelize ->
/// train (or use `pretrained`) -> infer -> devoxelize -> eval. A given `plan`
/// replaces the selection stage.
/// `on_stage` is called after each stage completes.
SegmentOutcome run_segment(const PipelineConfig& cfg, const Scene& scene, const SegNet* pretrained = nullptr,
                           const CoveragePlan* plan = nullptr,
                           const std::function<void(const StageTiming&)>& on_stage = {});

}  // namespace dmf
