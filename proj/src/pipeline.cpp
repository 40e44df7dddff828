#include "dmf/pipeline.hpp"

#include <algorithm>
#include <fstream>

#include "dmf/errors.hpp"
#include "dmf/parallel.hpp"

namespace dmf {
namespace {

using Clock = std::chrono::steady_clock;

template <typename T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where) {
  return value_or<T, InputError>(j, key, fallback, where);
}

const Json& section(const Json& j, const char* key) {
  static const Json kEmpty = Json::object();
  return j.contains(key) ? j.at(key) : kEmpty;
}

std::optional<int> optional_int(const Json& j, const char* key, std::optional<int> fallback,
                                const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (j.at(key).is_null()) return std::nullopt;
  return get_or<int>(j, key, 0, where);
}

}  // namespace

void PipelineConfig::validate() const {
  coverage.validate();
  fusion.validate();
  voxel.validate();
  train.validate();
  if (hidden.empty()) throw InputError("config: network.hidden needs at least one layer");
  for (int h : hidden) {
    if (h < 1) throw InputError("config: network.hidden widths must be >= 1");
  }
  if (num_classes && *num_classes < 1) throw InputError("config: network.num_classes must be >= 1");
  for (const char* name : {"filterbank", "random", "external", "none"}) {
    if (features_2d == name) goto ok_2d;
  }
  throw InputError("config: unknown features_2d '" + features_2d + "'");
ok_2d:
  if (features_3d != "geometric" && features_3d != "random" && features_3d != "rgb" && features_3d != "none") {
    throw InputError("config: unknown features_3d '" + features_3d + "'");
  }
  if (features_2d == "external" && external_dir.empty()) {
    throw InputError("config: features_2d 'external' needs extractors.external_dir");
  }
  if (backproject_stride < 1) throw InputError("config: backproject.stride must be >= 1");
  if (resample_width < 1 || resample_height < 1) throw InputError("config: resample size must be >= 1");
  if (!(load.depth_divisor > 0.0)) throw InputError("config: scene.depth_divisor must be positive");
}

PipelineConfig PipelineConfig::from_json(const Json& j) {
  require_known_keys<InputError>(j,
                                 {"paths", "coverage", "fusion", "voxel", "train", "network", "extractors",
                                  "backproject", "resample", "scene", "eval", "threads"},
                                 "config");
  PipelineConfig c;

  const Json& paths = section(j, "paths");
  require_known_keys<InputError>(paths, {"scene_root", "output_dir"}, "paths");
  c.scene_root = get_or<std::string>(paths, "scene_root", c.scene_root.string(), "paths");
  c.output_dir = get_or<std::string>(paths, "output_dir", c.output_dir.string(), "paths");

  const Json& cov = section(j, "coverage");
  require_known_keys<InputError>(cov, {"threshold", "depth_tolerance", "stride", "max_views"}, "coverage");
  c.coverage.threshold = get_or<double>(cov, "threshold", c.coverage.threshold, "coverage");
  c.coverage.depth_tolerance = get_or<double>(cov, "depth_tolerance", c.coverage.depth_tolerance, "coverage");
  c.coverage.stride = get_or<int>(cov, "stride", c.coverage.stride, "coverage");
  c.coverage.max_views = optional_int(cov, "max_views", c.coverage.max_views, "coverage");

  const Json& fus = section(j, "fusion");
  require_known_keys<InputError>(fus, {"k", "d2", "d3", "aggregation"}, "fusion");
  c.fusion.k = get_or<int>(fus, "k", c.fusion.k, "fusion");
  c.fusion.d2 = get_or<int>(fus, "d2", c.fusion.d2, "fusion");
  c.fusion.d3 = get_or<int>(fus, "d3", c.fusion.d3, "fusion");
  c.fusion.aggregation = parse_aggregation(get_or<std::string>(fus, "aggregation", "sum", "fusion"));

  const Json& vox = section(j, "voxel");
  require_known_keys<InputError>(vox, {"voxel_size", "origin"}, "voxel");
  c.voxel.voxel_size = get_or<double>(vox, "voxel_size", c.voxel.voxel_size, "voxel");
  c.voxel.origin = vec3_or<InputError>(vox, "origin", c.voxel.origin, "voxel");

  const Json& tr = section(j, "train");
  require_known_keys<InputError>(tr, {"learning_rate", "epochs", "schedule", "min_learning_rate", "seed"}, "train");
  c.train.learning_rate = get_or<double>(tr, "learning_rate", c.train.learning_rate, "train");
  c.train.epochs = get_or<int>(tr, "epochs", c.train.epochs, "train");
  c.train.schedule = parse_schedule(get_or<std::string>(tr, "schedule", to_string(c.train.schedule), "train"));
  c.train.min_learning_rate = get_or<double>(tr, "min_learning_rate", c.train.min_learning_rate, "train");
  c.train.seed = get_or<std::uint64_t>(tr, "seed", c.train.seed, "train");

  const Json& net = section(j, "network");
  require_known_keys<InputError>(net, {"hidden", "num_classes", "seed"}, "network");
  c.hidden = get_or<std::vector<int>>(net, "hidden", c.hidden, "network");
  c.num_classes = optional_int(net, "num_classes", c.num_classes, "network");
  c.network_seed = get_or<std::uint64_t>(net, "seed", c.network_seed, "network");

  const Json& ex = section(j, "extractors");
  require_known_keys<InputError>(ex, {"features_2d", "features_3d", "seed_2d", "seed_3d", "external_dir"},
                                 "extractors");
  c.features_2d = get_or<std::string>(ex, "features_2d", c.features_2d, "extractors");
  c.features_3d = get_or<std::string>(ex, "features_3d", c.features_3d, "extractors");
  c.seed_2d = get_or<std::uint64_t>(ex, "seed_2d", c.seed_2d, "extractors");
  c.seed_3d = get_or<std::uint64_t>(ex, "seed_3d", c.seed_3d, "extractors");
  c.external_dir = get_or<std::string>(ex, "external_dir", c.external_dir.string(), "extractors");

  const Json& bp = section(j, "backproject");
  require_known_keys<InputError>(bp, {"stride"}, "backproject");
  c.backproject_stride = get_or<int>(bp, "stride", c.backproject_stride, "backproject");

  const Json& rs = section(j, "resample");
  require_known_keys<InputError>(rs, {"width", "height"}, "resample");
  c.resample_width = get_or<int>(rs, "width", c.resample_width, "resample");
  c.resample_height = get_or<int>(rs, "height", c.resample_height, "resample");

  const Json& sc = section(j, "scene");
  require_known_keys<InputError>(sc, {"pose_convention", "depth_divisor"}, "scene");
  const auto conv = get_or<std::string>(sc, "pose_convention", "camera_to_world", "scene");
  if (conv == "camera_to_world") c.load.pose_convention = PoseConvention::kCameraToWorld;
  else if (conv == "world_to_camera") c.load.pose_convention = PoseConvention::kWorldToCamera;
  else throw InputError("scene.pose_convention must be camera_to_world or world_to_camera");
  c.load.depth_divisor = get_or<double>(sc, "depth_divisor", c.load.depth_divisor, "scene");

  const Json& ev = section(j, "eval");
  require_known_keys<InputError>(ev, {"ignore_label"}, "eval");
  c.ignore_label = optional_int(ev, "ignore_label", c.ignore_label, "eval");

  if (j.contains("threads")) c.threads = get_or<unsigned>(j, "threads", 0u, "config");
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open config " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": invalid JSON: " + e.what());
  }
  return from_json(j);
}

Json PipelineConfig::to_json() const {
  const auto opt = [](const std::optional<int>& v) { return v ? Json(*v) : Json(nullptr); };
  Json j;
  j["paths"] = {{"scene_root", scene_root.string()}, {"output_dir", output_dir.string()}};
  j["coverage"] = {{"threshold", coverage.threshold},
                   {"depth_tolerance", coverage.depth_tolerance},
                   {"stride", coverage.stride},
                   {"max_views", opt(coverage.max_views)}};
  j["fusion"] = {{"k", fusion.k}, {"d2", fusion.d2}, {"d3", fusion.d3}, {"aggregation", to_string(fusion.aggregation)}};
  j["voxel"] = {{"voxel_size", voxel.voxel_size},
                {"origin", Json::array({voxel.origin.x(), voxel.origin.y(), voxel.origin.z()})}};
  j["train"] = {{"learning_rate", train.learning_rate},
                {"epochs", train.epochs},
                {"schedule", to_string(train.schedule)},
                {"min_learning_rate", train.min_learning_rate},
                {"seed", train.seed}};
  j["network"] = {{"hidden", hidden}, {"num_classes", opt(num_classes)}, {"seed", network_seed}};
  j["extractors"] = {{"features_2d", features_2d},
                     {"features_3d", features_3d},
                     {"seed_2d", seed_2d},
                     {"seed_3d", seed_3d},
                     {"external_dir", external_dir.string()}};
  j["backproject"] = {{"stride", backproject_stride}};
  j["resample"] = {{"width", resample_width}, {"height", resample_height}};
  j["scene"] = {{"pose_convention",
                 load.pose_convention == PoseConvention::kCameraToWorld ? "camera_to_world" : "world_to_camera"},
                {"depth_divisor", load.depth_divisor}};
  j["eval"] = {{"ignore_label", opt(ignore_label)}};
  j["threads"] = threads;
  return j;
}

ArtifactLayout::ArtifactLayout(const std::filesystem::path& output_dir, const std::string& scene_id)
    : dir(output_dir / scene_id) {}

Scene prepare_scene(const PipelineConfig& cfg, const std::string& scene_id) {
  Scene scene = load_scene(cfg.scene_root, scene_id, cfg.load);
  parallel_for(
      scene.frames.size(),
      [&](std::size_t i) { scene.frames[i] = resample_frame(scene.frames[i], cfg.resample_width, cfg.resample_height); },
      cfg.threads);
  return scene;
}

std::vector<const CameraFrame*> planned_frames(const Scene& scene, const CoveragePlan& plan) {
  std::vector<const CameraFrame*> out;
  for (int id : plan.selected) {
    const CameraFrame* f = scene.find_frame(id);
    if (!f) throw InputError("plan selects frame " + std::to_string(id) + " which scene " + scene.scene_id + " lacks");
    out.push_back(f);
  }
  return out;
}

FeatureCloud backproject_plan(const Scene& scene, const CoveragePlan& plan, const FeatureExtractor2D* extractor,
                              int stride, unsigned threads) {
  const auto frames = planned_frames(scene, plan);
  std::vector<FeatureCloud> clouds(frames.size());
  parallel_for(
      frames.size(),
      [&](std::size_t i) {
        clouds[i] = extractor ? backproject_frame(attach_features(*frames[i], *extractor), stride)
                              : backproject_frame(*frames[i], stride);
      },
      threads);
  FeatureCloud merged;
  for (const auto& c : clouds) merged.append(c);
  return merged;
}

SegmentOutcome run_segment(const PipelineConfig& cfg, const Scene& scene, const SegNet* pretrained,
                           const CoveragePlan* plan,
                           const std::function<void(const StageTiming&)>& on_stage) {
  cfg.validate();
  SegmentOutcome out;
  auto start = Clock::now();
  const auto mark = [&](const char* stage) {
    const auto now = Clock::now();
    out.timings.push_back({stage, std::chrono::duration<double>(now - start).count()});
    if (on_stage) on_stage(out.timings.back());
    start = now;
  };
  const std::size_t n = scene.points.size();
  if (n == 0) throw InputError("segment: scene " + scene.scene_id + " has no points");

  CoverageParams cov = cfg.coverage;
  cov.threads = cfg.threads;
  out.plan = plan ? *plan : select_views(scene, cov);
  mark("select");

  FusionConfig fusion = cfg.fusion;
  fusion.threads = cfg.threads;
  const auto ex2d = make_extractor_2d(cfg.features_2d, fusion.d2, cfg.seed_2d, cfg.external_dir);
  FeatureMatrix f2d = FeatureMatrix::Zero(static_cast<Eigen::Index>(n), fusion.d2);
  if (ex2d) {
    const FeatureCloud backproj = backproject_plan(scene, out.plan, ex2d.get(), cfg.backproject_stride, cfg.threads);
    out.backprojected_points = backproj.size();
    mark("backproject");
    if (backproj.empty()) throw InputError("segment: selected views produced no back-projected points");
    const KdTree index(backproj.positions);
    mark("index");
    f2d = integrate_2d(scene.points.positions, index, backproj.features, fusion).features;
    mark("integrate");
  }

  const auto ex3d = make_extractor_3d(cfg.features_3d, fusion.d3, cfg.seed_3d);
  const FeatureMatrix f3d = ex3d ? ex3d->extract(scene.points) : FeatureMatrix::Zero(static_cast<Eigen::Index>(n), fusion.d3);
  mark("extract_3d");
  out.fused = fuse(f2d, f3d);
  mark("fuse");

  const bool labelled = scene.points.has_labels();
  std::span<const int> labels;
  if (labelled) labels = scene.points.labels;
  out.voxels = voxelize(scene.points.positions, out.fused, labels, cfg.voxel);
  mark("voxelize");

  if (pretrained) {
    out.net = *pretrained;
    if (out.net.in_channels() != out.fused.cols()) {
      throw DimensionError("checkpoint expects " + std::to_string(out.net.in_channels()) + " channels, fused features have " +
                           std::to_string(out.fused.cols()));
    }
  } else {
    if (!labelled) throw InputError("segment: scene " + scene.scene_id + " has no labels to train on");
    int classes = cfg.num_classes.value_or(0);
    if (!cfg.num_classes) {
      for (int l : out.voxels.labels) classes = std::max(classes, l + 1);
    }
    NetworkConfig net_cfg;
    net_cfg.in_channels = static_cast<int>(out.fused.cols());
    net_cfg.hidden = cfg.hidden;
    net_cfg.num_classes = classes;
    out.net = SegNet::init(net_cfg, cfg.network_seed);
    out.net.fit_input_normalization(std::span(&out.voxels, 1));
    if (cfg.ignore_label &&
        std::find(out.voxels.labels.begin(), out.voxels.labels.end(), *cfg.ignore_label) != out.voxels.labels.end()) {
      throw InputError("segment: training data contains the ignore label; relabel or pass a checkpoint");
    }
    TrainConfig tc = cfg.train;
    tc.threads = cfg.threads;
    out.history = train(out.net, std::span(&out.voxels, 1), tc);
  }
  mark("train");

  const FeatureMatrix logits = out.net.forward(out.voxels, cfg.threads);
  mark("infer");
  out.predictions = devoxelize(logits, out.voxels.point_map);
  mark("devoxelize");

  if (labelled) {
    int classes = out.net.num_classes();
    for (int l : scene.points.labels) {
      if (!cfg.ignore_label || l != *cfg.ignore_label) classes = std::max(classes, l + 1);
    }
    ConfusionMatrix cm(classes, cfg.ignore_label);
    cm.accumulate(scene.points.labels, out.predictions);
    out.confusion = cm;
  }
  mark("eval");
  return out;
}

}  // namespace dmf
