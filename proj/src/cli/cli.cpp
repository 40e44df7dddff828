#include "cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <optional>

#include "dmf/errors.hpp"
#include "dmf/formats.hpp"
#include "dmf/pipeline.hpp"
#include "dmf/synthetic.hpp"

namespace dmf {
namespace {

namespace fs = std::filesystem;

std::shared_ptr<spdlog::logger> logger() {
  static auto log = [] {
    auto l = std::make_shared<spdlog::logger>("dmf", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%l] %v");
    return l;
  }();
  return log;
}

// Flags shared by the pipeline subcommands; unset ones leave the config alone.
struct Overrides {
  std::string config;
  std::string scene;
  std::optional<std::string> scene_root;
  std::optional<std::string> output;
  std::optional<std::string> plan;
  std::optional<std::uint64_t> seed;
  std::optional<int> stride;
  std::optional<double> voxel_size;
  std::optional<int> k;
  std::optional<double> threshold;
  std::optional<std::string> features_2d;
  std::optional<std::string> features_3d;
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::optional<unsigned> threads;
  std::optional<std::string> checkpoint;

  PipelineConfig resolve() const {
    PipelineConfig cfg = config.empty() ? PipelineConfig{} : PipelineConfig::load_file(config);
    if (scene_root) cfg.scene_root = *scene_root;
    if (output) cfg.output_dir = *output;
    if (seed) {
      cfg.network_seed = *seed;
      cfg.train.seed = *seed;
      cfg.seed_2d = *seed;
      cfg.seed_3d = *seed;
    }
    if (stride) cfg.backproject_stride = *stride;
    if (voxel_size) cfg.voxel.voxel_size = *voxel_size;
    if (k) cfg.fusion.k = *k;
    if (threshold) cfg.coverage.threshold = *threshold;
    if (features_2d) cfg.features_2d = *features_2d;
    if (features_3d) cfg.features_3d = *features_3d;
    if (epochs) cfg.train.epochs = *epochs;
    if (learning_rate) cfg.train.learning_rate = *learning_rate;
    if (threads) cfg.threads = *threads;
    cfg.validate();
    return cfg;
  }
};

void add_pipeline_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "pipeline config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--scene", o.scene, "scene id below the scene root")->required();
  cmd->add_option("--scene-root", o.scene_root, "overrides paths.scene_root");
  cmd->add_option("--out", o.output, "overrides paths.output_dir");
  cmd->add_option("--threshold", o.threshold, "coverage threshold");
  cmd->add_option("--stride", o.stride, "back-projection pixel stride");
  cmd->add_option("--seed", o.seed, "seed for extractors, network init and shuffling");
  cmd->add_option("--threads", o.threads, "worker threads (0 = all cores)");
}

void add_feature_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--features-2d", o.features_2d, "filterbank | random | external | none");
  cmd->add_option("--plan", o.plan, "reuse a plan JSON instead of selecting views")->check(CLI::ExistingFile);
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

CoveragePlan read_plan(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw LoadError("cannot open plan " + path.string());
  Json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON: " + e.what());
  }
  return CoveragePlan::from_json(j);
}

CoveragePlan plan_for(const Overrides& o, const PipelineConfig& cfg, const Scene& scene) {
  if (o.plan) {
    CoveragePlan plan = read_plan(*o.plan);
    if (plan.scene_id != scene.scene_id) {
      throw InputError("plan is for scene " + plan.scene_id + ", not " + scene.scene_id);
    }
    return plan;
  }
  CoverageParams params = cfg.coverage;
  params.threads = cfg.threads;
  return select_views(scene, params);
}

void log_plan(const CoveragePlan& plan) {
  logger()->info("selected {} of the frames, coverage {:.4f} ({})", plan.selected.size(),
                 plan.coverage_after.empty() ? 0.0 : plan.coverage_after.back(), to_string(plan.termination));
}

int cmd_synth(const std::string& spec_path, const std::string& out_dir, std::uint64_t seed, std::ostream& out) {
  const SyntheticSpec spec = load_synthetic_spec(spec_path);
  const Scene scene = generate_synthetic_scene(spec, seed);
  write_scene(out_dir, scene);
  logger()->info("wrote scene {} ({} points, {} frames)", scene.scene_id, scene.points.size(), scene.frames.size());
  out << (fs::path(out_dir) / scene.scene_id).string() << "\n";
  return 0;
}

int cmd_select(const Overrides& o, std::ostream& out) {
  const PipelineConfig cfg = o.resolve();
  const Scene scene = prepare_scene(cfg, o.scene);
  CoverageParams params = cfg.coverage;
  params.threads = cfg.threads;
  const CoveragePlan plan = select_views(scene, params);
  log_plan(plan);
  const ArtifactLayout layout(cfg.output_dir, scene.scene_id);
  write_json(layout.plan(), plan.to_json());
  out << plan.to_json().dump(2) << "\n";
  return 0;
}

int cmd_backproject(const Overrides& o, std::ostream& out) {
  const PipelineConfig cfg = o.resolve();
  const Scene scene = prepare_scene(cfg, o.scene);
  const CoveragePlan plan = plan_for(o, cfg, scene);
  const auto ex2d = make_extractor_2d(cfg.features_2d, cfg.fusion.d2, cfg.seed_2d, cfg.external_dir);
  const FeatureCloud cloud = backproject_plan(scene, plan, ex2d.get(), cfg.backproject_stride, cfg.threads);
  const ArtifactLayout layout(cfg.output_dir, scene.scene_id);
  fs::create_directories(layout.dir);
  write_ply(layout.backproj_ply(), cloud, ColorMode::kPerViewPalette);
  FeatureMatrix xyz(static_cast<Eigen::Index>(cloud.size()), 3);
  for (std::size_t i = 0; i < cloud.size(); ++i) xyz.row(static_cast<Eigen::Index>(i)) = cloud.positions[i].transpose();
  write_feature_rows(layout.backproj_points(), xyz);
  write_feature_rows(layout.backproj_features(), cloud.features);
  logger()->info("back-projected {} points from {} views", cloud.size(), plan.selected.size());
  out << cloud.size() << "\n";
  return 0;
}

int cmd_segment(const Overrides& o, std::ostream& out) {
  const PipelineConfig cfg = o.resolve();
  const auto t0 = std::chrono::steady_clock::now();
  const Scene scene = prepare_scene(cfg, o.scene);
  logger()->info("stage load: {:.3f}s", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  std::optional<CoveragePlan> plan;
  if (o.plan) plan = plan_for(o, cfg, scene);
  std::optional<SegNet> pretrained;
  if (o.checkpoint) pretrained = load_checkpoint(*o.checkpoint);
  const auto outcome =
      run_segment(cfg, scene, pretrained ? &*pretrained : nullptr, plan ? &*plan : nullptr,
                  [](const StageTiming& t) { logger()->info("stage {}: {:.3f}s", t.stage, t.seconds); });
  log_plan(outcome.plan);

  const ArtifactLayout layout(cfg.output_dir, scene.scene_id);
  fs::create_directories(layout.dir);
  write_feature_rows(layout.fused(), outcome.fused);
  save_checkpoint(layout.checkpoint(), outcome.net);
  if (!outcome.history.empty()) write_loss_history(layout.loss_history(), outcome.history);
  write_labels(layout.predictions(), outcome.predictions);
  if (outcome.confusion) {
    const Json report = metrics_report(*outcome.confusion);
    write_json(layout.metrics(), report);
    out << report.dump(2) << "\n";
  } else {
    out << outcome.predictions.size() << "\n";
  }
  return 0;
}

int cmd_eval(const std::string& gt_path, const std::string& pred_path, std::optional<int> num_classes,
             std::optional<int> ignore_label, const std::optional<std::string>& out_path, std::ostream& out) {
  const std::vector<int> gt = read_labels(gt_path);
  const std::vector<int> pred = read_labels(pred_path);
  if (gt.size() != pred.size()) {
    throw InputError("length mismatch: " + std::to_string(gt.size()) + " ground-truth labels vs " +
                     std::to_string(pred.size()) + " predictions");
  }
  int classes = num_classes.value_or(0);
  if (!num_classes) {
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (ignore_label && gt[i] == *ignore_label) continue;
      classes = std::max({classes, gt[i] + 1, pred[i] + 1});
    }
  }
  if (classes < 1) throw InputError("eval: no labelled points");
  ConfusionMatrix cm(classes, ignore_label);
  cm.accumulate(gt, pred);
  const Json report = metrics_report(cm);
  if (out_path) write_json(*out_path, report);
  out << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"2D-3D feature fusion for point cloud segmentation", "dmf"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace | debug | info | warn | error | off");

  std::string spec_path, synth_out;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "generate a synthetic labelled scene");
  synth->add_option("--spec", spec_path, "scene spec JSON")->required();
  synth->add_option("--out", synth_out, "scene root to write into")->required();
  synth->add_option("--seed", synth_seed, "point sampling seed");

  Overrides sel;
  auto* select = app.add_subcommand("select", "greedy view selection");
  add_pipeline_flags(select, sel);

  Overrides bp;
  auto* backproject = app.add_subcommand("backproject", "back-project the selected views");
  add_pipeline_flags(backproject, bp);
  add_feature_flags(backproject, bp);

  Overrides seg;
  auto* segment = app.add_subcommand("segment", "run the full pipeline and evaluate");
  add_pipeline_flags(segment, seg);
  add_feature_flags(segment, seg);
  segment->add_option("--features-3d", seg.features_3d, "geometric | random | rgb | none");
  segment->add_option("--k", seg.k, "neighbours per point");
  segment->add_option("--voxel-size", seg.voxel_size, "voxel edge length in metres");
  segment->add_option("--epochs", seg.epochs, "training epochs");
  segment->add_option("--lr", seg.learning_rate, "initial learning rate");
  segment->add_option("--checkpoint", seg.checkpoint, "skip training and use this model")->check(CLI::ExistingFile);

  std::string gt_path, pred_path;
  std::optional<int> eval_classes, eval_ignore;
  std::optional<std::string> eval_out;
  auto* eval = app.add_subcommand("eval", "score predictions against ground truth");
  eval->add_option("--gt", gt_path, "ground-truth labels, one per line")->required();
  eval->add_option("--pred", pred_path, "predicted labels, one per line")->required();
  eval->add_option("--num-classes", eval_classes, "class count (inferred when omitted)");
  eval->add_option("--ignore-label", eval_ignore, "ground-truth label to skip");
  eval->add_option("--out", eval_out, "also write the report here");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    logger()->set_level(spdlog::level::from_str(log_level));
    if (*synth) return cmd_synth(spec_path, synth_out, synth_seed, out);
    if (*select) return cmd_select(sel, out);
    if (*backproject) return cmd_backproject(bp, out);
    if (*segment) return cmd_segment(seg, out);
    if (*eval) return cmd_eval(gt_path, pred_path, eval_classes, eval_ignore, eval_out, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace dmf
