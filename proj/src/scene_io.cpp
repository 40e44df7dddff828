#include "dmf/scene_io.hpp"

#include <algorithm>
#include <cmath>

#include "dmf/errors.hpp"
#include "dmf/formats.hpp"
#include "dmf/parallel.hpp"

namespace dmf {
namespace fs = std::filesystem;

SceneLayout::SceneLayout(const fs::path& root, std::string id)
    : dir(root / id), scene_id(std::move(id)) {}

fs::path SceneLayout::cloud() const { return dir / (scene_id + "_vh_clean_2.ply"); }
fs::path SceneLayout::labels() const { return dir / (scene_id + "_labels.txt"); }
fs::path SceneLayout::intrinsics() const { return dir / "intrinsic" / "intrinsic_depth.txt"; }

namespace {

int parse_frame_id(const fs::path& file) {
  const std::string stem = file.stem().string();
  try {
    std::size_t used = 0;
    const int id = std::stoi(stem, &used);
    if (used == stem.size()) return id;
  } catch (const std::exception&) {
  }
  throw FormatError("frame file name is not an integer id: " + file.string());
}

CameraFrame load_frame(const SceneLayout& layout, int id, const fs::path& intrinsics_path,
                       const LoadOptions& options) {
  const std::string name = std::to_string(id);
  CameraFrame frame;
  frame.frame_id = id;
  frame.pose = read_pose(layout.pose_dir() / (name + ".txt"), options.pose_convention,
                         options.pose_tolerance);

  const fs::path raw = layout.depth_dir() / (name + ".depth");
  const fs::path png = layout.depth_dir() / (name + ".png");
  if (fs::exists(raw)) {
    frame.depth = read_depth_raw(raw);
  } else if (fs::exists(png)) {
    frame.depth = read_depth_png(png, options.depth_divisor);
  } else {
    throw LoadError("missing depth for frame " + name + ": " + png.string());
  }

  const fs::path color = layout.color_dir() / (name + ".png");
  if (!fs::exists(color)) throw LoadError("missing color for frame " + name + ": " + color.string());
  frame.color = read_color_png(color);

  frame.intrinsics = read_intrinsics(intrinsics_path, frame.depth.width, frame.depth.height);
  frame.validate();
  return frame;
}

}  // namespace

Scene load_scene(const fs::path& root, const std::string& scene_id, const LoadOptions& options) {
  const SceneLayout layout(root, scene_id);
  if (!fs::is_directory(layout.dir)) throw LoadError("scene directory not found: " + layout.dir.string());
  if (!fs::exists(layout.intrinsics())) {
    throw LoadError("missing intrinsics file: " + layout.intrinsics().string());
  }
  if (!fs::exists(layout.cloud())) throw LoadError("missing point cloud: " + layout.cloud().string());
  if (!fs::is_directory(layout.pose_dir())) {
    throw LoadError("missing pose directory: " + layout.pose_dir().string());
  }

  Scene scene;
  scene.scene_id = scene_id;
  scene.points = read_ply(layout.cloud());
  if (fs::exists(layout.labels())) scene.points.labels = read_labels(layout.labels());
  scene.points.validate();

  std::vector<int> ids;
  for (const auto& entry : fs::directory_iterator(layout.pose_dir())) {
    if (entry.path().extension() == ".txt") ids.push_back(parse_frame_id(entry.path()));
  }
  std::sort(ids.begin(), ids.end());
  scene.frames.resize(ids.size());
  parallel_for(ids.size(), [&](std::size_t i) {
    scene.frames[i] = load_frame(layout, ids[i], layout.intrinsics(), options);
  });
  return scene;
}

void write_scene(const fs::path& root, const Scene& scene) {
  const SceneLayout layout(root, scene.scene_id);
  try {
    fs::create_directories(layout.pose_dir());
    fs::create_directories(layout.depth_dir());
    fs::create_directories(layout.color_dir());
    fs::create_directories(layout.intrinsics().parent_path());
  } catch (const fs::filesystem_error& e) {
    throw IoError(std::string("cannot create scene directories: ") + e.what());
  }
  write_ply(layout.cloud(), scene.points, ColorMode::kRgb);
  if (scene.points.has_labels()) write_labels(layout.labels(), scene.points.labels);
  if (!scene.frames.empty()) write_intrinsics(layout.intrinsics(), scene.frames.front().intrinsics);
  for (const auto& frame : scene.frames) {
    if (!(frame.intrinsics == scene.frames.front().intrinsics)) {
      throw InputError("write_scene: all frames must share one set of intrinsics");
    }
    const std::string name = std::to_string(frame.frame_id);
    const Pose c2w = frame.pose.convention == PoseConvention::kCameraToWorld ? frame.pose
                                                                              : frame.pose.inverse();
    write_pose(layout.pose_dir() / (name + ".txt"), c2w);
    write_depth_raw(layout.depth_dir() / (name + ".depth"), frame.depth);
    write_color_png(layout.color_dir() / (name + ".png"), frame.color);
  }
}

CameraFrame resample_frame(const CameraFrame& frame, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) throw InputError("resample_frame: output size must be >= 1x1");
  frame.validate();
  const int w = frame.intrinsics.width;
  const int h = frame.intrinsics.height;
  if (out_w == w && out_h == h) return frame;

  // Output pixel i samples source coordinate i * w / out_w, consistent with
  // the scaled principal point cx' = cx * out_w / w.
  const double sx = static_cast<double>(w) / out_w;
  const double sy = static_cast<double>(h) / out_h;
  const auto nearest = [](double s, int limit) {
    return std::clamp(static_cast<int>(std::floor(s + 0.5)), 0, limit - 1);
  };

  CameraFrame out;
  out.frame_id = frame.frame_id;
  out.pose = frame.pose;
  out.intrinsics = frame.intrinsics.scaled(out_w, out_h);
  out.depth = DepthImage(out_w, out_h);
  out.color = RgbImage(out_w, out_h);
  if (frame.feature_map) out.feature_map = FeatureMap(out_h, out_w, frame.feature_map->depth);

  for (int y = 0; y < out_h; ++y) {
    const double src_y = y * sy;
    const int ny = nearest(src_y, h);
    const int y0 = std::min(static_cast<int>(std::floor(src_y)), h - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fy = src_y - y0;
    for (int x = 0; x < out_w; ++x) {
      const double src_x = x * sx;
      const int nx = nearest(src_x, w);
      out.depth.at(x, y) = frame.depth.at(nx, ny);
      if (frame.feature_map) {
        const int d = frame.feature_map->depth;
        std::copy_n(frame.feature_map->pixel(nx, ny), d, out.feature_map->pixel(x, y));
      }

      const int x0 = std::min(static_cast<int>(std::floor(src_x)), w - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const double fx = src_x - x0;
      const Rgb c00 = frame.color.at(x0, y0), c10 = frame.color.at(x1, y0);
      const Rgb c01 = frame.color.at(x0, y1), c11 = frame.color.at(x1, y1);
      Rgb c;
      for (int ch = 0; ch < 3; ++ch) {
        const double top = c00[ch] + (c10[ch] - c00[ch]) * fx;
        const double bottom = c01[ch] + (c11[ch] - c01[ch]) * fx;
        const double value = top + (bottom - top) * fy;
        c[ch] = static_cast<std::uint8_t>(std::clamp(std::lround(value), 0L, 255L));
      }
      out.color.set(x, y, c);
    }
  }
  return out;
}

}  // namespace dmf
