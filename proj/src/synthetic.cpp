#include "dmf/synthetic.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include "dmf/errors.hpp"

namespace dmf {
namespace {

constexpr double kHitEpsilon = 1e-9;

struct Hit {
  double t = std::numeric_limits<double>::infinity();
  Rgb color{};
};

/// Entry and exit parameters of a ray against an axis-aligned box.
bool slab(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Eigen::Vector3d& lo,
          const Eigen::Vector3d& hi, double& t_near, double& t_far) {
  t_near = -std::numeric_limits<double>::infinity();
  t_far = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d[a] == 0.0) {
      if (o[a] < lo[a] || o[a] > hi[a]) return false;
      continue;
    }
    double t0 = (lo[a] - o[a]) / d[a];
    double t1 = (hi[a] - o[a]) / d[a];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  return t_near <= t_far;
}

void intersect(const Primitive& p, const Eigen::Vector3d& o, const Eigen::Vector3d& d, Hit& best) {
  double t = std::numeric_limits<double>::infinity();
  if (p.kind == PrimitiveKind::kBox) {
    double t_near = 0.0, t_far = 0.0;
    const Eigen::Vector3d half = p.size / 2.0;
    if (slab(o, d, p.center - half, p.center + half, t_near, t_far) && t_near > kHitEpsilon) {
      t = t_near;
    }
  } else {
    const Eigen::Vector3d oc = o - p.center;
    const double a = d.squaredNorm();
    const double b = oc.dot(d);
    const double c = oc.squaredNorm() - p.radius * p.radius;
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double root = (-b - std::sqrt(disc)) / a;
      if (root > kHitEpsilon) t = root;
    }
  }
  if (t < best.t) best = {t, p.color};
}

Hit trace(const SyntheticSpec& spec, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  Hit best;
  for (const auto& obj : spec.objects) intersect(obj, o, d, best);
  if (spec.room) {
    double t_near = 0.0, t_far = 0.0;
    if (slab(o, d, spec.room->min, spec.room->max, t_near, t_far) && t_far > kHitEpsilon &&
        t_far < best.t) {
      best = {t_far, spec.room->color};
    }
  }
  return best;
}

Eigen::Vector3d ray_direction(const CameraIntrinsics& intr, const Pose& pose, Pixel px) {
  const Eigen::Vector3d cam((px.u - intr.cx) / intr.fx, (px.v - intr.cy) / intr.fy, 1.0);
  // Direction only: rotate into the world without translating.
  const Eigen::Matrix3d r = pose.convention == PoseConvention::kCameraToWorld
                                ? pose.rotation
                                : Eigen::Matrix3d(pose.rotation.transpose());
  return r * cam;
}

Eigen::Vector3d camera_center(const Pose& pose) {
  return pose.camera_to_world(Eigen::Vector3d::Zero());
}

Rgb parse_rgb(const Json& j, const char* key, Rgb fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_array() || v.size() != 3) throw SpecError(where + "." + key + ": expected [r, g, b]");
  Rgb out;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number_integer() || v[i].get<int>() < 0 || v[i].get<int>() > 255) {
      throw SpecError(where + "." + key + ": channels must be integers in [0, 255]");
    }
    out[i] = static_cast<std::uint8_t>(v[i].get<int>());
  }
  return out;
}

Json vec_json(const Eigen::Vector3d& v) { return Json::array({v.x(), v.y(), v.z()}); }
Json rgb_json(const Rgb& c) { return Json::array({c[0], c[1], c[2]}); }

double to_float_grid(double x) { return static_cast<double>(static_cast<float>(x)); }

/// Uniform samples on the surface of one primitive.
void sample_surface(const Primitive& p, double density, bool skip_bottom, std::mt19937_64& rng,
                    std::vector<Eigen::Vector3d>& out) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  if (p.kind == PrimitiveKind::kSphere) {
    const double area = 4.0 * std::numbers::pi * p.radius * p.radius;
    const auto n = std::max<long>(1, std::lround(area * density));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (long i = 0; i < n; ++i) {
      Eigen::Vector3d dir(gauss(rng), gauss(rng), gauss(rng));
      if (dir.norm() < 1e-12) dir = Eigen::Vector3d::UnitZ();
      out.push_back(p.center + p.radius * dir.normalized());
    }
    return;
  }
  const Eigen::Vector3d half = p.size / 2.0;
  // Faces as (fixed axis, sign); the other two axes span the face.
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {-1, 1}) {
      if (skip_bottom && axis == 2 && sign < 0) continue;
      const int a1 = (axis + 1) % 3;
      const int a2 = (axis + 2) % 3;
      const double area = p.size[a1] * p.size[a2];
      const auto n = std::max<long>(1, std::lround(area * density));
      for (long i = 0; i < n; ++i) {
        Eigen::Vector3d q = p.center;
        q[axis] += sign * half[axis];
        q[a1] += (uni(rng) - 0.5) * p.size[a1];
        q[a2] += (uni(rng) - 0.5) * p.size[a2];
        out.push_back(q);
      }
    }
  }
}

}  // namespace

void SyntheticSpec::validate() const {
  if (objects.empty()) throw SpecError("synthetic spec: at least one object is required");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    const std::string where = "synthetic spec: object " + std::to_string(i);
    if (!o.center.allFinite()) throw SpecError(where + " has a non-finite center");
    if (o.kind == PrimitiveKind::kBox && !(o.size.minCoeff() > 0.0)) {
      throw SpecError(where + " needs a positive size");
    }
    if (o.kind == PrimitiveKind::kSphere && !(o.radius > 0.0)) {
      throw SpecError(where + " needs a positive radius");
    }
    if (o.class_id < 0) throw SpecError(where + " needs a class_id >= 0");
  }
  if (room && !((room->max - room->min).minCoeff() > 0.0)) {
    throw SpecError("synthetic spec: room max must exceed min on every axis");
  }
  if (image.width < 1 || image.height < 1 || !(image.fx > 0.0) || !(image.fy > 0.0)) {
    throw SpecError("synthetic spec: image needs positive size and focal lengths");
  }
  if (orbit.count < 0) throw SpecError("synthetic spec: orbit count must be >= 0");
  if (orbit.count + cameras.size() == 0) throw SpecError("synthetic spec: no cameras");
  if (!(point_density > 0.0)) throw SpecError("synthetic spec: point_density must be positive");
  if (!(color_noise >= 0.0)) throw SpecError("synthetic spec: color_noise must be >= 0");
}

SyntheticSpec SyntheticSpec::from_json(const Json& j) {
  require_known_keys(j,
                     {"scene_id", "room", "objects", "orbit", "cameras", "image", "point_density",
                      "color_noise", "skip_box_bottoms"},
                     "synthetic spec");
  SyntheticSpec s;
  s.scene_id = value_or<std::string>(j, "scene_id", s.scene_id, "synthetic spec");
  if (s.scene_id.empty()) throw SpecError("synthetic spec: scene_id must not be empty");
  if (j.contains("room") && !j.at("room").is_null()) {
    const Json& r = j.at("room");
    require_known_keys(r, {"min", "max", "color", "class_id"}, "room");
    RoomSpec room;
    room.min = vec3_or(r, "min", room.min, "room");
    room.max = vec3_or(r, "max", room.max, "room");
    room.color = parse_rgb(r, "color", room.color, "room");
    room.class_id = value_or<int>(r, "class_id", room.class_id, "room");
    s.room = room;
  }
  if (j.contains("objects")) {
    if (!j.at("objects").is_array()) throw SpecError("synthetic spec: objects must be an array");
    for (const Json& o : j.at("objects")) {
      const std::string where = "objects[" + std::to_string(s.objects.size()) + "]";
      require_known_keys(o, {"type", "center", "size", "radius", "class_id", "color"}, where);
      Primitive p;
      const auto type = value_or<std::string>(o, "type", "box", where);
      if (type == "box") p.kind = PrimitiveKind::kBox;
      else if (type == "sphere") p.kind = PrimitiveKind::kSphere;
      else throw SpecError(where + ": unknown type '" + type + "'");
      p.center = vec3_or(o, "center", p.center, where);
      p.size = vec3_or(o, "size", p.size, where);
      p.radius = value_or<double>(o, "radius", p.radius, where);
      p.class_id = value_or<int>(o, "class_id", p.class_id, where);
      p.color = parse_rgb(o, "color", p.color, where);
      s.objects.push_back(p);
    }
  }
  if (j.contains("orbit")) {
    const Json& o = j.at("orbit");
    require_known_keys(o, {"count", "radius", "height", "target", "start_deg", "arc_deg"}, "orbit");
    s.orbit.count = value_or<int>(o, "count", s.orbit.count, "orbit");
    s.orbit.radius = value_or<double>(o, "radius", s.orbit.radius, "orbit");
    s.orbit.height = value_or<double>(o, "height", s.orbit.height, "orbit");
    s.orbit.target = vec3_or(o, "target", s.orbit.target, "orbit");
    s.orbit.start_deg = value_or<double>(o, "start_deg", s.orbit.start_deg, "orbit");
    s.orbit.arc_deg = value_or<double>(o, "arc_deg", s.orbit.arc_deg, "orbit");
  }
  if (j.contains("cameras")) {
    if (!j.at("cameras").is_array()) throw SpecError("synthetic spec: cameras must be an array");
    for (const Json& c : j.at("cameras")) {
      require_known_keys(c, {"eye", "target"}, "cameras[]");
      if (!c.contains("eye") || !c.contains("target")) {
        throw SpecError("cameras[]: eye and target are required");
      }
      s.cameras.push_back({vec3_or(c, "eye", {}, "cameras[]"), vec3_or(c, "target", {}, "cameras[]")});
    }
  }
  if (j.contains("image")) {
    const Json& im = j.at("image");
    require_known_keys(im, {"width", "height", "fx", "fy"}, "image");
    s.image.width = value_or<int>(im, "width", s.image.width, "image");
    s.image.height = value_or<int>(im, "height", s.image.height, "image");
    s.image.fx = value_or<double>(im, "fx", s.image.fx, "image");
    s.image.fy = value_or<double>(im, "fy", s.image.fy, "image");
  }
  s.point_density = value_or<double>(j, "point_density", s.point_density, "synthetic spec");
  s.color_noise = value_or<double>(j, "color_noise", s.color_noise, "synthetic spec");
  s.skip_box_bottoms = value_or<bool>(j, "skip_box_bottoms", s.skip_box_bottoms, "synthetic spec");
  s.validate();
  return s;
}

Json SyntheticSpec::to_json() const {
  Json j;
  j["scene_id"] = scene_id;
  if (room) {
    j["room"] = {{"min", vec_json(room->min)},
                 {"max", vec_json(room->max)},
                 {"color", rgb_json(room->color)},
                 {"class_id", room->class_id}};
  }
  j["objects"] = Json::array();
  for (const auto& o : objects) {
    Json jo = {{"type", o.kind == PrimitiveKind::kBox ? "box" : "sphere"},
               {"center", vec_json(o.center)},
               {"class_id", o.class_id},
               {"color", rgb_json(o.color)}};
    if (o.kind == PrimitiveKind::kBox) jo["size"] = vec_json(o.size);
    else jo["radius"] = o.radius;
    j["objects"].push_back(jo);
  }
  j["orbit"] = {{"count", orbit.count},         {"radius", orbit.radius},
                {"height", orbit.height},       {"target", vec_json(orbit.target)},
                {"start_deg", orbit.start_deg}, {"arc_deg", orbit.arc_deg}};
  j["cameras"] = Json::array();
  for (const auto& c : cameras) j["cameras"].push_back({{"eye", vec_json(c.eye)}, {"target", vec_json(c.target)}});
  j["image"] = {{"width", image.width}, {"height", image.height}, {"fx", image.fx}, {"fy", image.fy}};
  j["point_density"] = point_density;
  j["color_noise"] = color_noise;
  j["skip_box_bottoms"] = skip_box_bottoms;
  return j;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open synthetic spec " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(path.string() + ": invalid JSON: " + e.what());
  }
  return SyntheticSpec::from_json(j);
}

CameraIntrinsics synthetic_intrinsics(const ImageSpec& image) {
  return {image.fx, image.fy, static_cast<double>(image.width / 2),
          static_cast<double>(image.height / 2), image.width, image.height};
}

std::optional<double> cast_depth(const SyntheticSpec& spec, const CameraIntrinsics& intr,
                                 const Pose& pose, Pixel px) {
  const Hit hit = trace(spec, camera_center(pose), ray_direction(intr, pose, px));
  if (!std::isfinite(hit.t)) return std::nullopt;
  return hit.t;
}

Scene generate_synthetic_scene(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const CameraIntrinsics intr = synthetic_intrinsics(spec.image);
  std::mt19937_64 rng(seed);

  Scene scene;
  scene.scene_id = spec.scene_id;

  std::vector<const Primitive*> sources;
  for (const auto& o : spec.objects) sources.push_back(&o);
  std::vector<Primitive> room_faces;
  if (spec.room && spec.room->class_id >= 0) {
    // Walls, floor and ceiling as thin boxes; only their inner faces matter
    // visually but the sampler covers each slab's inward face.
    const auto& r = *spec.room;
    const Eigen::Vector3d size = r.max - r.min;
    const Eigen::Vector3d mid = (r.max + r.min) / 2.0;
    for (int axis = 0; axis < 3; ++axis) {
      for (int sign : {-1, 1}) {
        Primitive face;
        face.kind = PrimitiveKind::kBox;
        face.size = size;
        face.size[axis] = 0.0;
        face.center = mid;
        face.center[axis] = sign < 0 ? r.min[axis] : r.max[axis];
        face.class_id = r.class_id;
        face.color = r.color;
        room_faces.push_back(face);
      }
    }
  }

  for (const Primitive* p : sources) {
    std::vector<Eigen::Vector3d> pts;
    sample_surface(*p, spec.point_density, spec.skip_box_bottoms, rng, pts);
    for (const auto& q : pts) {
      scene.points.positions.emplace_back(to_float_grid(q.x()), to_float_grid(q.y()), to_float_grid(q.z()));
      scene.points.colors.push_back(p->color);
      scene.points.labels.push_back(p->class_id);
    }
  }
  for (const auto& face : room_faces) {
    // A zero-thickness box: sample its one non-degenerate face pair once.
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    int axis = 0;
    for (int a = 0; a < 3; ++a) if (face.size[a] == 0.0) axis = a;
    const int a1 = (axis + 1) % 3;
    const int a2 = (axis + 2) % 3;
    const auto n = std::max<long>(1, std::lround(face.size[a1] * face.size[a2] * spec.point_density));
    for (long i = 0; i < n; ++i) {
      Eigen::Vector3d q = face.center;
      q[a1] += (uni(rng) - 0.5) * face.size[a1];
      q[a2] += (uni(rng) - 0.5) * face.size[a2];
      scene.points.positions.emplace_back(to_float_grid(q.x()), to_float_grid(q.y()), to_float_grid(q.z()));
      scene.points.colors.push_back(face.color);
      scene.points.labels.push_back(face.class_id);
    }
  }

  std::vector<Pose> poses;
  for (int i = 0; i < spec.orbit.count; ++i) {
    const double deg = spec.orbit.start_deg + spec.orbit.arc_deg * i / spec.orbit.count;
    const double rad = deg * std::numbers::pi / 180.0;
    const Eigen::Vector3d eye(spec.orbit.target.x() + spec.orbit.radius * std::cos(rad),
                              spec.orbit.target.y() + spec.orbit.radius * std::sin(rad),
                              spec.orbit.height);
    poses.push_back(Pose::look_at(eye, spec.orbit.target));
  }
  for (const auto& c : spec.cameras) poses.push_back(Pose::look_at(c.eye, c.target));

  for (std::size_t id = 0; id < poses.size(); ++id) {
    CameraFrame frame;
    frame.frame_id = static_cast<int>(id);
    frame.intrinsics = intr;
    frame.pose = poses[id];
    frame.depth = DepthImage(intr.width, intr.height);
    frame.color = RgbImage(intr.width, intr.height);
    std::mt19937_64 noise_rng(seed ^ (0x9E3779B97F4A7C15ull * (id + 1)));
    std::uniform_real_distribution<double> jitter(-spec.color_noise, spec.color_noise);
    const Eigen::Vector3d origin = camera_center(frame.pose);
    for (int y = 0; y < intr.height; ++y) {
      for (int x = 0; x < intr.width; ++x) {
        const Hit hit = trace(spec, origin, ray_direction(intr, frame.pose, {double(x), double(y)}));
        if (!std::isfinite(hit.t)) continue;
        frame.depth.at(x, y) = static_cast<float>(hit.t);
        Rgb c = hit.color;
        if (spec.color_noise > 0.0) {
          for (auto& ch : c) ch = static_cast<std::uint8_t>(std::clamp(std::lround(ch + jitter(noise_rng)), 0L, 255L));
        }
        frame.color.set(x, y, c);
      }
    }
    if (frame.depth.valid_count() > 0) scene.frames.push_back(std::move(frame));
  }
  if (scene.frames.empty()) throw SpecError("synthetic spec: no camera sees any surface");
  return scene;
}

}  // namespace dmf
