#include "dmf/formats.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "dmf/errors.hpp"

namespace dmf {
namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");
static_assert(std::numeric_limits<float>::is_iec559);

namespace {

constexpr char kFmapMagic[4] = {'F', 'M', 'A', 'P'};
constexpr std::size_t kFmapHeaderBytes = 4 + 4 * 4;

template <typename T>
void put(std::vector<char>& out, T value) {
  const auto* p = reinterpret_cast<const char*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(const char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

std::vector<char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

// --- FMAP ------------------------------------------------------------------

std::vector<char> encode_feature_map(const FeatureMap& map) {
  if (map.height < 1 || map.width < 1 || map.depth < 1) {
    throw InputError("feature map: H, W and D must be >= 1");
  }
  const std::size_t count = static_cast<std::size_t>(map.height) * map.width * map.depth;
  if (map.values.size() != count) throw DimensionError("feature map: value count != H*W*D");
  std::vector<char> out;
  out.reserve(kFmapHeaderBytes + count * sizeof(float));
  out.insert(out.end(), kFmapMagic, kFmapMagic + 4);
  put<std::uint32_t>(out, kFeatureMapVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(map.height));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(map.width));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(map.depth));
  const auto* p = reinterpret_cast<const char*>(map.values.data());
  out.insert(out.end(), p, p + count * sizeof(float));
  return out;
}

FeatureMap decode_feature_map(const std::vector<char>& bytes) {
  if (bytes.size() < kFmapHeaderBytes) throw FormatError("feature map: truncated header");
  if (std::memcmp(bytes.data(), kFmapMagic, 4) != 0) throw FormatError("feature map: bad magic");
  const auto version = get<std::uint32_t>(bytes.data() + 4);
  if (version != kFeatureMapVersion) {
    throw FormatError("feature map: unsupported version " + std::to_string(version));
  }
  const auto h = get<std::uint32_t>(bytes.data() + 8);
  const auto w = get<std::uint32_t>(bytes.data() + 12);
  const auto d = get<std::uint32_t>(bytes.data() + 16);
  if (h == 0 || w == 0 || d == 0) throw FormatError("feature map: zero dimension");
  constexpr auto kMaxDim = static_cast<std::uint32_t>(std::numeric_limits<int>::max());
  if (h > kMaxDim || w > kMaxDim || d > kMaxDim) throw FormatError("feature map: dimension overflow");
  const std::uint64_t count = std::uint64_t{h} * w * d;
  if (bytes.size() != kFmapHeaderBytes + count * sizeof(float)) {
    throw FormatError("feature map: payload is " + std::to_string(bytes.size() - kFmapHeaderBytes) +
                      " bytes, expected " + std::to_string(count * sizeof(float)));
  }
  FeatureMap map;
  map.height = static_cast<int>(h);
  map.width = static_cast<int>(w);
  map.depth = static_cast<int>(d);
  map.values.resize(count);
  std::memcpy(map.values.data(), bytes.data() + kFmapHeaderBytes, count * sizeof(float));
  return map;
}

void write_feature_map(const fs::path& path, const FeatureMap& map) {
  write_file(path, encode_feature_map(map));
}

FeatureMap read_feature_map(const fs::path& path) {
  try {
    return decode_feature_map(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_feature_rows(const fs::path& path, const FeatureMatrix& rows) {
  FeatureMap map(static_cast<int>(rows.rows()), 1, static_cast<int>(rows.cols()));
  for (Eigen::Index i = 0; i < rows.size(); ++i) map.values[i] = static_cast<float>(rows.data()[i]);
  write_feature_map(path, map);
}

FeatureMatrix read_feature_rows(const fs::path& path) {
  const FeatureMap map = read_feature_map(path);
  if (map.width != 1) throw FormatError(path.string() + ": expected W = 1 for per-point rows");
  FeatureMatrix rows(map.height, map.depth);
  for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = map.values[i];
  return rows;
}

// --- PLY -------------------------------------------------------------------

ColorMode parse_color_mode(const std::string& name) {
  if (name == "rgb") return ColorMode::kRgb;
  if (name == "per-view-palette") return ColorMode::kPerViewPalette;
  if (name == "label-palette") return ColorMode::kLabelPalette;
  throw InputError("unknown color mode '" + name + "'");
}

Rgb palette_color(std::size_t index) {
  static constexpr Rgb kTable[] = {
      {174, 199, 232}, {152, 223, 138}, {31, 119, 180},  {255, 187, 120}, {188, 189, 34},
      {140, 86, 75},   {255, 152, 150}, {214, 39, 40},   {197, 176, 213}, {148, 103, 189},
      {196, 156, 148}, {23, 190, 207},  {247, 182, 210}, {219, 219, 141}, {255, 127, 14},
      {158, 218, 229}, {44, 160, 44},   {112, 128, 144}, {227, 119, 194}, {82, 84, 163},
  };
  constexpr std::size_t kTableSize = std::size(kTable);
  if (index < kTableSize) return kTable[index];
  // Beyond the table: base-64 digits of the index, one per channel, on the
  // lattice 4n+1 which no table entry lies on.
  const std::size_t k = index - kTableSize;
  const auto ch = [](std::size_t digit) { return static_cast<std::uint8_t>((digit % 64) * 4 + 1); };
  return {ch(k), ch(k / 64), ch(k / 4096)};
}

void write_ply(const fs::path& path, const std::vector<Eigen::Vector3d>& positions,
               const std::vector<Rgb>& colors) {
  if (positions.empty()) throw InputError("write_ply: cloud is empty (" + path.string() + ")");
  if (colors.size() != positions.size()) throw DimensionError("write_ply: color count mismatch");
  std::ostringstream header;
  header << "ply\nformat binary_little_endian 1.0\n"
         << "element vertex " << positions.size() << "\n"
         << "property float x\nproperty float y\nproperty float z\n"
         << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
         << "end_header\n";
  const std::string head = header.str();
  std::vector<char> out(head.begin(), head.end());
  out.reserve(out.size() + positions.size() * 15);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (int a = 0; a < 3; ++a) put<float>(out, static_cast<float>(positions[i][a]));
    for (int c = 0; c < 3; ++c) out.push_back(static_cast<char>(colors[i][c]));
  }
  write_file(path, out);
}

void write_ply(const fs::path& path, const PointCloud& cloud, ColorMode mode) {
  std::vector<Rgb> colors;
  switch (mode) {
    case ColorMode::kRgb:
      colors = cloud.has_colors() ? cloud.colors : std::vector<Rgb>(cloud.size(), {255, 255, 255});
      break;
    case ColorMode::kLabelPalette:
      if (!cloud.has_labels()) throw InputError("write_ply: label palette needs labels");
      for (int l : cloud.labels) colors.push_back(palette_color(static_cast<std::size_t>(std::max(l, 0))));
      break;
    case ColorMode::kPerViewPalette:
      throw InputError("write_ply: a scene point cloud has no source views");
  }
  write_ply(path, cloud.positions, colors);
}

void write_ply(const fs::path& path, const FeatureCloud& cloud, ColorMode mode) {
  std::vector<Rgb> colors;
  switch (mode) {
    case ColorMode::kRgb:
      colors = !cloud.colors.empty() ? cloud.colors
                                     : std::vector<Rgb>(cloud.size(), {255, 255, 255});
      break;
    case ColorMode::kPerViewPalette: {
      if (cloud.source_view.size() != cloud.size()) {
        throw InputError("write_ply: per-view palette needs source views");
      }
      const std::set<int> views(cloud.source_view.begin(), cloud.source_view.end());
      std::map<int, std::size_t> slot;
      for (int v : views) slot.emplace(v, slot.size());
      for (int v : cloud.source_view) colors.push_back(palette_color(slot.at(v)));
      break;
    }
    case ColorMode::kLabelPalette:
      throw InputError("write_ply: a feature cloud carries no labels");
  }
  write_ply(path, cloud.positions, colors);
}

namespace {

enum class PlyType { kI8, kU8, kI16, kU16, kI32, kU32, kF32, kF64 };

PlyType parse_ply_type(const std::string& t) {
  if (t == "char" || t == "int8") return PlyType::kI8;
  if (t == "uchar" || t == "uint8") return PlyType::kU8;
  if (t == "short" || t == "int16") return PlyType::kI16;
  if (t == "ushort" || t == "uint16") return PlyType::kU16;
  if (t == "int" || t == "int32") return PlyType::kI32;
  if (t == "uint" || t == "uint32") return PlyType::kU32;
  if (t == "float" || t == "float32") return PlyType::kF32;
  if (t == "double" || t == "float64") return PlyType::kF64;
  throw FormatError("ply: unknown property type '" + t + "'");
}

std::size_t ply_size(PlyType t) {
  switch (t) {
    case PlyType::kI8:
    case PlyType::kU8: return 1;
    case PlyType::kI16:
    case PlyType::kU16: return 2;
    case PlyType::kI32:
    case PlyType::kU32:
    case PlyType::kF32: return 4;
    case PlyType::kF64: return 8;
  }
  return 0;
}

double ply_value(PlyType t, const char* p) {
  switch (t) {
    case PlyType::kI8: return get<std::int8_t>(p);
    case PlyType::kU8: return get<std::uint8_t>(p);
    case PlyType::kI16: return get<std::int16_t>(p);
    case PlyType::kU16: return get<std::uint16_t>(p);
    case PlyType::kI32: return get<std::int32_t>(p);
    case PlyType::kU32: return get<std::uint32_t>(p);
    case PlyType::kF32: return get<float>(p);
    case PlyType::kF64: return get<double>(p);
  }
  return 0.0;
}

struct PlyProperty {
  std::string name;
  PlyType type;
};

}  // namespace

PointCloud read_ply(const fs::path& path) {
  const std::vector<char> bytes = read_file(path);
  std::size_t pos = 0;
  const auto next_line = [&]() -> std::string {
    const std::size_t start = pos;
    while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    if (pos >= bytes.size()) throw FormatError(path.string() + ": ply header not terminated");
    std::string line(bytes.data() + start, pos - start);
    ++pos;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };

  if (next_line() != "ply") throw FormatError(path.string() + ": missing 'ply' magic");
  bool binary = false;
  bool in_vertex = false;
  bool vertex_seen = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProperty> props;
  for (;;) {
    std::istringstream line(next_line());
    std::string word;
    line >> word;
    if (word == "end_header") break;
    if (word == "format") {
      std::string fmt;
      line >> fmt;
      if (fmt == "binary_little_endian") binary = true;
      else if (fmt == "ascii") binary = false;
      else throw FormatError(path.string() + ": unsupported ply format '" + fmt + "'");
    } else if (word == "element") {
      std::string name;
      std::size_t count = 0;
      line >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) {
        if (vertex_seen) throw FormatError(path.string() + ": duplicate vertex element");
        vertex_seen = true;
        vertex_count = count;
      } else if (!vertex_seen) {
        throw FormatError(path.string() + ": vertex element must come first");
      }
    } else if (word == "property" && in_vertex) {
      std::string type;
      std::string name;
      line >> type;
      if (type == "list") throw FormatError(path.string() + ": list property on vertex");
      line >> name;
      props.push_back({name, parse_ply_type(type)});
    }
  }
  if (!vertex_seen) throw FormatError(path.string() + ": no vertex element");

  const auto index_of = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < props.size(); ++i) {
      if (props[i].name == name) return static_cast<int>(i);
    }
    return -1;
  };
  const int ix = index_of("x"), iy = index_of("y"), iz = index_of("z");
  if (ix < 0 || iy < 0 || iz < 0) throw FormatError(path.string() + ": x/y/z properties missing");
  const int ir = index_of("red"), ig = index_of("green"), ib = index_of("blue");
  const bool has_color = ir >= 0 && ig >= 0 && ib >= 0;
  const int il = index_of("label");

  PointCloud cloud;
  cloud.positions.reserve(vertex_count);
  std::vector<double> row(props.size());
  if (binary) {
    std::vector<std::size_t> offsets(props.size());
    std::size_t stride = 0;
    for (std::size_t i = 0; i < props.size(); ++i) {
      offsets[i] = stride;
      stride += ply_size(props[i].type);
    }
    if (bytes.size() - pos < vertex_count * stride) {
      throw FormatError(path.string() + ": truncated vertex data");
    }
    for (std::size_t v = 0; v < vertex_count; ++v) {
      const char* base = bytes.data() + pos + v * stride;
      for (std::size_t i = 0; i < props.size(); ++i) row[i] = ply_value(props[i].type, base + offsets[i]);
      cloud.positions.emplace_back(row[ix], row[iy], row[iz]);
      if (has_color) {
        cloud.colors.push_back({static_cast<std::uint8_t>(row[ir]), static_cast<std::uint8_t>(row[ig]),
                                static_cast<std::uint8_t>(row[ib])});
      }
      if (il >= 0) cloud.labels.push_back(static_cast<int>(row[il]));
    }
  } else {
    std::istringstream body(std::string(bytes.data() + pos, bytes.size() - pos));
    for (std::size_t v = 0; v < vertex_count; ++v) {
      for (auto& value : row) {
        if (!(body >> value)) throw FormatError(path.string() + ": truncated ascii vertex data");
      }
      cloud.positions.emplace_back(row[ix], row[iy], row[iz]);
      if (has_color) {
        cloud.colors.push_back({static_cast<std::uint8_t>(row[ir]), static_cast<std::uint8_t>(row[ig]),
                                static_cast<std::uint8_t>(row[ib])});
      }
      if (il >= 0) cloud.labels.push_back(static_cast<int>(row[il]));
    }
  }
  return cloud;
}

// --- PNG -------------------------------------------------------------------

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> data;  // rows as stored, 16-bit samples big-endian
};

PngImage read_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw LoadError("cannot open " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialisation failed");
  }
  PngImage img;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path.string() + ": not a readable PNG");
  }
  png_init_io(png, file.get());
  png_read_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  const int color_type = png_get_color_type(png, info);
  img.bit_depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && img.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  img.channels = png_get_channels(png, info);
  img.bit_depth = png_get_bit_depth(png, info);
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  img.data.resize(row_bytes * img.height);
  rows.resize(img.height);
  for (int y = 0; y < img.height; ++y) rows[y] = img.data.data() + y * row_bytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const fs::path& path, int width, int height, int channels, int bit_depth,
               const std::vector<std::uint8_t>& data) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("write failed: " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t row_bytes = static_cast<std::size_t>(width) * channels * (bit_depth / 8);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(data.data() + y * row_bytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

DepthImage read_depth_png(const fs::path& path, double divisor) {
  const PngImage img = read_png(path);
  if (img.channels != 1 || img.bit_depth != 16) {
    throw FormatError(path.string() + ": depth PNG must be 16-bit single channel");
  }
  DepthImage depth(img.width, img.height);
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    const unsigned raw = (unsigned{img.data[2 * i]} << 8) | img.data[2 * i + 1];
    depth.values[i] = static_cast<float>(raw / divisor);
  }
  return depth;
}

void write_depth_png(const fs::path& path, const DepthImage& depth, double divisor) {
  std::vector<std::uint8_t> data(depth.values.size() * 2);
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    const double scaled = std::round(depth.values[i] * divisor);
    const auto raw = static_cast<std::uint16_t>(std::clamp(scaled, 0.0, 65535.0));
    data[2 * i] = static_cast<std::uint8_t>(raw >> 8);
    data[2 * i + 1] = static_cast<std::uint8_t>(raw & 0xff);
  }
  write_png(path, depth.width, depth.height, 1, 16, data);
}

DepthImage read_depth_raw(const fs::path& path) {
  const FeatureMap map = read_feature_map(path);
  if (map.depth != 1) throw FormatError(path.string() + ": raw depth must have D = 1");
  DepthImage depth;
  depth.width = map.width;
  depth.height = map.height;
  depth.values = map.values;
  for (float d : depth.values) {
    if (!(d >= 0.0f)) throw ValidationError(path.string() + ": negative or NaN depth");
  }
  return depth;
}

void write_depth_raw(const fs::path& path, const DepthImage& depth) {
  FeatureMap map;
  map.height = depth.height;
  map.width = depth.width;
  map.depth = 1;
  map.values = depth.values;
  write_feature_map(path, map);
}

RgbImage read_color_png(const fs::path& path) {
  const PngImage img = read_png(path);
  if (img.bit_depth != 8) throw FormatError(path.string() + ": color PNG must be 8-bit");
  RgbImage out(img.width, img.height);
  for (std::size_t i = 0; i < static_cast<std::size_t>(img.width) * img.height; ++i) {
    for (int c = 0; c < 3; ++c) {
      out.data[3 * i + c] = img.channels == 1 ? img.data[i] : img.data[img.channels * i + c];
    }
  }
  return out;
}

void write_color_png(const fs::path& path, const RgbImage& image) {
  write_png(path, image.width, image.height, 3, 8, image.data);
}

// --- text ------------------------------------------------------------------

std::vector<double> read_numbers(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::vector<double> values;
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": not a number: '" + token + "'");
    }
  }
  return values;
}

namespace {

void write_matrix(const fs::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << m(r, c);
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

Pose read_pose(const fs::path& path, PoseConvention convention, double tolerance) {
  const auto v = read_numbers(path);
  if (v.size() != 16) {
    throw FormatError(path.string() + ": pose must hold 16 numbers, found " + std::to_string(v.size()));
  }
  Eigen::Matrix4d m;
  for (int i = 0; i < 16; ++i) m(i / 4, i % 4) = v[i];
  try {
    return Pose::from_matrix(m, convention, tolerance);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_pose(const fs::path& path, const Pose& pose) { write_matrix(path, pose.matrix()); }

CameraIntrinsics read_intrinsics(const fs::path& path, int width, int height) {
  const auto v = read_numbers(path);
  int n = 0;
  if (v.size() == 9) n = 3;
  else if (v.size() == 16) n = 4;
  else throw FormatError(path.string() + ": intrinsics must be a 3x3 or 4x4 matrix");
  CameraIntrinsics intr{v[0], v[n + 1], v[2], v[n + 2], width, height};
  try {
    intr.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return intr;
}

void write_intrinsics(const fs::path& path, const CameraIntrinsics& intr) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = intr.matrix();
  write_matrix(path, m);
}

std::vector<int> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open " + path.string());
  std::vector<int> labels;
  std::string token;
  while (in >> token) {
    try {
      std::size_t used = 0;
      labels.push_back(std::stoi(token, &used));
      if (used != token.size()) throw std::invalid_argument(token);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ": not an integer label: '" + token + "'");
    }
  }
  return labels;
}

void write_labels(const fs::path& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  for (int l : labels) out << l << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace dmf
