#include "hgs/ply_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace hgs {
namespace {

constexpr const char* kSceneProps[] = {
    "x", "y", "z", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1",
    "rot_2", "rot_3", "opacity_logit", "r", "g", "b", "level", "birth_iter"};

struct Property {
  std::string type;
  std::string name;
};

struct PlyHeader {
  size_t vertex_count = 0;
  std::vector<Property> props;
};

size_t type_size(const std::string& t) {
  if (t == "double" || t == "float64") return 8;
  if (t == "float" || t == "float32") return 4;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32") return 4;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "uchar" || t == "char" || t == "uint8" || t == "int8") return 1;
  throw std::runtime_error("unsupported PLY property type: " + t);
}

double read_as_double(const char* p, const std::string& t) {
  if (t == "double" || t == "float64") {
    double v;
    std::memcpy(&v, p, 8);
    return v;
  }
  if (t == "float" || t == "float32") {
    float v;
    std::memcpy(&v, p, 4);
    return v;
  }
  if (t == "int" || t == "int32") {
    int32_t v;
    std::memcpy(&v, p, 4);
    return v;
  }
  if (t == "uint" || t == "uint32") {
    uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
  }
  if (t == "short" || t == "int16") {
    int16_t v;
    std::memcpy(&v, p, 2);
    return v;
  }
  if (t == "ushort" || t == "uint16") {
    uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
  }
  if (t == "uchar" || t == "uint8") return static_cast<uint8_t>(*p);
  if (t == "char" || t == "int8") return static_cast<int8_t>(*p);
  throw std::runtime_error("unsupported PLY property type: " + t);
}

PlyHeader parse_header(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line) || line != "ply")
    throw std::runtime_error(path + ": not a PLY file");
  if (!std::getline(in, line) || line != "format binary_little_endian 1.0")
    throw std::runtime_error(path + ": expected binary_little_endian 1.0");
  PlyHeader h;
  bool in_vertex = false;
  while (std::getline(in, line)) {
    if (line == "end_header") return h;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "comment") continue;
    if (word == "element") {
      std::string name;
      size_t count;
      ls >> name >> count;
      in_vertex = name == "vertex";
      if (in_vertex) h.vertex_count = count;
      else if (count > 0)
        throw std::runtime_error(path + ": unsupported non-vertex element " + name);
      continue;
    }
    if (word == "property") {
      if (!in_vertex) continue;
      Property p;
      ls >> p.type >> p.name;
      if (p.type == "list")
        throw std::runtime_error(path + ": list properties not supported");
      h.props.push_back(p);
      continue;
    }
  }
  throw std::runtime_error(path + ": missing end_header");
}

std::string expected_schema() {
  std::string s;
  for (const char* p : kSceneProps) {
    s += p;
    s += ' ';
  }
  return s;
}

template <typename T>
void put(std::string& buf, T v) {
  char tmp[sizeof(T)];
  std::memcpy(tmp, &v, sizeof(T));
  buf.append(tmp, sizeof(T));
}

void write_gaussian(std::string& buf, const Gaussian& g) {
  put(buf, g.mu.x());
  put(buf, g.mu.y());
  put(buf, g.mu.z());
  for (int i = 0; i < 3; ++i) put(buf, g.scale[i]);
  for (int i = 0; i < 4; ++i) put(buf, g.rotation[i]);
  put(buf, g.opacity_logit);
  for (int i = 0; i < 3; ++i) put(buf, g.color[i]);
  put(buf, static_cast<uint8_t>(g.level));
  put(buf, static_cast<int32_t>(g.birth_iter));
}

}  // namespace

void save_scene(const std::string& path, const Scene& scene) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << scene.size() << "\n";
  for (const char* p : kSceneProps) {
    const bool is_level = std::strcmp(p, "level") == 0;
    const bool is_birth = std::strcmp(p, "birth_iter") == 0;
    out << "property " << (is_level ? "uchar" : is_birth ? "int" : "double")
        << ' ' << p << "\n";
  }
  out << "end_header\n";
  std::string buf;
  buf.reserve(scene.size() * (14 * 8 + 1 + 4));
  for (const Gaussian& g : scene.coarse) write_gaussian(buf, g);
  for (const Gaussian& g : scene.fine) write_gaussian(buf, g);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("failed writing scene to " + path);
}

Scene load_scene(const std::string& path, double default_scale,
                 double default_alpha) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  const PlyHeader h = parse_header(in, path);

  size_t stride = 0;
  std::map<std::string, size_t> offset;
  std::map<std::string, std::string> type_of;
  for (const Property& p : h.props) {
    offset[p.name] = stride;
    type_of[p.name] = p.type;
    stride += type_size(p.type);
  }

  std::vector<char> row(stride);
  auto field = [&](const std::string& name) {
    return read_as_double(row.data() + offset.at(name), type_of.at(name));
  };

  // Full checkpoint layout: names and types must match exactly.
  bool exact = h.props.size() == std::size(kSceneProps);
  if (exact)
    for (size_t i = 0; i < h.props.size(); ++i) {
      const std::string want =
          h.props[i].name == "level" ? "uchar"
          : h.props[i].name == "birth_iter" ? "int" : "double";
      if (h.props[i].name != kSceneProps[i] || h.props[i].type != want)
        exact = false;
    }

  const bool has_xyz =
      offset.count("x") && offset.count("y") && offset.count("z");
  const bool rgb_short = offset.count("r") && offset.count("g") && offset.count("b");
  const bool rgb_long =
      offset.count("red") && offset.count("green") && offset.count("blue");
  if (!exact && !has_xyz)
    throw std::runtime_error(path + ": unknown PLY layout; expected scene schema [" +
                             expected_schema() + "] or a point cloud with x y z");

  Scene scene;
  for (size_t i = 0; i < h.vertex_count; ++i) {
    in.read(row.data(), static_cast<std::streamsize>(stride));
    if (!in) throw std::runtime_error(path + ": truncated vertex data");
    Gaussian g;
    g.mu = Vec3(field("x"), field("y"), field("z"));
    if (exact) {
      g.scale = Vec3(field("scale_0"), field("scale_1"), field("scale_2"));
      g.rotation =
          Vec4(field("rot_0"), field("rot_1"), field("rot_2"), field("rot_3"));
      g.opacity_logit = field("opacity_logit");
      g.color = Vec3(field("r"), field("g"), field("b"));
      g.level = field("level") != 0.0 ? Level::Fine : Level::Coarse;
      g.birth_iter = static_cast<int>(field("birth_iter"));
    } else {
      g.scale = Vec3::Constant(default_scale);
      g.opacity_logit = logit(default_alpha);
      const char* rn = rgb_short ? "r" : rgb_long ? "red" : nullptr;
      const char* gn = rgb_short ? "g" : rgb_long ? "green" : nullptr;
      const char* bn = rgb_short ? "b" : rgb_long ? "blue" : nullptr;
      if (rn) {
        Vec3 c(field(rn), field(gn), field(bn));
        const std::string& t = type_of.at(rn);
        if (t == "uchar" || t == "uint8" || t == "char" || t == "int8")
          c /= 255.0;
        g.color = c.cwiseMax(0.0).cwiseMin(1.0);
      } else {
        g.color = Vec3::Constant(0.5);
      }
      g.level = Level::Coarse;
    }
    (g.level == Level::Fine ? scene.fine : scene.coarse).push_back(g);
  }
  return scene;
}

void save_point_cloud(const std::string& path, const std::vector<Vec3>& points,
                      const std::vector<Vec3>& colors) {
  if (points.size() != colors.size())
    throw std::invalid_argument("save_point_cloud: size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << points.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n";
  std::string buf;
  for (size_t i = 0; i < points.size(); ++i) {
    put(buf, static_cast<float>(points[i].x()));
    put(buf, static_cast<float>(points[i].y()));
    put(buf, static_cast<float>(points[i].z()));
    for (int c = 0; c < 3; ++c)
      put(buf, static_cast<uint8_t>(std::lround(
                   std::clamp(colors[i][c], 0.0, 1.0) * 255.0)));
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("failed writing cloud to " + path);
}

}  // namespace hgs
