#include "mvrecon/mesh_io.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace mvr {

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, int line, const std::string& what) {
  throw io_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

int resolve_obj_index(long idx, int vertex_count, const std::filesystem::path& path, int line) {
  // OBJ indices are 1-based; negative values count back from the end.
  long resolved = idx > 0 ? idx - 1 : static_cast<long>(vertex_count) + idx;
  if (idx == 0 || resolved < 0 || resolved >= vertex_count)
    fail(path, line, "vertex index " + std::to_string(idx) + " out of range");
  return static_cast<int>(resolved);
}

}  // namespace

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open " + path.string());
  TriangleMesh mesh;
  bool any_color = false;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) fail(path, line_no, "vertex needs three coordinates");
      mesh.vertices.emplace_back(x, y, z);
      double r, g, b;
      if (ss >> r >> g >> b) {
        mesh.colors.resize(mesh.vertices.size() - 1, Vec3::Zero());
        mesh.colors.emplace_back(r, g, b);
        any_color = true;
      } else if (any_color) {
        fail(path, line_no, "vertex misses color although earlier vertices carry one");
      }
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string corner;
      while (ss >> corner) {
        // keep only the vertex index of "v", "v/vt", "v//vn", "v/vt/vn"
        const std::string head = corner.substr(0, corner.find('/'));
        long value = 0;
        const auto res = std::from_chars(head.data(), head.data() + head.size(), value);
        if (res.ec != std::errc() || res.ptr != head.data() + head.size())
          fail(path, line_no, "malformed face corner '" + corner + "'");
        idx.push_back(resolve_obj_index(value, mesh.vertex_count(), path, line_no));
      }
      if (idx.size() != 3)
        fail(path, line_no,
             "face has " + std::to_string(idx.size()) + " corners, only triangles are supported");
      mesh.faces.push_back({idx[0], idx[1], idx[2]});
    }
    // other tags (vn, vt, usemtl, o, g, s, mtllib, ...) are ignored
  }
  if (any_color) mesh.colors.resize(mesh.vertices.size(), Vec3::Zero());
  mesh.validate();
  return mesh;
}

void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  char buf[256];
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const Vec3& p = mesh.vertices[v];
    if (mesh.has_colors()) {
      const Vec3& c = mesh.colors[v];
      std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g %.17g %.17g %.17g\n", p.x(), p.y(),
                    p.z(), c.x(), c.y(), c.z());
    } else {
      std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    }
    out << buf;
  }
  for (const Face& f : mesh.faces) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
  if (!out) throw io_error("failed while writing " + path.string());
}

namespace {

enum class PlyType { i8, u8, i16, u16, i32, u32, f32, f64 };

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::f64;
  bool is_list = false;
  PlyType count_type = PlyType::u8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

PlyType parse_ply_type(const std::string& word, const std::filesystem::path& path, int line) {
  if (word == "char" || word == "int8") return PlyType::i8;
  if (word == "uchar" || word == "uint8") return PlyType::u8;
  if (word == "short" || word == "int16") return PlyType::i16;
  if (word == "ushort" || word == "uint16") return PlyType::u16;
  if (word == "int" || word == "int32") return PlyType::i32;
  if (word == "uint" || word == "uint32") return PlyType::u32;
  if (word == "float" || word == "float32") return PlyType::f32;
  if (word == "double" || word == "float64") return PlyType::f64;
  fail(path, line, "unknown property type '" + word + "'");
}

std::size_t ply_type_size(PlyType t) {
  switch (t) {
    case PlyType::i8:
    case PlyType::u8:
      return 1;
    case PlyType::i16:
    case PlyType::u16:
      return 2;
    case PlyType::i32:
    case PlyType::u32:
    case PlyType::f32:
      return 4;
    case PlyType::f64:
      return 8;
  }
  return 0;
}

double read_binary_value(std::istream& in, PlyType t) {
  unsigned char raw[8];
  in.read(reinterpret_cast<char*>(raw), static_cast<std::streamsize>(ply_type_size(t)));
  switch (t) {
    case PlyType::i8:
      return static_cast<double>(static_cast<signed char>(raw[0]));
    case PlyType::u8:
      return static_cast<double>(raw[0]);
    case PlyType::i16: {
      std::int16_t v;
      std::memcpy(&v, raw, 2);
      return v;
    }
    case PlyType::u16: {
      std::uint16_t v;
      std::memcpy(&v, raw, 2);
      return v;
    }
    case PlyType::i32: {
      std::int32_t v;
      std::memcpy(&v, raw, 4);
      return v;
    }
    case PlyType::u32: {
      std::uint32_t v;
      std::memcpy(&v, raw, 4);
      return v;
    }
    case PlyType::f32: {
      float v;
      std::memcpy(&v, raw, 4);
      return v;
    }
    case PlyType::f64: {
      double v;
      std::memcpy(&v, raw, 8);
      return v;
    }
  }
  return 0.0;
}

bool is_color_byte(PlyType t) { return t == PlyType::u8 || t == PlyType::i8; }

}  // namespace

TriangleMesh load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());

  std::string line;
  int line_no = 0;
  const auto next_line = [&]() {
    if (!std::getline(in, line)) fail(path, line_no, "unexpected end of header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
  };

  next_line();
  if (line != "ply") fail(path, line_no, "not a PLY file");
  bool binary = false;
  std::vector<PlyElement> elements;
  for (;;) {
    next_line();
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "comment" || tag == "obj_info" || tag.empty()) continue;
    if (tag == "format") {
      std::string format, version;
      ss >> format >> version;
      if (format == "ascii")
        binary = false;
      else if (format == "binary_little_endian")
        binary = true;
      else
        fail(path, line_no, "unsupported format '" + format + "'");
    } else if (tag == "element") {
      PlyElement el;
      if (!(ss >> el.name >> el.count)) fail(path, line_no, "malformed element line");
      elements.push_back(el);
    } else if (tag == "property") {
      if (elements.empty()) fail(path, line_no, "property before any element");
      PlyProperty prop;
      std::string word;
      ss >> word;
      if (word == "list") {
        prop.is_list = true;
        std::string count_word, value_word;
        if (!(ss >> count_word >> value_word >> prop.name))
          fail(path, line_no, "malformed list property");
        prop.count_type = parse_ply_type(count_word, path, line_no);
        prop.type = parse_ply_type(value_word, path, line_no);
      } else {
        prop.type = parse_ply_type(word, path, line_no);
        if (!(ss >> prop.name)) fail(path, line_no, "property misses a name");
      }
      elements.back().properties.push_back(prop);
    } else if (tag == "end_header") {
      break;
    } else {
      fail(path, line_no, "unknown header line '" + line + "'");
    }
  }

  TriangleMesh mesh;
  const auto read_ascii_value = [&](std::istringstream& ss) {
    double v;
    if (!(ss >> v)) fail(path, line_no, "too few values in element row");
    return v;
  };

  for (const PlyElement& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1;
    if (is_vertex) {
      for (int p = 0; p < static_cast<int>(el.properties.size()); ++p) {
        const std::string& n = el.properties[p].name;
        if (n == "x") ix = p;
        else if (n == "y") iy = p;
        else if (n == "z") iz = p;
        else if (n == "red" || n == "r") ir = p;
        else if (n == "green" || n == "g") ig = p;
        else if (n == "blue" || n == "b") ib = p;
      }
      if (ix < 0 || iy < 0 || iz < 0) fail(path, line_no, "vertex element misses x/y/z");
      mesh.vertices.reserve(el.count);
      if (ir >= 0 && ig >= 0 && ib >= 0) mesh.colors.reserve(el.count);
    }

    std::vector<double> row(el.properties.size());
    std::vector<long> list_values;
    for (std::size_t e = 0; e < el.count; ++e) {
      std::istringstream ss;
      if (!binary) {
        next_line();
        ss.str(line);
      }
      list_values.clear();
      for (std::size_t p = 0; p < el.properties.size(); ++p) {
        const PlyProperty& prop = el.properties[p];
        if (prop.is_list) {
          const double n =
              binary ? read_binary_value(in, prop.count_type) : read_ascii_value(ss);
          for (int k = 0; k < static_cast<int>(n); ++k)
            list_values.push_back(static_cast<long>(
                binary ? read_binary_value(in, prop.type) : read_ascii_value(ss)));
        } else {
          row[p] = binary ? read_binary_value(in, prop.type) : read_ascii_value(ss);
        }
      }
      if (binary && !in) throw io_error(path.string() + ": truncated binary payload");
      if (is_vertex) {
        mesh.vertices.emplace_back(row[ix], row[iy], row[iz]);
        if (ir >= 0 && ig >= 0 && ib >= 0) {
          Vec3 c(row[ir], row[ig], row[ib]);
          if (is_color_byte(el.properties[ir].type)) c /= 255.0;
          mesh.colors.push_back(c);
        }
      } else if (is_face) {
        if (list_values.size() != 3)
          throw io_error(path.string() + ": face " + std::to_string(e) + " has " +
                         std::to_string(list_values.size()) +
                         " corners, only triangles are supported");
        mesh.faces.push_back({static_cast<int>(list_values[0]), static_cast<int>(list_values[1]),
                              static_cast<int>(list_values[2])});
      }
    }
  }
  mesh.validate();
  return mesh;
}

void save_ply(const std::filesystem::path& path, const TriangleMesh& mesh, PlyFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  const bool binary = format == PlyFormat::binary_little_endian;
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  out << "element vertex " << mesh.vertex_count() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (mesh.has_colors())
    out << "property double red\nproperty double green\nproperty double blue\n";
  out << "element face " << mesh.face_count() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";

  if (binary) {
    const auto put = [&out](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      put(mesh.vertices[v].x());
      put(mesh.vertices[v].y());
      put(mesh.vertices[v].z());
      if (mesh.has_colors()) {
        put(mesh.colors[v].x());
        put(mesh.colors[v].y());
        put(mesh.colors[v].z());
      }
    }
    for (const Face& f : mesh.faces) {
      const unsigned char n = 3;
      out.write(reinterpret_cast<const char*>(&n), 1);
      std::array<std::int32_t, 3> idx{f[0], f[1], f[2]};
      out.write(reinterpret_cast<const char*>(idx.data()), 12);
    }
  } else {
    char buf[256];
    for (int v = 0; v < mesh.vertex_count(); ++v) {
      const Vec3& p = mesh.vertices[v];
      if (mesh.has_colors()) {
        const Vec3& c = mesh.colors[v];
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g\n", p.x(), p.y(),
                      p.z(), c.x(), c.y(), c.z());
      } else {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
      }
      out << buf;
    }
    for (const Face& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
  }
  if (!out) throw io_error("failed while writing " + path.string());
}

TriangleMesh load_mesh(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".obj") return load_obj(path);
  if (ext == ".ply") return load_ply(path);
  throw io_error("unsupported mesh extension '" + ext + "' for " + path.string());
}

void save_mesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
  const std::string ext = path.extension().string();
  if (ext == ".obj") return save_obj(path, mesh);
  if (ext == ".ply") return save_ply(path, mesh);
  throw io_error("unsupported mesh extension '" + ext + "' for " + path.string());
}

}  // namespace mvr
