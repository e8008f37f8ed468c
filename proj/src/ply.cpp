#include "planehec/ply.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "planehec/error.hpp"
#include "planehec/log.hpp"

namespace planehec {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary PLY support assumes a little-endian host");

enum class ScalarType { kInt8, kUInt8, kInt16, kUInt16, kInt32, kUInt32, kFloat32, kFloat64 };

std::optional<ScalarType> parse_type(const std::string& name) {
  if (name == "char" || name == "int8") return ScalarType::kInt8;
  if (name == "uchar" || name == "uint8") return ScalarType::kUInt8;
  if (name == "short" || name == "int16") return ScalarType::kInt16;
  if (name == "ushort" || name == "uint16") return ScalarType::kUInt16;
  if (name == "int" || name == "int32") return ScalarType::kInt32;
  if (name == "uint" || name == "uint32") return ScalarType::kUInt32;
  if (name == "float" || name == "float32") return ScalarType::kFloat32;
  if (name == "double" || name == "float64") return ScalarType::kFloat64;
  return std::nullopt;
}

std::size_t type_size(ScalarType t) {
  switch (t) {
    case ScalarType::kInt8:
    case ScalarType::kUInt8: return 1;
    case ScalarType::kInt16:
    case ScalarType::kUInt16: return 2;
    case ScalarType::kInt32:
    case ScalarType::kUInt32:
    case ScalarType::kFloat32: return 4;
    case ScalarType::kFloat64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  ScalarType type = ScalarType::kFloat32;
  bool is_list = false;
  ScalarType count_type = ScalarType::kUInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

Error parse_error(const std::string& what) { return Error(ErrorCode::kParse, "PLY: " + what); }

template <typename T>
T read_raw(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

double decode(ScalarType t, const char* p) {
  switch (t) {
    case ScalarType::kInt8: return read_raw<std::int8_t>(p);
    case ScalarType::kUInt8: return read_raw<std::uint8_t>(p);
    case ScalarType::kInt16: return read_raw<std::int16_t>(p);
    case ScalarType::kUInt16: return read_raw<std::uint16_t>(p);
    case ScalarType::kInt32: return read_raw<std::int32_t>(p);
    case ScalarType::kUInt32: return read_raw<std::uint32_t>(p);
    case ScalarType::kFloat32: return read_raw<float>(p);
    case ScalarType::kFloat64: return read_raw<double>(p);
  }
  return 0.0;
}

struct Header {
  bool binary = false;
  std::vector<Element> elements;
  std::size_t lines = 0;
};

Header read_header(std::istream& in) {
  Header h;
  std::string line;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++h.lines;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };
  if (!next_line() || line != "ply") throw parse_error("line 1: missing 'ply' magic");

  bool have_format = false;
  while (true) {
    if (!next_line()) throw parse_error("header ended before 'end_header'");
    std::istringstream ls(line);
    std::string keyword;
    ls >> keyword;
    const std::string where = "line " + std::to_string(h.lines) + ": ";
    if (keyword.empty() || keyword == "comment" || keyword == "obj_info") continue;
    if (keyword == "end_header") break;
    if (keyword == "format") {
      std::string encoding, version;
      ls >> encoding >> version;
      if (encoding == "ascii") {
        h.binary = false;
      } else if (encoding == "binary_little_endian") {
        h.binary = true;
      } else {
        throw parse_error(where + "unsupported encoding '" + encoding + "'");
      }
      have_format = true;
    } else if (keyword == "element") {
      Element e;
      long long count = -1;
      ls >> e.name >> count;
      if (e.name.empty() || count < 0 || ls.fail()) throw parse_error(where + "malformed element");
      e.count = static_cast<std::size_t>(count);
      h.elements.push_back(std::move(e));
    } else if (keyword == "property") {
      if (h.elements.empty()) throw parse_error(where + "property before any element");
      Property p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string count_type, item_type;
        ls >> count_type >> item_type >> p.name;
        auto ct = parse_type(count_type);
        auto it = parse_type(item_type);
        if (!ct || !it || p.name.empty()) throw parse_error(where + "malformed list property");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
      } else {
        auto t = parse_type(type);
        ls >> p.name;
        if (!t || p.name.empty()) throw parse_error(where + "malformed property");
        p.type = *t;
      }
      h.elements.back().properties.push_back(std::move(p));
    } else {
      throw parse_error(where + "unknown header keyword '" + keyword + "'");
    }
  }
  if (!have_format) throw parse_error("missing format line");
  return h;
}

struct XyzSlots {
  std::array<int, 3> index{-1, -1, -1};
};

XyzSlots locate_xyz(const Element& vertex) {
  XyzSlots s;
  static constexpr const char* kNames[] = {"x", "y", "z"};
  for (int axis = 0; axis < 3; ++axis) {
    for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
      if (vertex.properties[i].name == kNames[axis]) s.index[axis] = static_cast<int>(i);
    }
    if (s.index[axis] < 0) {
      throw parse_error(std::string("vertex element has no '") + kNames[axis] + "' property");
    }
    const Property& p = vertex.properties[static_cast<std::size_t>(s.index[axis])];
    if (p.is_list || (p.type != ScalarType::kFloat32 && p.type != ScalarType::kFloat64)) {
      throw parse_error(std::string("property '") + kNames[axis] + "' must be float or double");
    }
  }
  return s;
}

void add_point(PointCloud& cloud, const Eigen::Vector3d& p, PlyReadStats& stats) {
  ++stats.vertices;
  if (p.allFinite()) {
    cloud.points.push_back(p);
  } else {
    ++stats.dropped_non_finite;
  }
}

void read_ascii_body(std::istream& in, const Header& h, PointCloud& cloud, PlyReadStats& stats) {
  std::size_t line_no = h.lines;
  std::string line;
  for (const Element& e : h.elements) {
    const bool is_vertex = e.name == "vertex";
    const XyzSlots xyz = is_vertex ? locate_xyz(e) : XyzSlots{};
    for (std::size_t row = 0; row < e.count; ++row) {
      do {
        if (!std::getline(in, line)) {
          std::ostringstream msg;
          msg << "line " << line_no + 1 << ": element '" << e.name << "' declares " << e.count
              << " rows but only " << row << " are present";
          throw parse_error(msg.str());
        }
        ++line_no;
      } while (line.find_first_not_of(" \t\r") == std::string::npos);
      std::istringstream ls(line);
      Eigen::Vector3d p = Eigen::Vector3d::Zero();
      for (std::size_t pi = 0; pi < e.properties.size(); ++pi) {
        const Property& prop = e.properties[pi];
        std::string token;
        std::size_t items = 1;
        if (prop.is_list) {
          if (!(ls >> token)) throw parse_error("line " + std::to_string(line_no) + ": missing list count");
          items = static_cast<std::size_t>(std::stoul(token));
        }
        for (std::size_t k = 0; k < items; ++k) {
          if (!(ls >> token)) {
            throw parse_error("line " + std::to_string(line_no) + ": too few values for element '" +
                              e.name + "'");
          }
          if (is_vertex) {
            for (int axis = 0; axis < 3; ++axis) {
              if (xyz.index[axis] == static_cast<int>(pi)) {
                try {
                  p(axis) = std::stod(token);
                } catch (const std::out_of_range&) {
                  p(axis) = std::numeric_limits<double>::infinity();
                } catch (const std::invalid_argument&) {
                  // "nan"/"inf" spellings are handled by stod; anything else is malformed.
                  throw parse_error("line " + std::to_string(line_no) + ": bad number '" + token + "'");
                }
              }
            }
          }
        }
      }
      if (is_vertex) add_point(cloud, p, stats);
    }
  }
}

void read_binary_body(std::istream& in, const Header& h, PointCloud& cloud, PlyReadStats& stats) {
  const std::streamoff body_start = in.tellg();
  std::vector<char> body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto need = [&](std::size_t n, const Element& e, std::size_t row) {
    if (pos + n > body.size()) {
      std::ostringstream msg;
      msg << "byte offset " << body_start + static_cast<std::streamoff>(pos) << ": element '"
          << e.name << "' truncated at row " << row << " of " << e.count;
      throw parse_error(msg.str());
    }
  };
  for (const Element& e : h.elements) {
    const bool is_vertex = e.name == "vertex";
    const XyzSlots xyz = is_vertex ? locate_xyz(e) : XyzSlots{};
    for (std::size_t row = 0; row < e.count; ++row) {
      Eigen::Vector3d p = Eigen::Vector3d::Zero();
      for (std::size_t pi = 0; pi < e.properties.size(); ++pi) {
        const Property& prop = e.properties[pi];
        if (prop.is_list) {
          need(type_size(prop.count_type), e, row);
          const double count = decode(prop.count_type, body.data() + pos);
          pos += type_size(prop.count_type);
          if (count < 0) throw parse_error("negative list count in element '" + e.name + "'");
          const std::size_t bytes = static_cast<std::size_t>(count) * type_size(prop.type);
          need(bytes, e, row);
          pos += bytes;
          continue;
        }
        const std::size_t sz = type_size(prop.type);
        need(sz, e, row);
        if (is_vertex) {
          for (int axis = 0; axis < 3; ++axis) {
            if (xyz.index[axis] == static_cast<int>(pi)) p(axis) = decode(prop.type, body.data() + pos);
          }
        }
        pos += sz;
      }
      if (is_vertex) add_point(cloud, p, stats);
    }
  }
}

}  // namespace

PointCloud parse_ply(std::istream& in, PlyReadStats* stats) {
  const Header h = read_header(in);
  bool has_vertex = false;
  for (const auto& e : h.elements) has_vertex = has_vertex || e.name == "vertex";
  if (!has_vertex) throw parse_error("no 'vertex' element declared");

  PointCloud cloud;
  PlyReadStats local;
  if (h.binary) {
    read_binary_body(in, h, cloud, local);
  } else {
    read_ascii_body(in, h, cloud, local);
  }
  if (local.dropped_non_finite > 0) {
    log_warn("PLY: dropped " + std::to_string(local.dropped_non_finite) +
             " non-finite points of " + std::to_string(local.vertices));
  }
  if (stats) *stats = local;
  return cloud;
}

PointCloud parse_ply(const std::filesystem::path& path, PlyReadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open PLY file " + path.string());
  try {
    return parse_ply(in, stats);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kParse) throw;
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, PlyFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write PLY file " + path.string());
  out << "ply\n"
      << "format " << (format == PlyFormat::kAscii ? "ascii" : "binary_little_endian") << " 1.0\n"
      << "element vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "end_header\n";
  if (format == PlyFormat::kAscii) {
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& p : cloud.points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  } else {
    for (const auto& p : cloud.points) {
      const double xyz[3] = {p.x(), p.y(), p.z()};
      out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing PLY file " + path.string());
}

}  // namespace planehec
