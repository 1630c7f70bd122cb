#include "topowarp/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace topowarp {
namespace {

// All binary formats here are little-endian; so is every platform this
// builds on. memcpy keeps the accesses alignment-safe.
template <class T>
void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <class T>
T get(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(T) > buf.size()) throw std::runtime_error("truncated payload");
  T v;
  std::memcpy(&v, buf.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Shortest decimal form that round-trips a double exactly.
std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint8_t to_u8(double c) {
  const double scaled = std::lround(std::clamp(c, 0.0, 1.0) * 255.0);
  return static_cast<std::uint8_t>(scaled);
}

}  // namespace

// ---------------------------------------------------------------- PLY ----

namespace {

enum class PlyType { I8, U8, I16, U16, I32, U32, F32, F64 };

struct PlyProp {
  PlyType type;
  std::string name;
};

PlyType ply_type_from(const std::string& s) {
  if (s == "char" || s == "int8") return PlyType::I8;
  if (s == "uchar" || s == "uint8") return PlyType::U8;
  if (s == "short" || s == "int16") return PlyType::I16;
  if (s == "ushort" || s == "uint16") return PlyType::U16;
  if (s == "int" || s == "int32") return PlyType::I32;
  if (s == "uint" || s == "uint32") return PlyType::U32;
  if (s == "float" || s == "float32") return PlyType::F32;
  if (s == "double" || s == "float64") return PlyType::F64;
  throw std::runtime_error("malformed header");
}

double ply_read_scalar(PlyType t, const std::string& buf, std::size_t& pos) {
  switch (t) {
    case PlyType::I8:
      return static_cast<double>(get<std::int8_t>(buf, pos));
    case PlyType::U8:
      return static_cast<double>(get<std::uint8_t>(buf, pos));
    case PlyType::I16:
      return static_cast<double>(get<std::int16_t>(buf, pos));
    case PlyType::U16:
      return static_cast<double>(get<std::uint16_t>(buf, pos));
    case PlyType::I32:
      return static_cast<double>(get<std::int32_t>(buf, pos));
    case PlyType::U32:
      return static_cast<double>(get<std::uint32_t>(buf, pos));
    case PlyType::F32:
      return static_cast<double>(get<float>(buf, pos));
    case PlyType::F64:
      return get<double>(buf, pos);
  }
  return 0.0;
}

bool ply_is_integer(PlyType t) { return t != PlyType::F32 && t != PlyType::F64; }

}  // namespace

void save_ply(const std::string& path, const OrientedPointCloud& cloud, bool binary) {
  const std::size_t n = cloud.points.size();
  const bool have_normals = cloud.normals.size() == n;
  const bool have_colors = cloud.colors.size() == n;

  std::string out;
  out += "ply\n";
  out += binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n";
  out += "element vertex " + std::to_string(n) + "\n";
  for (const char* name : {"x", "y", "z", "nx", "ny", "nz"}) {
    out += std::string("property double ") + name + "\n";
  }
  for (const char* name : {"red", "green", "blue"}) {
    out += std::string("property uchar ") + name + "\n";
  }
  out += "end_header\n";

  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& p = cloud.points[i];
    const Vec3 nrm = have_normals ? cloud.normals[i] : Vec3::Zero();
    const Vec3 col = have_colors ? cloud.colors[i] : Vec3(0.5, 0.5, 0.5);
    if (binary) {
      for (int c = 0; c < 3; ++c) put(out, p[c]);
      for (int c = 0; c < 3; ++c) put(out, nrm[c]);
      for (int c = 0; c < 3; ++c) put(out, to_u8(col[c]));
    } else {
      out += fmt(p.x()) + " " + fmt(p.y()) + " " + fmt(p.z());
      out += " " + fmt(nrm.x()) + " " + fmt(nrm.y()) + " " + fmt(nrm.z());
      for (int c = 0; c < 3; ++c) out += " " + std::to_string(int(to_u8(col[c])));
      out += "\n";
    }
  }
  write_file(path, out);
}

OrientedPointCloud load_ply(const std::string& path) {
  const std::string raw = read_file(path);

  // Header is ascii lines up to and including "end_header".
  std::size_t pos = 0;
  auto next_line = [&]() {
    if (pos >= raw.size()) throw std::runtime_error("malformed header");
    std::size_t end = raw.find('\n', pos);
    if (end == std::string::npos) throw std::runtime_error("malformed header");
    std::string line = raw.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = end + 1;
    return line;
  };

  if (next_line() != "ply") throw std::runtime_error("malformed header");

  bool ascii = false;
  bool format_seen = false;
  bool in_vertex = false;
  bool vertex_seen = false;
  std::size_t vertex_count = 0;
  std::vector<PlyProp> props;

  for (;;) {
    const std::string line = next_line();
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word.empty() || word == "comment" || word == "obj_info") continue;
    if (word == "end_header") break;
    if (word == "format") {
      std::string kind, version;
      ss >> kind >> version;
      if (kind == "ascii") {
        ascii = true;
      } else if (kind == "binary_little_endian") {
        ascii = false;
      } else if (kind == "binary_big_endian") {
        throw std::runtime_error("unsupported format: binary_big_endian");
      } else {
        throw std::runtime_error("malformed header");
      }
      format_seen = true;
    } else if (word == "element") {
      std::string name;
      long long count = -1;
      ss >> name >> count;
      if (name.empty() || count < 0) throw std::runtime_error("malformed header");
      if (name == "vertex") {
        in_vertex = true;
        vertex_seen = true;
        vertex_count = static_cast<std::size_t>(count);
      } else {
        // Only trailing extra elements are tolerated; reading the vertex
        // block needs a known byte offset.
        if (!vertex_seen && count > 0) {
          throw std::runtime_error("unsupported element before vertex data");
        }
        in_vertex = false;
      }
    } else if (word == "property") {
      if (!in_vertex) continue;
      std::string type;
      ss >> type;
      if (type == "list") throw std::runtime_error("unsupported list property in vertex");
      std::string name;
      ss >> name;
      if (name.empty()) throw std::runtime_error("malformed header");
      props.push_back({ply_type_from(type), name});
    } else {
      throw std::runtime_error("malformed header");
    }
  }
  if (!format_seen || !vertex_seen) throw std::runtime_error("malformed header");

  // Column lookup for the fields we keep.
  const char* needed[9] = {"x", "y", "z", "nx", "ny", "nz", "red", "green", "blue"};
  int col[9];
  for (int k = 0; k < 9; ++k) {
    col[k] = -1;
    for (std::size_t j = 0; j < props.size(); ++j) {
      if (props[j].name == needed[k]) {
        col[k] = static_cast<int>(j);
        break;
      }
    }
    if (col[k] < 0) throw std::runtime_error(std::string("missing property ") + needed[k]);
  }

  OrientedPointCloud cloud;
  cloud.points.resize(vertex_count);
  cloud.normals.resize(vertex_count);
  cloud.colors.resize(vertex_count);

  std::vector<double> row(props.size());
  if (ascii) {
    std::istringstream body(raw.substr(pos));
    for (std::size_t i = 0; i < vertex_count; ++i) {
      for (std::size_t j = 0; j < props.size(); ++j) {
        if (!(body >> row[j])) throw std::runtime_error("truncated payload");
      }
      for (int k = 0; k < 9; ++k) {
        double v = row[static_cast<std::size_t>(col[k])];
        if (k >= 6 && ply_is_integer(props[static_cast<std::size_t>(col[k])].type)) v /= 255.0;
        if (k < 3) {
          cloud.points[i][k] = v;
        } else if (k < 6) {
          cloud.normals[i][k - 3] = v;
        } else {
          cloud.colors[i][k - 6] = std::clamp(v, 0.0, 1.0);
        }
      }
    }
  } else {
    for (std::size_t i = 0; i < vertex_count; ++i) {
      for (std::size_t j = 0; j < props.size(); ++j) {
        row[j] = ply_read_scalar(props[j].type, raw, pos);
      }
      for (int k = 0; k < 9; ++k) {
        double v = row[static_cast<std::size_t>(col[k])];
        if (k >= 6 && ply_is_integer(props[static_cast<std::size_t>(col[k])].type)) v /= 255.0;
        if (k < 3) {
          cloud.points[i][k] = v;
        } else if (k < 6) {
          cloud.normals[i][k - 3] = v;
        } else {
          cloud.colors[i][k - 6] = std::clamp(v, 0.0, 1.0);
        }
      }
    }
  }

  // Tidy up normals that only drifted (foreign writers, float storage);
  // exact unit/zero normals pass through untouched.
  for (Vec3& nrm : cloud.normals) {
    const double norm = nrm.norm();
    if (norm > 0.0 && std::abs(norm - 1.0) > 1e-6) nrm /= norm;
  }
  return cloud;
}

// --------------------------------------------------------------- DWRP ----

void save_warp(const std::string& path, const DenseWarp& warp) {
  std::string out;
  out += "DWRP";
  put<std::uint32_t>(out, 1);
  put<std::uint64_t>(out, warp.transforms.size());
  for (const RigidTransform& tf : warp.transforms) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) put(out, tf.R(r, c));
    }
    for (int c = 0; c < 3; ++c) put(out, tf.t[c]);
  }
  write_file(path, out);
}

DenseWarp load_warp(const std::string& path) {
  const std::string raw = read_file(path);
  if (raw.size() < 16) throw std::runtime_error("truncated payload");
  if (raw.compare(0, 4, "DWRP") != 0) throw std::runtime_error("bad magic");
  std::size_t pos = 4;
  const auto version = get<std::uint32_t>(raw, pos);
  if (version != 1) throw std::runtime_error("unsupported version " + std::to_string(version));
  const auto count = get<std::uint64_t>(raw, pos);
  if (raw.size() < 16 + count * 96) throw std::runtime_error("truncated payload");

  DenseWarp warp;
  warp.transforms.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    RigidTransform& tf = warp.transforms[i];
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) tf.R(r, c) = get<double>(raw, pos);
    }
    for (int c = 0; c < 3; ++c) tf.t[c] = get<double>(raw, pos);
  }
  return warp;
}

// ---------------------------------------------------------- depth raw ----

void save_depth_raw(const std::string& path, const DepthFrame& frame) {
  const std::size_t n = static_cast<std::size_t>(frame.width) * frame.height;
  if (frame.depth.size() != n) throw std::invalid_argument("malformed depth frame");
  std::string out;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(frame.width));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(frame.height));
  for (double d : frame.depth) {
    std::uint16_t raw = 0;
    if (d > 0.0) {
      const long units = std::lround(d / frame.intr.depth_scale);
      raw = static_cast<std::uint16_t>(std::clamp(units, 0L, 65535L));
    }
    put(out, raw);
  }
  if (!frame.color.empty()) {
    if (frame.color.size() != n) throw std::invalid_argument("malformed depth frame");
    for (const Vec3& c : frame.color) {
      for (int k = 0; k < 3; ++k) put(out, to_u8(c[k]));
    }
  }
  write_file(path, out);
}

DepthFrame load_depth_raw(const std::string& path, const Intrinsics& intr) {
  const std::string raw = read_file(path);
  std::size_t pos = 0;
  DepthFrame frame;
  frame.intr = intr;
  frame.width = static_cast<int>(get<std::uint32_t>(raw, pos));
  frame.height = static_cast<int>(get<std::uint32_t>(raw, pos));
  const std::size_t n = static_cast<std::size_t>(frame.width) * frame.height;

  const std::size_t body = raw.size() - pos;
  const bool with_color = body == n * 2 + n * 3;
  if (!with_color && body != n * 2) throw std::runtime_error("truncated payload");

  frame.depth.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    frame.depth[i] = get<std::uint16_t>(raw, pos) * intr.depth_scale;
  }
  if (with_color) {
    frame.color.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < 3; ++k) {
        frame.color[i][k] = get<std::uint8_t>(raw, pos) / 255.0;
      }
    }
  }
  return frame;
}

void save_intrinsics(const std::string& path, const Intrinsics& intr) {
  write_file(path, fmt(intr.fx) + " " + fmt(intr.fy) + " " + fmt(intr.cx) + " " + fmt(intr.cy) +
                       " " + fmt(intr.depth_scale) + "\n");
}

Intrinsics load_intrinsics(const std::string& path) {
  const std::string raw = read_file(path);
  std::istringstream ss(raw);
  Intrinsics intr;
  if (!(ss >> intr.fx >> intr.fy >> intr.cx >> intr.cy >> intr.depth_scale)) {
    throw std::runtime_error("malformed intrinsics");
  }
  if (intr.fx <= 0.0 || intr.fy <= 0.0 || intr.depth_scale <= 0.0) {
    throw std::runtime_error("malformed intrinsics");
  }
  return intr;
}

// ---------------------------------------------------------------- flow ----

namespace {
constexpr float kFlowMagic = 202021.25f;
constexpr float kFlowInvalid = 1e10f;
}  // namespace

void save_flow(const std::string& path, const Flow2D& flow) {
  std::string out;
  put(out, kFlowMagic);
  put<std::int32_t>(out, flow.width);
  put<std::int32_t>(out, flow.height);
  for (std::size_t i = 0; i < flow.pixels(); ++i) {
    const bool ok = flow.valid[i] != 0;
    put(out, ok ? static_cast<float>(flow.u[i]) : kFlowInvalid);
    put(out, ok ? static_cast<float>(flow.v[i]) : kFlowInvalid);
  }
  write_file(path, out);
}

Flow2D load_flow(const std::string& path) {
  const std::string raw = read_file(path);
  std::size_t pos = 0;
  const float magic = get<float>(raw, pos);
  if (magic != kFlowMagic) throw std::runtime_error("bad magic");
  Flow2D flow;
  flow.width = get<std::int32_t>(raw, pos);
  flow.height = get<std::int32_t>(raw, pos);
  if (flow.width < 0 || flow.height < 0) throw std::runtime_error("truncated payload");
  const std::size_t n = static_cast<std::size_t>(flow.width) * flow.height;
  flow.u.resize(n);
  flow.v.resize(n);
  flow.valid.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const float u = get<float>(raw, pos);
    const float v = get<float>(raw, pos);
    flow.u[i] = u;
    flow.v[i] = v;
    flow.valid[i] = (std::abs(u) <= 1e9f && std::abs(v) <= 1e9f) ? 1 : 0;
  }
  return flow;
}

// -------------------------------------------------------------- events ----

void save_events(const std::string& path, const std::vector<TopologyEvent>& events) {
  std::string out;
  for (const TopologyEvent& ev : events) {
    Vec3 centroid = Vec3::Zero();
    for (const Vec3& p : ev.points) centroid += p;
    if (!ev.points.empty()) centroid /= static_cast<double>(ev.points.size());
    out += "event label=";
    out += (ev.label == EventLabel::Separation) ? "separation" : "contact";
    out += " t=" + std::to_string(ev.timestamp);
    out += " count=" + std::to_string(ev.points.size());
    out += " centroid=" + fmt(centroid.x()) + " " + fmt(centroid.y()) + " " + fmt(centroid.z());
    out += "\n";
    for (const Vec3& p : ev.points) {
      out += "p " + fmt(p.x()) + " " + fmt(p.y()) + " " + fmt(p.z()) + "\n";
    }
  }
  write_file(path, out);
}

std::vector<TopologyEvent> load_events(const std::string& path) {
  const std::string raw = read_file(path);
  std::istringstream in(raw);
  std::vector<TopologyEvent> events;
  std::string line;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    if (word == "event") {
      if (!events.empty() && events.back().points.size() != expected) {
        throw std::runtime_error("malformed event file");
      }
      TopologyEvent ev;
      std::string field;
      long long count = -1;
      bool have_label = false;
      while (ss >> field) {
        if (field.rfind("label=", 0) == 0) {
          const std::string value = field.substr(6);
          if (value == "separation") {
            ev.label = EventLabel::Separation;
          } else if (value == "contact") {
            ev.label = EventLabel::Contact;
          } else {
            throw std::runtime_error("malformed event file");
          }
          have_label = true;
        } else if (field.rfind("t=", 0) == 0) {
          ev.timestamp = std::stoi(field.substr(2));
        } else if (field.rfind("count=", 0) == 0) {
          count = std::stoll(field.substr(6));
        } else if (field.rfind("centroid=", 0) == 0) {
          double cy = 0.0, cz = 0.0;  // centroid is derived; skip its values
          if (!(ss >> cy >> cz)) throw std::runtime_error("malformed event file");
        }
      }
      if (!have_label || count < 0) throw std::runtime_error("malformed event file");
      expected = static_cast<std::size_t>(count);
      events.push_back(std::move(ev));
    } else if (word == "p") {
      if (events.empty()) throw std::runtime_error("malformed event file");
      Vec3 p;
      if (!(ss >> p.x() >> p.y() >> p.z())) throw std::runtime_error("malformed event file");
      events.back().points.push_back(p);
    } else {
      throw std::runtime_error("malformed event file");
    }
  }
  if (!events.empty() && events.back().points.size() != expected) {
    throw std::runtime_error("malformed event file");
  }
  return events;
}

// ------------------------------------------------------ masks / labels ----

void save_indices(const std::string& path, const std::vector<int>& values) {
  std::string out;
  for (int v : values) out += std::to_string(v) + "\n";
  write_file(path, out);
}

std::vector<int> load_indices(const std::string& path) {
  const std::string raw = read_file(path);
  std::istringstream in(raw);
  std::vector<int> values;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t used = 0;
    values.push_back(std::stoi(line, &used));
    while (used < line.size() && std::isspace(static_cast<unsigned char>(line[used]))) ++used;
    if (used != line.size()) throw std::runtime_error("malformed index file");
  }
  return values;
}

// ------------------------------------------------------------- reports ----

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

void write_flow_report(std::ostream& os, const std::string& sequence, int frame,
                       const FlowError& epe_err, const FlowError& ae_err) {
  os << "flow sequence=" << sequence << " frame=" << frame
     << " pixels=" << epe_err.per_pixel.size()
     << " epe_mean=" << fmt(epe_err.mean)
     << " epe_median=" << fmt(median(epe_err.per_pixel))
     << " ae_mean=" << fmt(ae_err.mean)
     << " ae_median=" << fmt(median(ae_err.per_pixel)) << "\n";
}

void write_event_report(std::ostream& os, std::size_t gt_count, std::size_t det_count,
                        const EventMatchReport& report) {
  os << "events gt=" << gt_count << " detected=" << det_count
     << " matched_gt_pct=" << fmt(report.matched_fraction_gt)
     << " matched_det_pct=" << fmt(report.matched_fraction_det)
     << " mean_overlap_gt=" << fmt(report.mean_overlap)
     << " mean_delay_gt=" << fmt(report.mean_delay)
     << " mean_overlap_det=" << fmt(report.mean_overlap_det)
     << " mean_delay_det=" << fmt(report.mean_delay_det) << "\n";
  for (std::size_t i = 0; i < report.gt_to_det.size(); ++i) {
    os << "match gt=" << i << " det=" << report.gt_to_det[i];
    if (report.gt_to_det[i] >= 0) {
      for (const MatchedPair& m : report.matches) {
        if (m.gt == static_cast<int>(i) && m.det == report.gt_to_det[i]) {
          os << " overlap=" << fmt(m.overlap) << " delay=" << m.delay;
          break;
        }
      }
    }
    os << "\n";
  }
}

void write_sep_report(std::ostream& os, const SepError& err) {
  os << "separation mean_error_mm=" << fmt(err.mean_mm) << " points_used=" << err.points_used
     << " points_occluded=" << err.points_occluded << "\n";
}

}  // namespace topowarp
