#include "topowarp/config.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "topowarp/icp.hpp"

namespace topowarp {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw std::runtime_error("invalid value for " + key + ": '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(value, &used);
    if (used != value.size()) bad_value(key, value);
    return v;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  bad_value(key, value);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Setter {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> apply;
  std::function<std::string(const RunConfig&)> print;
};

// One table drives parsing, validation and serialization so the three can
// never disagree on the key set.
const std::vector<Setter>& setters() {
  static const std::vector<Setter> table = [] {
    std::vector<Setter> t;
    auto add_double = [&t](const char* key, std::function<double&(RunConfig&)> field, double lo,
                           bool strict) {
      t.push_back({key,
                   [key, field, lo, strict](RunConfig& c, const std::string& v) {
                     const double x = parse_double(key, v);
                     if (strict ? (x <= lo) : (x < lo)) bad_value(key, v);
                     field(c) = x;
                   },
                   [field](const RunConfig& c) {
                     return fmt(field(const_cast<RunConfig&>(c)));
                   }});
    };
    auto add_int = [&t](const char* key, std::function<int&(RunConfig&)> field, int lo) {
      t.push_back({key,
                   [key, field, lo](RunConfig& c, const std::string& v) {
                     const int x = parse_int(key, v);
                     if (x < lo) bad_value(key, v);
                     field(c) = x;
                   },
                   [field](const RunConfig& c) {
                     return std::to_string(field(const_cast<RunConfig&>(c)));
                   }});
    };
    auto add_bool = [&t](const char* key, std::function<bool&(RunConfig&)> field) {
      t.push_back({key,
                   [key, field](RunConfig& c, const std::string& v) {
                     field(c) = parse_bool(key, v);
                   },
                   [field](const RunConfig& c) {
                     return field(const_cast<RunConfig&>(c)) ? "true" : "false";
                   }});
    };

    auto icp = [](RunConfig& c) -> IcpConfig& { return c.pipeline.icp; };
    auto obj = [icp](RunConfig& c) -> ObjectiveConfig& { return icp(c).objective; };
    auto top = [](RunConfig& c) -> TopologyConfig& { return c.pipeline.topology; };

    add_double("bin_size", [icp](RunConfig& c) -> double& { return icp(c).bin_size; }, 0.0, true);
    add_int("interp_k", [icp](RunConfig& c) -> int& { return icp(c).interp_k; }, 1);
    add_double("lambda_point", [obj](RunConfig& c) -> double& { return obj(c).lambda_point; }, 0.0,
               false);
    add_double("lambda_stiff", [obj](RunConfig& c) -> double& { return obj(c).lambda_stiff; }, 0.0,
               false);
    add_double("huber_delta", [obj](RunConfig& c) -> double& { return obj(c).huber_delta; }, 0.0,
               true);
    add_int("reg_k", [obj](RunConfig& c) -> int& { return obj(c).reg_k; }, 1);
    add_int("max_gn_iters", [obj](RunConfig& c) -> int& { return obj(c).max_gn_iters; }, 1);
    add_int("cg_max_iters", [obj](RunConfig& c) -> int& { return obj(c).cg_max_iters; }, 0);
    add_double("cg_tol", [obj](RunConfig& c) -> double& { return obj(c).cg_tol; }, 0.0, true);
    add_bool("pure_gn", [obj](RunConfig& c) -> bool& { return obj(c).pure_gn; });
    add_double("lm_damping", [obj](RunConfig& c) -> double& { return obj(c).lm_damping; }, 0.0,
               false);

    add_int("max_outer_iters", [icp](RunConfig& c) -> int& { return icp(c).max_outer_iters; }, 1);
    add_double("conv_rot", [icp](RunConfig& c) -> double& { return icp(c).conv_rot; }, 0.0, true);
    add_double("conv_trans", [icp](RunConfig& c) -> double& { return icp(c).conv_trans; }, 0.0,
               true);
    add_bool("rebuild_graph", [icp](RunConfig& c) -> bool& { return icp(c).rebuild_graph; });
    add_bool("use_keypoints", [icp](RunConfig& c) -> bool& { return icp(c).use_keypoints; });
    add_double("lowe_ratio", [icp](RunConfig& c) -> double& { return icp(c).lowe_ratio; }, 0.0,
               true);

    add_double("theta_d",
               [icp](RunConfig& c) -> double& { return icp(c).gating.max_distance; }, 0.0, true);
    add_double("theta_n",
               [icp](RunConfig& c) -> double& { return icp(c).gating.max_normal_angle; }, 0.0,
               true);
    add_double("theta_c",
               [icp](RunConfig& c) -> double& { return icp(c).gating.max_color_distance; }, 0.0,
               true);

    add_double("rho_s", [top](RunConfig& c) -> double& { return top(c).rho_s; }, 0.0, true);
    add_double("tau", [top](RunConfig& c) -> double& { return top(c).tau; }, 0.0, true);
    add_double("alpha", [top](RunConfig& c) -> double& { return top(c).alpha; }, 1.0, false);
    add_double("rho_e", [top](RunConfig& c) -> double& { return top(c).rho_e; }, 0.0, true);
    add_double("cluster_dist", [top](RunConfig& c) -> double& { return top(c).cluster_dist; },
               0.0, true);
    add_int("min_event_points", [top](RunConfig& c) -> int& { return top(c).min_event_points; },
            1);
    add_bool("blend_use_clustered",
             [top](RunConfig& c) -> bool& { return top(c).blend_use_clustered; });

    add_double("depth_cutoff", [](RunConfig& c) -> double& { return c.depth_cutoff; }, 0.0, true);
    add_int("normal_k", [](RunConfig& c) -> int& { return c.normals.k; }, 3);
    add_double("normal_radius", [](RunConfig& c) -> double& { return c.normals.radius; }, 0.0,
               false);
    add_double("dz_occ", [](RunConfig& c) -> double& { return c.dz_occ; }, 0.0, true);
    add_double("event_rho", [](RunConfig& c) -> double& { return c.event_rho; }, 0.0, true);
    add_int("event_dt_max", [](RunConfig& c) -> int& { return c.event_dt_max; }, 0);
    add_double("event_min_overlap",
               [](RunConfig& c) -> double& { return c.event_min_overlap; }, 0.0, false);

    // mode gets custom handling (enum).
    t.push_back({"mode",
                 [](RunConfig& c, const std::string& v) {
                   if (v == "nn") {
                     c.pipeline.icp.mode = CorrespondenceMode::NearestNeighbor;
                   } else if (v == "projective") {
                     c.pipeline.icp.mode = CorrespondenceMode::Projective;
                   } else {
                     bad_value("mode", v);
                   }
                 },
                 [](const RunConfig& c) {
                   return c.pipeline.icp.mode == CorrespondenceMode::Projective
                              ? std::string("projective")
                              : std::string("nn");
                 }});
    return t;
  }();
  return table;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  bool conv_trans_set = false;
  bool bin_size_set = false;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;

    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("malformed config line " + std::to_string(line_no) + ": '" +
                               stripped + "'");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw std::runtime_error("malformed config line " + std::to_string(line_no) + ": '" +
                               stripped + "'");
    }

    bool handled = false;
    for (const Setter& s : setters()) {
      if (key == s.key) {
        s.apply(cfg, value);
        handled = true;
        break;
      }
    }
    if (!handled) throw std::runtime_error("unknown config key: " + key);
    if (key == "conv_trans") conv_trans_set = true;
    if (key == "bin_size") bin_size_set = true;
  }

  if (bin_size_set && !conv_trans_set) {
    cfg.pipeline.icp.conv_trans = cfg.pipeline.icp.bin_size / 25.0;
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_text(const RunConfig& cfg) {
  std::string out;
  for (const Setter& s : setters()) {
    out += std::string(s.key) + " = " + s.print(cfg) + "\n";
  }
  return out;
}

}  // namespace topowarp
