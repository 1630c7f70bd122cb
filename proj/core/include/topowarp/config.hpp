#pragma once

#include <string>

#include "topowarp/normals.hpp"
#include "topowarp/topology.hpp"

namespace topowarp {

// Full parameter record for a pipeline run. Everything has a working
// default; config files only override.
struct RunConfig {
  PipelineConfig pipeline;
  NormalEstimationParams normals;
  double depth_cutoff = 5.0;        // meters, depth ingestion cut-off
  double dz_occ = 0.01;             // occlusion margin for separation error
  double event_rho = 0.03;          // overlap radius for event matching
  int event_dt_max = 2;             // frame window for event matching
  double event_min_overlap = 0.2;
};

// Line-oriented `key = value` text; '#' starts a comment, blank lines are
// skipped. Unknown keys and out-of-range values throw std::runtime_error.
// When bin_size is overridden without conv_trans, conv_trans follows as
// bin_size / 25.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

std::string config_to_text(const RunConfig& cfg);  // parseable round-trip

}  // namespace topowarp
