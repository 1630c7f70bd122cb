#pragma once

#include <iosfwd>
#include <string>

#include "topowarp/depth.hpp"
#include "topowarp/evaluation.hpp"
#include "topowarp/point_cloud.hpp"
#include "topowarp/topology.hpp"
#include "topowarp/warp.hpp"

namespace topowarp {

// ---- point clouds -------------------------------------------------------
// PLY with properties x y z nx ny nz (double) and red green blue (uchar).
// Binary files are little-endian. Loading accepts float/double scalars in
// any property order plus unknown scalar properties, and both ascii and
// binary_little_endian variants. Colors quantize to u8 on save
// (round(c * 255)) and come back as v / 255.
void save_ply(const std::string& path, const OrientedPointCloud& cloud, bool binary = true);
OrientedPointCloud load_ply(const std::string& path);

// ---- dense warps --------------------------------------------------------
// Binary stream: 16-byte header (magic "DWRP", u32 version = 1, u64 count),
// then per point 9 rotation entries (row-major) + 3 translation entries as
// little-endian float64.
void save_warp(const std::string& path, const DenseWarp& warp);
DenseWarp load_warp(const std::string& path);

// ---- depth frames -------------------------------------------------------
// Raw grid: u32 width, u32 height, then width*height u16 depth values
// (row-major, units of intrinsics.depth_scale, 0 = invalid), optionally
// followed by width*height*3 u8 RGB values. The intrinsics sidecar is a
// single text line: fx fy cx cy depth_scale.
void save_depth_raw(const std::string& path, const DepthFrame& frame);
DepthFrame load_depth_raw(const std::string& path, const Intrinsics& intr);
void save_intrinsics(const std::string& path, const Intrinsics& intr);
Intrinsics load_intrinsics(const std::string& path);

// ---- optical flow -------------------------------------------------------
// Standard .flo layout: float magic 202021.25, i32 width, i32 height, then
// interleaved float32 (u, v) per pixel. Invalid pixels are written as 1e10;
// any |component| > 1e9 reads back as invalid.
void save_flow(const std::string& path, const Flow2D& flow);
Flow2D load_flow(const std::string& path);

// ---- events -------------------------------------------------------------
// Line-delimited text. Per event: a header line
//   event label=<contact|separation> t=<int> count=<int> centroid=<x> <y> <z>
// followed by count lines "p <x> <y> <z>". Indices are not persisted.
void save_events(const std::string& path, const std::vector<TopologyEvent>& events);
std::vector<TopologyEvent> load_events(const std::string& path);

// ---- masks / labels -----------------------------------------------------
// One integer per line.
void save_indices(const std::string& path, const std::vector<int>& values);
std::vector<int> load_indices(const std::string& path);

// ---- metric reports -----------------------------------------------------
// One record per line, keys in a fixed order so runs can be diffed.
void write_flow_report(std::ostream& os, const std::string& sequence, int frame,
                       const FlowError& epe_err, const FlowError& ae_err);
void write_event_report(std::ostream& os, std::size_t gt_count, std::size_t det_count,
                        const EventMatchReport& report);
void write_sep_report(std::ostream& os, const SepError& err);

double median(std::vector<double> values);  // empty input -> 0

}  // namespace topowarp
