// Command-line front end: registration, scene synthesis and the evaluation
// metrics, glued together by RunConfig.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "topowarp/config.hpp"
#include "topowarp/io.hpp"
#include "topowarp/kd_tree.hpp"
#include "topowarp/parallel.hpp"
#include "topowarp/synthetic.hpp"
#include "topowarp/topology.hpp"

namespace tw = topowarp;
namespace fs = std::filesystem;

namespace {

std::string sidecar_path(const std::string& raw_path) {
  fs::path p(raw_path);
  p.replace_extension(".intr");
  return p.string();
}

bool has_extension(const std::string& path, const char* ext) {
  return fs::path(path).extension() == ext;
}

// PLY or raw depth input. Depth inputs need a "<base>.intr" sidecar and are
// converted with the configured cut-off / normal estimation; PLY files with
// no usable normals get normals estimated from the camera origin.
struct LoadedCloud {
  tw::OrientedPointCloud cloud;
  tw::OrganizedCloud organized;  // only filled for raw inputs
  bool from_depth = false;
};

LoadedCloud load_input(const std::string& path, const tw::RunConfig& cfg) {
  LoadedCloud out;
  if (has_extension(path, ".raw")) {
    const tw::Intrinsics intr = tw::load_intrinsics(sidecar_path(path));
    const tw::DepthFrame frame = tw::load_depth_raw(path, intr);
    out.organized = tw::organize(frame, cfg.depth_cutoff, cfg.normals);
    out.cloud = out.organized.cloud;
    out.from_depth = true;
    return out;
  }
  out.cloud = tw::load_ply(path);
  bool any_normal = false;
  for (const auto& n : out.cloud.normals) {
    if (tw::is_valid_normal(n)) {
      any_normal = true;
      break;
    }
  }
  if (!any_normal && !out.cloud.empty()) {
    out.cloud.normals = tw::estimate_normals(out.cloud.points, cfg.normals, tw::Vec3::Zero());
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << text;
}

tw::RunConfig load_run_config(const std::string& config_path) {
  if (config_path.empty()) return tw::RunConfig{};
  return tw::load_config(config_path);
}

// ------------------------------------------------------------- register ----

int cmd_register(const std::string& source_path, const std::string& target_path,
                 const std::string& out_dir, const std::string& mode,
                 const std::string& config_path, const std::string& w0_path, int timestamp) {
  tw::RunConfig cfg = load_run_config(config_path);
  cfg.pipeline.topology_enabled = (mode == "fb");
  cfg.pipeline.timestamp = timestamp;

  LoadedCloud source = load_input(source_path, cfg);
  LoadedCloud target = load_input(target_path, cfg);

  tw::DenseWarp w0;
  const tw::DenseWarp* w0_ptr = nullptr;
  if (!w0_path.empty()) {
    w0 = tw::load_warp(w0_path);
    w0_ptr = &w0;
  }
  const tw::OrganizedCloud* target_frame = target.from_depth ? &target.organized : nullptr;
  const tw::OrganizedCloud* source_frame = source.from_depth ? &source.organized : nullptr;

  const tw::TopologyAwareResult result = tw::topology_aware_register(
      source.cloud, target.cloud, cfg.pipeline, w0_ptr, target_frame, source_frame);

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  tw::save_warp((out / "warp.dwrp").string(), result.warp);
  tw::save_ply((out / "warped.ply").string(), tw::apply_warp(result.warp, source.cloud));
  if (cfg.pipeline.topology_enabled) {
    tw::save_events((out / "events.txt").string(), result.events);
  }

  std::string report;
  report += "register mode=" + mode + " source_points=" + std::to_string(source.cloud.size()) +
            " target_points=" + std::to_string(target.cloud.size()) + "\n";
  report += "forward iterations=" + std::to_string(result.forward.iterations_used) +
            " objective=" + std::to_string(result.forward.final_objective) + "\n";
  if (cfg.pipeline.topology_enabled) {
    report += "backward iterations=" + std::to_string(result.backward.iterations_used) +
              " objective=" + std::to_string(result.backward.final_objective) + "\n";
    report += "events detected=" + std::to_string(result.events.size()) + "\n";
  }
  write_text((out / "report.txt").string(), report);
  std::cout << report;
  return 0;
}

// ---------------------------------------------------------------- synth ----

int cmd_synth(const std::string& kind_name, std::uint64_t seed, const std::string& out_dir,
              tw::SceneParams params) {
  const tw::SceneKind kind = tw::scene_kind_from(kind_name);
  const tw::SyntheticScene scene = tw::generate_scene(kind, params, seed);

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  tw::save_ply((out / "source.ply").string(), scene.source);
  tw::save_ply((out / "target.ply").string(), scene.target);
  tw::save_warp((out / "gt_warp.dwrp").string(), scene.gt_warp);
  tw::save_events((out / "gt_events.txt").string(), scene.gt_events);
  tw::save_indices((out / "gt_mask.txt").string(), scene.gt_mask);
  tw::save_indices((out / "gt_labels.txt").string(), scene.gt_segment_labels);

  const tw::DepthFrame source_frame =
      tw::render_depth(scene.source, scene.intrinsics, scene.frame_width, scene.frame_height);
  const tw::DepthFrame target_frame =
      tw::render_depth(scene.target, scene.intrinsics, scene.frame_width, scene.frame_height);
  tw::save_depth_raw((out / "source_depth.raw").string(), source_frame);
  tw::save_intrinsics((out / "source_depth.intr").string(), scene.intrinsics);
  tw::save_depth_raw((out / "target_depth.raw").string(), target_frame);
  tw::save_intrinsics((out / "target_depth.intr").string(), scene.intrinsics);

  // Ground-truth flow over the organized source frame, through the same
  // quantized file the evaluator will read. Each frame point takes the
  // motion of its nearest scene point.
  const tw::RunConfig cfg;
  const tw::DepthFrame reloaded =
      tw::load_depth_raw((out / "source_depth.raw").string(), scene.intrinsics);
  const tw::OrganizedCloud organized = tw::organize(reloaded, cfg.depth_cutoff, cfg.normals);
  const tw::KdTree scene_index(scene.source.points);
  tw::DenseWarp frame_warp;
  frame_warp.transforms.resize(organized.cloud.size());
  for (std::size_t i = 0; i < organized.cloud.size(); ++i) {
    const int j = scene_index.nearest(organized.cloud.points[i]).index;
    frame_warp.transforms[i] = scene.gt_warp.transforms[static_cast<std::size_t>(j)];
  }
  tw::save_warp((out / "gt_frame_warp.dwrp").string(), frame_warp);
  tw::save_flow((out / "gt_flow.flo").string(), tw::warp_to_flow(organized, frame_warp));

  std::cout << "synth kind=" << kind_name << " seed=" << seed
            << " points=" << scene.source.size() << " events=" << scene.gt_events.size()
            << " out=" << out_dir << "\n";
  return 0;
}

// ------------------------------------------------------------ eval-flow ----

int cmd_eval_flow(const std::string& frame_path, const std::string& warp_path,
                  const std::string& gt_path, const std::string& sequence, int frame_index,
                  const std::string& config_path, const std::string& out_path) {
  const tw::RunConfig cfg = load_run_config(config_path);
  const tw::Intrinsics intr = tw::load_intrinsics(sidecar_path(frame_path));
  const tw::DepthFrame frame = tw::load_depth_raw(frame_path, intr);
  const tw::OrganizedCloud organized = tw::organize(frame, cfg.depth_cutoff, cfg.normals);
  const tw::DenseWarp warp = tw::load_warp(warp_path);
  if (warp.transforms.size() != organized.cloud.size()) {
    throw std::runtime_error("warp count " + std::to_string(warp.transforms.size()) +
                             " does not match the frame's " +
                             std::to_string(organized.cloud.size()) + " points");
  }
  const tw::Flow2D est = tw::warp_to_flow(organized, warp);
  const tw::Flow2D gt = tw::load_flow(gt_path);
  const tw::FlowError epe_err = tw::epe(est, gt);
  const tw::FlowError ae_err = tw::ae(est, gt);

  std::ostringstream report;
  tw::write_flow_report(report, sequence, frame_index, epe_err, ae_err);
  std::cout << report.str();
  if (!out_path.empty()) write_text(out_path, report.str());
  return 0;
}

// ---------------------------------------------------------- eval-events ----

int cmd_eval_events(const std::string& gt_path, const std::string& det_path, double rho,
                    int dt_max, double min_overlap, const std::string& out_path) {
  const auto gt = tw::load_events(gt_path);
  const auto det = tw::load_events(det_path);
  const tw::EventMatchReport report = tw::match_events(gt, det, rho, dt_max, min_overlap);

  std::ostringstream text;
  tw::write_event_report(text, gt.size(), det.size(), report);
  std::cout << text.str();
  if (!out_path.empty()) write_text(out_path, text.str());
  return 0;
}

// ------------------------------------------------------------- eval-sep ----

int cmd_eval_sep(const std::string& source_path, const std::string& warp_path,
                 const std::string& target_path, const std::string& target_depth_path,
                 const std::string& mask_path, double dz_occ, const std::string& out_path) {
  const tw::OrientedPointCloud source = tw::load_ply(source_path);
  const tw::OrientedPointCloud target = tw::load_ply(target_path);
  const tw::DenseWarp warp = tw::load_warp(warp_path);
  const tw::Intrinsics intr = tw::load_intrinsics(sidecar_path(target_depth_path));
  const tw::DepthFrame target_depth = tw::load_depth_raw(target_depth_path, intr);
  const std::vector<int> mask = tw::load_indices(mask_path);

  const tw::SepError err =
      tw::separation_registration_error(source, warp, mask, target, target_depth, dz_occ);
  std::ostringstream text;
  tw::write_sep_report(text, err);
  std::cout << text.str();
  if (!out_path.empty()) write_text(out_path, text.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-rigid point cloud registration with contact/separation detection"};
  app.require_subcommand(1);

  int threads = 1;
  app.add_option("--threads", threads, "worker threads (1 = fully sequential)")
      ->check(CLI::PositiveNumber);
  // Let `topowarp register ... --threads 2` work: unmatched subcommand
  // options fall through to the global ones.
  app.fallthrough();

  // register
  auto* reg = app.add_subcommand("register", "register a source onto a target frame");
  std::string reg_source, reg_target, reg_out = ".", reg_mode = "fb", reg_config, reg_w0;
  int reg_timestamp = 0;
  reg->add_option("source", reg_source, "source cloud (.ply) or depth (.raw)")->required();
  reg->add_option("target", reg_target, "target cloud (.ply) or depth (.raw)")->required();
  reg->add_option("-o,--out", reg_out, "output directory");
  reg->add_option("--mode", reg_mode, "f = forward only, fb = forward/backward with events")
      ->check(CLI::IsMember({"f", "fb"}));
  reg->add_option("--config", reg_config, "key = value config file");
  reg->add_option("--w0", reg_w0, "initial warp (.dwrp over the source points)");
  reg->add_option("--timestamp", reg_timestamp, "frame timestamp stamped onto events");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic two-frame scene");
  std::string synth_kind = "separation", synth_out = ".";
  std::uint64_t synth_seed = 1;
  tw::SceneParams synth_params;
  synth->add_option("--kind", synth_kind, "rigid | hinge | separation | contact | slide")
      ->check(CLI::IsMember({"rigid", "hinge", "separation", "contact", "slide"}));
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("-o,--out", synth_out, "output directory");
  synth->add_option("--spacing", synth_params.spacing, "surface sample spacing [m]");
  synth->add_option("--box", synth_params.box, "segment extent along the split axis [m]");
  synth->add_option("--gap", synth_params.gap, "separation / contact travel [m]");
  synth->add_option("--hinge-angle", synth_params.hinge_angle, "hinge opening angle [rad]");
  synth->add_option("--keypoints", synth_params.keypoints_per_segment, "keypoints per segment");

  // eval-flow
  auto* eflow = app.add_subcommand("eval-flow", "endpoint / angular error of a warp vs gt flow");
  std::string ef_frame, ef_warp, ef_gt, ef_seq = "synthetic", ef_config, ef_out;
  int ef_index = 0;
  eflow->add_option("--frame", ef_frame, "source depth frame (.raw with .intr sidecar)")
      ->required();
  eflow->add_option("--warp", ef_warp, "warp over the frame's organized points (.dwrp)")
      ->required();
  eflow->add_option("--gt", ef_gt, "ground-truth flow (.flo)")->required();
  eflow->add_option("--sequence", ef_seq, "sequence name for the report");
  eflow->add_option("--frame-index", ef_index, "frame number for the report");
  eflow->add_option("--config", ef_config, "key = value config file");
  eflow->add_option("-o,--out", ef_out, "also write the report here");

  // eval-events
  auto* eev = app.add_subcommand("eval-events", "match detected events against ground truth");
  std::string ee_gt, ee_det, ee_out;
  double ee_rho = 0.03, ee_min_overlap = 0.2;
  int ee_dt = 2;
  eev->add_option("--gt", ee_gt, "ground-truth events file")->required();
  eev->add_option("--det", ee_det, "detected events file")->required();
  eev->add_option("--rho", ee_rho, "overlap radius [m]");
  eev->add_option("--dt-max", ee_dt, "max timestamp difference [frames]");
  eev->add_option("--min-overlap", ee_min_overlap, "minimum overlap ratio");
  eev->add_option("-o,--out", ee_out, "also write the report here");

  // eval-sep
  auto* esep = app.add_subcommand("eval-sep", "registration error on annotated separation points");
  std::string es_source, es_warp, es_target, es_depth, es_mask, es_out;
  double es_dz = 0.01;
  esep->add_option("--source", es_source, "source cloud (.ply)")->required();
  esep->add_option("--warp", es_warp, "estimated warp (.dwrp)")->required();
  esep->add_option("--target", es_target, "target cloud (.ply)")->required();
  esep->add_option("--target-depth", es_depth, "target depth (.raw with .intr sidecar)")
      ->required();
  esep->add_option("--mask", es_mask, "annotated source indices, one per line")->required();
  esep->add_option("--dz-occ", es_dz, "occlusion margin [m]");
  esep->add_option("-o,--out", es_out, "also write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      app.exit(e);
      return 0;
    }
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << "\n";
    return 2;
  }

  tw::set_worker_threads(threads);
  try {
    if (reg->parsed()) {
      return cmd_register(reg_source, reg_target, reg_out, reg_mode, reg_config, reg_w0,
                          reg_timestamp);
    }
    if (synth->parsed()) return cmd_synth(synth_kind, synth_seed, synth_out, synth_params);
    if (eflow->parsed()) {
      return cmd_eval_flow(ef_frame, ef_warp, ef_gt, ef_seq, ef_index, ef_config, ef_out);
    }
    if (eev->parsed()) return cmd_eval_events(ee_gt, ee_det, ee_rho, ee_dt, ee_min_overlap, ee_out);
    if (esep->parsed()) return cmd_eval_sep(es_source, es_warp, es_target, es_depth, es_mask, es_dz, es_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
