#include "topowarp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace topowarp {

Flow2D warp_to_flow(const OrganizedCloud& source, const DenseWarp& warp) {
  if (warp.size() != source.cloud.size()) {
    throw std::invalid_argument("support size mismatch");
  }
  if (!(source.intr.fx > 0.0) || !(source.intr.fy > 0.0)) {
    throw std::invalid_argument("missing intrinsics");
  }

  Flow2D flow;
  flow.width = source.width;
  flow.height = source.height;
  const std::size_t n_pix = static_cast<std::size_t>(source.width) * source.height;
  flow.u.assign(n_pix, 0.0);
  flow.v.assign(n_pix, 0.0);
  flow.valid.assign(n_pix, 0);

  for (std::size_t k = 0; k < source.cloud.size(); ++k) {
    const Vec3 moved = warp.transforms[k].apply(source.cloud.points[k]);
    if (moved.z() <= 0.0) continue;
    const int pix = source.index_to_pixel[k];
    const int u0 = pix % source.width;
    const int v0 = pix / source.width;
    const Eigen::Vector2d uv = project(source.intr, moved);
    flow.u[pix] = uv.x() - u0;
    flow.v[pix] = uv.y() - v0;
    flow.valid[pix] = 1;
  }
  return flow;
}

namespace {

template <typename Fn>
FlowError flow_error(const Flow2D& est, const Flow2D& gt, Fn&& per_pixel) {
  if (est.width != gt.width || est.height != gt.height) {
    throw std::invalid_argument("flow size mismatch");
  }
  FlowError err;
  double sum = 0.0;
  for (std::size_t p = 0; p < est.pixels(); ++p) {
    if (!est.valid[p] || !gt.valid[p]) continue;
    const double e = per_pixel(est.u[p], est.v[p], gt.u[p], gt.v[p]);
    err.per_pixel.push_back(e);
    sum += e;
  }
  if (err.per_pixel.empty()) {
    throw std::invalid_argument("no jointly valid pixels");
  }
  err.mean = sum / static_cast<double>(err.per_pixel.size());
  return err;
}

}  // namespace

FlowError epe(const Flow2D& estimate, const Flow2D& ground_truth) {
  return flow_error(estimate, ground_truth, [](double ue, double ve, double ug, double vg) {
    return std::hypot(ue - ug, ve - vg);
  });
}

FlowError ae(const Flow2D& estimate, const Flow2D& ground_truth) {
  return flow_error(estimate, ground_truth, [](double ue, double ve, double ug, double vg) {
    const double dot = ue * ug + ve * vg + 1.0;
    const double cosv =
        dot / (std::sqrt(ue * ue + ve * ve + 1.0) * std::sqrt(ug * ug + vg * vg + 1.0));
    return std::acos(std::clamp(cosv, -1.0, 1.0)) * 180.0 / std::numbers::pi;
  });
}

double overlap_rho(const std::vector<Vec3>& x1, const std::vector<Vec3>& x2, double rho) {
  if (x1.empty() || x2.empty()) {
    throw std::invalid_argument("empty set");
  }
  const KdTree idx1(x1);
  const KdTree idx2(x2);
  std::size_t close12 = 0, close21 = 0;
  for (const Vec3& p : x1) {
    if (idx2.nearest(p).dist <= rho) ++close12;
  }
  for (const Vec3& p : x2) {
    if (idx1.nearest(p).dist <= rho) ++close21;
  }
  return static_cast<double>(close12 + close21) / static_cast<double>(x1.size() + x2.size());
}

EventMatchReport match_events(const std::vector<TopologyEvent>& gt,
                              const std::vector<TopologyEvent>& det, double rho, int dt_max,
                              double min_overlap) {
  EventMatchReport report;
  report.gt_to_det.assign(gt.size(), -1);
  report.det_to_gt.assign(det.size(), -1);
  if (gt.empty() || det.empty()) {
    return report;  // zero fractions by definition
  }

  // Overlap of every admissible pair; argmax per side with ties resolved
  // to the lower index by scan order.
  std::vector<double> best_gt(gt.size(), 0.0), best_det(det.size(), 0.0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    for (std::size_t j = 0; j < det.size(); ++j) {
      if (gt[i].label != det[j].label) continue;
      if (std::abs(gt[i].timestamp - det[j].timestamp) > dt_max) continue;
      const double ov = overlap_rho(gt[i].points, det[j].points, rho);
      if (ov < min_overlap) continue;
      report.matches.push_back({static_cast<int>(i), static_cast<int>(j), ov,
                                gt[i].timestamp - det[j].timestamp});
      if (ov > best_gt[i]) {
        best_gt[i] = ov;
        report.gt_to_det[i] = static_cast<int>(j);
      }
      if (ov > best_det[j]) {
        best_det[j] = ov;
        report.det_to_gt[j] = static_cast<int>(i);
      }
    }
  }

  int matched = 0;
  double ov_sum = 0.0, delay_sum = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const int j = report.gt_to_det[i];
    if (j < 0) continue;
    ++matched;
    ov_sum += best_gt[i];
    delay_sum += gt[i].timestamp - det[j].timestamp;
  }
  report.matched_fraction_gt = 100.0 * matched / static_cast<double>(gt.size());
  if (matched > 0) {
    report.mean_overlap = ov_sum / matched;
    report.mean_delay = delay_sum / matched;
  }

  matched = 0;
  ov_sum = delay_sum = 0.0;
  for (std::size_t j = 0; j < det.size(); ++j) {
    const int i = report.det_to_gt[j];
    if (i < 0) continue;
    ++matched;
    ov_sum += best_det[j];
    delay_sum += gt[i].timestamp - det[j].timestamp;
  }
  report.matched_fraction_det = 100.0 * matched / static_cast<double>(det.size());
  if (matched > 0) {
    report.mean_overlap_det = ov_sum / matched;
    report.mean_delay_det = delay_sum / matched;
  }
  return report;
}

SepError separation_registration_error(const OrientedPointCloud& source, const DenseWarp& warp,
                                       const std::vector<int>& mask,
                                       const OrientedPointCloud& target,
                                       const DepthFrame& target_depth, double dz_occ) {
  if (warp.size() != source.size()) {
    throw std::invalid_argument("support size mismatch");
  }
  if (mask.empty()) {
    throw std::invalid_argument("empty mask");
  }
  for (int idx : mask) {
    if (idx < 0 || idx >= static_cast<int>(source.size())) {
      throw std::invalid_argument("mask index out of range");
    }
  }

  const KdTree target_index(target.points);
  SepError out;
  double sum = 0.0;
  for (int idx : mask) {
    const Vec3 moved = warp.transforms[idx].apply(source.points[idx]);
    if (moved.z() > 0.0 && target_depth.width > 0) {
      const Eigen::Vector2d uv = project(target_depth.intr, moved);
      const int u = static_cast<int>(std::lround(uv.x()));
      const int v = static_cast<int>(std::lround(uv.y()));
      if (target_depth.in_bounds(u, v)) {
        const double z = target_depth.depth_at(u, v);
        if (z > 0.0 && moved.z() - z > dz_occ) {
          ++out.points_occluded;
          continue;  // hidden behind target geometry, not measurable
        }
      }
    }
    sum += target_index.nearest(moved).dist;
    ++out.points_used;
  }
  if (out.points_used == 0) {
    throw std::invalid_argument("no visible points");
  }
  out.mean_mm = 1000.0 * sum / static_cast<double>(out.points_used);
  return out;
}

}  // namespace topowarp
