#include "topowarp/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "topowarp/parallel.hpp"

namespace topowarp {

StretchField stretch(const OrientedPointCloud& cloud, const DenseWarp& warp, double rho_s) {
  if (warp.size() != cloud.size()) {
    throw std::invalid_argument("support size mismatch");
  }
  if (!(rho_s > 0.0)) {
    throw std::invalid_argument("non-positive radius");
  }

  std::vector<Vec3> warped(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    warped[i] = warp.transforms[i].apply(cloud.points[i]);
  }
  const KdTree index(cloud.points);

  StretchField field;
  field.rho_s = rho_s;
  field.values.assign(cloud.size(), 1.0);
  parallel_for(cloud.size(), [&](std::size_t i) {
    double worst = 1.0;
    bool any = false;
    for (const auto& h : index.radius(cloud.points[i], rho_s)) {
      if (h.dist < 1e-9) continue;  // self and coincident duplicates
      const double ratio = (warped[i] - warped[h.index]).norm() / h.dist;
      if (!any || ratio > worst) worst = ratio;
      any = true;
    }
    if (any) field.values[i] = worst;
  });
  return field;
}

std::vector<double> compress_map(const OrientedPointCloud& source,
                                 const OrientedPointCloud& target, const DenseWarp& forward,
                                 const StretchField& stretch_target,
                                 const KdTree& target_index) {
  if (forward.size() != source.size()) {
    throw std::invalid_argument("support size mismatch");
  }
  if (stretch_target.values.size() != target.size() || target_index.size() != target.size()) {
    throw std::invalid_argument("target field size mismatch");
  }
  std::vector<double> out(source.size());
  parallel_for(source.size(), [&](std::size_t i) {
    const Vec3 moved = forward.transforms[i].apply(source.points[i]);
    out[i] = stretch_target.values[target_index.nearest(moved).index];
  });
  return out;
}

EventCandidates extract_events(const StretchField& stretch_f, const StretchField& stretch_b,
                               const std::vector<double>& compress_f,
                               const std::vector<double>& compress_b, double tau, double alpha) {
  const std::size_t n = stretch_f.values.size();
  if (stretch_b.values.size() != n || compress_f.size() != n || compress_b.size() != n) {
    throw std::invalid_argument("field size mismatch");
  }
  EventCandidates cand;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = std::max(stretch_f.values[i], stretch_b.values[i]);
    const double c = std::max(compress_f[i], compress_b[i]);
    if (s > tau && s > alpha * c) {
      cand.sep.push_back(static_cast<int>(i));
    } else if (c > tau && c > alpha * s) {
      cand.con.push_back(static_cast<int>(i));
    }
  }
  return cand;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

void cluster_class(const std::vector<Vec3>& points, const std::vector<int>& members,
                   EventLabel label, int timestamp, double cluster_dist, int min_points,
                   std::vector<TopologyEvent>& out) {
  if (members.empty()) return;

  std::vector<Vec3> subset(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) subset[i] = points[members[i]];
  const KdTree index(subset);

  UnionFind uf(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    for (const auto& h : index.radius(subset[i], cluster_dist)) {
      uf.unite(static_cast<int>(i), h.index);
    }
  }

  // Components keyed by their root; member lists stay in ascending index
  // order because we scan i in order.
  std::vector<std::vector<int>> groups(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) {
    groups[uf.find(static_cast<int>(i))].push_back(static_cast<int>(i));
  }
  for (const auto& group : groups) {
    if (static_cast<int>(group.size()) < min_points) continue;
    TopologyEvent ev;
    ev.label = label;
    ev.timestamp = timestamp;
    ev.indices.reserve(group.size());
    ev.points.reserve(group.size());
    for (int local : group) {
      ev.indices.push_back(members[local]);
      ev.points.push_back(subset[local]);
    }
    out.push_back(std::move(ev));
  }
}

}  // namespace

std::vector<TopologyEvent> cluster_events(const std::vector<Vec3>& points,
                                          const EventCandidates& candidates, int timestamp,
                                          double cluster_dist, int min_points) {
  if (!(cluster_dist > 0.0)) {
    throw std::invalid_argument("non-positive radius");
  }
  std::vector<TopologyEvent> events;
  cluster_class(points, candidates.con, EventLabel::Contact, timestamp, cluster_dist,
                min_points, events);
  cluster_class(points, candidates.sep, EventLabel::Separation, timestamp, cluster_dist,
                min_points, events);
  return events;
}

std::pair<DenseWarp, BlendWeights> blend(const std::vector<Vec3>& source_points,
                                         const DenseWarp& warp_f, const DenseWarp& warp_b,
                                         const std::vector<Vec3>& con_points,
                                         const std::vector<Vec3>& sep_points, double rho_e) {
  const std::size_t n = source_points.size();
  if (warp_f.size() != n || warp_b.size() != n) {
    throw std::invalid_argument("support size mismatch");
  }
  if (!(rho_e > 0.0)) {
    throw std::invalid_argument("non-positive radius");
  }

  const double sigma = rho_e / 3.0;
  const double inv_two_sigma2 = 1.0 / (2.0 * sigma * sigma);

  KdTree con_index, sep_index;
  if (!con_points.empty()) con_index = KdTree(con_points);
  if (!sep_points.empty()) sep_index = KdTree(sep_points);

  DenseWarp out;
  out.transforms.resize(n);
  BlendWeights weights;
  weights.w_f.assign(n, 1.0);
  weights.w_b.assign(n, 0.0);

  parallel_for(n, [&](std::size_t i) {
    double wf = 1.0;  // the forward hypothesis always keeps a base vote
    double wb = 0.0;
    if (!con_points.empty()) {
      for (const auto& h : con_index.radius(source_points[i], rho_e)) {
        wf += std::exp(-h.dist * h.dist * inv_two_sigma2);
      }
    }
    if (!sep_points.empty()) {
      for (const auto& h : sep_index.radius(source_points[i], rho_e)) {
        wb += std::exp(-h.dist * h.dist * inv_two_sigma2);
      }
    }

    if (wb == 0.0) {
      // No separation influence: keep the forward transform untouched so
      // event-free regions (and event-free scenes) keep the plain forward
      // result.
      out.transforms[i] = warp_f.transforms[i];
      return;
    }

    const double wb_norm = wb / (wf + wb);
    const double wf_norm = 1.0 - wb_norm;  // sums to 1 by construction
    weights.w_f[i] = wf_norm;
    weights.w_b[i] = wb_norm;

    const Mat3 blended_r =
        wf_norm * warp_f.transforms[i].R + wb_norm * warp_b.transforms[i].R;
    out.transforms[i].R = project_to_rotation(blended_r);
    out.transforms[i].t =
        wf_norm * warp_f.transforms[i].t + wb_norm * warp_b.transforms[i].t;
  });

  return {std::move(out), std::move(weights)};
}

TopologyAwareResult topology_aware_register(const OrientedPointCloud& source,
                                            const OrientedPointCloud& target,
                                            const PipelineConfig& cfg, const DenseWarp* w0,
                                            const OrganizedCloud* target_frame,
                                            const OrganizedCloud* source_frame) {
  TopologyAwareResult result;

  if (!cfg.topology_enabled) {
    result.forward = register_clouds(source, target, cfg.icp, w0, target_frame);
    result.warp = result.forward.warp;
    result.weights.w_f.assign(source.size(), 1.0);
    result.weights.w_b.assign(source.size(), 0.0);
    return result;
  }

  BidirectionalResult reg =
      register_bidirectional(source, target, cfg.icp, w0, target_frame, source_frame);
  result.forward = std::move(reg.forward);
  result.backward = std::move(reg.backward);

  const DenseWarp& warp_sf = result.forward.warp;
  const DenseWarp& warp_db = result.backward.warp;
  const DenseWarp warp_sb = invert_rebase(warp_db, target.points, source.points);
  const DenseWarp warp_df = invert_rebase(warp_sf, source.points, target.points);

  const TopologyConfig& topo = cfg.topology;
  const StretchField stretch_sf = stretch(source, warp_sf, topo.rho_s);
  const StretchField stretch_sb = stretch(source, warp_sb, topo.rho_s);
  const StretchField stretch_df = stretch(target, warp_df, topo.rho_s);
  const StretchField stretch_db = stretch(target, warp_db, topo.rho_s);

  const KdTree target_index(target.points);
  const std::vector<double> compress_sf =
      compress_map(source, target, warp_sf, stretch_df, target_index);
  const std::vector<double> compress_sb =
      compress_map(source, target, warp_sb, stretch_db, target_index);

  const EventCandidates cand =
      extract_events(stretch_sf, stretch_sb, compress_sf, compress_sb, topo.tau, topo.alpha);
  result.events = cluster_events(source.points, cand, cfg.timestamp, topo.cluster_dist,
                                 topo.min_event_points);

  std::vector<Vec3> con_points, sep_points;
  if (topo.blend_use_clustered) {
    for (const TopologyEvent& ev : result.events) {
      auto& dst = ev.label == EventLabel::Contact ? con_points : sep_points;
      dst.insert(dst.end(), ev.points.begin(), ev.points.end());
    }
  } else {
    con_points.reserve(cand.con.size());
    for (int i : cand.con) con_points.push_back(source.points[i]);
    sep_points.reserve(cand.sep.size());
    for (int i : cand.sep) sep_points.push_back(source.points[i]);
  }

  auto blended = blend(source.points, warp_sf, warp_sb, con_points, sep_points, topo.rho_e);
  result.warp = std::move(blended.first);
  result.weights = std::move(blended.second);
  return result;
}

}  // namespace topowarp
