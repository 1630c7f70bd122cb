#include "topowarp/synthetic.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <stdexcept>

namespace topowarp {

SceneKind scene_kind_from(const std::string& name) {
  if (name == "rigid") return SceneKind::Rigid;
  if (name == "hinge") return SceneKind::Hinge;
  if (name == "separation") return SceneKind::Separation;
  if (name == "contact") return SceneKind::Contact;
  if (name == "slide") return SceneKind::Slide;
  throw std::invalid_argument("unknown scene kind: " + name);
}

std::string to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::Rigid:
      return "rigid";
    case SceneKind::Hinge:
      return "hinge";
    case SceneKind::Separation:
      return "separation";
    case SceneKind::Contact:
      return "contact";
    case SceneKind::Slide:
      return "slide";
  }
  return "?";
}

namespace {

enum Face : unsigned {
  kNegX = 1u << 0,
  kPosX = 1u << 1,
  kNegY = 1u << 2,
  kPosY = 1u << 3,
  kNegZ = 1u << 4,
  kPosZ = 1u << 5,
};

struct Builder {
  std::mt19937_64 gen;
  const SceneParams& p;
  std::vector<Vec3> points;   // object coordinates
  std::vector<Vec3> normals;  // outward face normals
  std::vector<Vec3> colors;
  std::vector<int> labels;

  Builder(const SceneParams& params, std::uint64_t seed) : gen(seed), p(params) {}

  double uniform(double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(gen);
  }

  Vec3 random_direction() {
    std::normal_distribution<double> n;
    for (;;) {
      const Vec3 v(n(gen), n(gen), n(gen));
      const double norm = v.norm();
      if (norm > 1e-6) return v / norm;
    }
  }

  // Grid-samples one axis-aligned face. Grids are inset by spacing/2 so
  // adjacent faces never produce coincident points.
  void face(const Vec3& lo, const Vec3& hi, int axis, bool positive, int label) {
    const int u_axis = (axis + 1) % 3;
    const int v_axis = (axis + 2) % 3;
    const double plane = positive ? hi[axis] : lo[axis];
    Vec3 normal = Vec3::Zero();
    normal[axis] = positive ? 1.0 : -1.0;

    const double inset = 0.5 * p.spacing;
    auto coords = [&](int ax) {
      const double extent = hi[ax] - lo[ax];
      const int m = std::max(2, static_cast<int>(std::lround(extent / p.spacing)));
      std::vector<double> cs(m);
      for (int i = 0; i < m; ++i) {
        cs[i] = lo[ax] + inset + i * (extent - 2.0 * inset) / (m - 1);
      }
      return cs;
    };

    for (double cu : coords(u_axis)) {
      for (double cv : coords(v_axis)) {
        Vec3 q;
        q[axis] = plane;
        q[u_axis] = cu + uniform(-p.jitter, p.jitter);
        q[v_axis] = cv + uniform(-p.jitter, p.jitter);
        points.push_back(q);
        normals.push_back(normal);
        const double g = uniform(0.45, 0.75);
        colors.emplace_back(g, g, g);
        labels.push_back(label);
      }
    }
  }

  void box(const Vec3& lo, const Vec3& hi, unsigned skip, int label) {
    if (!(skip & kNegX)) face(lo, hi, 0, false, label);
    if (!(skip & kPosX)) face(lo, hi, 0, true, label);
    if (!(skip & kNegY)) face(lo, hi, 1, false, label);
    if (!(skip & kPosY)) face(lo, hi, 1, true, label);
    if (!(skip & kNegZ)) face(lo, hi, 2, false, label);
    if (!(skip & kPosZ)) face(lo, hi, 2, true, label);
  }
};

RigidTransform about_point(const Mat3& R, const Vec3& pivot) {
  RigidTransform tf;
  tf.R = R;
  tf.t = pivot - R * pivot;
  return tf;
}

}  // namespace

SyntheticScene generate_scene(SceneKind kind, const SceneParams& p, std::uint64_t seed) {
  if (!(p.spacing > 0.0) || !(p.box > 2.0 * p.spacing) || !(p.height > 2.0 * p.spacing) ||
      !(p.depth > 2.0 * p.spacing) || p.jitter < 0.0 || p.jitter >= 0.5 * p.spacing) {
    throw std::invalid_argument("bad scene parameters");
  }

  Builder b(p, seed);
  std::vector<RigidTransform> seg(2);
  // Ground-truth event groups as (label, source index list), object coords.
  std::vector<std::pair<EventLabel, std::vector<int>>> groups;
  // Keypoints are only placed where the predicate holds.
  std::function<bool(const Vec3&)> kp_ok = [](const Vec3&) { return true; };

  const double hy = 0.5 * p.height;
  const double hz = 0.5 * p.depth;

  switch (kind) {
    case SceneKind::Rigid: {
      b.box({-0.5 * p.box, -hy, -hz}, {0.5 * p.box, hy, hz}, 0, 0);
      const Vec3 axis = b.random_direction();
      const double angle = p.max_rotation * b.uniform(0.3, 1.0);
      const Mat3 R = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
      seg[0].R = R;
      seg[0].t = b.random_direction() * (p.max_translation * b.uniform(0.3, 1.0));
      seg[1] = seg[0];
      break;
    }
    case SceneKind::Hinge: {
      b.box({-p.box, -hy, -hz}, {0.0, hy, hz}, kPosX, 0);
      b.box({0.0, -hy, -hz}, {p.box, hy, hz}, kNegX, 1);
      const Mat3 R = Eigen::AngleAxisd(p.hinge_angle, Vec3::UnitY()).toRotationMatrix();
      seg[1] = about_point(R, {0.0, 0.0, -hz});  // hinge along the z = -hz edge
      kp_ok = [&p](const Vec3& q) { return std::abs(q.x()) > p.keypoint_margin; };
      break;
    }
    case SceneKind::Separation: {
      b.box({-p.box, -hy, -hz}, {0.0, hy, hz}, kPosX, 0);
      b.box({0.0, -hy, -hz}, {p.box, hy, hz}, kNegX, 1);
      seg[1].t = {p.gap, 0.0, 0.0};
      std::vector<int> band;
      for (std::size_t i = 0; i < b.points.size(); ++i) {
        if (std::abs(b.points[i].x()) <= p.annotation_band) band.push_back(static_cast<int>(i));
      }
      groups.push_back({EventLabel::Separation, std::move(band)});
      kp_ok = [&p](const Vec3& q) { return std::abs(q.x()) > p.keypoint_margin; };
      break;
    }
    case SceneKind::Contact: {
      b.box({-p.box, -hy, -hz}, {0.0, hy, hz}, kPosX, 0);
      b.box({p.gap, -hy, -hz}, {p.gap + p.box, hy, hz}, kNegX, 1);
      seg[1].t = {-p.gap, 0.0, 0.0};
      std::vector<int> band_a, band_b;
      for (std::size_t i = 0; i < b.points.size(); ++i) {
        const double x = b.points[i].x();
        if (b.labels[i] == 0 && std::abs(x) <= p.annotation_band) {
          band_a.push_back(static_cast<int>(i));
        } else if (b.labels[i] == 1 && std::abs(x - p.gap) <= p.annotation_band) {
          band_b.push_back(static_cast<int>(i));
        }
      }
      groups.push_back({EventLabel::Contact, std::move(band_a)});
      groups.push_back({EventLabel::Contact, std::move(band_b)});
      kp_ok = [&p](const Vec3& q) {
        return q.x() < -p.keypoint_margin || q.x() > p.gap + p.keypoint_margin;
      };
      break;
    }
    case SceneKind::Slide: {
      b.box({-1.25 * p.box, -hy, -1.5 * hz}, {1.25 * p.box, 0.0, 1.5 * hz}, 0, 0);
      b.box({-0.5 * p.box, 0.0, -hz}, {0.5 * p.box, p.height, hz}, kNegY, 1);
      seg[1].t = {p.slide_dist, 0.0, 0.0};
      kp_ok = [&p](const Vec3& q) { return std::abs(q.y()) > p.keypoint_margin; };
      break;
    }
  }

  // Move the scene in front of the camera and express the motions there.
  const Vec3 offset(0.0, 0.0, p.camera_distance);
  std::vector<RigidTransform> seg_world(2);
  for (int s = 0; s < 2; ++s) {
    seg_world[s].R = seg[s].R;
    seg_world[s].t = seg[s].t + offset - seg[s].R * offset;
  }

  SyntheticScene scene;
  const std::size_t n = b.points.size();
  scene.source.points.resize(n);
  scene.source.normals = b.normals;
  scene.source.colors = b.colors;
  scene.gt_segment_labels = b.labels;
  for (std::size_t i = 0; i < n; ++i) scene.source.points[i] = b.points[i] + offset;

  scene.target.points.resize(n);
  scene.target.normals.resize(n);
  scene.target.colors = b.colors;
  scene.gt_warp.transforms.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const RigidTransform& tf = seg_world[static_cast<std::size_t>(b.labels[i])];
    scene.gt_warp.transforms[i] = tf;
    scene.target.points[i] = tf.apply(scene.source.points[i]);
    scene.target.normals[i] = tf.R * scene.source.normals[i];
  }

  for (auto& [label, indices] : groups) {
    if (indices.empty()) continue;
    TopologyEvent ev;
    ev.label = label;
    ev.timestamp = 0;
    ev.indices = indices;
    ev.points.reserve(indices.size());
    for (int idx : indices) ev.points.push_back(scene.source.points[static_cast<std::size_t>(idx)]);
    scene.gt_events.push_back(std::move(ev));
    scene.gt_mask.insert(scene.gt_mask.end(), indices.begin(), indices.end());
  }
  std::sort(scene.gt_mask.begin(), scene.gt_mask.end());

  // Keypoints: existing surface points away from the interface, with shared
  // random descriptors so matching is exact by construction.
  std::vector<std::vector<int>> allowed(2);
  for (std::size_t i = 0; i < n; ++i) {
    if (kp_ok(b.points[i])) allowed[static_cast<std::size_t>(b.labels[i])].push_back(static_cast<int>(i));
  }
  std::vector<int> chosen;
  for (auto& pool : allowed) {
    std::shuffle(pool.begin(), pool.end(), b.gen);
    const int take = std::min<int>(p.keypoints_per_segment, static_cast<int>(pool.size()));
    chosen.insert(chosen.end(), pool.begin(), pool.begin() + take);
  }
  std::sort(chosen.begin(), chosen.end());
  std::normal_distribution<double> desc_dist;
  for (int idx : chosen) {
    Keypoint kp;
    kp.descriptor.resize(p.descriptor_dim);
    for (int d = 0; d < p.descriptor_dim; ++d) kp.descriptor[d] = desc_dist(b.gen);
    kp.position = scene.source.points[static_cast<std::size_t>(idx)];
    scene.source.keypoints.push_back(kp);
    kp.position = scene.target.points[static_cast<std::size_t>(idx)];
    scene.target.keypoints.push_back(std::move(kp));
  }

  scene.intrinsics.fx = p.focal;
  scene.intrinsics.fy = p.focal;
  scene.intrinsics.cx = 0.5 * (p.frame_width - 1);
  scene.intrinsics.cy = 0.5 * (p.frame_height - 1);
  scene.intrinsics.depth_scale = 0.001;
  scene.frame_width = p.frame_width;
  scene.frame_height = p.frame_height;
  return scene;
}

}  // namespace topowarp
