#include "topowarp/correspondence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "topowarp/parallel.hpp"

namespace topowarp {

bool gate_pair(const Vec3& ps, const Vec3& ns, const Vec3& cs, const Vec3& pd, const Vec3& nd,
               const Vec3& cd, const GatingThresholds& g) {
  if (!is_valid_normal(ns) || !is_valid_normal(nd)) return false;
  if ((ps - pd).norm() >= g.max_distance) return false;
  const double c = std::clamp(ns.dot(nd), -1.0, 1.0);
  if (std::acos(c) >= g.max_normal_angle) return false;
  return (cs - cd).norm() < g.max_color_distance;
}

std::vector<IndexPair> find_dense_nn(const OrientedPointCloud& warped_source,
                                     const OrientedPointCloud& target,
                                     const KdTree& target_index, const GatingThresholds& g) {
  const std::size_t n = warped_source.size();
  std::vector<int> match(n, -1);
  parallel_for(n, [&](std::size_t i) {
    const int j = target_index.nearest(warped_source.points[i]).index;
    if (gate_pair(warped_source.points[i], warped_source.normals[i], warped_source.colors[i],
                  target.points[j], target.normals[j], target.colors[j], g)) {
      match[i] = j;
    }
  });
  std::vector<IndexPair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (match[i] >= 0) pairs.push_back({static_cast<int>(i), match[i]});
  }
  return pairs;
}

std::vector<IndexPair> find_dense_projective(const OrientedPointCloud& warped_source,
                                             const OrganizedCloud& target,
                                             const GatingThresholds& g) {
  const std::size_t n = warped_source.size();
  std::vector<int> match(n, -1);
  parallel_for(n, [&](std::size_t i) {
    const Vec3& p = warped_source.points[i];
    if (p.z() <= 0.0) return;
    const Eigen::Vector2d uv = project(target.intr, p);
    const int u = static_cast<int>(std::lround(uv.x()));
    const int v = static_cast<int>(std::lround(uv.y()));
    if (u < 0 || u >= target.width || v < 0 || v >= target.height) return;
    const int j = target.pixel_to_index[static_cast<std::size_t>(v) * target.width + u];
    if (j < 0) return;
    if (gate_pair(p, warped_source.normals[i], warped_source.colors[i], target.cloud.points[j],
                  target.cloud.normals[j], target.cloud.colors[j], g)) {
      match[i] = j;
    }
  });
  std::vector<IndexPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    if (match[i] >= 0) pairs.push_back({static_cast<int>(i), match[i]});
  }
  return pairs;
}

namespace {

// Best and second-best descriptor matches of `query` among `pool`.
void best_two(const Eigen::VectorXd& query, const std::vector<Keypoint>& pool, int& best,
              double& best_d2, double& second_d2) {
  best = -1;
  best_d2 = second_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < pool.size(); ++j) {
    const double d2 = (pool[j].descriptor - query).squaredNorm();
    if (d2 < best_d2 || (d2 == best_d2 && best < 0)) {
      second_d2 = best_d2;
      best_d2 = d2;
      best = static_cast<int>(j);
    } else if (d2 < second_d2) {
      second_d2 = d2;
    }
  }
}

}  // namespace

std::vector<IndexPair> match_keypoints(const OrientedPointCloud& source,
                                       const OrientedPointCloud& target,
                                       const GatingThresholds& g, double lowe_ratio) {
  if (source.keypoints.empty() || target.keypoints.empty()) {
    return {};
  }
  const Eigen::Index dim = source.keypoints.front().descriptor.size();
  for (const auto& kp : source.keypoints) {
    if (kp.descriptor.size() != dim) throw std::invalid_argument("descriptor length mismatch");
  }
  for (const auto& kp : target.keypoints) {
    if (kp.descriptor.size() != dim) throw std::invalid_argument("descriptor length mismatch");
  }

  KdTree src_points(source.points);
  KdTree dst_points(target.points);

  std::vector<IndexPair> pairs;
  for (std::size_t i = 0; i < source.keypoints.size(); ++i) {
    int j;
    double d2, second_d2;
    best_two(source.keypoints[i].descriptor, target.keypoints, j, d2, second_d2);
    if (j < 0) continue;
    // Ratio test on distances (an equidistant second candidate kills the
    // match), then require mutual agreement from the target side.
    if (std::isfinite(second_d2) && !(std::sqrt(d2) < lowe_ratio * std::sqrt(second_d2))) {
      continue;
    }
    int back;
    double bd2, bsecond_d2;
    best_two(target.keypoints[j].descriptor, source.keypoints, back, bd2, bsecond_d2);
    if (back != static_cast<int>(i)) continue;

    const int si = src_points.nearest(source.keypoints[i].position).index;
    const int dj = dst_points.nearest(target.keypoints[j].position).index;
    if (!gate_pair(source.points[si], source.normals[si], source.colors[si], target.points[dj],
                   target.normals[dj], target.colors[dj], g)) {
      continue;
    }
    pairs.push_back({si, dj});
  }

  // Two keypoints can share a host point; keep a single copy of each pair.
  std::sort(pairs.begin(), pairs.end(), [](const IndexPair& a, const IndexPair& b) {
    return a.src < b.src || (a.src == b.src && a.dst < b.dst);
  });
  pairs.erase(std::unique(pairs.begin(), pairs.end(),
                          [](const IndexPair& a, const IndexPair& b) {
                            return a.src == b.src && a.dst == b.dst;
                          }),
              pairs.end());
  return pairs;
}

}  // namespace topowarp
