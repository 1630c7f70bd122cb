#pragma once

#include "topowarp/point_cloud.hpp"

#include <vector>

namespace topowarp {

// Static 3d kd-tree. Query results are defined to match a brute force scan
// exactly: candidates are ordered by (distance, index), so ties always
// resolve to the lowest original index. Queries are const and safe to issue
// from multiple threads concurrently.
class KdTree {
 public:
  struct Hit {
    int index;
    double dist;
  };

  KdTree() = default;
  // Copies the points. Throws std::invalid_argument("empty point set").
  explicit KdTree(std::vector<Vec3> pts);

  Hit nearest(const Vec3& q) const;
  // k best hits (all points if k >= size), sorted by (dist, index).
  std::vector<Hit> knn(const Vec3& q, int k) const;
  // All hits with dist <= rho (inclusive), sorted by (dist, index).
  // Throws std::invalid_argument("non-positive radius") when rho <= 0.
  std::vector<Hit> radius(const Vec3& q, double rho) const;

  const std::vector<Vec3>& points() const { return pts_; }
  std::size_t size() const { return pts_.size(); }
  bool empty() const { return pts_.empty(); }

 private:
  struct Node {
    int left = -1;    // child node ids, -1 for leaves
    int right = -1;
    int begin = 0;    // range into order_ (leaves scan it)
    int end = 0;
    int axis = 0;
    double split = 0.0;
  };

  int build(int begin, int end);
  template <typename Visit>
  void traverse(const Vec3& q, double& prune_d2, int node, Visit&& visit) const;

  std::vector<Vec3> pts_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;

  static constexpr int kLeafSize = 16;
};

}  // namespace topowarp
