#include "topowarp/kd_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace topowarp {

namespace {

inline bool hit_less(double d2a, int ia, double d2b, int ib) {
  return d2a < d2b || (d2a == d2b && ia < ib);
}

}  // namespace

KdTree::KdTree(std::vector<Vec3> pts) : pts_(std::move(pts)) {
  if (pts_.empty()) {
    throw std::invalid_argument("empty point set");
  }
  order_.resize(pts_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.reserve(2 * pts_.size() / kLeafSize + 2);
  root_ = build(0, static_cast<int>(pts_.size()));
}

int KdTree::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) {
    return id;
  }

  Vec3 lo = pts_[order_[begin]], hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(pts_[order_[i]]);
    hi = hi.cwiseMax(pts_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);

  const int mid = begin + (end - begin) / 2;
  // Tie-break on index so the partition (and thus the whole tree) is a
  // deterministic function of the input alone.
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     const double ca = pts_[a][axis], cb = pts_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });

  nodes_[id].axis = axis;
  nodes_[id].split = pts_[order_[mid]][axis];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

// Generic traversal: `visit(idx, d2)` sees every point whose subtree cannot
// be pruned; `prune_d2` is the current "worst acceptable" squared distance
// and may shrink as visit() improves it. Subtrees are skipped only when the
// splitting plane is strictly farther than prune_d2, so equal-distance
// candidates (ties) are always examined.
template <typename Visit>
void KdTree::traverse(const Vec3& q, double& prune_d2, int node, Visit&& visit) const {
  const Node& n = nodes_[node];
  if (n.left < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = order_[i];
      visit(idx, (pts_[idx] - q).squaredNorm());
    }
    return;
  }
  const double delta = q[n.axis] - n.split;
  const int near = delta < 0.0 ? n.left : n.right;
  const int far = delta < 0.0 ? n.right : n.left;
  traverse(q, prune_d2, near, visit);
  if (delta * delta <= prune_d2) {
    traverse(q, prune_d2, far, visit);
  }
}

KdTree::Hit KdTree::nearest(const Vec3& q) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_idx = -1;
  traverse(q, best_d2, root_, [&](int idx, double d2) {
    if (best_idx < 0 || hit_less(d2, idx, best_d2, best_idx)) {
      best_d2 = d2;
      best_idx = idx;
    }
  });
  return {best_idx, std::sqrt(best_d2)};
}

std::vector<KdTree::Hit> KdTree::knn(const Vec3& q, int k) const {
  if (k <= 0) {
    throw std::invalid_argument("k must be positive");
  }
  k = std::min<int>(k, static_cast<int>(pts_.size()));

  // Max-heap on (d2, index); top is the current worst of the k best.
  struct Entry {
    double d2;
    int idx;
  };
  const auto worse = [](const Entry& a, const Entry& b) {
    return hit_less(a.d2, a.idx, b.d2, b.idx);
  };
  std::vector<Entry> heap;
  heap.reserve(k + 1);

  double prune_d2 = std::numeric_limits<double>::infinity();
  traverse(q, prune_d2, root_, [&](int idx, double d2) {
    if (static_cast<int>(heap.size()) < k) {
      heap.push_back({d2, idx});
      std::push_heap(heap.begin(), heap.end(), worse);
    } else if (hit_less(d2, idx, heap.front().d2, heap.front().idx)) {
      std::pop_heap(heap.begin(), heap.end(), worse);
      heap.back() = {d2, idx};
      std::push_heap(heap.begin(), heap.end(), worse);
    }
    if (static_cast<int>(heap.size()) == k) {
      prune_d2 = heap.front().d2;
    }
  });

  std::sort(heap.begin(), heap.end(),
            [](const Entry& a, const Entry& b) { return hit_less(a.d2, a.idx, b.d2, b.idx); });
  std::vector<Hit> out(heap.size());
  for (std::size_t i = 0; i < heap.size(); ++i) {
    out[i] = {heap[i].idx, std::sqrt(heap[i].d2)};
  }
  return out;
}

std::vector<KdTree::Hit> KdTree::radius(const Vec3& q, double rho) const {
  if (!(rho > 0.0)) {
    throw std::invalid_argument("non-positive radius");
  }
  struct Entry {
    double d2;
    int idx;
  };
  std::vector<Entry> found;
  double prune_d2 = rho * rho;
  traverse(q, prune_d2, root_, [&](int idx, double d2) {
    if (d2 <= rho * rho) {
      found.push_back({d2, idx});
    }
  });
  std::sort(found.begin(), found.end(),
            [](const Entry& a, const Entry& b) { return hit_less(a.d2, a.idx, b.d2, b.idx); });
  std::vector<Hit> out(found.size());
  for (std::size_t i = 0; i < found.size(); ++i) {
    out[i] = {found[i].idx, std::sqrt(found[i].d2)};
  }
  return out;
}

}  // namespace topowarp
