#include "phomo/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <utility>

namespace phomo {

KdTree::KdTree(std::vector<Vector3> points) : points_(std::move(points)) {
  std::vector<int> idx(points_.size());
  std::iota(idx.begin(), idx.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(idx.begin(), idx.end(), 0);
}

int KdTree::build(std::vector<int>::iterator begin, std::vector<int>::iterator end, int depth) {
  if (begin == end) return -1;
  // Split on the widest axis of this subset.
  Vector3 lo = points_[*begin], hi = lo;
  for (auto it = begin; it != end; ++it) {
    lo = lo.cwiseMin(points_[*it]);
    hi = hi.cwiseMax(points_[*it]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  auto mid = begin + (end - begin) / 2;
  std::nth_element(begin, mid, end, [&](int a, int b) {
    return points_[a][axis] < points_[b][axis] || (points_[a][axis] == points_[b][axis] && a < b);
  });
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({*mid, axis, -1, -1});
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid + 1, end, depth + 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<int> KdTree::knn(const Vector3& query, int k) const {
  using Entry = std::pair<double, int>;  // (squared distance, index); max-heap
  std::priority_queue<Entry> best;
  if (k <= 0) return {};

  auto visit = [&](auto&& self, int node) -> void {
    if (node < 0) return;
    const Node& n = nodes_[node];
    const Entry e{(points_[n.point] - query).squaredNorm(), n.point};
    if (static_cast<int>(best.size()) < k) {
      best.push(e);
    } else if (e < best.top()) {
      best.pop();
      best.push(e);
    }
    const double diff = query[n.axis] - points_[n.point][n.axis];
    const int near = diff < 0 ? n.left : n.right;
    const int far = diff < 0 ? n.right : n.left;
    self(self, near);
    if (static_cast<int>(best.size()) < k || diff * diff <= best.top().first) self(self, far);
  };
  visit(visit, root_);

  std::vector<int> out(best.size());
  for (int i = static_cast<int>(best.size()) - 1; i >= 0; --i) {
    out[i] = best.top().second;
    best.pop();
  }
  return out;
}

}  // namespace phomo
