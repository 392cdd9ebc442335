#pragma once

#include <vector>

#include "phomo/manifold.hpp"

namespace phomo {

/// Exact k-nearest-neighbor search over a static 3D point set.
class KdTree {
 public:
  explicit KdTree(std::vector<Vector3> points);

  /// Indices of the k points closest to `query`, nearest first. Ties are
  /// broken by index. Returns fewer than k when the set is smaller.
  std::vector<int> knn(const Vector3& query, int k) const;

  std::size_t size() const { return points_.size(); }
  const Vector3& point(int i) const { return points_[i]; }

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1, right = -1;
  };
  int build(std::vector<int>::iterator begin, std::vector<int>::iterator end, int depth);

  std::vector<Vector3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

}  // namespace phomo
