#include "phomo/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "phomo/error.hpp"

namespace phomo {
namespace {

using Point = Eigen::Vector2d;

double orient(const Point& a, const Point& b, const Point& c) {
  return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// > 0 when d lies inside the circumcircle of counter-clockwise (a, b, c).
double incircle(const Point& a, const Point& b, const Point& c, const Point& d) {
  const double adx = a.x() - d.x(), ady = a.y() - d.y();
  const double bdx = b.x() - d.x(), bdy = b.y() - d.y();
  const double cdx = c.x() - d.x(), cdy = c.y() - d.y();
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
         ad * (bdx * cdy - bdy * cdx);
}

struct Tri {
  std::array<int, 3> v;
  std::array<int, 3> nbr;  // nbr[i] is across the edge opposite v[i]
  bool alive = true;
};

class Triangulator {
 public:
  explicit Triangulator(std::vector<Point> pts) : pts_(std::move(pts)) {}

  std::vector<std::array<int, 3>> run(const std::vector<int>& order, int n_input);

 private:
  int locate(const Point& p) const;
  void insert(int pi);

  std::vector<Point> pts_;
  std::vector<Tri> tris_;
  int last_ = 0;
  std::vector<int> bad_, stack_;
  std::vector<char> is_bad_;
};

int Triangulator::locate(const Point& p) const {
  int t = last_;
  const int max_steps = static_cast<int>(tris_.size()) + 16;
  for (int step = 0; step < max_steps; ++step) {
    const Tri& tri = tris_[t];
    int next = -1;
    for (int i = 0; i < 3; ++i) {
      const Point& a = pts_[tri.v[(i + 1) % 3]];
      const Point& b = pts_[tri.v[(i + 2) % 3]];
      if (orient(a, b, p) < 0.0 && tri.nbr[i] >= 0) {
        next = tri.nbr[i];
        break;
      }
    }
    if (next < 0) return t;
    t = next;
  }
  // Walking can cycle on degenerate input; fall back to a scan.
  for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
    const Tri& tri = tris_[i];
    if (!tri.alive) continue;
    if (orient(pts_[tri.v[0]], pts_[tri.v[1]], p) >= 0 &&
        orient(pts_[tri.v[1]], pts_[tri.v[2]], p) >= 0 &&
        orient(pts_[tri.v[2]], pts_[tri.v[0]], p) >= 0) {
      return i;
    }
  }
  return last_;
}

void Triangulator::insert(int pi) {
  const Point& p = pts_[pi];
  const int start = locate(p);

  bad_.clear();
  stack_.assign(1, start);
  is_bad_.resize(tris_.size(), 0);
  is_bad_[start] = 1;
  while (!stack_.empty()) {
    const int t = stack_.back();
    stack_.pop_back();
    bad_.push_back(t);
    for (int n : tris_[t].nbr) {
      if (n < 0 || is_bad_[n]) continue;
      const Tri& tn = tris_[n];
      if (incircle(pts_[tn.v[0]], pts_[tn.v[1]], pts_[tn.v[2]], p) > 0.0) {
        is_bad_[n] = 1;
        stack_.push_back(n);
      }
    }
  }

  // Boundary edges of the cavity, each becoming a triangle with p.
  struct Edge {
    int a, b, outside;
  };
  std::vector<Edge> boundary;
  for (int t : bad_) {
    const Tri& tri = tris_[t];
    for (int i = 0; i < 3; ++i) {
      const int n = tri.nbr[i];
      if (n >= 0 && is_bad_[n]) continue;
      boundary.push_back({tri.v[(i + 1) % 3], tri.v[(i + 2) % 3], n});
    }
  }
  for (int t : bad_) {
    tris_[t].alive = false;
    is_bad_[t] = 0;
  }

  // Reuse dead slots from this cavity first, then append.
  std::vector<int> slots(bad_.begin(), bad_.end());
  std::vector<int> created;
  created.reserve(boundary.size());
  for (std::size_t k = 0; k < boundary.size(); ++k) {
    int id;
    if (k < slots.size()) {
      id = slots[k];
    } else {
      id = static_cast<int>(tris_.size());
      tris_.push_back({});
      is_bad_.push_back(0);
    }
    const Edge& e = boundary[k];
    tris_[id] = Tri{{e.a, e.b, pi}, {-1, -1, e.outside}, true};
    if (e.outside >= 0) {
      Tri& out = tris_[e.outside];
      for (int i = 0; i < 3; ++i) {
        const int oa = out.v[(i + 1) % 3], ob = out.v[(i + 2) % 3];
        if (oa == e.b && ob == e.a) out.nbr[i] = id;
      }
    }
    created.push_back(id);
  }
  // Link the fan around p: edge (b, p) of a triangle is edge (p, a') of the
  // triangle whose a' equals b.
  std::vector<std::pair<int, int>> by_start;
  by_start.reserve(created.size());
  for (int id : created) by_start.emplace_back(tris_[id].v[0], id);
  std::sort(by_start.begin(), by_start.end());
  auto find_start = [&](int vertex) {
    auto it = std::lower_bound(by_start.begin(), by_start.end(), std::make_pair(vertex, -1));
    return (it != by_start.end() && it->first == vertex) ? it->second : -1;
  };
  for (int id : created) {
    Tri& t = tris_[id];
    t.nbr[0] = find_start(t.v[1]);
  }
  for (int id : created) {
    const int n = tris_[id].nbr[0];
    if (n >= 0) tris_[n].nbr[1] = id;
  }
  last_ = created.empty() ? last_ : created.front();
}

std::vector<std::array<int, 3>> Triangulator::run(const std::vector<int>& order,
                                                  int n_input) {
  // Super triangle well outside the bounding box.
  Point lo = pts_[order.front()], hi = lo;
  for (int i : order) {
    lo = lo.cwiseMin(pts_[i]);
    hi = hi.cwiseMax(pts_[i]);
  }
  const Point c = 0.5 * (lo + hi);
  const double r = std::max((hi - lo).maxCoeff(), 1e-9) * 50.0;
  const int s0 = static_cast<int>(pts_.size());
  pts_.push_back(c + Point(-2 * r, -r));
  pts_.push_back(c + Point(2 * r, -r));
  pts_.push_back(c + Point(0, 2 * r));
  tris_.push_back(Tri{{s0, s0 + 1, s0 + 2}, {-1, -1, -1}, true});
  last_ = 0;

  for (int i : order) insert(i);

  std::vector<std::array<int, 3>> out;
  for (const Tri& t : tris_) {
    if (!t.alive) continue;
    if (t.v[0] >= n_input || t.v[1] >= n_input || t.v[2] >= n_input) continue;
    if (orient(pts_[t.v[0]], pts_[t.v[1]], pts_[t.v[2]]) <= 0.0) continue;
    out.push_back(t.v);
  }
  return out;
}

// Removing the super triangle can leave pockets along the convex hull.
// Fill reflex boundary vertices with ears, then restore the Delaunay
// property with Lawson flips.
void close_hull(const std::vector<Point>& pts, std::vector<std::array<int, 3>>& tris) {
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : tris)
    for (int i = 0; i < 3; ++i) edges[{t[i], t[(i + 1) % 3]}] = 1;
  std::map<int, int> next;
  for (const auto& [e, unused] : edges)
    if (!edges.count({e.second, e.first})) next[e.first] = e.second;

  bool changed = true;
  while (changed && next.size() > 3) {
    changed = false;
    for (auto& [a, b] : next) {
      const int c = next.at(b);
      if (orient(pts[a], pts[b], pts[c]) < 0.0) {
        tris.push_back({a, c, b});
        next.erase(b);
        next[a] = c;
        changed = true;
        break;
      }
    }
  }

  for (bool flipped = true; flipped;) {
    flipped = false;
    std::map<std::pair<int, int>, std::pair<int, int>> owner;  // edge -> (tri, opposite vertex)
    for (int t = 0; t < static_cast<int>(tris.size()); ++t)
      for (int i = 0; i < 3; ++i) owner[{tris[t][(i + 1) % 3], tris[t][(i + 2) % 3]}] = {t, tris[t][i]};
    std::vector<char> touched(tris.size(), 0);
    for (const auto& [e, own] : owner) {
      auto it = owner.find({e.second, e.first});
      if (it == owner.end()) continue;
      const auto [t0, p0] = own;
      const auto [t1, p1] = it->second;
      if (touched[t0] || touched[t1]) continue;
      const auto& T = tris[t0];
      if (incircle(pts[T[0]], pts[T[1]], pts[T[2]], pts[p1]) <= 0.0) continue;
      // Edge (a, b) with p0 on its left becomes (p0, p1).
      const int a = e.first, b = e.second;
      tris[t0] = {p0, a, p1};
      tris[t1] = {p1, b, p0};
      touched[t0] = touched[t1] = 1;
      flipped = true;
    }
  }
}

}  // namespace

std::vector<std::array<int, 3>> delaunay_triangulate(const std::vector<Point>& points) {
  const int n = static_cast<int>(points.size());
  if (n < 3) throw Error(ErrorCode::kDegenerateHull, "fewer than 3 points");

  // Spatially coherent insertion order (serpentine over a coarse grid) keeps
  // the walk short. Exact duplicates are dropped.
  Point lo = points[0], hi = points[0];
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const int cells = std::max(1, static_cast<int>(std::sqrt(n / 4.0)));
  const Point ext = (hi - lo).cwiseMax(Point(1e-300, 1e-300));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto cell_key = [&](int i) {
    const int row = std::min(cells - 1, static_cast<int>((points[i].y() - lo.y()) / ext.y() * cells));
    const double x = points[i].x();
    return std::make_tuple(row, row % 2 == 0 ? x : -x, points[i].y(), i);
  };
  std::sort(order.begin(), order.end(), [&](int a, int b) { return cell_key(a) < cell_key(b); });
  std::vector<int> unique;
  unique.reserve(n);
  for (int i : order) {
    bool dup = false;
    for (int k = static_cast<int>(unique.size()) - 1; k >= 0 && k >= static_cast<int>(unique.size()) - 8; --k) {
      if (points[unique[k]] == points[i]) dup = true;
    }
    if (!dup) unique.push_back(i);
  }

  Triangulator tri(points);
  auto result = tri.run(unique, n);
  if (result.empty()) {
    throw Error(ErrorCode::kDegenerateHull, "points are collinear");
  }
  close_hull(points, result);
  return result;
}

}  // namespace phomo
