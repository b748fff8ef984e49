#include "pcev/neighbors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include <fmt/format.h>

#include "pcev/error.hpp"

namespace pcev {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

inline double coord(const Point3& p, int dim) noexcept {
  return dim == 0 ? p.x : (dim == 1 ? p.y : p.z);
}

// (squared distance, index), compared lexicographically.
using Candidate = std::pair<double, std::size_t>;

struct NearestVisitor {
  std::optional<std::size_t> exclude;
  Candidate best{kInf, std::numeric_limits<std::size_t>::max()};

  double bound() const noexcept { return best.first; }
  void visit(std::size_t index, double d2) noexcept {
    if (exclude && *exclude == index) return;
    if (Candidate{d2, index} < best) best = {d2, index};
  }
};

struct KnnVisitor {
  std::size_t k;
  std::optional<std::size_t> exclude;
  std::priority_queue<Candidate> heap;  // max-heap, worst on top

  double bound() const noexcept { return heap.size() < k ? kInf : heap.top().first; }
  void visit(std::size_t index, double d2) {
    if (exclude && *exclude == index) return;
    const Candidate c{d2, index};
    if (heap.size() < k) {
      heap.push(c);
    } else if (c < heap.top()) {
      heap.pop();
      heap.push(c);
    }
  }
  std::vector<Candidate> sorted() {
    std::vector<Candidate> out;
    out.reserve(heap.size());
    while (!heap.empty()) {
      out.push_back(heap.top());
      heap.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }
};

struct BallVisitor {
  double r2;
  std::vector<std::size_t> hits;

  double bound() const noexcept { return r2; }
  void visit(std::size_t index, double d2) {
    if (d2 <= r2) hits.push_back(index);
  }
};

// Merges `self` into a (distance, index)-sorted list of other candidates.
std::vector<std::size_t> with_self(const std::vector<Candidate>& others, std::size_t self) {
  std::vector<std::size_t> out;
  out.reserve(others.size() + 1);
  bool placed = false;
  for (const auto& c : others) {
    if (!placed && Candidate{0.0, self} < c) {
      out.push_back(self);
      placed = true;
    }
    out.push_back(c.second);
  }
  if (!placed) out.push_back(self);
  return out;
}

void check_knn(std::size_t n, std::size_t k, std::optional<std::size_t> self) {
  if (k > n) {
    throw InvalidArgument(fmt::format("k = {} exceeds cloud size {}", k, n));
  }
  if (self && *self >= n) {
    throw InvalidArgument(fmt::format("self index {} out of range for {} points", *self, n));
  }
}

void check_nearest(std::size_t n, std::optional<std::size_t> exclude) {
  if (exclude && n < 2) {
    throw InvalidArgument("nearest: no candidates left after exclusion");
  }
}

template <typename Visitor>
void scan(const Point3& query, std::span<const Point3> pts, Visitor& v) {
  for (std::size_t i = 0; i < pts.size(); ++i) v.visit(i, squared_distance(query, pts[i]));
}

std::vector<std::size_t> finish_knn(KnnVisitor& v, std::optional<std::size_t> self) {
  auto sorted = v.sorted();
  if (self) return with_self(sorted, *self);
  std::vector<std::size_t> out;
  out.reserve(sorted.size());
  for (const auto& c : sorted) out.push_back(c.second);
  return out;
}

}  // namespace

void NeighborhoodSpec::validate() const {
  if (kind == Kind::Knn && k < 3) {
    throw InvalidArgument(fmt::format("KNN neighborhood needs k >= 3, got {}", k));
  }
  if (kind == Kind::Ball && !(radius > 0.0 && std::isfinite(radius))) {
    throw InvalidArgument(fmt::format("ball neighborhood needs radius > 0, got {}", radius));
  }
}

std::string NeighborhoodSpec::label() const {
  return kind == Kind::Knn ? fmt::format("knn(k={})", k) : fmt::format("ball(r={})", radius);
}

Neighbor nearest(const Point3& query, const PointCloud& cloud, std::optional<std::size_t> exclude) {
  check_nearest(cloud.size(), exclude);
  NearestVisitor v{exclude};
  scan(query, cloud.points(), v);
  return {v.best.second, std::sqrt(v.best.first)};
}

std::vector<std::size_t> knn(const Point3& query, const PointCloud& cloud, std::size_t k,
                             std::optional<std::size_t> include_self) {
  check_knn(cloud.size(), k, include_self);
  if (k == 0) return {};
  KnnVisitor v{include_self ? k - 1 : k, include_self, {}};
  if (v.k > 0) scan(query, cloud.points(), v);
  return finish_knn(v, include_self);
}

std::vector<std::size_t> ball(const Point3& query, const PointCloud& cloud, double radius) {
  if (!(radius >= 0.0)) throw InvalidArgument("ball radius must be non-negative");
  BallVisitor v{radius * radius, {}};
  scan(query, cloud.points(), v);
  return v.hits;
}

KdTree::KdTree(std::span<const Point3> points, std::size_t leaf_size)
    : points_(points.begin(), points.end()), index_(points.size()), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  if (points_.empty()) throw InvalidArgument("cannot index an empty cloud");
  std::iota(index_.begin(), index_.end(), std::size_t{0});
  nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
  build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{-1, -1, begin, end, 0, 0.0, 0.0});
  if (end - begin <= leaf_size_) return id;

  std::array<double, 3> lo{kInf, kInf, kInf};
  std::array<double, 3> hi{-kInf, -kInf, -kInf};
  for (auto i = begin; i < end; ++i) {
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], coord(points_[i], d));
      hi[d] = std::max(hi[d], coord(points_[i], d));
    }
  }
  int dim = 0;
  for (int d = 1; d < 3; ++d) {
    if (hi[d] - lo[d] > hi[dim] - lo[dim]) dim = d;
  }
  if (hi[dim] - lo[dim] <= 0.0) return id;  // all points coincide

  // Permute (point, index) pairs together; ordering by (coordinate, original
  // index) keeps construction deterministic.
  std::vector<std::uint32_t> order(end - begin);
  std::iota(order.begin(), order.end(), begin);
  const auto mid = (end - begin) / 2;
  std::nth_element(order.begin(), order.begin() + mid, order.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = coord(points_[a], dim);
                     const double cb = coord(points_[b], dim);
                     return ca < cb || (ca == cb && index_[a] < index_[b]);
                   });
  std::vector<Point3> pts;
  std::vector<std::size_t> idx;
  pts.reserve(order.size());
  idx.reserve(order.size());
  for (auto o : order) {
    pts.push_back(points_[o]);
    idx.push_back(index_[o]);
  }
  std::copy(pts.begin(), pts.end(), points_.begin() + begin);
  std::copy(idx.begin(), idx.end(), index_.begin() + begin);

  const auto split = begin + static_cast<std::uint32_t>(mid);
  double left_hi = -kInf;
  double right_lo = kInf;
  for (auto i = begin; i < split; ++i) left_hi = std::max(left_hi, coord(points_[i], dim));
  for (auto i = split; i < end; ++i) right_lo = std::min(right_lo, coord(points_[i], dim));

  const auto left = build(begin, split);
  const auto right = build(split, end);
  Node& node = nodes_[static_cast<std::size_t>(id)];
  node.left = left;
  node.right = right;
  node.dim = dim;
  node.left_hi = left_hi;
  node.right_lo = right_lo;
  return id;
}

template <typename Visitor>
void KdTree::search(const Point3& query, Visitor& visitor) const {
  // offsets[d] is a lower bound on |query_d - p_d| for every point in the
  // subtree; each term only ever rounds down relative to the true
  // squared_distance, so pruning on `bound > threshold` never drops a point
  // that a brute-force scan would accept.
  struct Frame {
    std::int32_t node;
    std::array<double, 3> off;
  };
  auto bound_of = [](const std::array<double, 3>& o) {
    return o[0] * o[0] + o[1] * o[1] + o[2] * o[2];
  };

  std::vector<Frame> stack;
  stack.reserve(64);
  stack.push_back({0, {0.0, 0.0, 0.0}});
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    if (bound_of(f.off) > visitor.bound()) continue;
    const Node& n = nodes_[static_cast<std::size_t>(f.node)];
    if (n.left < 0) {
      for (auto i = n.begin; i < n.end; ++i) {
        visitor.visit(index_[i], squared_distance(query, points_[i]));
      }
      continue;
    }
    const double q = coord(query, n.dim);
    Frame lf{n.left, f.off};
    Frame rf{n.right, f.off};
    if (q > n.left_hi) lf.off[n.dim] = std::max(f.off[n.dim], q - n.left_hi);
    if (q < n.right_lo) rf.off[n.dim] = std::max(f.off[n.dim], n.right_lo - q);
    // Push the farther child first so the nearer one is searched first.
    if (bound_of(rf.off) < bound_of(lf.off)) {
      stack.push_back(lf);
      stack.push_back(rf);
    } else {
      stack.push_back(rf);
      stack.push_back(lf);
    }
  }
}

Neighbor KdTree::nearest(const Point3& query, std::optional<std::size_t> exclude) const {
  check_nearest(size(), exclude);
  NearestVisitor v{exclude};
  search(query, v);
  return {v.best.second, std::sqrt(v.best.first)};
}

std::pair<std::size_t, double> KdTree::nearest_squared(const Point3& query) const {
  NearestVisitor v{std::nullopt};
  search(query, v);
  return {v.best.second, v.best.first};
}

std::vector<std::size_t> KdTree::knn(const Point3& query, std::size_t k,
                                     std::optional<std::size_t> include_self) const {
  check_knn(size(), k, include_self);
  if (k == 0) return {};
  KnnVisitor v{include_self ? k - 1 : k, include_self, {}};
  if (v.k > 0) search(query, v);
  return finish_knn(v, include_self);
}

std::vector<std::size_t> KdTree::ball(const Point3& query, double radius) const {
  if (!(radius >= 0.0)) throw InvalidArgument("ball radius must be non-negative");
  BallVisitor v{radius * radius, {}};
  search(query, v);
  std::sort(v.hits.begin(), v.hits.end());
  return v.hits;
}

}  // namespace pcev
