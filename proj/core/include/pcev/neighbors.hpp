#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcev/geometry.hpp"

namespace pcev {

struct Neighbor {
  std::size_t index = 0;
  double distance = 0.0;  // Euclidean, not squared
};

/// Neighborhood selection for plane fitting: the K nearest points, or every
/// point inside a closed ball.
struct NeighborhoodSpec {
  enum class Kind { Knn, Ball };

  Kind kind = Kind::Knn;
  std::size_t k = 20;
  double radius = 0.0;

  static NeighborhoodSpec knn(std::size_t k) { return {Kind::Knn, k, 0.0}; }
  static NeighborhoodSpec ball(double radius) { return {Kind::Ball, 0, radius}; }

  /// KNN needs k >= 3, Ball needs a finite radius > 0.
  void validate() const;
  std::string label() const;

  friend bool operator==(const NeighborhoodSpec&, const NeighborhoodSpec&) = default;
};

// Exact brute-force queries. All ties resolve to the lowest index, and all
// comparisons are on squared_distance().

/// Closest point to `query`, optionally skipping index `exclude`.
Neighbor nearest(const Point3& query, const PointCloud& cloud,
                 std::optional<std::size_t> exclude = std::nullopt);

/// The k closest indices ordered by (distance, index). When `include_self`
/// is set that index is always part of the result, in its sorted position
/// at distance zero, and only k-1 other points are taken.
std::vector<std::size_t> knn(const Point3& query, const PointCloud& cloud, std::size_t k,
                             std::optional<std::size_t> include_self = std::nullopt);

/// Every index with squared distance <= radius^2, ascending.
std::vector<std::size_t> ball(const Point3& query, const PointCloud& cloud, double radius);

/// Static 3D k-d tree over a copy of the points. Answers exactly the same
/// queries as the brute-force functions above, bit for bit.
class KdTree {
 public:
  explicit KdTree(std::span<const Point3> points, std::size_t leaf_size = 10);
  explicit KdTree(const PointCloud& cloud, std::size_t leaf_size = 10)
      : KdTree(cloud.points(), leaf_size) {}

  std::size_t size() const noexcept { return points_.size(); }

  Neighbor nearest(const Point3& query, std::optional<std::size_t> exclude = std::nullopt) const;

  /// Index and squared distance of the nearest point, no sqrt.
  std::pair<std::size_t, double> nearest_squared(const Point3& query) const;

  std::vector<std::size_t> knn(const Point3& query, std::size_t k,
                               std::optional<std::size_t> include_self = std::nullopt) const;
  std::vector<std::size_t> ball(const Point3& query, double radius) const;

 private:
  struct Node {
    // Children are node indices; -1 marks a leaf covering [begin, end).
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    int dim = 0;
    double left_hi = 0.0;   // largest coordinate along dim in the left child
    double right_lo = 0.0;  // smallest coordinate along dim in the right child
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  template <typename Visitor>
  void search(const Point3& query, Visitor& visitor) const;

  std::vector<Point3> points_;       // reordered so every leaf is contiguous
  std::vector<std::size_t> index_;   // original index of points_[i]
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

}  // namespace pcev
