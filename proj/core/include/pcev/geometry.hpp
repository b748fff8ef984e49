#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pcev {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Point3& operator+=(const Point3& o) noexcept {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Point3& operator-=(const Point3& o) noexcept {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  friend constexpr Point3 operator+(Point3 a, const Point3& b) noexcept { return a += b; }
  friend constexpr Point3 operator-(Point3 a, const Point3& b) noexcept { return a -= b; }
  friend constexpr Point3 operator*(double s, const Point3& p) noexcept {
    return {s * p.x, s * p.y, s * p.z};
  }
  friend constexpr bool operator==(const Point3&, const Point3&) = default;

  bool finite() const noexcept {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
  }
};

constexpr double dot(const Point3& a, const Point3& b) noexcept {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}

/// Squared Euclidean distance. Every exact neighbor query in the library
/// compares values produced by this one expression, so ties are reproducible.
constexpr double squared_distance(const Point3& a, const Point3& b) noexcept {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

inline double distance(const Point3& a, const Point3& b) noexcept {
  return std::sqrt(squared_distance(a, b));
}

inline double norm(const Point3& p) noexcept { return std::sqrt(dot(p, p)); }

/// An ordered, non-empty sequence of finite points. Point order is part of
/// the value: normals and neighbor indices refer to it.
class PointCloud {
 public:
  PointCloud() = delete;
  explicit PointCloud(std::vector<Point3> points, std::string id = {});

  std::size_t size() const noexcept { return points_.size(); }
  std::span<const Point3> points() const noexcept { return points_; }
  const Point3& operator[](std::size_t i) const noexcept { return points_[i]; }
  const std::string& id() const noexcept { return id_; }

  auto begin() const noexcept { return points_.begin(); }
  auto end() const noexcept { return points_.end(); }

  friend bool operator==(const PointCloud& a, const PointCloud& b) {
    return a.points_ == b.points_;
  }

 private:
  std::vector<Point3> points_;
  std::string id_;
};

enum class SetRole { Generated, Reference };

const char* to_string(SetRole role) noexcept;

struct CloudSet {
  std::vector<PointCloud> clouds;
  SetRole role = SetRole::Generated;

  std::size_t size() const noexcept { return clouds.size(); }
  const PointCloud& operator[](std::size_t i) const noexcept { return clouds[i]; }
};

/// Throws InvalidArgument when the set is empty.
void require_non_empty(const CloudSet& set, const char* what);

Point3 barycenter(const PointCloud& cloud);

/// Translates the cloud so that its barycenter is the origin.
PointCloud center(const PointCloud& cloud);

/// Maximum pairwise Euclidean distance; 0 for a single point.
double diameter(const PointCloud& cloud);

PointCloud translate(const PointCloud& cloud, const Point3& offset);
PointCloud scale(const PointCloud& cloud, double factor);

/// 64-bit FNV-1a over the raw coordinate bytes of every cloud, in order.
std::uint64_t fingerprint(const CloudSet& set);

}  // namespace pcev
