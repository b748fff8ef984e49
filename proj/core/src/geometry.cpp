#include "pcev/geometry.hpp"

#include <bit>
#include <cstdint>

#include <fmt/format.h>

#include "pcev/error.hpp"

namespace pcev {

PointCloud::PointCloud(std::vector<Point3> points, std::string id)
    : points_(std::move(points)), id_(std::move(id)) {
  if (points_.empty()) {
    throw InvalidArgument("point cloud must contain at least one point");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!points_[i].finite()) {
      throw InvalidArgument(fmt::format("point {} has a non-finite coordinate", i));
    }
  }
}

const char* to_string(SetRole role) noexcept {
  return role == SetRole::Generated ? "generated" : "reference";
}

void require_non_empty(const CloudSet& set, const char* what) {
  if (set.clouds.empty()) {
    throw InvalidArgument(fmt::format("{} set must contain at least one cloud", what));
  }
}

Point3 barycenter(const PointCloud& cloud) {
  Point3 sum;
  for (const auto& p : cloud) sum += p;
  const double inv = 1.0 / static_cast<double>(cloud.size());
  return inv * sum;
}

PointCloud center(const PointCloud& cloud) {
  const Point3 b = barycenter(cloud);
  std::vector<Point3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.push_back(p - b);
  return PointCloud(std::move(out), cloud.id());
}

double diameter(const PointCloud& cloud) {
  const auto pts = cloud.points();
  double best = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      const double d = squared_distance(pts[i], pts[j]);
      if (d > best) best = d;
    }
  }
  return std::sqrt(best);
}

PointCloud translate(const PointCloud& cloud, const Point3& offset) {
  std::vector<Point3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.push_back(p + offset);
  return PointCloud(std::move(out), cloud.id());
}

PointCloud scale(const PointCloud& cloud, double factor) {
  std::vector<Point3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.push_back(factor * p);
  return PointCloud(std::move(out), cloud.id());
}

std::uint64_t fingerprint(const CloudSet& set) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(set.clouds.size());
  for (const auto& c : set.clouds) {
    mix(c.size());
    for (const auto& p : c) {
      mix(std::bit_cast<std::uint64_t>(p.x));
      mix(std::bit_cast<std::uint64_t>(p.y));
      mix(std::bit_cast<std::uint64_t>(p.z));
    }
  }
  return h;
}

}  // namespace pcev
