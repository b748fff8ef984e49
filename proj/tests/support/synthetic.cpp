#include "synthetic.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "pcev/random.hpp"
#include "pcev/sampling.hpp"

namespace pcev::testing {
namespace {

Point3 on_sphere(SplitMix64& rng) {
  for (;;) {
    const Point3 g{rng.gaussian(), rng.gaussian(), rng.gaussian()};
    const double len = norm(g);
    if (len > 1e-9) return (1.0 / len) * g;
  }
}

double range(SplitMix64& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

}  // namespace

PointCloud shape_cloud(Shape shape, std::size_t n, std::uint64_t seed, double jitter) {
  SplitMix64 rng(seed);
  const Point3 offset{range(rng, -0.2, 0.2), range(rng, -0.2, 0.2), range(rng, -0.2, 0.2)};
  std::vector<Point3> pts;
  pts.reserve(n);
  double scale = 1.0;

  switch (shape) {
    case Shape::Sphere: {
      const double r = range(rng, 0.6, 1.0);
      scale = r;
      for (std::size_t i = 0; i < n; ++i) pts.push_back(r * on_sphere(rng));
      break;
    }
    case Shape::Box: {
      const double h[3] = {range(rng, 0.3, 1.0), range(rng, 0.3, 1.0), range(rng, 0.3, 1.0)};
      scale = std::max({h[0], h[1], h[2]});
      const double area[3] = {h[1] * h[2], h[0] * h[2], h[0] * h[1]};
      const double total = area[0] + area[1] + area[2];
      for (std::size_t i = 0; i < n; ++i) {
        // Face pair chosen by area, then a uniform point on it.
        double u = rng.uniform() * total;
        int axis = 0;
        while (axis < 2 && u >= area[axis]) u -= area[axis++];
        double c[3];
        for (int d = 0; d < 3; ++d) c[d] = range(rng, -h[d], h[d]);
        c[axis] = rng.uniform() < 0.5 ? -h[axis] : h[axis];
        pts.push_back({c[0], c[1], c[2]});
      }
      break;
    }
    case Shape::Plane: {
      const double a = range(rng, 0.5, 1.0);
      const double b = range(rng, 0.5, 1.0);
      scale = std::max(a, b);
      const int axis = static_cast<int>(rng.below(3));
      for (std::size_t i = 0; i < n; ++i) {
        const double u = range(rng, -a, a);
        const double v = range(rng, -b, b);
        if (axis == 0) pts.push_back({0.0, u, v});
        if (axis == 1) pts.push_back({u, 0.0, v});
        if (axis == 2) pts.push_back({u, v, 0.0});
      }
      break;
    }
  }
  const double sigma = jitter * scale;
  for (auto& p : pts) {
    const double dx = rng.gaussian();
    const double dy = rng.gaussian();
    const double dz = rng.gaussian();
    p = p + offset + Point3{sigma * dx, sigma * dy, sigma * dz};
  }
  return PointCloud(std::move(pts));
}

PointCloud mixed_cloud(std::size_t n, std::uint64_t seed, double jitter) {
  SplitMix64 rng(seed);
  const auto shape = static_cast<Shape>(rng.below(3));
  return shape_cloud(shape, n, rng(), jitter);
}

CloudSet synthetic_set(std::size_t count, std::size_t n, std::uint64_t seed, SetRole role,
                       double jitter) {
  CloudSet set{{}, role};
  set.clouds.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    set.clouds.push_back(mixed_cloud(n, derive_seed(seed, {i}), jitter));
  }
  return set;
}

PointCloud uniform_cube(std::size_t n, std::uint64_t seed, double scale) {
  SplitMix64 rng(seed);
  std::vector<Point3> pts(n);
  for (auto& p : pts) {
    const double x = range(rng, -scale, scale);
    const double y = range(rng, -scale, scale);
    const double z = range(rng, -scale, scale);
    p = {x, y, z};
  }
  return PointCloud(std::move(pts));
}

PointCloud unit_sphere_fps(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<Point3> dense(8 * n);
  for (auto& p : dense) p = on_sphere(rng);
  return fps_sample(PointCloud(std::move(dense)), n);
}

PointCloud plane_patch(std::size_t side, std::uint64_t seed, double jitter) {
  SplitMix64 rng(seed);
  const double step = 2.0 / static_cast<double>(side - 1);
  std::vector<Point3> pts;
  pts.reserve(side * side);
  for (std::size_t i = 0; i < side; ++i) {
    for (std::size_t j = 0; j < side; ++j) {
      const double u = -1.0 + step * (static_cast<double>(i) + jitter * rng.gaussian());
      const double v = -1.0 + step * (static_cast<double>(j) + jitter * rng.gaussian());
      pts.push_back({u, v, 0.0});
    }
  }
  return PointCloud(std::move(pts));
}

}  // namespace pcev::testing
