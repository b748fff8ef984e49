#include "pcev/normals.hpp"

#include <cmath>

#include <fmt/format.h>

#include "pcev/error.hpp"

namespace pcev {
namespace {

constexpr int kMaxSweeps = 64;

double off_diagonal_squared(const Matrix3& m) noexcept {
  return 2.0 * (m(0, 1) * m(0, 1) + m(0, 2) * m(0, 2) + m(1, 2) * m(1, 2));
}

Point3 column(const Matrix3& v, int c) noexcept { return {v(0, c), v(1, c), v(2, c)}; }

UnitNormal oriented(Point3 v) noexcept {
  const double first = std::abs(v.x) > 1e-12 ? v.x : (std::abs(v.y) > 1e-12 ? v.y : v.z);
  if (first < 0.0) v = -1.0 * v;
  return {v.x, v.y, v.z};
}

}  // namespace

double Matrix3::frobenius() const noexcept {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

Point3 Matrix3::operator*(const Point3& v) const noexcept {
  const Matrix3& m = *this;
  return {m(0, 0) * v.x + m(0, 1) * v.y + m(0, 2) * v.z,
          m(1, 0) * v.x + m(1, 1) * v.y + m(1, 2) * v.z,
          m(2, 0) * v.x + m(2, 1) * v.y + m(2, 2) * v.z};
}

SymmetricEigen eigen_symmetric(const Matrix3& input) {
  Matrix3 a = input;
  Matrix3 v = Matrix3::diagonal(1.0, 1.0, 1.0);
  const double scale2 = input.frobenius() * input.frobenius();

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    const double off = off_diagonal_squared(a);
    if (off == 0.0 || off <= 1e-32 * scale2) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that annihilates a(p, q) (Golub & Van Loan 8.4).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (int k = 0; k < 3; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::array<int, 3> order{0, 1, 2};
  // Stable insertion sort: equal eigenvalues keep diagonal order.
  for (int i = 1; i < 3; ++i) {
    for (int j = i; j > 0 && a(order[j], order[j]) < a(order[j - 1], order[j - 1]); --j) {
      std::swap(order[j], order[j - 1]);
    }
  }
  SymmetricEigen out;
  for (int i = 0; i < 3; ++i) {
    out.values[static_cast<std::size_t>(i)] = a(order[i], order[i]);
    Point3 vec = column(v, order[i]);
    const double len = norm(vec);
    out.vectors[static_cast<std::size_t>(i)] = (1.0 / len) * vec;
  }
  return out;
}

Matrix3 neighborhood_covariance(std::span<const Point3> points) {
  if (points.size() < 3) {
    throw DegenerateNeighborhood(
        fmt::format("plane fitting needs at least 3 points, got {}", points.size()));
  }
  Point3 mean;
  for (const auto& p : points) mean += p;
  const double inv = 1.0 / static_cast<double>(points.size());
  mean = inv * mean;

  double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;
  for (const auto& p : points) {
    const Point3 d = p - mean;
    xx += d.x * d.x;
    xy += d.x * d.y;
    xz += d.x * d.z;
    yy += d.y * d.y;
    yz += d.y * d.z;
    zz += d.z * d.z;
  }
  Matrix3 c;
  c(0, 0) = xx * inv;
  c(1, 1) = yy * inv;
  c(2, 2) = zz * inv;
  c(0, 1) = c(1, 0) = xy * inv;
  c(0, 2) = c(2, 0) = xz * inv;
  c(1, 2) = c(2, 1) = yz * inv;
  return c;
}

UnitNormal smallest_eigenvector(const Matrix3& c) {
  return oriented(eigen_symmetric(c).vectors[0]);
}

NormalField estimate_normals(const PointCloud& cloud, const NeighborhoodSpec& spec) {
  spec.validate();
  const std::size_t n = cloud.size();
  if (spec.kind == NeighborhoodSpec::Kind::Knn && spec.k > n) {
    throw InvalidArgument(
        fmt::format("KNN normals need k <= cloud size, got k={} for {} points", spec.k, n));
  }
  const KdTree tree(cloud);

  NormalField field;
  field.spec = spec;
  field.normals.reserve(n);
  field.unreliable.assign(n, 0);

  std::vector<Point3> hood;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> idx;
    if (spec.kind == NeighborhoodSpec::Kind::Knn) {
      idx = tree.knn(cloud[i], spec.k, i);
    } else {
      idx = tree.ball(cloud[i], spec.radius);
      if (idx.size() < 3) {
        if (n < 3) {
          throw DegenerateNeighborhood(
              fmt::format("cloud of {} points cannot support plane fitting", n));
        }
        idx = tree.knn(cloud[i], 3, i);
        ++field.fallback_count;
      }
    }
    hood.clear();
    for (auto j : idx) hood.push_back(cloud[j]);

    const Matrix3 cov = neighborhood_covariance(hood);
    const SymmetricEigen eig = eigen_symmetric(cov);
    if (eig.values[1] - eig.values[0] <= 1e-10 * cov.frobenius()) {
      field.unreliable[i] = 1;
      ++field.unreliable_count;
    }
    field.normals.push_back(oriented(eig.vectors[0]));
  }
  return field;
}

}  // namespace pcev
