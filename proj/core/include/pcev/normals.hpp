#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pcev/geometry.hpp"
#include "pcev/neighbors.hpp"

namespace pcev {

/// Symmetric 3x3 matrix, row-major.
struct Matrix3 {
  std::array<double, 9> a{};

  double operator()(int r, int c) const noexcept { return a[static_cast<std::size_t>(3 * r + c)]; }
  double& operator()(int r, int c) noexcept { return a[static_cast<std::size_t>(3 * r + c)]; }

  static Matrix3 diagonal(double d0, double d1, double d2) {
    Matrix3 m;
    m(0, 0) = d0;
    m(1, 1) = d1;
    m(2, 2) = d2;
    return m;
  }
  double frobenius() const noexcept;
  Point3 operator*(const Point3& v) const noexcept;
};

/// A direction with unit Euclidean norm.
struct UnitNormal {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;

  Point3 vec() const noexcept { return {x, y, z}; }
};

/// Eigen-decomposition of a symmetric 3x3 matrix, eigenvalues ascending.
struct SymmetricEigen {
  std::array<double, 3> values{};
  std::array<Point3, 3> vectors{};  // unit, vectors[i] pairs with values[i]
};

/// Cyclic Jacobi rotations until the off-diagonal mass is negligible relative
/// to the matrix norm. Deterministic; equal eigenvalues keep their original
/// diagonal order.
SymmetricEigen eigen_symmetric(const Matrix3& m);

/// (1/|N|) sum (p - mean)(p - mean)^T. Throws DegenerateNeighborhood for fewer
/// than three points.
Matrix3 neighborhood_covariance(std::span<const Point3> points);

/// Unit eigenvector of the smallest eigenvalue, oriented so that its first
/// component with magnitude above 1e-12 is positive.
UnitNormal smallest_eigenvector(const Matrix3& c);

struct NormalField {
  std::vector<UnitNormal> normals;  // parallel to the cloud's points
  NeighborhoodSpec spec;
  /// 1 where the two smallest eigenvalues are within 1e-10 * |C| (the normal
  /// direction is then arbitrary within a plane).
  std::vector<std::uint8_t> unreliable;
  std::size_t unreliable_count = 0;
  /// Ball neighborhoods that held fewer than 3 points and were replaced by
  /// the 3 nearest points.
  std::size_t fallback_count = 0;

  std::size_t size() const noexcept { return normals.size(); }
};

/// PCA plane-fit normal per point. Every neighborhood contains the query
/// point itself.
NormalField estimate_normals(const PointCloud& cloud, const NeighborhoodSpec& spec);

}  // namespace pcev
