#pragma once

// Straight-line reference implementations. They share no code with the
// library beyond the point types, so agreement is meaningful.

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

#include "pcev/geometry.hpp"

namespace pcev::oracle {

using Cloud = std::vector<Point3>;
using Distance = std::function<double(const Cloud&, const Cloud&)>;

Cloud points(const PointCloud& c);
Cloud centered(const Cloud& c);

/// Index of the closest point, ties to the lower index.
std::size_t nearest(const Point3& q, const Cloud& c);

double chamfer(const Cloud& x, const Cloud& y);
double dcd(const Cloud& x, const Cloud& y, double alpha);
/// Minimum over all n! bijections; n <= 9.
double emd_by_permutation(const Cloud& x, const Cloud& y);

/// Eigenvalues ascending by the closed-form trigonometric cubic solution.
std::array<double, 3> cubic_eigenvalues(const std::array<double, 9>& m);
/// Unit eigenvector of the smallest eigenvalue via row cross products.
Point3 smallest_eigenvector(const std::array<double, 9>& m);
/// k nearest (self included) by full sort, covariance, cubic eigen oracle.
std::vector<Point3> knn_normals(const Cloud& c, std::size_t k);

// Set metrics over generated g and reference r under distance d.
double mmd(const std::vector<Cloud>& g, const std::vector<Cloud>& r, const Distance& d);
double cov(const std::vector<Cloud>& g, const std::vector<Cloud>& r, const Distance& d);
double one_nna(const std::vector<Cloud>& g, const std::vector<Cloud>& r, const Distance& d);
double snc(const std::vector<Cloud>& g, const std::vector<Cloud>& r, const Distance& d,
           std::size_t k);

}  // namespace pcev::oracle
