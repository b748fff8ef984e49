#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pcev/error.hpp"
#include "pcev/geometry.hpp"
#include "pcev/random.hpp"
#include "pcev/sampling.hpp"
#include "synthetic.hpp"

using namespace pcev;

namespace {

PointCloud cloud(std::initializer_list<Point3> pts) { return PointCloud(std::vector<Point3>(pts)); }

double brute_diameter(const PointCloud& c) {
  double best = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) best = std::max(best, distance(c[i], c[j]));
  }
  return best;
}

// Random proper rotation from a normalized random quaternion.
std::array<double, 9> random_rotation(std::uint64_t seed) {
  SplitMix64 rng(seed);
  double q[4];
  double n = 0.0;
  for (double& v : q) {
    v = rng.gaussian();
    n += v * v;
  }
  n = std::sqrt(n);
  for (double& v : q) v /= n;
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

PointCloud rigid(const PointCloud& c, const std::array<double, 9>& r, const Point3& t) {
  std::vector<Point3> out;
  for (const auto& p : c) {
    out.push_back(Point3{r[0] * p.x + r[1] * p.y + r[2] * p.z, r[3] * p.x + r[4] * p.y + r[5] * p.z,
                         r[6] * p.x + r[7] * p.y + r[8] * p.z} +
                  t);
  }
  return PointCloud(std::move(out));
}

}  // namespace

TEST_CASE("point cloud rejects empty and non-finite input") {
  CHECK_THROWS_AS(PointCloud(std::vector<Point3>{}), InvalidArgument);
  CHECK_THROWS_AS(cloud({{0, 0, 0}, {std::nan(""), 0, 0}}), InvalidArgument);
  CHECK_THROWS_AS(cloud({{std::numeric_limits<double>::infinity(), 0, 0}}), InvalidArgument);
  const auto c = cloud({{3, 2, 1}, {1, 2, 3}});
  CHECK(c.size() == 2);
  CHECK(c[0] == Point3{3, 2, 1});
  CHECK(c[1] == Point3{1, 2, 3});
}

TEST_CASE("empty cloud set is rejected where a set is required") {
  CHECK_THROWS_AS(require_non_empty(CloudSet{}, "generated"), InvalidArgument);
}

TEST_CASE("barycenter") {
  CHECK(barycenter(cloud({{0, 0, 0}})) == Point3{0, 0, 0});
  CHECK(barycenter(cloud({{1, 0, 0}, {-1, 0, 0}})) == Point3{0, 0, 0});
  const Point3 b = barycenter(cloud({{0, 0, 0}, {1, 2, 3}, {2, 4, 6}}));
  CHECK(b.x == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(b.y == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(b.z == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("center") {
  CHECK(center(cloud({{1, 1, 1}}))[0] == Point3{0, 0, 0});
  const auto c = center(cloud({{2, 0, 0}, {4, 0, 0}}));
  CHECK(c[0] == Point3{-1, 0, 0});
  CHECK(c[1] == Point3{1, 0, 0});

  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto x = translate(testing::mixed_cloud(200, s), {10.0 * s, -3.0, 7.5});
    const auto cx = center(x);
    const double tol = 1e-12 * diameter(x);
    const Point3 b = barycenter(cx);
    CHECK(std::abs(b.x) <= tol);
    CHECK(std::abs(b.y) <= tol);
    CHECK(std::abs(b.z) <= tol);
    const auto ccx = center(cx);
    for (std::size_t i = 0; i < cx.size(); ++i) {
      CHECK(std::abs(ccx[i].x - cx[i].x) <= 1e-12);
      CHECK(std::abs(ccx[i].y - cx[i].y) <= 1e-12);
      CHECK(std::abs(ccx[i].z - cx[i].z) <= 1e-12);
    }
  }
}

TEST_CASE("diameter") {
  CHECK(diameter(cloud({{0, 0, 0}})) == 0.0);
  CHECK(diameter(cloud({{0, 0, 0}, {3, 4, 0}})) == 5.0);
  CHECK(diameter(cloud({{0, 0, 0}, {1, 0, 0}, {0, 2, 0}})) == doctest::Approx(std::sqrt(5.0)));

  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto x = testing::mixed_cloud(150, s);
    const double d = diameter(x);
    CHECK(d == brute_diameter(x));
    const auto moved = rigid(x, random_rotation(s), {s * 1.0, -2.0, 0.5});
    CHECK(diameter(moved) == doctest::Approx(d).epsilon(1e-9));
  }
}

TEST_CASE("fingerprint follows coordinates and order") {
  const auto a = cloud({{0, 0, 0}, {1, 0, 0}});
  const auto b = cloud({{1, 0, 0}, {0, 0, 0}});
  CHECK(fingerprint(CloudSet{{a}}) == fingerprint(CloudSet{{a}}));
  CHECK(fingerprint(CloudSet{{a}}) != fingerprint(CloudSet{{b}}));
  CHECK(fingerprint(CloudSet{{a, b}}) != fingerprint(CloudSet{{b, a}}));
}

TEST_CASE("splitmix64 reference outputs") {
  // First outputs for seed 1234567, as published with the algorithm.
  SplitMix64 rng(1234567);
  CHECK(rng() == 6457827717110365317ULL);
  CHECK(rng() == 3203168211198807973ULL);
  CHECK(rng() == 9817491932198370423ULL);
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
}

TEST_CASE("gaussian draws have unit variance") {
  SplitMix64 rng(99);
  const int n = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = rng.gaussian();
    s += g;
    s2 += g * g;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(s2 / n - 1.0) < 0.01);
}

TEST_CASE("fps follows the greedy rule") {
  const auto line = cloud({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}});
  const auto two = fps_sample(line, 2, 0);
  CHECK(two[0] == Point3{0, 0, 0});
  CHECK(two[1] == Point3{3, 0, 0});
  CHECK(fps_sample(line, 1, 2)[0] == Point3{2, 0, 0});
  CHECK_THROWS_AS(fps_sample(line, 0), InvalidArgument);
  CHECK_THROWS_AS(fps_sample(line, 5), InvalidArgument);
  CHECK_THROWS_AS(fps_sample(line, 2, 4), InvalidArgument);

  // Square corners: after corner 0 the opposite corner wins, then the lower
  // of the two remaining equidistant corners.
  const auto square = cloud({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}});
  CHECK(fps_indices(square, 4, 0) == std::vector<std::size_t>{0, 3, 1, 2});

  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto x = testing::uniform_cube(60, s);
    const std::size_t start = s % 60;
    const auto idx = fps_indices(x, 60, start);
    // Straight transliteration of the greedy rule.
    std::vector<std::size_t> expect{start};
    std::vector<bool> used(60, false);
    used[start] = true;
    while (expect.size() < 60) {
      std::size_t best = 60;
      double best_d = -1.0;
      for (std::size_t i = 0; i < 60; ++i) {
        if (used[i]) continue;
        double m = std::numeric_limits<double>::infinity();
        for (auto j : expect) m = std::min(m, squared_distance(x[i], x[j]));
        if (m > best_d) {
          best_d = m;
          best = i;
        }
      }
      used[best] = true;
      expect.push_back(best);
    }
    CHECK(idx == expect);
    CHECK(diameter(fps_sample(x, 10, start)) <= diameter(x));
  }
}

TEST_CASE("random sampling") {
  const auto x = testing::uniform_cube(40, 5);
  const auto idx = random_indices(40, 40, 17);
  CHECK(std::set<std::size_t>(idx.begin(), idx.end()).size() == 40);
  CHECK(random_indices(40, 12, 17) == random_indices(40, 12, 17));
  CHECK(random_sample(x, 12, 3) == random_sample(x, 12, 3));
  CHECK_THROWS_AS(random_sample(x, 41, 3), InvalidArgument);
  CHECK_THROWS_AS(random_sample(x, 0, 3), InvalidArgument);

  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto r = random_indices(50, 20, s);
    CHECK(std::set<std::size_t>(r.begin(), r.end()).size() == 20);
    CHECK(*std::max_element(r.begin(), r.end()) < 50);
  }

  // Binomial bound: each of 4 indices within 4 sigma of 1/4 over 10k draws.
  std::array<int, 4> freq{};
  for (std::uint64_t s = 0; s < 10000; ++s) ++freq[random_indices(4, 1, s)[0]];
  const double sigma = std::sqrt(10000 * 0.25 * 0.75);
  for (int f : freq) CHECK(std::abs(f - 2500.0) <= 4.0 * sigma);
}

TEST_CASE("sampling mode names") {
  CHECK(parse_sampling_mode("uniform") == SamplingMode::Uniform);
  CHECK(parse_sampling_mode("fps") == SamplingMode::Uniform);
  CHECK(parse_sampling_mode("random") == SamplingMode::Random);
  CHECK_THROWS_AS(parse_sampling_mode("grid"), InvalidArgument);
  const auto x = testing::uniform_cube(30, 1);
  CHECK(subsample(x, 10, SamplingMode::Uniform, 0) == fps_sample(x, 10));
  CHECK(subsample(x, 10, SamplingMode::Random, 4) == random_sample(x, 10, 4));
}
