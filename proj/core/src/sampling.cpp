#include "pcev/sampling.hpp"

#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "pcev/error.hpp"
#include "pcev/random.hpp"

namespace pcev {
namespace {

void check_count(std::size_t n, std::size_t m) {
  if (m < 1 || m > n) {
    throw InvalidArgument(fmt::format("sample size {} out of range [1, {}]", m, n));
  }
}

PointCloud gather(const PointCloud& cloud, const std::vector<std::size_t>& idx) {
  std::vector<Point3> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(cloud[i]);
  return PointCloud(std::move(out), cloud.id());
}

}  // namespace

std::vector<std::size_t> fps_indices(const PointCloud& cloud, std::size_t m, std::size_t start) {
  const std::size_t n = cloud.size();
  check_count(n, m);
  if (start >= n) {
    throw InvalidArgument(fmt::format("FPS start index {} out of range for {} points", start, n));
  }
  std::vector<std::size_t> picked;
  picked.reserve(m);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::size_t current = start;
  for (std::size_t step = 0; step < m; ++step) {
    picked.push_back(current);
    min_d2[current] = -1.0;
    const Point3 c = cloud[current];
    std::size_t next = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (min_d2[i] < 0.0) continue;
      const double d = squared_distance(cloud[i], c);
      if (d < min_d2[i]) min_d2[i] = d;
      if (min_d2[i] > best) {
        best = min_d2[i];
        next = i;
      }
    }
    current = next;
  }
  return picked;
}

PointCloud fps_sample(const PointCloud& cloud, std::size_t m, std::size_t start) {
  return gather(cloud, fps_indices(cloud, m, start));
}

std::vector<std::size_t> random_indices(std::size_t n, std::size_t m, std::uint64_t seed) {
  check_count(n, m);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < m; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(m);
  return idx;
}

PointCloud random_sample(const PointCloud& cloud, std::size_t m, std::uint64_t seed) {
  return gather(cloud, random_indices(cloud.size(), m, seed));
}

const char* to_string(SamplingMode mode) noexcept {
  return mode == SamplingMode::Uniform ? "uniform" : "random";
}

SamplingMode parse_sampling_mode(const std::string& text) {
  if (text == "uniform" || text == "fps") return SamplingMode::Uniform;
  if (text == "random") return SamplingMode::Random;
  throw InvalidArgument(fmt::format("unknown sampling mode '{}'", text));
}

PointCloud subsample(const PointCloud& cloud, std::size_t m, SamplingMode mode,
                     std::uint64_t seed) {
  return mode == SamplingMode::Uniform ? fps_sample(cloud, m, 0)
                                       : random_sample(cloud, m, seed);
}

}  // namespace pcev
