#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "pcev/geometry.hpp"

namespace pcev {

/// Greedy furthest point sampling. The first pick is `start`; every later pick
/// maximizes the distance to the already selected set, lowest index on ties.
/// The result is in selection order.
PointCloud fps_sample(const PointCloud& cloud, std::size_t m, std::size_t start = 0);
std::vector<std::size_t> fps_indices(const PointCloud& cloud, std::size_t m, std::size_t start = 0);

/// `m` distinct indices drawn uniformly without replacement (partial
/// Fisher-Yates over a SplitMix64 stream).
PointCloud random_sample(const PointCloud& cloud, std::size_t m, std::uint64_t seed);
std::vector<std::size_t> random_indices(std::size_t n, std::size_t m, std::uint64_t seed);

enum class SamplingMode { Uniform, Random };

const char* to_string(SamplingMode mode) noexcept;
SamplingMode parse_sampling_mode(const std::string& text);

/// Uniform maps to FPS from index 0, Random to random_sample with `seed`.
PointCloud subsample(const PointCloud& cloud, std::size_t m, SamplingMode mode,
                     std::uint64_t seed);

}  // namespace pcev
