#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pcev/distances.hpp"
#include "pcev/geometry.hpp"
#include "pcev/metrics.hpp"
#include "pcev/neighbors.hpp"
#include "pcev/sampling.hpp"

namespace pcev {

struct PerturbDiagnostics {
  /// Set when noise was requested on a cloud of zero diameter (sigma = 0).
  bool zero_diameter = false;
};

/// Adds independent N(0, sigma^2) noise to every coordinate, with
/// sigma = noise_frac * diameter. noise_frac == 0 returns the input unchanged.
PointCloud add_noise(const PointCloud& cloud, double noise_frac, std::uint64_t seed,
                     PerturbDiagnostics* diagnostics = nullptr);
/// Same, with the diameter supplied by the caller.
PointCloud add_noise(const PointCloud& cloud, double noise_frac, std::uint64_t seed,
                     double diameter, PerturbDiagnostics* diagnostics = nullptr);

/// Rigidly translates the cloud by shift_frac * diameter along a direction
/// drawn uniformly on the unit sphere.
PointCloud shift(const PointCloud& cloud, double shift_frac, std::uint64_t seed);
PointCloud shift(const PointCloud& cloud, double shift_frac, std::uint64_t seed, double diameter);

/// Uniformly distributed unit vector (normalized Gaussian triple).
Point3 random_direction(std::uint64_t seed);

/// One metric column of a sweep.
struct MetricRequest {
  MetricKind metric = MetricKind::Mmd;
  DistanceSpec distance;
  NeighborhoodSpec neighborhood = NeighborhoodSpec::knn(20);
  std::size_t jsd_resolution = 28;

  /// Unique column name, e.g. "MMD-DCD/aligned" or "JSD/raw".
  std::string column() const;
};

struct SweepConfig {
  std::vector<double> noise_grid{0.0};  // fractions of each cloud's diameter
  std::vector<double> shift_grid{0.0};
  std::vector<MetricRequest> metrics;
  std::size_t seeds_per_level = 1;
  std::uint64_t seed = 0;
  /// When non-zero, both sets are first subsampled to this many points.
  std::size_t sample_points = 0;
  SamplingMode sampling = SamplingMode::Uniform;
  unsigned threads = 1;

  /// Grids non-empty, ascending, finite and >= 0; at least one metric.
  void validate() const;
};

struct SweepRow {
  double noise_frac = 0.0;
  double shift_frac = 0.0;
  std::size_t seed_index = 0;  // replicate number within the cell
  std::vector<double> values;  // one per column
};

struct SweepTable {
  std::vector<std::string> columns;
  std::vector<SweepRow> rows;     // ordered by (noise, shift, seed)
  std::vector<SweepRow> summary;  // per (noise, shift): mean over seeds; seed_index = seed count
};

/// Seed of cloud `cloud` in cell (noise, shift, replicate); `stream` separates
/// the noise draw (0) from the shift draw (1).
std::uint64_t cell_seed(std::uint64_t base, std::size_t noise_index, std::size_t shift_index,
                        std::size_t replicate, std::size_t cloud, std::size_t stream);

/// Perturbs copies of `generated` over the noise x shift x replicate grid and
/// evaluates every requested metric against the untouched `reference` set.
/// A failing metric aborts the sweep with the cell named in the message.
SweepTable run_sweep(const CloudSet& generated, const CloudSet& reference,
                     const SweepConfig& config);

}  // namespace pcev
