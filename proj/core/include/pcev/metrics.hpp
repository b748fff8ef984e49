#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pcev/distances.hpp"
#include "pcev/geometry.hpp"
#include "pcev/neighbors.hpp"
#include "pcev/normals.hpp"

namespace pcev {

/// D(row cloud, column cloud) for every pair, row-major.
struct PairwiseDistanceTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  DistanceSpec spec;

  double operator()(std::size_t r, std::size_t c) const noexcept { return values[r * cols + c]; }
};

/// Cubic voxel grid for the point-marginal JSD. Points outside the cube are
/// clamped into the boundary voxels.
struct VoxelGridSpec {
  std::size_t resolution = 28;
  Point3 origin;      // minimum corner
  double side = 1.0;  // cube edge length

  void validate() const;
  std::size_t voxel_of(const Point3& p) const noexcept;

  friend bool operator==(const VoxelGridSpec&, const VoxelGridSpec&) = default;
};

/// Tight bounding cube of every point in both sets, grown by 1e-6 of its edge.
/// When `centered`, clouds are translated to their barycenters first.
VoxelGridSpec tight_grid(const CloudSet& generated, const CloudSet& reference,
                         std::size_t resolution = 28, bool centered = false);

enum class MetricKind { Mmd, Cov, OneNna, Jsd, Snc };

const char* to_string(MetricKind kind) noexcept;
MetricKind parse_metric(const std::string& text);

/// Presentation multiplier: MMD-DCD x10, MMD-EMD x10^3, COV / 1-NNA / SNC as
/// percentages, everything else x1.
double table_scaling(MetricKind kind, Measure measure) noexcept;

struct MetricReport {
  MetricKind metric = MetricKind::Mmd;
  double value = 0.0;  // raw, unscaled
  std::optional<DistanceSpec> distance;
  std::optional<NeighborhoodSpec> neighborhood;
  std::optional<VoxelGridSpec> grid;
  bool jsd_centered = false;
  std::size_t generated_size = 0;
  std::size_t reference_size = 0;
  double scaling = 1.0;
  std::size_t normal_fallbacks = 0;
  std::size_t unreliable_normals = 0;

  /// "MMD-DCD", "SNC-EMD", "JSD", ...
  std::string name() const;
  double scaled_value() const noexcept { return value * scaling; }
};

/// One side of an evaluation: the clouds plus lazily built per-cloud state
/// (centered copies with k-d trees, normal fields). Shared between evaluators
/// so a sweep can reuse the reference side across cells.
class SetCache {
 public:
  explicit SetCache(CloudSet set);

  const CloudSet& set() const noexcept { return set_; }
  std::size_t size() const noexcept { return set_.size(); }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

  const std::vector<PreparedCloud>& prepared(bool centered, unsigned threads);
  /// Throws InvalidArgument unless ensure_normals() covered `index`.
  const NormalField& normals(std::size_t index, const NeighborhoodSpec& spec) const;
  /// Computes the normal fields of `indices` (in parallel) if missing.
  void ensure_normals(const std::vector<std::size_t>& indices, const NeighborhoodSpec& spec,
                      unsigned threads);

 private:
  CloudSet set_;
  std::uint64_t fingerprint_;
  std::optional<std::vector<PreparedCloud>> prepared_[2];
  std::map<std::string, std::vector<std::optional<NormalField>>> normals_;
};

/// Set-level metrics over a generated and a reference set. Pairwise distance
/// tables are computed once per DistanceSpec and shared by every metric;
/// pair evaluation runs on `threads` workers while every reduction walks the
/// finished table in a fixed order, so values never depend on the thread count.
class Evaluator {
 public:
  Evaluator(CloudSet generated, CloudSet reference, unsigned threads = 1);
  Evaluator(std::shared_ptr<SetCache> generated, std::shared_ptr<SetCache> reference,
            unsigned threads = 1);

  const CloudSet& generated() const noexcept { return gen_->set(); }
  const CloudSet& reference() const noexcept { return ref_->set(); }

  /// rows = generated index, cols = reference index.
  const PairwiseDistanceTable& cross_table(const DistanceSpec& spec);
  /// Square table over generated followed by reference clouds.
  const PairwiseDistanceTable& union_table(const DistanceSpec& spec);

  /// Mean over references of the distance to the closest generated cloud.
  double mmd(const DistanceSpec& spec);
  /// Fraction of references that are the best match of some generated cloud.
  double cov(const DistanceSpec& spec);
  /// Leave-one-out 1-NN accuracy over the union. Needs |Sg| == |Sr| >= 2.
  double one_nna(const DistanceSpec& spec);
  /// For every generated cloud, the reference index minimizing D (lowest on ties).
  std::vector<std::size_t> best_matches(const DistanceSpec& spec);
  /// Surface normal concordance. Best matches follow `spec`; the point
  /// lookup inside each matched pair runs on centered clouds.
  double snc(const DistanceSpec& spec, const NeighborhoodSpec& neighborhood);
  double jsd(const VoxelGridSpec& grid, bool centered = false);

  MetricReport report(MetricKind kind, const DistanceSpec& spec,
                      const NeighborhoodSpec& neighborhood = NeighborhoodSpec::knn(20),
                      std::size_t jsd_resolution = 28);

 private:
  std::shared_ptr<SetCache> gen_;
  std::shared_ptr<SetCache> ref_;
  unsigned threads_;
  std::map<std::string, PairwiseDistanceTable> cross_;
  std::map<std::string, PairwiseDistanceTable> union_;
  std::size_t last_fallbacks_ = 0;
  std::size_t last_unreliable_ = 0;
};

// Free-function forms; each builds a throwaway Evaluator. All take the
// generated set first.
double mmd(const CloudSet& generated, const CloudSet& reference, const DistanceSpec& spec);
double cov(const CloudSet& generated, const CloudSet& reference, const DistanceSpec& spec);
double one_nna(const CloudSet& generated, const CloudSet& reference, const DistanceSpec& spec);
double jsd(const CloudSet& generated, const CloudSet& reference, const VoxelGridSpec& grid,
           bool centered = false);
std::size_t best_match(const PointCloud& cloud, const CloudSet& reference, const DistanceSpec& spec);
double snc(const CloudSet& generated, const CloudSet& reference, const DistanceSpec& spec,
           const NeighborhoodSpec& neighborhood);

/// JSD of two occupancy histograms (natural log); empty bins contribute 0.
double jensen_shannon(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace pcev
