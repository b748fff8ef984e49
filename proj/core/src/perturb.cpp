#include "pcev/perturb.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>

#include <fmt/format.h>

#include "pcev/error.hpp"
#include "pcev/parallel.hpp"
#include "pcev/random.hpp"

namespace pcev {
namespace {

void check_fraction(double f, const char* what) {
  if (!(f >= 0.0) || !std::isfinite(f)) {
    throw InvalidArgument(fmt::format("{} must be finite and >= 0, got {}", what, f));
  }
}

void check_grid(const std::vector<double>& grid, const char* what) {
  if (grid.empty()) throw InvalidArgument(fmt::format("{} grid is empty", what));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    check_fraction(grid[i], what);
    if (i > 0 && grid[i] < grid[i - 1]) {
      throw InvalidArgument(fmt::format("{} grid is not sorted ascending", what));
    }
  }
}

CloudSet subsample_set(const CloudSet& set, const SweepConfig& config, std::size_t role) {
  if (config.sample_points == 0) return set;
  CloudSet out{{}, set.role};
  out.clouds.reserve(set.size());
  for (std::size_t i = 0; i < set.size(); ++i) {
    out.clouds.push_back(subsample(set[i], config.sample_points, config.sampling,
                                   derive_seed(config.seed, {role, i, 0x5a3b1e})));
  }
  return out;
}

}  // namespace

PointCloud add_noise(const PointCloud& cloud, double noise_frac, std::uint64_t seed,
                     PerturbDiagnostics* diagnostics) {
  check_fraction(noise_frac, "noise fraction");
  if (noise_frac == 0.0) return cloud;
  return add_noise(cloud, noise_frac, seed, diameter(cloud), diagnostics);
}

PointCloud add_noise(const PointCloud& cloud, double noise_frac, std::uint64_t seed,
                     double diam, PerturbDiagnostics* diagnostics) {
  check_fraction(noise_frac, "noise fraction");
  if (noise_frac == 0.0) return cloud;
  if (diam == 0.0) {
    if (diagnostics) diagnostics->zero_diameter = true;
    return cloud;
  }
  const double sigma = noise_frac * diam;
  SplitMix64 rng(seed);
  std::vector<Point3> out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) {
    const double dx = rng.gaussian();
    const double dy = rng.gaussian();
    const double dz = rng.gaussian();
    out.push_back({p.x + sigma * dx, p.y + sigma * dy, p.z + sigma * dz});
  }
  return PointCloud(std::move(out), cloud.id());
}

Point3 random_direction(std::uint64_t seed) {
  SplitMix64 rng(seed);
  for (;;) {
    const double gx = rng.gaussian();
    const double gy = rng.gaussian();
    const double gz = rng.gaussian();
    const Point3 g{gx, gy, gz};
    const double len = norm(g);
    if (len > 1e-12) return (1.0 / len) * g;
  }
}

PointCloud shift(const PointCloud& cloud, double shift_frac, std::uint64_t seed) {
  check_fraction(shift_frac, "shift fraction");
  if (shift_frac == 0.0) return cloud;
  return shift(cloud, shift_frac, seed, diameter(cloud));
}

PointCloud shift(const PointCloud& cloud, double shift_frac, std::uint64_t seed, double diam) {
  check_fraction(shift_frac, "shift fraction");
  if (shift_frac == 0.0) return cloud;
  return translate(cloud, (shift_frac * diam) * random_direction(seed));
}

std::string MetricRequest::column() const {
  const char* align = distance.aligned ? "aligned" : "raw";
  if (metric == MetricKind::Jsd) return fmt::format("JSD/{}", align);
  return fmt::format("{}-{}/{}", to_string(metric), distance.measure_name(), align);
}

void SweepConfig::validate() const {
  check_grid(noise_grid, "noise");
  check_grid(shift_grid, "shift");
  if (metrics.empty()) throw InvalidArgument("sweep needs at least one metric");
  if (seeds_per_level == 0) throw InvalidArgument("sweep needs at least one seed per level");
  std::set<std::string> names;
  for (const auto& m : metrics) {
    m.distance.validate();
    if (m.metric == MetricKind::Snc) m.neighborhood.validate();
    if (!names.insert(m.column()).second) {
      throw InvalidArgument(fmt::format("duplicate sweep column '{}'", m.column()));
    }
  }
}

std::uint64_t cell_seed(std::uint64_t base, std::size_t noise_index, std::size_t shift_index,
                        std::size_t replicate, std::size_t cloud, std::size_t stream) {
  return derive_seed(base, {noise_index, shift_index, replicate, cloud, stream});
}

SweepTable run_sweep(const CloudSet& generated, const CloudSet& reference,
                     const SweepConfig& config) {
  config.validate();
  require_non_empty(generated, "generated");
  require_non_empty(reference, "reference");

  const CloudSet gen = subsample_set(generated, config, 0);
  auto ref_cache = std::make_shared<SetCache>(subsample_set(reference, config, 1));

  std::vector<double> diam(gen.size());
  parallel_for(gen.size(), config.threads, [&](std::size_t i) { diam[i] = diameter(gen[i]); });

  SweepTable table;
  for (const auto& m : config.metrics) table.columns.push_back(m.column());

  // Identical perturbed sets (e.g. every replicate at zero noise and shift)
  // are evaluated once.
  std::map<std::uint64_t, std::vector<double>> memo;

  for (std::size_t ni = 0; ni < config.noise_grid.size(); ++ni) {
    for (std::size_t si = 0; si < config.shift_grid.size(); ++si) {
      SweepRow mean{config.noise_grid[ni], config.shift_grid[si], config.seeds_per_level,
                    std::vector<double>(table.columns.size(), 0.0)};
      for (std::size_t rep = 0; rep < config.seeds_per_level; ++rep) {
        const double noise = config.noise_grid[ni];
        const double offset = config.shift_grid[si];
        std::vector<std::optional<PointCloud>> tmp(gen.size());
        parallel_for(gen.size(), config.threads, [&](std::size_t c) {
          PointCloud p = add_noise(gen[c], noise, cell_seed(config.seed, ni, si, rep, c, 0), diam[c]);
          tmp[c].emplace(shift(p, offset, cell_seed(config.seed, ni, si, rep, c, 1), diam[c]));
        });
        CloudSet perturbed{{}, gen.role};
        perturbed.clouds.reserve(gen.size());
        for (auto& t : tmp) perturbed.clouds.push_back(std::move(*t));

        SweepRow row{noise, offset, rep, {}};
        auto gen_cache = std::make_shared<SetCache>(std::move(perturbed));
        if (auto hit = memo.find(gen_cache->fingerprint()); hit != memo.end()) {
          row.values = hit->second;
        } else {
          Evaluator eval(gen_cache, ref_cache, config.threads);
          for (const auto& m : config.metrics) {
            try {
              row.values.push_back(
                  eval.report(m.metric, m.distance, m.neighborhood, m.jsd_resolution).value);
            } catch (const Error& e) {
              const std::string what =
                  fmt::format("sweep cell noise={} shift={} seed={} column {} failed: {}", noise,
                              offset, rep, m.column(), e.what());
              if (dynamic_cast<const SolverFailure*>(&e)) throw SolverFailure(what);
              if (dynamic_cast<const DegenerateNeighborhood*>(&e)) throw DegenerateNeighborhood(what);
              throw InvalidArgument(what);
            }
          }
          memo.emplace(gen_cache->fingerprint(), row.values);
        }
        for (std::size_t k = 0; k < row.values.size(); ++k) mean.values[k] += row.values[k];
        table.rows.push_back(std::move(row));
      }
      for (double& v : mean.values) v /= static_cast<double>(config.seeds_per_level);
      table.summary.push_back(std::move(mean));
    }
  }
  return table;
}

}  // namespace pcev
