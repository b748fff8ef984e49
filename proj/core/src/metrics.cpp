#include "pcev/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "pcev/error.hpp"
#include "pcev/parallel.hpp"

namespace pcev {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> occupancy(const CloudSet& set, const VoxelGridSpec& grid, bool centered) {
  const std::size_t r = grid.resolution;
  std::vector<std::uint64_t> counts(r * r * r, 0);
  std::uint64_t total = 0;
  for (const auto& cloud : set.clouds) {
    const Point3 shift = centered ? barycenter(cloud) : Point3{};
    for (const auto& p : cloud) {
      ++counts[grid.voxel_of(p - shift)];
      ++total;
    }
  }
  std::vector<double> prob(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    prob[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return prob;
}

double kl_to_mixture(const std::vector<double>& p, const std::vector<double>& m) {
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) sum += p[i] * std::log(p[i] / m[i]);
  }
  return sum;
}

}  // namespace

// ---------------------------------------------------------------------------
// Voxel grid

void VoxelGridSpec::validate() const {
  if (resolution < 2) {
    throw InvalidArgument(fmt::format("voxel resolution must be >= 2, got {}", resolution));
  }
  if (!(side > 0.0) || !std::isfinite(side) || !origin.finite()) {
    throw InvalidArgument("voxel grid bounds must have strictly positive finite volume");
  }
}

std::size_t VoxelGridSpec::voxel_of(const Point3& p) const noexcept {
  const double r = static_cast<double>(resolution);
  auto axis = [&](double v, double lo) {
    const double t = std::floor((v - lo) / side * r);
    if (!(t >= 0.0)) return std::size_t{0};
    if (t >= r) return resolution - 1;
    return static_cast<std::size_t>(t);
  };
  return (axis(p.x, origin.x) * resolution + axis(p.y, origin.y)) * resolution +
         axis(p.z, origin.z);
}

VoxelGridSpec tight_grid(const CloudSet& generated, const CloudSet& reference,
                         std::size_t resolution, bool centered) {
  Point3 lo{kInf, kInf, kInf};
  Point3 hi{-kInf, -kInf, -kInf};
  for (const CloudSet* s : {&generated, &reference}) {
    for (const auto& cloud : s->clouds) {
      const Point3 shift = centered ? barycenter(cloud) : Point3{};
      for (const auto& raw : cloud) {
        const Point3 p = raw - shift;
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
      }
    }
  }
  if (!lo.finite()) throw InvalidArgument("voxel grid needs at least one point");
  const double extent = std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});
  VoxelGridSpec grid;
  grid.resolution = resolution;
  grid.side = extent > 0.0 ? extent * (1.0 + 1e-6) : 1.0;
  const Point3 mid = 0.5 * (lo + hi);
  grid.origin = mid - Point3{0.5 * grid.side, 0.5 * grid.side, 0.5 * grid.side};
  grid.validate();
  return grid;
}

double jensen_shannon(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw InvalidArgument("histograms differ in size");
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  return 0.5 * kl_to_mixture(q, m) + 0.5 * kl_to_mixture(p, m);
}

// ---------------------------------------------------------------------------
// Names and scaling

const char* to_string(MetricKind kind) noexcept {
  switch (kind) {
    case MetricKind::Mmd: return "MMD";
    case MetricKind::Cov: return "COV";
    case MetricKind::OneNna: return "1-NNA";
    case MetricKind::Jsd: return "JSD";
    case MetricKind::Snc: return "SNC";
  }
  return "?";
}

MetricKind parse_metric(const std::string& text) {
  std::string t;
  for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "mmd") return MetricKind::Mmd;
  if (t == "cov") return MetricKind::Cov;
  if (t == "1-nna" || t == "1nna" || t == "nna") return MetricKind::OneNna;
  if (t == "jsd") return MetricKind::Jsd;
  if (t == "snc") return MetricKind::Snc;
  throw InvalidArgument(fmt::format("unknown metric '{}'", text));
}

double table_scaling(MetricKind kind, Measure measure) noexcept {
  switch (kind) {
    case MetricKind::Mmd:
      if (measure == Measure::Dcd) return 10.0;
      if (measure == Measure::Emd) return 1e3;
      return 1.0;
    case MetricKind::Cov:
    case MetricKind::OneNna:
    case MetricKind::Snc:
      return 100.0;
    case MetricKind::Jsd:
      return 1.0;
  }
  return 1.0;
}

std::string MetricReport::name() const {
  if (metric == MetricKind::Jsd || !distance) return to_string(metric);
  return fmt::format("{}-{}", to_string(metric), distance->measure_name());
}

// ---------------------------------------------------------------------------
// SetCache

SetCache::SetCache(CloudSet set) : set_(std::move(set)), fingerprint_(pcev::fingerprint(set_)) {}

const std::vector<PreparedCloud>& SetCache::prepared(bool centered, unsigned threads) {
  auto& slot = prepared_[centered ? 1 : 0];
  if (!slot) {
    std::vector<std::optional<PreparedCloud>> tmp(set_.size());
    parallel_for(set_.size(), threads, [&](std::size_t i) { tmp[i].emplace(set_[i], centered); });
    std::vector<PreparedCloud> out;
    out.reserve(tmp.size());
    for (auto& t : tmp) out.push_back(std::move(*t));
    slot = std::move(out);
  }
  return *slot;
}

const NormalField& SetCache::normals(std::size_t index, const NeighborhoodSpec& spec) const {
  const auto it = normals_.find(spec.label());
  if (it == normals_.end() || !it->second[index]) {
    throw InvalidArgument(fmt::format("normals of cloud {} were not computed", index));
  }
  return *it->second[index];
}

void SetCache::ensure_normals(const std::vector<std::size_t>& indices,
                              const NeighborhoodSpec& spec, unsigned threads) {
  auto& fields = normals_[spec.label()];
  if (fields.empty()) fields.resize(set_.size());
  std::vector<std::size_t> missing;
  for (auto i : indices) {
    if (!fields[i]) missing.push_back(i);
  }
  parallel_for(missing.size(), threads, [&](std::size_t k) {
    const std::size_t i = missing[k];
    fields[i] = estimate_normals(set_[i], spec);
  });
}

// ---------------------------------------------------------------------------
// Evaluator

Evaluator::Evaluator(CloudSet generated, CloudSet reference, unsigned threads)
    : Evaluator(std::make_shared<SetCache>(std::move(generated)),
                std::make_shared<SetCache>(std::move(reference)), threads) {}

Evaluator::Evaluator(std::shared_ptr<SetCache> generated, std::shared_ptr<SetCache> reference,
                     unsigned threads)
    : gen_(std::move(generated)), ref_(std::move(reference)), threads_(threads) {
  require_non_empty(gen_->set(), "generated");
  require_non_empty(ref_->set(), "reference");
}

const PairwiseDistanceTable& Evaluator::cross_table(const DistanceSpec& spec) {
  spec.validate();
  const std::string key = spec.label();
  if (auto it = cross_.find(key); it != cross_.end()) return it->second;

  const auto& g = gen_->prepared(spec.aligned, threads_);
  const auto& r = ref_->prepared(spec.aligned, threads_);
  PairwiseDistanceTable table;
  table.rows = g.size();
  table.cols = r.size();
  table.spec = spec;
  table.values.assign(table.rows * table.cols, 0.0);
  parallel_for(table.values.size(), threads_, [&](std::size_t k) {
    table.values[k] = evaluate(g[k / table.cols], r[k % table.cols], spec);
  });
  return cross_.emplace(key, std::move(table)).first->second;
}

const PairwiseDistanceTable& Evaluator::union_table(const DistanceSpec& spec) {
  const std::string key = spec.label();
  if (auto it = union_.find(key); it != union_.end()) return it->second;

  const PairwiseDistanceTable& cross = cross_table(spec);
  const auto& g = gen_->prepared(spec.aligned, threads_);
  const auto& r = ref_->prepared(spec.aligned, threads_);
  const std::size_t ng = g.size();
  const std::size_t n = ng + r.size();
  auto cloud_at = [&](std::size_t i) -> const PreparedCloud& { return i < ng ? g[i] : r[i - ng]; };

  PairwiseDistanceTable table;
  table.rows = table.cols = n;
  table.spec = spec;
  table.values.assign(n * n, 0.0);
  for (std::size_t i = 0; i < ng; ++i) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      table.values[i * n + ng + j] = table.values[(ng + j) * n + i] = cross(i, j);
    }
  }
  // Same-set pairs, each unordered pair evaluated once as D(lower, higher).
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if ((i < ng) == (j < ng)) pairs.emplace_back(i, j);
    }
  }
  // When both sets hold the same clouds every same-set pair is already a
  // cross entry D(g_i, r_j) with i < j, computed on identical inputs.
  const bool same = ng == r.size() && gen_->fingerprint() == ref_->fingerprint() &&
                    gen_->set().clouds == ref_->set().clouds;
  std::vector<double> values(pairs.size());
  parallel_for(pairs.size(), threads_, [&](std::size_t k) {
    const auto [i, j] = pairs[k];
    values[k] = same ? cross(i % ng, j % ng) : evaluate(cloud_at(i), cloud_at(j), spec);
  });
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [i, j] = pairs[k];
    table.values[i * n + j] = table.values[j * n + i] = values[k];
  }
  return union_.emplace(key, std::move(table)).first->second;
}

double Evaluator::mmd(const DistanceSpec& spec) {
  const auto& t = cross_table(spec);
  double sum = 0.0;
  for (std::size_t c = 0; c < t.cols; ++c) {
    double best = kInf;
    for (std::size_t r = 0; r < t.rows; ++r) best = std::min(best, t(r, c));
    sum += best;
  }
  return sum / static_cast<double>(t.cols);
}

std::vector<std::size_t> Evaluator::best_matches(const DistanceSpec& spec) {
  const auto& t = cross_table(spec);
  std::vector<std::size_t> match(t.rows, 0);
  for (std::size_t r = 0; r < t.rows; ++r) {
    for (std::size_t c = 1; c < t.cols; ++c) {
      if (t(r, c) < t(r, match[r])) match[r] = c;
    }
  }
  return match;
}

double Evaluator::cov(const DistanceSpec& spec) {
  const auto match = best_matches(spec);
  const std::set<std::size_t> covered(match.begin(), match.end());
  return static_cast<double>(covered.size()) / static_cast<double>(ref_->size());
}

double Evaluator::one_nna(const DistanceSpec& spec) {
  const std::size_t ng = gen_->size();
  const std::size_t nr = ref_->size();
  if (ng != nr) {
    throw InvalidArgument(
        fmt::format("1-NNA needs equal set sizes, got {} generated and {} reference", ng, nr));
  }
  if (ng < 2) throw InvalidArgument("1-NNA needs at least 2 clouds per set");

  const auto& t = union_table(spec);
  const std::size_t n = t.rows;
  // Ties: smaller distance, then reference before generated, then index.
  auto key = [ng, &t](std::size_t s, std::size_t o) {
    const bool gen = o < ng;
    return std::tuple{t(s, o), gen ? 1 : 0, gen ? o : o - ng};
  };
  std::size_t correct = 0;
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t best = s == 0 ? 1 : 0;
    for (std::size_t o = 0; o < n; ++o) {
      if (o != s && key(s, o) < key(s, best)) best = o;
    }
    if ((s < ng) == (best < ng)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double Evaluator::snc(const DistanceSpec& spec, const NeighborhoodSpec& neighborhood) {
  neighborhood.validate();
  const auto match = best_matches(spec);
  // Matching follows `spec`; point correspondences are always looked up
  // between centered clouds.
  const auto& g = gen_->prepared(true, threads_);
  const auto& r = ref_->prepared(true, threads_);

  std::vector<std::size_t> all(gen_->size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const std::set<std::size_t> used(match.begin(), match.end());
  gen_->ensure_normals(all, neighborhood, threads_);
  ref_->ensure_normals({used.begin(), used.end()}, neighborhood, threads_);

  std::vector<double> per_cloud(g.size());
  parallel_for(g.size(), threads_, [&](std::size_t i) {
    const NormalField& nx = gen_->normals(i, neighborhood);
    const NormalField& ny = ref_->normals(match[i], neighborhood);
    const PreparedCloud& best = r[match[i]];
    const PointCloud& x = g[i].cloud();
    double sum = 0.0;
    for (std::size_t p = 0; p < x.size(); ++p) {
      const std::size_t q = best.tree().nearest_squared(x[p]).first;
      sum += std::abs(dot(nx.normals[p].vec(), ny.normals[q].vec()));
    }
    per_cloud[i] = sum / static_cast<double>(x.size());
  });

  last_fallbacks_ = last_unreliable_ = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    last_fallbacks_ += gen_->normals(i, neighborhood).fallback_count;
    last_unreliable_ += gen_->normals(i, neighborhood).unreliable_count;
  }
  double total = 0.0;
  for (double v : per_cloud) total += v;
  return total / static_cast<double>(per_cloud.size());
}

double Evaluator::jsd(const VoxelGridSpec& grid, bool centered) {
  grid.validate();
  return jensen_shannon(occupancy(gen_->set(), grid, centered),
                        occupancy(ref_->set(), grid, centered));
}

MetricReport Evaluator::report(MetricKind kind, const DistanceSpec& spec,
                               const NeighborhoodSpec& neighborhood, std::size_t jsd_resolution) {
  MetricReport rep;
  rep.metric = kind;
  rep.generated_size = gen_->size();
  rep.reference_size = ref_->size();
  if (kind != MetricKind::Jsd) rep.distance = spec;
  switch (kind) {
    case MetricKind::Mmd:
      rep.value = mmd(spec);
      break;
    case MetricKind::Cov:
      rep.value = cov(spec);
      break;
    case MetricKind::OneNna:
      rep.value = one_nna(spec);
      break;
    case MetricKind::Snc:
      rep.neighborhood = neighborhood;
      rep.value = snc(spec, neighborhood);
      rep.normal_fallbacks = last_fallbacks_;
      rep.unreliable_normals = last_unreliable_;
      break;
    case MetricKind::Jsd:
      rep.grid = tight_grid(gen_->set(), ref_->set(), jsd_resolution, spec.aligned);
      rep.jsd_centered = spec.aligned;
      rep.value = jsd(*rep.grid, spec.aligned);
      break;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Free functions

double mmd(const CloudSet& generated, const CloudSet& reference, const DistanceSpec& spec) {
  return Evaluator(generated, reference).mmd(spec);
}

double cov(const CloudSet& generated, const CloudSet& reference, const DistanceSpec& spec) {
  return Evaluator(generated, reference).cov(spec);
}

double one_nna(const CloudSet& generated, const CloudSet& reference, const DistanceSpec& spec) {
  return Evaluator(generated, reference).one_nna(spec);
}

double jsd(const CloudSet& generated, const CloudSet& reference, const VoxelGridSpec& grid,
           bool centered) {
  require_non_empty(generated, "generated");
  require_non_empty(reference, "reference");
  grid.validate();
  return jensen_shannon(occupancy(generated, grid, centered), occupancy(reference, grid, centered));
}

std::size_t best_match(const PointCloud& cloud, const CloudSet& reference,
                       const DistanceSpec& spec) {
  return Evaluator(CloudSet{{cloud}, SetRole::Generated}, reference).best_matches(spec).front();
}

double snc(const CloudSet& generated, const CloudSet& reference, const DistanceSpec& spec,
           const NeighborhoodSpec& neighborhood) {
  return Evaluator(generated, reference).snc(spec, neighborhood);
}

}  // namespace pcev
