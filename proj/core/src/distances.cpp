#include "pcev/distances.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "pcev/error.hpp"

namespace pcev {
namespace {

void check_non_empty(const PointCloud& x, const PointCloud& y) {
  if (x.size() == 0 || y.size() == 0) throw InvalidArgument("distance of an empty cloud");
}

double one_sided_squared(const PointCloud& from, const KdTree& to) {
  double sum = 0.0;
  for (const auto& p : from) sum += to.nearest_squared(p).second;
  return sum;
}

// Mean over `from` of 1 - exp(-alpha * |p - q|) / n_q, where q is the nearest
// point of `to` and n_q counts how many points of `from` share that nearest.
double density_term(const PointCloud& from, const KdTree& to, double alpha) {
  const std::size_t n = from.size();
  std::vector<std::size_t> match(n);
  std::vector<double> dist(n);
  std::vector<std::size_t> hits(to.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [j, d2] = to.nearest_squared(from[i]);
    match[i] = j;
    dist[i] = std::sqrt(d2);
    ++hits[j];
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sum += 1.0 - std::exp(-alpha * dist[i]) / static_cast<double>(hits[match[i]]);
  }
  return sum / static_cast<double>(n);
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument(fmt::format("DCD alpha must be finite and > 0, got {}", alpha));
  }
}

EmdResult emd_on(const PointCloud& x, const PointCloud& y, EmdSolver solver, double epsilon) {
  if (x.size() != y.size()) {
    throw InvalidArgument(
        fmt::format("EMD needs equal-size clouds, got {} and {}", x.size(), y.size()));
  }
  const std::size_t n = x.size();
  if (solver == EmdSolver::Auto) solver = n <= kExactEmdLimit ? EmdSolver::Exact : EmdSolver::Approx;

  CostMatrix cost(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) cost(i, j) = distance(x[i], y[j]);
  }
  EmdResult r;
  r.solver = solver;
  r.assignment = solver == EmdSolver::Exact ? solve_hungarian(cost) : solve_auction(cost, epsilon);
  if (r.assignment.exact_fallback) r.solver = EmdSolver::Exact;
  r.value = r.assignment.cost;
  return r;
}

}  // namespace

const char* to_string(Measure m) noexcept {
  switch (m) {
    case Measure::Chamfer: return "CD";
    case Measure::Emd: return "EMD";
    case Measure::Dcd: return "DCD";
  }
  return "?";
}

const char* to_string(EmdSolver s) noexcept {
  switch (s) {
    case EmdSolver::Exact: return "exact";
    case EmdSolver::Approx: return "approx";
    case EmdSolver::Auto: return "auto";
  }
  return "?";
}

Measure parse_measure(const std::string& text) {
  if (text == "cd" || text == "CD") return Measure::Chamfer;
  if (text == "emd" || text == "EMD") return Measure::Emd;
  if (text == "dcd" || text == "DCD") return Measure::Dcd;
  throw InvalidArgument(fmt::format("unknown distance measure '{}'", text));
}

EmdSolver parse_emd_solver(const std::string& text) {
  if (text == "exact") return EmdSolver::Exact;
  if (text == "approx") return EmdSolver::Approx;
  if (text == "auto") return EmdSolver::Auto;
  throw InvalidArgument(fmt::format("unknown EMD solver '{}'", text));
}

DistanceSpec DistanceSpec::chamfer(bool aligned) {
  DistanceSpec s;
  s.measure = Measure::Chamfer;
  s.aligned = aligned;
  return s;
}

DistanceSpec DistanceSpec::emd(EmdSolver solver, double epsilon, bool aligned) {
  DistanceSpec s;
  s.measure = Measure::Emd;
  s.solver = solver;
  s.epsilon = epsilon;
  s.aligned = aligned;
  return s;
}

DistanceSpec DistanceSpec::dcd(double alpha, bool aligned) {
  DistanceSpec s;
  s.measure = Measure::Dcd;
  s.alpha = alpha;
  s.aligned = aligned;
  return s;
}

void DistanceSpec::validate() const {
  if (measure == Measure::Dcd) check_alpha(alpha);
  if (measure == Measure::Emd && solver != EmdSolver::Exact &&
      (!(epsilon > 0.0) || !std::isfinite(epsilon))) {
    throw InvalidArgument(fmt::format("EMD epsilon must be finite and > 0, got {}", epsilon));
  }
}

std::string DistanceSpec::label() const {
  const char* align = aligned ? "aligned" : "raw";
  switch (measure) {
    case Measure::Chamfer:
      return fmt::format("CD({})", align);
    case Measure::Dcd:
      return fmt::format("DCD(alpha={},{})", alpha, align);
    case Measure::Emd:
      if (solver == EmdSolver::Exact) {
        return fmt::format("EMD(exact,{}{})", align, per_point ? ",per_point" : "");
      }
      return fmt::format("EMD({},epsilon={},{}{})", to_string(solver), epsilon, align,
                         per_point ? ",per_point" : "");
  }
  return "?";
}

double chamfer(const PointCloud& x, const PointCloud& y) {
  check_non_empty(x, y);
  const KdTree tx(x), ty(y);
  return one_sided_squared(x, ty) + one_sided_squared(y, tx);
}

EmdResult emd(const PointCloud& x, const PointCloud& y, EmdSolver solver, double epsilon) {
  check_non_empty(x, y);
  if (solver != EmdSolver::Exact && (!(epsilon > 0.0) || !std::isfinite(epsilon))) {
    throw InvalidArgument(fmt::format("EMD epsilon must be finite and > 0, got {}", epsilon));
  }
  return emd_on(x, y, solver, epsilon);
}

double dcd(const PointCloud& x, const PointCloud& y, double alpha) {
  check_non_empty(x, y);
  check_alpha(alpha);
  const KdTree tx(x), ty(y);
  return 0.5 * (density_term(x, ty, alpha) + density_term(y, tx, alpha));
}

PreparedCloud::PreparedCloud(const PointCloud& cloud, bool centered)
    : cloud_(centered ? center(cloud) : cloud), tree_(cloud_), centered_(centered) {}

double chamfer(const PreparedCloud& x, const PreparedCloud& y) {
  return one_sided_squared(x.cloud(), y.tree()) + one_sided_squared(y.cloud(), x.tree());
}

double dcd(const PreparedCloud& x, const PreparedCloud& y, double alpha) {
  check_alpha(alpha);
  return 0.5 * (density_term(x.cloud(), y.tree(), alpha) +
                density_term(y.cloud(), x.tree(), alpha));
}

double evaluate(const PreparedCloud& x, const PreparedCloud& y, const DistanceSpec& spec,
                EmdSolver* solver_used) {
  if (x.centered() != spec.aligned || y.centered() != spec.aligned) {
    throw InvalidArgument("prepared clouds do not match the requested alignment");
  }
  switch (spec.measure) {
    case Measure::Chamfer:
      return chamfer(x, y);
    case Measure::Dcd:
      return dcd(x, y, spec.alpha);
    case Measure::Emd: {
      const EmdResult r = emd_on(x.cloud(), y.cloud(), spec.solver, spec.epsilon);
      if (solver_used) *solver_used = r.solver;
      return spec.per_point ? r.value / static_cast<double>(x.cloud().size()) : r.value;
    }
  }
  return 0.0;
}

double aligned_distance(const PointCloud& x, const PointCloud& y, const DistanceSpec& spec) {
  spec.validate();
  const PreparedCloud px(x, spec.aligned), py(y, spec.aligned);
  return evaluate(px, py, spec);
}

}  // namespace pcev
