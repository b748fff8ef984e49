#pragma once

#include <cstddef>
#include <string>

#include "pcev/assignment.hpp"
#include "pcev/geometry.hpp"
#include "pcev/neighbors.hpp"

namespace pcev {

enum class Measure { Chamfer, Emd, Dcd };

enum class EmdSolver {
  Exact,   // Hungarian, O(n^3)
  Approx,  // certified auction
  Auto,    // Exact up to kExactEmdLimit points, Approx above
};

/// Largest cloud size for which EmdSolver::Auto runs the exact solver.
inline constexpr std::size_t kExactEmdLimit = 512;

const char* to_string(Measure m) noexcept;
const char* to_string(EmdSolver s) noexcept;
Measure parse_measure(const std::string& text);
EmdSolver parse_emd_solver(const std::string& text);

/// Which pairwise measure to use, its parameters, and whether both clouds are
/// translated to their barycenters first.
struct DistanceSpec {
  Measure measure = Measure::Dcd;
  EmdSolver solver = EmdSolver::Auto;
  double epsilon = 0.005;  // relative gap of the approximate EMD solver
  double alpha = 1000.0;   // DCD temperature
  bool aligned = true;
  bool per_point = false;  // divide EMD by the point count

  static DistanceSpec chamfer(bool aligned = true);
  static DistanceSpec emd(EmdSolver solver = EmdSolver::Auto, double epsilon = 0.005,
                          bool aligned = true);
  static DistanceSpec dcd(double alpha = 1000.0, bool aligned = true);

  /// DCD alpha > 0 and approximate-EMD epsilon > 0, both finite.
  void validate() const;

  /// "CD", "EMD" or "DCD".
  const char* measure_name() const noexcept { return to_string(measure); }

  /// Compact description of every value-affecting parameter,
  /// e.g. "DCD(alpha=1000,aligned)".
  std::string label() const;

  friend bool operator==(const DistanceSpec&, const DistanceSpec&) = default;
};

/// Sum over X of the squared distance to the nearest point of Y, plus the
/// same from Y to X.
double chamfer(const PointCloud& x, const PointCloud& y);

struct EmdResult {
  double value = 0.0;
  EmdSolver solver = EmdSolver::Exact;  // the solver that actually ran
  AssignmentResult assignment;
};

/// Minimum over bijections of the summed (unsquared) Euclidean distance.
/// Requires |X| == |Y|.
EmdResult emd(const PointCloud& x, const PointCloud& y, EmdSolver solver = EmdSolver::Exact,
              double epsilon = 0.005);

/// Density-aware Chamfer distance, in [0, 1].
double dcd(const PointCloud& x, const PointCloud& y, double alpha);

/// measure(center(X), center(Y)) when spec.aligned, measure(X, Y) otherwise.
double aligned_distance(const PointCloud& x, const PointCloud& y, const DistanceSpec& spec);

/// A cloud ready for repeated distance evaluation: centered when requested,
/// with its k-d tree built once.
class PreparedCloud {
 public:
  PreparedCloud(const PointCloud& cloud, bool centered);

  const PointCloud& cloud() const noexcept { return cloud_; }
  const KdTree& tree() const noexcept { return tree_; }
  bool centered() const noexcept { return centered_; }

 private:
  PointCloud cloud_;
  KdTree tree_;
  bool centered_;
};

double chamfer(const PreparedCloud& x, const PreparedCloud& y);
double dcd(const PreparedCloud& x, const PreparedCloud& y, double alpha);

/// Evaluates the measure of `spec` on two prepared clouds. Both must have been
/// prepared with centered == spec.aligned.
double evaluate(const PreparedCloud& x, const PreparedCloud& y, const DistanceSpec& spec,
                EmdSolver* solver_used = nullptr);

}  // namespace pcev
