#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pcev {

/// Dense row-major n x n cost matrix with non-negative finite entries.
class CostMatrix {
 public:
  explicit CostMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const noexcept { return {data_.data() + i * n_, n_}; }
  double max() const noexcept;

 private:
  std::size_t n_;
  std::vector<double> data_;
};

struct AssignmentResult {
  std::vector<std::size_t> column_of_row;  // the bijection
  double cost = 0.0;          // sum of assigned costs in row order
  double lower_bound = 0.0;   // certified dual bound (== cost for exact solves)
  std::size_t phases = 0;     // epsilon-scaling phases (auction only)
  std::size_t bids = 0;       // total bids (auction only)
  double final_epsilon = 0.0; // auction price increment of the last phase
  bool exact_fallback = false;
};

/// Optimal assignment by the shortest-augmenting-path Hungarian method, O(n^3).
AssignmentResult solve_hungarian(const CostMatrix& cost);

/// Forward auction with epsilon scaling. Stops once the assignment cost is
/// certified to be within (1 + relative_gap) of the dual lower bound, hence of
/// the optimum. Falls back to the Hungarian solve if the price increment
/// underflows before the certificate holds (e.g. a zero optimum that the
/// auction cannot hit exactly). Throws SolverFailure when the bid budget is
/// exhausted.
AssignmentResult solve_auction(const CostMatrix& cost, double relative_gap);

/// Sum_i min_j (c_ij + p_j) - Sum_j p_j: a lower bound on the optimal cost for
/// any price vector.
double dual_lower_bound(const CostMatrix& cost, std::span<const double> prices);

}  // namespace pcev
