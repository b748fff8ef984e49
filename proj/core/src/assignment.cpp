#include "pcev/assignment.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#if defined(__SSE2__)
#include <emmintrin.h>
#endif

#include <fmt/format.h>

#include "pcev/error.hpp"

namespace pcev {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

double assigned_cost(const CostMatrix& cost, const std::vector<std::size_t>& col) {
  double sum = 0.0;
  for (std::size_t i = 0; i < col.size(); ++i) sum += cost(i, col[i]);
  return sum;
}

// The vector paths use min/max with the same operand order as std::min and
// std::max, so every path returns bit-identical results.

double row_min(const double* row, const double* price, std::size_t n) {
  double best = kInf;
  std::size_t j = 0;
#if defined(__SSE2__)
  __m128d a = _mm_set1_pd(kInf), b = a, c = a, d = a;
  for (; j + 8 <= n; j += 8) {
    a = _mm_min_pd(_mm_add_pd(_mm_loadu_pd(row + j), _mm_loadu_pd(price + j)), a);
    b = _mm_min_pd(_mm_add_pd(_mm_loadu_pd(row + j + 2), _mm_loadu_pd(price + j + 2)), b);
    c = _mm_min_pd(_mm_add_pd(_mm_loadu_pd(row + j + 4), _mm_loadu_pd(price + j + 4)), c);
    d = _mm_min_pd(_mm_add_pd(_mm_loadu_pd(row + j + 6), _mm_loadu_pd(price + j + 6)), d);
  }
  alignas(16) double lanes[8];
  _mm_store_pd(lanes, a);
  _mm_store_pd(lanes + 2, b);
  _mm_store_pd(lanes + 4, c);
  _mm_store_pd(lanes + 6, d);
  for (double v : lanes) best = std::min(best, v);
#endif
  for (; j < n; ++j) best = std::min(best, row[j] + price[j]);
  return best;
}

struct BestTwo {
  double w1;  // smallest row[j] + price[j]
  double w2;  // second smallest, equal to w1 on ties
  std::size_t j1;
};

template <typename T>
std::size_t first_equal(const T* row, const T* price, std::size_t n, T w, std::size_t j) {
  while (j < n && row[j] + price[j] != w) ++j;
  return j;
}

// Best two bids over a row, first index of the best.
template <typename T>
BestTwo best_two(const T* row, const T* price, std::size_t n) {
  constexpr T inf = std::numeric_limits<T>::infinity();
  T w1 = inf, w2 = inf;
  for (std::size_t j = 0; j < n; ++j) {
    const T w = row[j] + price[j];
    w2 = std::min(w2, std::max(w1, w));
    w1 = std::min(w1, w);
  }
  return {w1, w2, first_equal(row, price, n, w1, 0)};
}

#if defined(__SSE2__)
template <>
BestTwo best_two<float>(const float* row, const float* price, std::size_t n) {
  constexpr float inf = std::numeric_limits<float>::infinity();
  __m128 m1[4], m2[4];
  for (int l = 0; l < 4; ++l) m1[l] = m2[l] = _mm_set1_ps(inf);
  std::size_t j = 0;
  for (; j + 16 <= n; j += 16) {
    for (int l = 0; l < 4; ++l) {
      const __m128 w = _mm_add_ps(_mm_loadu_ps(row + j + 4 * l), _mm_loadu_ps(price + j + 4 * l));
      m2[l] = _mm_min_ps(_mm_max_ps(w, m1[l]), m2[l]);
      m1[l] = _mm_min_ps(w, m1[l]);
    }
  }
  float w1 = inf, w2 = inf;
  alignas(16) float a[4], b[4];
  for (int l = 0; l < 4; ++l) {
    _mm_store_ps(a, m1[l]);
    _mm_store_ps(b, m2[l]);
    for (int k = 0; k < 4; ++k) {
      w2 = std::min({w2, std::max(w1, a[k]), b[k]});
      w1 = std::min(w1, a[k]);
    }
  }
  for (; j < n; ++j) {
    const float w = row[j] + price[j];
    w2 = std::min(w2, std::max(w1, w));
    w1 = std::min(w1, w);
  }

  const __m128 target = _mm_set1_ps(w1);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m128 w = _mm_add_ps(_mm_loadu_ps(row + k), _mm_loadu_ps(price + k));
    if (const int mask = _mm_movemask_ps(_mm_cmpeq_ps(w, target))) {
      return {w1, w2, k + static_cast<std::size_t>(__builtin_ctz(static_cast<unsigned>(mask)))};
    }
  }
  return {w1, w2, first_equal(row, price, n, w1, k)};
}
#endif

}  // namespace

double CostMatrix::max() const noexcept {
  double m = 0.0;
  for (double v : data_) m = std::max(m, v);
  return m;
}

double dual_lower_bound(const CostMatrix& cost, std::span<const double> prices) {
  const std::size_t n = cost.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += row_min(cost.row(i).data(), prices.data(), n);
  for (double p : prices) total -= p;
  return total;
}

AssignmentResult solve_hungarian(const CostMatrix& cost) {
  const std::size_t n = cost.size();
  AssignmentResult result;
  if (n == 0) return result;

  // 1-based potentials; column 0 is the virtual root of each augmenting search.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of_col[j0];
      const auto row = cost.row(i0 - 1);
      const double ui = u[i0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - ui - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[row_of_col[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  result.column_of_row.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) result.column_of_row[row_of_col[j] - 1] = j - 1;
  result.cost = assigned_cost(cost, result.column_of_row);
  result.lower_bound = result.cost;
  return result;
}

AssignmentResult solve_auction(const CostMatrix& cost, double relative_gap) {
  if (!(relative_gap > 0.0)) {
    throw InvalidArgument(fmt::format("auction relative gap must be > 0, got {}", relative_gap));
  }
  const std::size_t n = cost.size();
  AssignmentResult result;
  if (n == 0) return result;
  if (n == 1) {
    result.column_of_row = {0};
    result.cost = result.lower_bound = cost(0, 0);
    return result;
  }

  const double max_cost = cost.max();
  if (max_cost == 0.0) {
    result.column_of_row.resize(n);
    for (std::size_t i = 0; i < n; ++i) result.column_of_row[i] = i;
    return result;
  }

  constexpr double kScaling = 6.0;
  const double eps_floor = 1e-13 * max_cost;
  const std::size_t bid_budget = 64 * n * n + 1'000'000;

  // Bids scan a binary32 copy of the costs while epsilon is well above its
  // resolution. The stopping test below is always evaluated in double, so
  // the certified gap does not depend on the scan precision.
  std::vector<float> cost32(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = cost.row(i);
    std::copy(row.begin(), row.end(), cost32.begin() + static_cast<std::ptrdiff_t>(i * n));
  }

  std::vector<double> price(n, 0.0);
  std::vector<float> price32(n, 0.0f);
  std::vector<std::size_t> owner(n), col(n);
  std::deque<std::size_t> unassigned;
  double eps = max_cost / 8.0;

  for (;;) {
    ++result.phases;
    std::fill(owner.begin(), owner.end(), kNone);
    std::fill(col.begin(), col.end(), kNone);
    unassigned.clear();
    for (std::size_t i = 0; i < n; ++i) unassigned.push_back(i);
    const double top = max_cost + *std::max_element(price.begin(), price.end());
    const bool narrow = eps > 1024.0 * std::numeric_limits<float>::epsilon() * top;

    while (!unassigned.empty()) {
      const std::size_t i = unassigned.front();
      unassigned.pop_front();
      std::size_t j1;
      double step;
      if (narrow) {
        const auto b = best_two(cost32.data() + i * n, price32.data(), n);
        j1 = b.j1;
        step = b.w2 - b.w1;
      } else {
        const auto b = best_two(cost.row(i).data(), price.data(), n);
        j1 = b.j1;
        step = b.w2 - b.w1;
      }
      price[j1] += step + eps;
      price32[j1] = static_cast<float>(price[j1]);
      if (owner[j1] != kNone) {
        col[owner[j1]] = kNone;
        unassigned.push_back(owner[j1]);
      }
      owner[j1] = i;
      col[i] = j1;
      if (++result.bids > bid_budget) {
        throw SolverFailure(fmt::format(
            "auction exhausted its bid budget: n={}, phases={}, bids={}, epsilon={:.3e}", n,
            result.phases, result.bids, eps));
      }
    }

    const double primal = assigned_cost(cost, col);
    const double lower = dual_lower_bound(cost, price);
    if (primal == 0.0 || (lower > 0.0 && primal <= (1.0 + relative_gap) * lower)) {
      result.column_of_row = std::move(col);
      result.cost = primal;
      result.lower_bound = std::max(lower, 0.0);
      result.final_epsilon = eps;
      return result;
    }
    // Once n * eps is below the remaining allowance the next phase must
    // certify, so there is no point scaling further than that.
    const double target = lower > 0.0 ? relative_gap * lower / ((1.0 + relative_gap) * n) : 0.0;
    eps = std::max(eps / kScaling, std::min(target, 0.5 * eps));
    if (eps < eps_floor) {
      AssignmentResult exact = solve_hungarian(cost);
      exact.phases = result.phases;
      exact.bids = result.bids;
      exact.final_epsilon = eps;
      exact.exact_fallback = true;
      return exact;
    }
  }
}

}  // namespace pcev
