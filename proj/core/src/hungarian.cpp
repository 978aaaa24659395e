#include "fusionpose/hungarian.hpp"

#include "fusionpose/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fusionpose {
namespace {

// Shortest-augmenting-path Hungarian method with potentials, for rows <= cols.
// Returns the column chosen by each row.
std::vector<int> solve_wide(const RowMatrix& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0), v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(m) + 1, 0), way(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m) + 1, inf);
    std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = a(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (p[static_cast<std::size_t>(j)] != 0) row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  }
  return row_to_col;
}

// Optimal cost over the given row/column subsets.
double optimal_cost(const RowMatrix& cost, const std::vector<int>& rows, const std::vector<int>& cols) {
  if (rows.empty() || cols.empty()) return 0.0;
  const bool wide = rows.size() <= cols.size();
  RowMatrix sub(static_cast<Eigen::Index>(wide ? rows.size() : cols.size()),
                static_cast<Eigen::Index>(wide ? cols.size() : rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const double x = cost(rows[r], cols[c]);
      if (wide) sub(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = x;
      else sub(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = x;
    }
  }
  const auto match = solve_wide(sub);
  double total = 0.0;
  for (std::size_t i = 0; i < match.size(); ++i) total += sub(static_cast<Eigen::Index>(i), match[i]);
  return total;
}

}  // namespace

Assignment hungarian(const RowMatrix& cost) {
  const int m = static_cast<int>(cost.rows());
  const int n = static_cast<int>(cost.cols());
  if (m == 0 || n == 0) return {};
  if (!cost.allFinite()) throw InvalidInput("hungarian: cost matrix has non-finite entries");

  std::vector<int> rows(static_cast<std::size_t>(m)), cols(static_cast<std::size_t>(n));
  for (int i = 0; i < m; ++i) rows[static_cast<std::size_t>(i)] = i;
  for (int j = 0; j < n; ++j) cols[static_cast<std::size_t>(j)] = j;
  const double best = optimal_cost(cost, rows, cols);
  const double tol = 1e-9 * (1.0 + cost.cwiseAbs().maxCoeff() * static_cast<double>(std::min(m, n)));
  const std::size_t target = static_cast<std::size_t>(std::min(m, n));

  // Fix pairs greedily in (row, col) order, keeping a choice only if the
  // remaining subproblem can still complete an optimal assignment.
  Assignment out;
  double fixed_cost = 0.0;
  std::vector<int> rows_left(rows.begin() + 1, rows.end());
  std::vector<int> cols_left = cols;
  for (int i = 0; i < m && out.size() < target; ++i) {
    for (std::size_t k = 0; k < cols_left.size(); ++k) {
      const int j = cols_left[k];
      std::vector<int> cols_rest = cols_left;
      cols_rest.erase(cols_rest.begin() + static_cast<std::ptrdiff_t>(k));
      const std::size_t completes = out.size() + 1 + std::min(rows_left.size(), cols_rest.size());
      if (completes < target) continue;
      const double total = fixed_cost + cost(i, j) + optimal_cost(cost, rows_left, cols_rest);
      if (std::abs(total - best) <= tol) {
        out.emplace_back(i, j);
        fixed_cost += cost(i, j);
        cols_left = std::move(cols_rest);
        break;
      }
    }
    if (!rows_left.empty()) rows_left.erase(rows_left.begin());
  }
  return out;
}

double assignment_cost(const RowMatrix& cost, const Assignment& assignment) {
  double total = 0.0;
  for (auto [r, c] : assignment) total += cost(r, c);
  return total;
}

}  // namespace fusionpose
