#pragma once

#include "fusionpose/tensor.hpp"

#include <utility>
#include <vector>

namespace fusionpose {

using Assignment = std::vector<std::pair<int, int>>;  // (row, col), sorted by row

// Minimum-cost assignment of min(m, n) pairs for an m x n cost matrix.
// Among optimal assignments the lexicographically smallest (row, col)
// sequence is returned. An empty matrix yields an empty assignment.
Assignment hungarian(const RowMatrix& cost);

double assignment_cost(const RowMatrix& cost, const Assignment& assignment);

}  // namespace fusionpose
