#include "fusionpose/skeleton.hpp"

#include "fusionpose/errors.hpp"

#include <numeric>

namespace fusionpose {

void SkeletonSpec::validate() const {
  const int n = static_cast<int>(joint_names.size());
  if (n == 0) throw InvalidInput("skeleton: no joints");
  if (root_index < 0 || root_index >= n) throw InvalidInput("skeleton: root index out of range");
  if (static_cast<int>(bones.size()) != n - 1) {
    throw InvalidInput("skeleton: a tree over " + std::to_string(n) + " joints needs " +
                       std::to_string(n - 1) + " bones");
  }
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
    return x;
  };
  for (auto [a, b] : bones) {
    if (a < 0 || b < 0 || a >= n || b >= n || a == b) throw InvalidInput("skeleton: bad bone index");
    const int ra = find(a), rb = find(b);
    if (ra == rb) throw InvalidInput("skeleton: bone graph has a cycle");
    parent[static_cast<std::size_t>(ra)] = rb;
  }
}

const SkeletonSpec& SkeletonSpec::standard() {
  static const SkeletonSpec spec = [] {
    SkeletonSpec s;
    s.joint_names = {"nose",       "neck",       "r_shoulder", "r_elbow",  "r_wrist",
                     "l_shoulder", "l_elbow",    "l_wrist",    "mid_hip",  "r_hip",
                     "r_knee",     "r_ankle",    "l_hip",      "l_knee",   "l_ankle",
                     "r_eye",      "l_eye",      "r_ear",      "l_ear",    "r_foot_tip",
                     "l_foot_tip"};
    s.bones = {{8, 1},  {1, 0},   {1, 2},   {2, 3},   {3, 4},   {1, 5},   {5, 6},
               {6, 7},  {8, 9},   {9, 10},  {10, 11}, {8, 12},  {12, 13}, {13, 14},
               {0, 15}, {0, 16},  {15, 17}, {16, 18}, {11, 19}, {14, 20}};
    s.root_index = 8;
    s.validate();
    return s;
  }();
  return spec;
}

}  // namespace fusionpose
