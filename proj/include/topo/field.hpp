#pragma once

#include <vector>

#include "topo/model.hpp"

namespace topo {

// A matrix per grid point, e.g. a gauge transformation or a map into U(n).
struct UnitaryField {
  MomentumGrid grid;
  std::vector<CMatrix> g;
};

// Fourth-order central difference along one axis, step 2 pi / N.
template <class Get>
CMatrix central_diff(const MomentumGrid& grid, std::size_t f, int axis, Get&& at) {
  const double h = kTwoPi / grid.sizes[axis];
  CMatrix d = 8.0 * (at(grid.shift(f, axis, 1)) - at(grid.shift(f, axis, -1))) -
              (at(grid.shift(f, axis, 2)) - at(grid.shift(f, axis, -2)));
  return d / (12.0 * h);
}

// The six permutations of (0,1,2) with their signs.
struct Perm3 {
  int i, j, k;
  double sign;
};
inline constexpr Perm3 kPerms3[6] = {{0, 1, 2, 1.0},  {1, 2, 0, 1.0},  {2, 0, 1, 1.0},
                                     {0, 2, 1, -1.0}, {2, 1, 0, -1.0}, {1, 0, 2, -1.0}};

}  // namespace topo
