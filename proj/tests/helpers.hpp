#pragma once

#include <random>
#include <string>

#include "topo/error.hpp"
#include "topo/linalg.hpp"

// Kind of the topo::Error thrown by f, or "" when nothing is thrown.
template <class F>
std::string error_kind(F&& f) {
  try {
    f();
  } catch (const topo::Error& e) {
    return e.kind();
  }
  return "";
}

inline topo::CMatrix random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n;
  topo::CMatrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = topo::cd(n(rng), n(rng));
  return m;
}

inline topo::CMatrix random_skew(std::mt19937_64& rng, int n) {
  topo::CMatrix m = random_matrix(rng, n, n);
  return m - m.transpose();
}
