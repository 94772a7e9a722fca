#pragma once

#include <functional>
#include <string>
#include <vector>

#include "topo/model.hpp"

namespace topo {

struct SpectralPath {
  std::function<CMatrix(double)> at;  // t in [0, 1]
  bool closed = false;
  int samples = 64;  // initial uniform samples before adaptive refinement
};

struct Crossing {
  double t = 0.0;
  int direction = 0;  // +1: an eigenvalue moves up through the level
};

struct FlowResult {
  int net = 0;  // up - down
  int up = 0;
  int down = 0;
  std::vector<Crossing> crossings;
  long evaluations = 0;
  nlohmann::json to_json() const;
};

// Signed count of eigenvalues crossing `level`. Throws EndpointGapless, RefinementLimit.
FlowResult spectral_flow(const SpectralPath& path, double level = 0.0);

// [[0, Theta H(k) Theta^*], [H(k), 0]]
CMatrix effective_hamiltonian(const BlochFamily& model, const KVec& k);

struct EdgeCrossings {
  int left = 0;    // crossings by states on the outer quarter next to cell 0
  int right = 0;
  int parity = 0;  // left mod 2
  double level = 0.0;
  double bulk_gap = 0.0;
  std::vector<double> positions;  // path parameter of every left crossing
  nlohmann::json to_json() const;
};

// Edge-state crossings of the level along the straight path from -> to through the
// periodic momenta of the ribbon. Throws EdgeBandIsolationFailed.
EdgeCrossings edge_crossings(const RibbonFamily& ribbon, const KVec& from, const KVec& to);

// Parity of edge crossings between the 1D fixed points 0 and pi.
int edge_crossing_parity(const RibbonFamily& ribbon);

// Crossing parity along the path from the boundary fixed point 0 to `lambda` (one flag per
// periodic axis, true for pi), computed on a ribbon open along axis 0 whose width is the
// grid size along that axis.
int mod2_analytical_index(const BlochFamily& model, const MomentumGrid& grid, const std::vector<bool>& lambda);

// momentum, energy, left weight, right weight along k_par: 0 -> pi (first periodic axis).
std::string ribbon_spectrum_csv(const RibbonFamily& ribbon, int samples);

}  // namespace topo
