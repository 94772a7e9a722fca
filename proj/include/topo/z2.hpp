#pragma once

#include <array>
#include <string>
#include <vector>

#include "topo/berry.hpp"
#include "topo/model.hpp"

namespace topo {

// w_mn(k) = <u_m(-k) | Theta u_n(k)> over the occupied bands.
struct SewingField {
  MomentumGrid grid;
  std::vector<CMatrix> w;
  // arg det(psi(k)^* psi(k + e_a)) of the frame w was built from; the Pfaffian
  // branch tracking needs this connection of the determinant line.
  std::array<std::vector<double>, 3> link_phase;
  double unitarity_deviation = 0.0;
  double antisymmetry_deviation = 0.0;  // max |w(-k) + w(k)^T|
  double trim_skew_deviation = 0.0;     // max |w + w^T| at fixed points
  nlohmann::json ledger() const;
};

SewingField sewing_field(const BlochFamily& model, const MomentumGrid& grid);
SewingField sewing_field(const OccupiedFrame& frame, const TimeReversal& theta);

struct TrimTerm {
  Trim trim;
  cd pfaffian;         // after the determinant-phase gauge fix
  cd sqrt_det;         // tracked branch
  double ratio = 0.0;  // pf / sqrt(det), exactly +-1
  double imag_residue = 0.0;
};

struct NuResult {
  int nu = 1;
  std::vector<TrimTerm> terms;
  double max_step = 0.0;  // largest phase step met while tracking det w
};

// Product over the fixed points selected by `use` (all of them by default).
NuResult kane_mele_details(const SewingField& field, const std::vector<bool>& use = {});
int kane_mele_nu(const SewingField& field);

struct StrongWeak {
  int nu0 = 1;
  std::array<int, 3> weak{1, 1, 1};  // nu_i from the four fixed points on k_i = pi
};

StrongWeak strong_and_weak_indices_3d(const SewingField& field);
StrongWeak strong_and_weak_indices_3d(const BlochFamily& model, const MomentumGrid& grid);

struct WannierFlow {
  std::vector<double> k2;                    // pumping momentum, 0 .. pi
  std::vector<std::vector<double>> centers;  // Wilson-loop phases / 2 pi in (-1/2, 1/2]
  std::vector<double> gap_midpoint;          // largest-gap midpoint per slice, same units
  int crossings = 0;
  int verdict = 1;
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Wilson loops along k1 for k2 in [0, pi]; verdict from the parity of centers jumped by
// the largest-gap midpoint. Throws WilsonLoopDegenerate.
WannierFlow wannier_center_flow(const BlochFamily& model, const MomentumGrid& grid);

// Phase field e^{i phi(k)} that makes the determinant line of the frame vary slowly.
// Exposed for the boundary-circle index, which needs the same continuous branch.
std::vector<double> det_gauge_phases(const SewingField& field);

}  // namespace topo
