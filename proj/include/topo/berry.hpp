#pragma once

#include <string>
#include <vector>

#include "topo/field.hpp"
#include "topo/model.hpp"

namespace topo {

struct OccupiedFrame {
  MomentumGrid grid;
  int bands = 0;
  int occupied = 0;
  std::vector<CMatrix> frames;  // bands x occupied, orthonormal columns
  double min_gap = 0.0;         // smallest |E| seen while building
};

// Throws GapClosed(k) when some |E| < gap_tol.
OccupiedFrame occupied_frame(const BlochFamily& model, const MomentumGrid& grid, double gap_tol = 1e-6);

// frame(k) -> frame(k) * v(k)
OccupiedFrame regauge(const OccupiedFrame& frame, const std::vector<CMatrix>& v);

// A 2D plane of the grid: two axes plus the index of the third axis (3D grids only).
struct Plane {
  int axis_i = 0;
  int axis_j = 1;
  int slice = 0;
};

struct ChernResult {
  int chern = 0;
  double raw = 0.0;             // sum of plaquette phases / 2 pi before rounding
  double max_plaquette = 0.0;   // largest |plaquette phase|, must stay below 0.95 pi
  double min_link = 0.0;        // smallest |det U| over links
};

struct CurvatureField {
  MomentumGrid grid;
  Plane plane;
  std::vector<double> values;  // one plaquette phase per (m_i, m_j), row-major in (i, j)
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Fukui-Hatsugai-Suzuki lattice Chern number. Throws GridTooCoarse.
ChernResult chern_details(const OccupiedFrame& frame, Plane plane = {});
int chern_number(const OccupiedFrame& frame, Plane plane = {});
CurvatureField berry_curvature_field(const OccupiedFrame& frame, Plane plane = {});

struct GaugeReport {
  double trial_overlap = 0.0;  // min |det(chi^* P chi)| of the chosen trial subspace
  double min_link = 0.0;       // min |det U| over all links after relaxation
  int sweeps = 0;
};

// Periodic gauge that varies slowly over the grid: Loewdin projection of the best of a
// deterministic set of trial subspaces, then Procrustes relaxation sweeps that rotate
// every frame towards its neighbours. Throws GaugeConstructionFailed.
OccupiedFrame smooth_gauge(const OccupiedFrame& frame, GaugeReport* report = nullptr, int sweeps = 20);

// -(1/8 pi^2) int eps^{ijk} tr(A_i d_j A_k + 2/3 A_i A_j A_k) with A = psi^* d psi, evaluated
// in the gauge the frame already carries (no smoothing).
double chern_simons(const OccupiedFrame& frame);

struct P3Result {
  double raw = 0.0;
  double mod1 = 0.0;       // representative in [0, 1)
  double distance_to_half = 0.0;
  double distance_to_zero = 0.0;
  GaugeReport gauge;
};

P3Result polarization_p3(const OccupiedFrame& frame);

// P3(frame * g) - P3(frame) for a smooth gauge field g over the same grid. The frame is
// smoothed first; the quadrature is meaningless on a discontinuous gauge.
double delta_p3(const OccupiedFrame& frame, const UnitaryField& g);

}  // namespace topo
