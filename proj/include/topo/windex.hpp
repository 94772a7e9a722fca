#pragma once

#include "topo/field.hpp"
#include "topo/z2.hpp"

namespace topo {

struct WindingResult {
  double value = 0.0;
  int rounded = 0;
  double residue = 0.0;
  nlohmann::json to_json() const { return {{"raw", value}, {"rounded", rounded}, {"residue", residue}}; }
};

// Exact integer by telescoping eigenphases of g(k)^* g(k + e). Throws BranchUnsafe.
int winding1d(const UnitaryField& g);

// (1/24 pi^2) sum eps^{ijk} tr(g^* D_i g g^* D_j g g^* D_k g) h^3 with fourth-order central
// differences. Throws BranchUnsafe, and ResidueTooLarge (> 0.1) unless check_residue is off.
WindingResult winding3d(const UnitaryField& g, bool check_residue = true);

struct BoundaryIndex {
  int value = 1;
  int n_south = 0;  // circle k2 = 0
  int n_north = 0;  // circle k2 = pi
  double residue = 0.0;
  nlohmann::json to_json() const {
    return {{"value", value}, {"n_south", n_south}, {"n_north", n_north}, {"residue", residue}};
  }
};

// Product of the parities of the two time-reversal invariant circles k2 = 0, pi. On each
// circle the integer is (1/2pi)[change of arg det w over k1: 0 -> pi, minus twice the change
// of arg pf w between the endpoints].
BoundaryIndex boundary_index_2d(const SewingField& field);

// Degree 1 (1D grid): Im of int tr(g^{-1} dg). Degree 3 (3D grid): (1/6) int tr(g^{-1} dg)^3,
// so that dividing by 4 pi^2 gives the winding number.
double odd_chern_character(const UnitaryField& g, int degree);

// Degree-one map T^3 -> SU(2): k |-> [[beta, alpha], [-conj(alpha), conj(beta)]] with
// (beta, alpha) built from the unit quaternion (cos phi, sin phi k/|k|), phi = pi h(|k|/R)
// for a smooth monotone bump h. Constant -1 outside the ball |k| < R.
CMatrix su2_bump_map(const KVec& k, double radius = kPi);
UnitaryField periodized_su2_map(const MomentumGrid& grid, double radius = kPi);

}  // namespace topo
