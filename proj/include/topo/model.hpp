#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "topo/linalg.hpp"

namespace topo {

using KVec = Eigen::Vector3d;  // components beyond the lattice dimension are zero

// k_i = -pi + 2 pi m_i / N_i with every N_i even, so the grid is closed under
// k -> -k and contains all 2^d fixed points. Flat index is row-major, axis 0 slowest.
struct MomentumGrid {
  int dim = 0;
  std::array<int, 3> sizes{1, 1, 1};

  static MomentumGrid make(int dim, std::array<int, 3> sizes);
  static MomentumGrid uniform(int dim, int n) { return make(dim, {n, dim > 1 ? n : 1, dim > 2 ? n : 1}); }

  std::size_t count() const { return std::size_t(sizes[0]) * sizes[1] * sizes[2]; }
  std::array<int, 3> multi(std::size_t flat) const;
  std::size_t flat(std::array<int, 3> m) const;  // wraps each index modulo N_i
  KVec point(std::size_t flat) const;
  std::size_t neg(std::size_t flat) const;
  std::size_t shift(std::size_t flat, int axis, int step) const;
  // Grid index along one axis of the coordinate 0 (false) or pi (true).
  int trim_index(int axis, bool at_pi) const { return at_pi ? 0 : sizes[axis] / 2; }
  nlohmann::json describe() const;
};

struct Trim {
  std::array<bool, 3> at_pi{false, false, false};
  KVec k = KVec::Zero();
  std::size_t flat = 0;
};

// 2^dim fixed points in lexicographic order (0 before pi, axis 0 most
// significant); the point (pi, ..., pi) comes last.
std::vector<Trim> trim_points(const MomentumGrid& grid);

// Theta psi = unitary * conj(psi), with unitary * conj(unitary) = -1.
struct TimeReversal {
  CMatrix unitary;

  static TimeReversal make(const CMatrix& u);  // validates unitarity and Theta^2 = -1
  static TimeReversal standard(int bands);     // i sigma_2 (x) identity
  CMatrix conjugate(const CMatrix& h) const { return unitary * h.conjugate() * unitary.adjoint(); }
};

struct BlochFamily {
  std::string name;
  int dim = 0;
  int bands = 0;
  int occupied = 0;
  std::function<CMatrix(const KVec&)> evaluate;
  std::optional<TimeReversal> time_reversal;
  // Largest |R_i| of any hopping along each axis; ribbonize trusts this bound.
  std::array<int, 3> hopping_range{0, 0, 0};
};

using Params = std::map<std::string, double>;

struct TrsReport {
  double max_deviation = 0.0;
  bool pass = false;
};

TrsReport check_trs(const BlochFamily& model, const MomentumGrid& grid);

// Smallest |E| over the grid; the Fermi level sits at zero.
double min_abs_energy(const BlochFamily& model, const MomentumGrid& grid);

std::vector<std::string> builtin_names();
BlochFamily builtin(const std::string& name, const Params& params = {});

// Model combinators used by the doubling and layering checks.
BlochFamily direct_sum(const BlochFamily& a, const BlochFamily& b);
BlochFamily stack_layers(const BlochFamily& layer2d);  // decoupled copies along a new axis 2
BlochFamily fix_momentum(const BlochFamily& model, int axis, double k);
BlochFamily add_zeeman(const BlochFamily& model, double field);  // field * sigma_3 (x) 1, breaks TRS

struct RibbonFamily {
  int width = 0;
  int block = 0;      // bands of the bulk model
  int open_axis = 0;
  int par_dim = 0;    // number of momenta still periodic
  bool periodic = false;
  std::function<CMatrix(const KVec&)> evaluate;  // argument holds the parallel momenta in order
  std::optional<TimeReversal> time_reversal;
  double bulk_gap = 0.0;  // min |E| of the bulk model, the half gap at the Fermi level
};

// Open boundary along open_axis with `width` unit cells. With periodic = true the
// hoppings across the cut are restored, which reproduces the bulk spectrum at
// commensurate momenta.
RibbonFamily ribbonize(const BlochFamily& model, int open_axis, int width, bool periodic = false);

BlochFamily load_model(const nlohmann::json& doc);
nlohmann::json model_to_json(const BlochFamily& model);

nlohmann::json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const nlohmann::json& j, const std::string& path);

}  // namespace topo
