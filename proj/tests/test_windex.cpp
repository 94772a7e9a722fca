#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "topo/windex.hpp"

using namespace topo;

namespace {
UnitaryField phase_loop(int n, int w) {
  UnitaryField f{MomentumGrid::uniform(1, n), {}};
  for (std::size_t i = 0; i < f.grid.count(); ++i) {
    CMatrix m = CMatrix::Identity(2, 2);
    m(0, 0) = std::polar(1.0, w * f.grid.point(i)[0]);
    f.g.push_back(m);
  }
  return f;
}
}  // namespace

TEST_CASE("1D winding counts phase turns") {
  for (int w : {-3, -1, 0, 2, 5}) CHECK(winding1d(phase_loop(32, w)) == w);
  CHECK(error_kind([] { winding1d(phase_loop(8, 4)); }) == "BranchUnsafe");
  CHECK(odd_chern_character(phase_loop(32, 2), 1) == doctest::Approx(2 * kTwoPi));
  CHECK(error_kind([] { odd_chern_character(phase_loop(32, 2), 2); }) == "UnsupportedDegree");
  UnitaryField bad = phase_loop(16, 1);
  bad.g[3] *= 1.1;
  CHECK(error_kind([&] { winding1d(bad); }) == "NotUnitary");
}

TEST_CASE("3D winding of the bump map and its inverse") {
  MomentumGrid g = MomentumGrid::uniform(3, 24);
  UnitaryField f = periodized_su2_map(g);
  WindingResult w = winding3d(f);
  CHECK(w.rounded == 1);
  CHECK(w.residue < 0.05);
  for (auto& m : f.g) m = m.adjoint().eval();
  CHECK(winding3d(f).rounded == -1);
  UnitaryField id{g, std::vector<CMatrix>(g.count(), CMatrix::Identity(2, 2))};
  CHECK(std::abs(winding3d(id).value) < 1e-14);
  CHECK(odd_chern_character(periodized_su2_map(g), 3) == doctest::Approx(4 * kPi * kPi * w.value));
}

TEST_CASE("bump map is SU(2) and constant near the zone boundary") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int i = 0; i < 20; ++i) {
    CMatrix m = su2_bump_map(KVec(u(rng), u(rng), u(rng)));
    CHECK(is_unitary(m));
    CHECK(std::abs(m.determinant() - 1.0) < 1e-12);
  }
  CHECK((su2_bump_map(KVec(kPi, 0.1, 0.2)) + CMatrix::Identity(2, 2)).norm() < 1e-14);
}

TEST_CASE("coarse grids are flagged rather than rounded") {
  CHECK(error_kind([] { winding3d(periodized_su2_map(MomentumGrid::uniform(3, 8))); }) == "ResidueTooLarge");
}

TEST_CASE("boundary-circle index matches the Pfaffian index") {
  for (double lv : {0.0, 0.15, 0.4, 0.8}) {
    BlochFamily m = builtin("kane-mele", {{"lv", lv}});
    SewingField s = sewing_field(m, MomentumGrid::uniform(2, 24));
    BoundaryIndex b = boundary_index_2d(s);
    CHECK(b.value == kane_mele_nu(s));
    CHECK(b.residue < 1e-6);
  }
  SewingField s = sewing_field(builtin("bhz", {{"m", 1.0}}), MomentumGrid::uniform(2, 16));
  CHECK(boundary_index_2d(s).value == -1);
}
