#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "topo/berry.hpp"
#include "topo/windex.hpp"

using namespace topo;

TEST_CASE("Hopf projector has first Chern number one") {
  OccupiedFrame f = occupied_frame(builtin("hopf-two-band"), MomentumGrid::uniform(2, 20));
  ChernResult c = chern_details(f);
  CHECK(c.chern == 1);
  CHECK(std::abs(c.raw - 1.0) < 1e-9);
  // Curvature is a smooth density: the plaquettes must sum to 2 pi c1.
  CurvatureField cf = berry_curvature_field(f);
  double total = 0.0;
  for (double v : cf.values) total += v;
  CHECK(total == doctest::Approx(kTwoPi));
  CHECK(cf.to_csv().rfind("k1,k2,value\n", 0) == 0);
}

TEST_CASE("Chern number of the Hopf model is independent of grid and gauge") {
  BlochFamily m = builtin("hopf-two-band");
  for (int n : {12, 16, 30}) CHECK(chern_number(occupied_frame(m, MomentumGrid::uniform(2, n))) == 1);
  OccupiedFrame f = occupied_frame(m, MomentumGrid::uniform(2, 16));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ph(-kPi, kPi);
  std::vector<CMatrix> v(f.frames.size(), CMatrix::Identity(1, 1));
  for (auto& x : v) x(0, 0) = std::polar(1.0, ph(rng));
  CHECK(chern_number(regauge(f, v)) == 1);
  CHECK(chern_number(occupied_frame(builtin("hopf-two-band", {{"m", -1.0}}), MomentumGrid::uniform(2, 16))) == -1);
  CHECK(chern_number(occupied_frame(builtin("hopf-two-band", {{"m", 3.0}}), MomentumGrid::uniform(2, 16))) == 0);
}

TEST_CASE("time-reversal invariant models carry no total Chern number") {
  for (double lv : {0.0, 0.2, 0.5})
    CHECK(chern_number(occupied_frame(builtin("kane-mele", {{"lv", lv}}), MomentumGrid::uniform(2, 24))) == 0);
  CHECK(chern_number(occupied_frame(builtin("bhz", {{"m", 1.0}}), MomentumGrid::uniform(2, 24))) == 0);
  // A spin-dependent mass puts one spin block in the trivial phase, leaving Chern number +-1.
  BlochFamily zb = builtin("bhz", {{"m", 1.0}});
  auto inner = zb.evaluate;
  CMatrix split = CMatrix::Zero(4, 4);
  split.diagonal() << 1.5, -1.5, -1.5, 1.5;
  zb.evaluate = [inner, split](const KVec& k) { return CMatrix(inner(k) + split); };
  zb.time_reversal.reset();
  CHECK(std::abs(chern_number(occupied_frame(zb, MomentumGrid::uniform(2, 24)))) == 1);
}

TEST_CASE("frame construction errors") {
  CHECK(error_kind([] { occupied_frame(builtin("bhz", {{"m", 0.0}}), MomentumGrid::uniform(2, 8)); }) == "GapClosed");
  BlochFamily m = builtin("hopf-two-band");
  m.occupied = 2;
  CHECK(error_kind([&] { occupied_frame(m, MomentumGrid::uniform(2, 8)); }) == "OccupationMismatch");
}

TEST_CASE("smooth gauge: links stay close to unitary and the span is unchanged") {
  OccupiedFrame f = occupied_frame(builtin("fu-kane-mele-3d", {{"dt", 3.0}}), MomentumGrid::uniform(3, 12));
  GaugeReport rep;
  OccupiedFrame s = smooth_gauge(f, &rep);
  CHECK(rep.min_link > 0.5);
  for (std::size_t k = 0; k < f.frames.size(); k += 97) {
    CMatrix p0 = f.frames[k] * f.frames[k].adjoint(), p1 = s.frames[k] * s.frames[k].adjoint();
    CHECK((p0 - p1).norm() < 1e-10);
  }
}

TEST_CASE("P3 is 1/2 in the strong phase and 0 in the trivial phase") {
  MomentumGrid g = MomentumGrid::uniform(3, 16);
  P3Result strong = polarization_p3(occupied_frame(builtin("fu-kane-mele-3d", {{"dt", 0.5}}), g));
  P3Result trivial = polarization_p3(occupied_frame(builtin("fu-kane-mele-3d", {{"dt", 3.0}}), g));
  CHECK(strong.distance_to_half < 0.05);
  CHECK(trivial.distance_to_zero < 0.01);
}

TEST_CASE("Chern-Simons change under a large gauge transformation equals its winding") {
  MomentumGrid g = MomentumGrid::uniform(3, 16);
  OccupiedFrame f = occupied_frame(builtin("fu-kane-mele-3d", {{"dt", 3.0}}), g);
  UnitaryField gauge = periodized_su2_map(g);
  double w = winding3d(gauge, false).value;
  CHECK(delta_p3(f, gauge) == doctest::Approx(w).epsilon(1e-2));
  for (auto& m : gauge.g) m = m.adjoint().eval();
  CHECK(delta_p3(f, gauge) == doctest::Approx(-w).epsilon(1e-2));
}
