#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "topo/spectral.hpp"
#include "topo/z2.hpp"

using namespace topo;

namespace {
CMatrix pauli_z() {
  CMatrix z = CMatrix::Zero(2, 2);
  z(0, 0) = 1.0;
  z(1, 1) = -1.0;
  return z;
}

// diag(block, 2, -3): two spectator levels that never reach zero
CMatrix with_rest(const CMatrix& block) {
  const Eigen::Index n = block.rows();
  CMatrix h = CMatrix::Zero(n + 2, n + 2);
  h.topLeftCorner(n, n) = block;
  h(n, n) = 2.0;
  h(n + 1, n + 1) = -3.0;
  return h;
}
}  // namespace

TEST_CASE("a single rising level gives flow +1 located at the crossing") {
  SpectralPath p{[](double t) { return with_rest(CMatrix::Constant(1, 1, t - 0.5)); }};
  FlowResult r = spectral_flow(p);
  CHECK(r.net == 1);
  REQUIRE(r.crossings.size() == 1);
  CHECK(std::abs(r.crossings[0].t - 0.5) <= 1e-6);
  SpectralPath down{[](double t) { return with_rest(CMatrix::Constant(1, 1, 0.3 - t)); }};
  CHECK(spectral_flow(down).net == -1);
}

TEST_CASE("(t - 1/2) sigma_3 crosses twice in opposite directions") {
  SpectralPath p{[](double t) { return with_rest((t - 0.5) * pauli_z()); }};
  FlowResult r = spectral_flow(p);
  CHECK(r.up == 1);
  CHECK(r.down == 1);
  CHECK(r.net == 0);
}

TEST_CASE("flow counts a fast sweep through several levels") {
  SpectralPath p{[](double t) {
    CMatrix h = CMatrix::Zero(3, 3);
    for (int i = 0; i < 3; ++i) h(i, i) = 4.0 * t - 1.0 - i;  // crossings at 1/4, 1/2, 3/4
    return h;
  }};
  CHECK(spectral_flow(p).net == 3);
  CHECK(spectral_flow(p, 1.5).net == 2);
}

TEST_CASE("tangential touches are not crossings") {
  SpectralPath p{[](double t) { return with_rest(CMatrix::Constant(1, 1, (t - 0.4) * (t - 0.4) - 1e-12)); }};
  CHECK(spectral_flow(p).net == 0);
}

TEST_CASE("gapless endpoints and loop samples are rejected") {
  SpectralPath open{[](double t) { return with_rest(CMatrix::Constant(1, 1, t)); }};
  CHECK(error_kind([&] { spectral_flow(open); }) == "EndpointGapless");
  // The eigenvalues of cos(2 pi t) sigma_3 vanish at t = 1/4, which is a sample of the loop.
  SpectralPath loop{[](double t) { return with_rest(std::cos(kTwoPi * t) * pauli_z()); }, true, 64};
  CHECK(error_kind([&] { spectral_flow(loop); }) == "EndpointGapless");
  SpectralPath shifted{[](double t) { return with_rest(std::cos(kTwoPi * t) * pauli_z() + 2.0 * CMatrix::Identity(2, 2)); },
                       true, 64};
  CHECK(spectral_flow(shifted).net == 0);
  SpectralPath rotating{[](double t) {
                          CMatrix h(2, 2);
                          h << 0, std::polar(1.0, -kTwoPi * t), std::polar(1.0, kTwoPi * t), 0;
                          return h;
                        },
                        true, 64};
  CHECK(spectral_flow(rotating).net == 0);
}

TEST_CASE("effective Hamiltonian block structure") {
  BlochFamily km = builtin("kane-mele", {{"lr", 0.05}});
  KVec k(0.3, -1.1, 0.0);
  CMatrix h = effective_hamiltonian(km, k);
  // Off TRIMs the upper block is H(-k), so the doubled operator is only Hermitian at fixed points.
  CHECK((h.topRightCorner(4, 4) - km.evaluate(-k)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((h.bottomLeftCorner(4, 4) - km.evaluate(k)).cwiseAbs().maxCoeff() < 1e-12);
  CMatrix J = CMatrix::Zero(8, 8);
  J.topRightCorner(4, 4).setIdentity();
  J.bottomLeftCorner(4, 4).setIdentity();
  CHECK((J * h * J - effective_hamiltonian(km, -k)).cwiseAbs().maxCoeff() < 1e-12);
  CMatrix t = effective_hamiltonian(km, KVec(kPi, 0.0, 0.0));
  CHECK(is_hermitian(t));
  RVector e = eigh(t).values;
  for (Eigen::Index i = 0; i < e.size(); ++i) CHECK(e[i] == doctest::Approx(-e[e.size() - 1 - i]).epsilon(1e-9));
  CHECK(error_kind([] { effective_hamiltonian(builtin("hopf-two-band"), KVec::Zero()); }) == "NoTimeReversal");
}

TEST_CASE("edge crossing parity tracks the bulk index") {
  CHECK(edge_crossing_parity(ribbonize(builtin("kane-mele", {{"lv", 0.1}}), 0, 24)) == 1);
  CHECK(edge_crossing_parity(ribbonize(builtin("kane-mele", {{"lv", 0.6}}), 0, 24)) == 0);
  CHECK(edge_crossing_parity(ribbonize(builtin("bhz", {{"m", 1.0}}), 0, 16)) == 1);
  CHECK(edge_crossing_parity(ribbonize(builtin("bhz", {{"m", -1.0}}), 0, 16)) == 0);
  EdgeCrossings ec = edge_crossings(ribbonize(builtin("kane-mele", {{"lv", 0.1}}), 0, 24), KVec::Zero(),
                                    KVec(kPi, 0, 0));
  CHECK(ec.left % 2 == ec.right % 2);
  CHECK(std::abs(ec.level) <= 0.25 * ec.bulk_gap);
}

TEST_CASE("doubling removes the edge crossing parity") {
  for (const auto& m : {builtin("kane-mele", {{"lv", 0.1}}), builtin("bhz", {{"m", 1.0}})}) {
    CHECK(edge_crossing_parity(ribbonize(m, 0, 24)) == 1);
    EdgeCrossings ec = edge_crossings(ribbonize(direct_sum(m, m), 0, 24), KVec::Zero(), KVec(kPi, 0, 0));
    CHECK(ec.parity == 0);
    CHECK(ec.left == 2);
  }
  CHECK(edge_crossing_parity(ribbonize(builtin("atomic-limit"), 0, 16)) == 0);
}

TEST_CASE("a ribbon too narrow for the edge decay length is flagged") {
  // Half gap 0.028: the edge states reach across 24 cells and hybridize.
  RibbonFamily rb = ribbonize(builtin("kane-mele", {{"lv", 0.284}}), 0, 24);
  CHECK(error_kind([&] { edge_crossing_parity(rb); }) == "EdgeBandIsolationFailed");
}

TEST_CASE("surface crossings of a strong insulator follow the bulk Pfaffian signs") {
  MomentumGrid g = MomentumGrid::uniform(3, 12);
  for (double dt : {0.5, -0.5, 3.0}) {
    BlochFamily m = builtin("fu-kane-mele-3d", {{"dt", dt}});
    SewingField s = sewing_field(m, g);
    // Fixed points above the surface points (0,0) and (pi,pi) of a slab open along axis 0.
    std::vector<bool> use;
    for (const auto& t : trim_points(g)) use.push_back(t.at_pi[1] == t.at_pi[2]);
    int bulk = kane_mele_details(s, use).nu;
    CHECK(mod2_analytical_index(m, g, {true, true}) == (bulk < 0 ? 1 : 0));
  }
}

TEST_CASE("ribbon spectrum export") {
  std::string csv = ribbon_spectrum_csv(ribbonize(builtin("bhz"), 0, 8), 4);
  CHECK(csv.rfind("k,energy,left_weight,right_weight\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 5 * 32);
}
