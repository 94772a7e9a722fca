// One line per acceptance criterion; exit status 1 if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "topo/berry.hpp"
#include "topo/cli.hpp"
#include "topo/error.hpp"
#include "topo/ktable.hpp"
#include "topo/nctorus.hpp"
#include "topo/spectral.hpp"
#include "topo/windex.hpp"
#include "topo/z2.hpp"

using namespace topo;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Collects failure messages; the first few go into the report line.
struct Ledger {
  bool pass = true;
  int failures = 0;
  std::ostringstream notes;
  void require(bool ok, const std::string& what) {
    if (ok) return;
    pass = false;
    if (failures++ < 3) notes << (failures > 1 ? "; " : "") << what;
  }
  Verdict verdict(const std::string& ok_detail) const {
    return {pass, pass ? ok_detail : notes.str() + (failures > 3 ? "; ..." : "")};
  }
};

std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os.precision(prec);
  os << x;
  return os.str();
}

cd pfaffian_cofactor(const CMatrix& a) {
  const Eigen::Index n = a.rows();
  if (n == 0) return 1.0;
  cd s = 0.0;
  for (Eigen::Index j = 1; j < n; ++j) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 1; i < n; ++i)
      if (i != j) keep.push_back(i);
    CMatrix sub(n - 2, n - 2);
    for (std::size_t r = 0; r < keep.size(); ++r)
      for (std::size_t c = 0; c < keep.size(); ++c) sub(r, c) = a(keep[r], keep[c]);
    s += (j % 2 ? 1.0 : -1.0) * a(0, j) * pfaffian_cofactor(sub);
  }
  return s;
}

CMatrix random_matrix(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> d;
  CMatrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cd(d(rng), d(rng));
  return m;
}

// Independent insulator test: gapped at zero and the declared number of bands below it everywhere.
bool insulating(const BlochFamily& m) {
  MomentumGrid fine = MomentumGrid::uniform(m.dim, m.dim == 2 ? 72 : 24);
  for (std::size_t f = 0; f < fine.count(); ++f) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m.evaluate(fine.point(f)), Eigen::EigenvaluesOnly);
    const RVector& e = es.eigenvalues();
    if (e.cwiseAbs().minCoeff() < 1e-6 || (e.array() < 0).count() != m.occupied) return false;
  }
  return true;
}

const std::vector<double> kKmSweep = [] {
  std::vector<double> v;
  for (int i = 0; i < 20; ++i) v.push_back(1.2 * i / 19.0);
  return v;
}();

Verdict hopf_chern() {
  int c = chern_number(occupied_frame(builtin("hopf-two-band"), MomentumGrid::uniform(2, 20)));
  return {c == 1, "c1 = " + std::to_string(c)};
}

Verdict trs_chern() {
  Ledger l;
  MomentumGrid g = MomentumGrid::uniform(2, 24);
  for (double lv : {0.0, 0.15, 0.3, 0.45, 0.6}) {
    int c = chern_number(occupied_frame(builtin("kane-mele", {{"lv", lv}}), g));
    l.require(c == 0, "kane-mele lv=" + fmt(lv) + " c=" + std::to_string(c));
  }
  for (double m : {-1.0, 1.0, 2.0, 3.0, 5.0}) {
    int c = chern_number(occupied_frame(builtin("bhz", {{"m", m}}), g));
    l.require(c == 0, "bhz m=" + fmt(m) + " c=" + std::to_string(c));
  }
  return l.verdict("10 models, all c = 0");
}

Verdict ktable_golden() {
  Ledger l;
  const AbelianGroup Z{1, 0}, Z2{0, 1}, O{0, 0};
  auto S = [](int d) { return Space::parse("sphere", d); };
  auto T = [](int d) { return Space::parse("torus", d); };
  auto expect = [&](const AbelianGroup& got, const AbelianGroup& want, const std::string& name) {
    l.require(got == want, name + " = " + got.to_string() + ", expected " + want.to_string());
  };
  expect(kq(0, S(2)), Z + Z2, "KQ(S^{1,2})");
  expect(kq(0, T(2)), Z + Z2, "KQ(T^2)");
  expect(kq(0, S(3)), Z + Z2, "KQ(S^{1,3})");
  expect(kq(0, T(3)), Z + Z2 * 4, "KQ(T^3)");
  expect(kq(-1, S(3)), Z2, "KQ^{-1}(S^{1,3})");
  expect(kq(-1, T(3)), Z * 3 + Z2, "KQ^{-1}(T^3)");
  expect(kq(-1, S(1)), Z, "KQ^{-1}(S^1)");
  expect(reduced_kq(0, T(2)), Z2, "~KQ(T^2)");
  const AbelianGroup row[8] = {Z, Z2, Z2, O, Z, O, O, O};
  for (int i = 0; i < 8; ++i) {
    expect(ko_point(i), row[i], "KO^{-" + std::to_string(i) + "}(pt)");
    expect(kr(i, S(1)), row[i] + row[(i + 7) % 8], "KR^{-" + std::to_string(i) + "}(S^1)");
  }
  return l.verdict("10 groups match");
}

// Gap minimum of the sweep, located independently of any invariant.
Verdict km_phase_diagram() {
  Ledger l;
  MomentumGrid g = MomentumGrid::uniform(2, 24);
  MomentumGrid fine = MomentumGrid::uniform(2, 72);  // contains the K points
  std::vector<int> nu;
  std::size_t gap_min = 0;
  double best = INFINITY;
  for (std::size_t i = 0; i < kKmSweep.size(); ++i) {
    BlochFamily m = builtin("kane-mele", {{"lv", kKmSweep[i]}, {"lso", 0.06}});
    double gap = min_abs_energy(m, fine);
    if (gap < best) best = gap, gap_min = i;
    int n = kane_mele_nu(sewing_field(m, g));
    int w = wannier_center_flow(m, g).verdict;
    l.require(n == w, "lv=" + fmt(kKmSweep[i]) + " nu=" + std::to_string(n) + " wannier=" + std::to_string(w));
    nu.push_back(n);
  }
  int flips = 0;
  std::size_t flip = 0;
  for (std::size_t i = 1; i < nu.size(); ++i)
    if (nu[i] != nu[i - 1]) ++flips, flip = i;
  l.require(nu.front() == -1 && nu.back() == 1 && flips == 1, "expected a single -1 -> +1 flip");
  const double critical = 3.0 * std::sqrt(3.0) * 0.06;
  l.require(flips == 1 && kKmSweep[flip - 1] < critical && kKmSweep[flip] > critical, "flip does not bracket 3 sqrt3 lso");
  l.require(flips == 1 && (flip == gap_min || flip - 1 == gap_min), "flip far from the gap minimum");
  return l.verdict("flip between lv=" + fmt(kKmSweep[flip - 1]) + " and " + fmt(kKmSweep[flip]) +
                   ", gap minimum " + fmt(best, 3) + " at lv=" + fmt(kKmSweep[gap_min]));
}

Verdict km_edge_parity() {
  Ledger l;
  MomentumGrid g = MomentumGrid::uniform(2, 24);
  int gapped = 0;
  for (double lv : kKmSweep) {
    BlochFamily m = builtin("kane-mele", {{"lv", lv}, {"lso", 0.06}});
    if (!insulating(m)) continue;
    ++gapped;
    int nu = kane_mele_nu(sewing_field(m, g));
    try {
      int p = edge_crossing_parity(ribbonize(m, 0, 24));
      l.require((p == 1) == (nu == -1), "lv=" + fmt(lv) + " parity=" + std::to_string(p) + " nu=" + std::to_string(nu));
    } catch (const Error& e) {
      l.require(false, "lv=" + fmt(lv) + " " + e.kind());
    }
  }
  return l.verdict(std::to_string(gapped) + " gapped points agree");
}

Verdict fkm_winding() {
  Ledger l;
  MomentumGrid g = MomentumGrid::uniform(3, 24);
  std::ostringstream d;
  for (double dt : {0.5, -0.5, 3.0}) {
    BlochFamily m = builtin("fu-kane-mele-3d", {{"dt", dt}});
    try {
      OccupiedFrame frame = smooth_gauge(occupied_frame(m, g));
      WindingResult w = winding3d(UnitaryField{g, sewing_field(frame, *m.time_reversal).w});
      int nu = strong_and_weak_indices_3d(m, g).nu0;
      int sign = w.rounded % 2 ? -1 : 1;
      l.require(sign == nu && w.residue < 0.05, "dt=" + fmt(dt) + " winding " + fmt(w.value) + " nu=" + std::to_string(nu));
      d << (d.tellp() ? ", " : "") << "dt=" << dt << ": nu=" << nu << " w=" << fmt(w.value);
    } catch (const Error& e) {
      l.require(false, "dt=" + fmt(dt) + " " + e.what());
    }
  }
  return l.verdict(d.str());
}

Verdict boundary_index() {
  Ledger l;
  MomentumGrid g = MomentumGrid::uniform(2, 24);
  int count = 0, skipped = 0;
  auto compare = [&](const std::string& name, const Params& p) {
    BlochFamily m = builtin(name, p);
    if (!insulating(m)) {
      ++skipped;
      return;
    }
    SewingField s = sewing_field(m, g);
    BoundaryIndex b = boundary_index_2d(s);
    int nu = kane_mele_nu(s);
    ++count;
    l.require(b.value == nu && b.residue < 1e-6,
              name + " " + nlohmann::json(p).dump() + " boundary=" + std::to_string(b.value) + " nu=" + std::to_string(nu));
  };
  for (double lv : kKmSweep) compare("kane-mele", {{"lv", lv}});
  for (double lr : {0.0, 0.05, 0.1}) compare("kane-mele", {{"lv", 0.1}, {"lr", lr}});
  for (double m = -1.0; m <= 9.0; m += 0.5) compare("bhz", {{"m", m}});
  for (double gap : {0.5, 1.0, 2.0}) compare("atomic-limit", {{"gap", gap}});
  return l.verdict(std::to_string(count) + " insulators agree, " + std::to_string(skipped) + " gapless or metallic points skipped");
}

Verdict pfaffian_suite() {
  Ledger l;
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<int> half(1, 6);
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    int n = 2 * half(rng);
    CMatrix a = random_matrix(rng, n);
    a = (a - a.transpose()).eval();
    cd pf = pfaffian(a), det = a.determinant();
    double e = std::abs(pf * pf - det) / std::abs(det);
    worst = std::max(worst, e);
    l.require(e <= 1e-8, "pf^2 vs det at n=" + std::to_string(n) + ": " + fmt(e));
    if (n <= 8) {
      cd ref = pfaffian_cofactor(a);
      double c = std::abs(pf - ref) / std::abs(ref);
      worst = std::max(worst, c);
      l.require(c <= 1e-8, "cofactor at n=" + std::to_string(n) + ": " + fmt(c));
    }
  }
  for (int rep = 0; rep < 200; ++rep) {
    int n = 2 * half(rng);
    CMatrix a = random_matrix(rng, n);
    a = (a - a.transpose()).eval();
    CMatrix b = random_matrix(rng, n);
    cd lhs = pfaffian(b * a * b.transpose()), rhs = b.determinant() * pfaffian(a);
    double e = std::abs(lhs - rhs) / std::abs(rhs);
    worst = std::max(worst, e);
    l.require(e <= 1e-8, "pf(BAB^T) at n=" + std::to_string(n) + ": " + fmt(e));
  }
  return l.verdict("400 instances, worst relative error " + fmt(worst, 2));
}

Verdict winding_convergence() {
  Ledger l;
  auto residue = [](int n) { return winding3d(periodized_su2_map(MomentumGrid::uniform(3, n)), false).residue; };
  std::ostringstream d;
  for (int n : {8, 12, 16}) {
    double a = residue(n), b = residue(2 * n);
    l.require(b < a, "residue(" + std::to_string(2 * n) + ") >= residue(" + std::to_string(n) + ")");
    d << "r(" << n << ")=" << fmt(a, 3) << " ";
  }
  WindingResult w = winding3d(periodized_su2_map(MomentumGrid::uniform(3, 24)), false);
  l.require(w.rounded == 1 && w.residue < 0.05, "N=24 residue " + fmt(w.residue));
  d << "r(24)=" << fmt(w.residue, 3);
  return l.verdict(d.str());
}

Verdict delta_p3_vs_winding() {
  MomentumGrid g = MomentumGrid::uniform(3, 24);
  OccupiedFrame f = occupied_frame(builtin("fu-kane-mele-3d", {{"dt", 3.0}}), g);
  UnitaryField gauge = periodized_su2_map(g);
  double w = winding3d(gauge, false).value;
  double d = delta_p3(f, gauge);
  return {std::abs(d - w) < 1e-2, "delta P3 = " + fmt(d, 6) + ", winding = " + fmt(w, 6)};
}

Verdict nc_algebra() {
  Ledger l;
  double worst = 0.0;
  for (auto [p, q] : {std::pair{1, 3}, {2, 5}, {3, 8}}) {
    ClockShiftRep r = ClockShiftRep::make(p, q);
    auto [x, y] = fixed_point_generators(p, q);
    CMatrix X = x.represent(r), Y = y.represent(r);
    double devs[] = {(r.U * r.V - r.omega() * r.V * r.U).cwiseAbs().maxCoeff(),
                     (theta_action(x).represent(r) - X).cwiseAbs().maxCoeff(),
                     (theta_action(y).represent(r) - Y).cwiseAbs().maxCoeff(),
                     (X.adjoint() + Y).cwiseAbs().maxCoeff()};
    for (double d : devs) {
      worst = std::max(worst, d);
      l.require(d <= 1e-12, "theta=" + std::to_string(p) + "/" + std::to_string(q) + " deviation " + fmt(d));
    }
  }
  return l.verdict("worst deviation " + fmt(worst, 2));
}

Verdict toeplitz() {
  Ledger l;
  double worst = 0.0;
  for (int w = -3; w <= 3; ++w) {
    // z^w (1 + 0.3 z): the extra zero lies outside the unit disk.
    FourierLoop u{{w, 1.0}, {w + 1, 0.3}};
    int idx = toeplitz_index(u, 256).index;
    l.require(idx == w, "winding " + std::to_string(w) + " gave index " + std::to_string(idx));
    PairingResult pr = nc_index_pairing_1d({{w, std::polar(1.0, 0.7)}}, 256);
    worst = std::max(worst, pr.residue);
    l.require(pr.rounded == w && pr.residue < 1e-6, "pairing at winding " + std::to_string(w));
  }
  return l.verdict("indices -3..3 exact, pairing residue " + fmt(worst, 2));
}

Verdict nc_pairing_3d() {
  Ledger l;
  std::ostringstream d;
  double prev = 0.0;
  for (int n : {4, 6, 8}) {
    PairingResult r = nc_index_pairing_3d([](const KVec& k) { return su2_bump_map(k); }, n, false);
    double a = std::abs(r.calibrated);
    l.require(a > prev && a < 1.0 + 1e-9, "N=" + std::to_string(n) + " |pairing| " + fmt(a) + " not increasing to 1");
    prev = a;
    d << "N=" << n << ": " << fmt(r.calibrated) << " ";
    if (n == 8) l.require(std::abs(1.0 - a) < 0.25, "final residue " + fmt(1.0 - a));
  }
  return l.verdict(d.str());
}

std::string capture(const std::string& cmd) {
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return out;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  pclose(p);
  return out;
}

// Separate processes, so nothing cached in memory can mask nondeterminism.
Verdict audit_determinism() {
  Ledger l;
  const std::vector<std::string> runs = {
      "audit --model kane-mele --grid 24 --sweep lv=0:1.2:5",
      "audit --model bhz --grid 16 --sweep m=-1:5:4",
      "audit --model fu-kane-mele-3d --grid 16 --dt 0.5",
  };
  for (const auto& args : runs) {
    std::string cmd = std::string(TOPOINV_PATH) + " " + args;
    std::string a = capture(cmd), b = capture(cmd);
    l.require(!a.empty() && a.find("\"checks\"") != std::string::npos, "no report from: " + args);
    l.require(cli::strip_timing(a) == cli::strip_timing(b), "reports differ: " + args);
  }
  return l.verdict(std::to_string(runs.size()) + " audits reproduced byte for byte");
}

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Verdict()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "Hopf Chern number", 1, hopf_chern},
      {2, "TRS Chern vanishing", 10, trs_chern},
      {3, "K-group golden table", 0.1, ktable_golden},
      {4, "Kane-Mele phase diagram", 60, km_phase_diagram},
      {5, "mod 2 index theorem 2D", 300, km_edge_parity},
      {6, "mod 2 index theorem 3D", 600, fkm_winding},
      {7, "boundary-circle index", 60, boundary_index},
      {8, "Pfaffian property suite", 5, pfaffian_suite},
      {9, "winding quadrature convergence", 120, winding_convergence},
      {10, "delta P3 = winding", 300, delta_p3_vs_winding},
      {11, "NC torus algebra", 1, nc_algebra},
      {12, "Toeplitz index", 10, toeplitz},
      {13, "3D NC pairing trend", 900, nc_pairing_3d},
      {14, "audit determinism", 600, audit_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_time = t < c.budget_s;
    bool ok = v.pass && in_time;
    failed += !ok;
    std::printf("[%s] %2d %s: %s (%.3g s, budget %g s%s)\n", ok ? "PASS" : "FAIL", c.id, c.name.c_str(),
                v.detail.c_str(), t, c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
