#include "topo/z2.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace topo {

using nlohmann::json;

SewingField sewing_field(const OccupiedFrame& frame, const TimeReversal& theta) {
  const MomentumGrid& g = frame.grid;
  if (frame.occupied % 2)
    validation_error("InvalidParams", "occupied band count must be even for a sewing field");
  SewingField s;
  s.grid = g;
  s.w.resize(g.count());
  for (std::size_t f = 0; f < g.count(); ++f)
    s.w[f] = frame.frames[g.neg(f)].adjoint() * theta.unitary * frame.frames[f].conjugate();
  for (int a = 0; a < g.dim; ++a) {
    s.link_phase[a].resize(g.count());
    for (std::size_t f = 0; f < g.count(); ++f)
      s.link_phase[a][f] = std::arg((frame.frames[f].adjoint() * frame.frames[g.shift(f, a, 1)]).determinant());
  }
  std::vector<bool> is_trim(g.count(), false);
  for (const auto& t : trim_points(g)) is_trim[t.flat] = true;
  for (std::size_t f = 0; f < g.count(); ++f) {
    double du = unitary_deviation(s.w[f]);
    s.unitarity_deviation = std::max(s.unitarity_deviation, du);
    s.antisymmetry_deviation =
        std::max(s.antisymmetry_deviation, (s.w[g.neg(f)] + s.w[f].transpose()).cwiseAbs().maxCoeff());
    if (is_trim[f]) s.trim_skew_deviation = std::max(s.trim_skew_deviation, skew_deviation(s.w[f]));
    if (du > 1e-8) {
      KVec k = g.point(f);
      numerical_error("NotUnitary", "sewing matrix is not unitary; occupied space not closed under Theta",
                      {{"k", {k[0], k[1], k[2]}}, {"deviation", du}});
    }
  }
  return s;
}

SewingField sewing_field(const BlochFamily& model, const MomentumGrid& grid) {
  if (!model.time_reversal) validation_error("NoTimeReversal", "sewing field needs a time-reversal invariant model");
  return sewing_field(occupied_frame(model, grid), *model.time_reversal);
}

json SewingField::ledger() const {
  return {{"unitarity", {{"deviation", unitarity_deviation}, {"pass", unitarity_deviation <= 1e-8}}},
          {"antisymmetry", {{"deviation", antisymmetry_deviation}, {"pass", antisymmetry_deviation <= 1e-8}}},
          {"trim_skew", {{"deviation", trim_skew_deviation}, {"pass", trim_skew_deviation <= 1e-8}}}};
}

namespace {

// Fixes phi on the sub-grid spanned by `axes` (other coordinates from `base`). Each line
// along axes[0] is parallel transported with its holonomy spread evenly; holonomies are
// unwrapped across neighbouring lines and the hyperplane axes[0] = 0 is handled recursively.
void smooth_phases(const SewingField& s, const std::vector<int>& axes, std::array<int, 3> base,
                   std::vector<double>& phi) {
  const MomentumGrid& g = s.grid;
  const int a0 = axes[0];
  const int n0 = g.sizes[a0];
  std::vector<int> rest(axes.begin() + 1, axes.end());

  std::vector<std::array<int, 3>> ts;
  {
    std::array<int, 3> t = base;
    t[a0] = 0;
    for (int r : rest) t[r] = 0;
    while (true) {
      ts.push_back(t);
      int b = int(rest.size()) - 1;
      while (b >= 0 && ++t[rest[b]] == g.sizes[rest[b]]) t[rest[b--]] = 0;
      if (b < 0) break;
    }
  }
  std::vector<double> hol(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    std::array<int, 3> m = ts[i];
    std::vector<double> th(n0);
    for (int j = 0; j < n0; ++j) {
      m[a0] = j;
      th[j] = s.link_phase[a0][g.flat(m)];
    }
    hol[i] = pairwise_sum(th);
  }
  // Lexicographic order: the predecessor of t lowers its last nonzero transverse coordinate.
  std::vector<double> unwrapped(ts.size());
  std::size_t stride = 1;
  std::vector<std::size_t> strides(rest.size());
  for (int b = int(rest.size()) - 1; b >= 0; --b) {
    strides[b] = stride;
    stride *= g.sizes[rest[b]];
  }
  for (std::size_t i = 0; i < ts.size(); ++i) {
    int b = int(rest.size()) - 1;
    while (b >= 0 && ts[i][rest[b]] == 0) --b;
    if (b < 0) {
      unwrapped[i] = wrap_angle(hol[i]);
    } else {
      double ref = unwrapped[i - strides[b]];
      unwrapped[i] = ref + wrap_angle(hol[i] - ref);
    }
  }
  if (!rest.empty()) {
    std::array<int, 3> hb = base;
    hb[a0] = 0;
    smooth_phases(s, rest, hb, phi);
  } else {
    std::array<int, 3> m = base;
    m[a0] = 0;
    phi[g.flat(m)] = 0.0;
  }
  for (std::size_t i = 0; i < ts.size(); ++i) {
    std::array<int, 3> m = ts[i];
    m[a0] = 0;
    const double start = phi[g.flat(m)];
    double cum = 0.0;
    for (int j = 0; j < n0; ++j) {
      m[a0] = j;
      std::size_t f = g.flat(m);
      phi[f] = start - cum + unwrapped[i] * j / n0;
      cum += s.link_phase[a0][f];
    }
  }
}

}  // namespace

std::vector<double> det_gauge_phases(const SewingField& s) {
  std::vector<double> phi(s.grid.count(), 0.0);
  std::vector<int> axes;
  for (int a = 0; a < s.grid.dim; ++a) axes.push_back(a);
  smooth_phases(s, axes, {0, 0, 0}, phi);
  return phi;
}

NuResult kane_mele_details(const SewingField& s, const std::vector<bool>& use) {
  const MomentumGrid& g = s.grid;
  if (g.dim < 2)
    validation_error("InvalidGrid", "the Pfaffian product is gauge dependent in one dimension; use dim >= 2");
  const auto trims = trim_points(g);
  if (!use.empty() && use.size() != trims.size()) validation_error("InvalidInput", "fixed-point mask size mismatch");

  const std::vector<double> phi = det_gauge_phases(s);
  // Gauge psi -> psi diag(e^{i phi}, 1, ...) gives det w -> e^{-i(phi(-k) + phi(k))} det w
  // and pf w(L) -> e^{-i phi(L)} pf w(L).
  auto det_phase = [&](std::size_t f) {
    return std::arg(s.w[f].determinant()) - phi[f] - phi[g.neg(f)];
  };

  NuResult r;
  std::array<int, 3> origin{0, 0, 0};
  for (int a = 0; a < g.dim; ++a) origin[a] = g.trim_index(a, false);
  const double start = wrap_angle(det_phase(g.flat(origin)));

  for (std::size_t t = 0; t < trims.size(); ++t) {
    if (!use.empty() && !use[t]) continue;
    const Trim& tr = trims[t];
    // Axis-aligned path from k = 0: walk axis 0 first, then 1, then 2.
    std::array<int, 3> m = origin;
    double acc = start;
    double prev = start;
    std::ostringstream path;
    for (int a = 0; a < g.dim; ++a) {
      if (!tr.at_pi[a]) continue;
      path << "k" << a + 1 << ":0->pi ";
      for (int step = 0; step < g.sizes[a] / 2; ++step) {
        m[a] -= 1;
        double cur = det_phase(g.flat(m));
        double d = wrap_angle(cur - prev);
        r.max_step = std::max(r.max_step, std::abs(d));
        if (std::abs(d) > kPi / 2)
          numerical_error("BranchTrackingFailed", "det w jumps by more than pi/2 between neighbours",
                          {{"path", path.str()}, {"step", d}});
        acc += d;
        prev = cur;
      }
    }
    CMatrix wt = s.w[tr.flat];
    cd pf = pfaffian(0.5 * (wt - wt.transpose())) * std::exp(cd(0, -phi[tr.flat]));
    if (std::abs(pf) < 1e-6)
      numerical_error("PfaffianNearZero", "Pfaffian of the sewing matrix vanishes at a fixed point",
                      {{"k", {tr.k[0], tr.k[1], tr.k[2]}}, {"magnitude", std::abs(pf)}});
    TrimTerm term;
    term.trim = tr;
    term.pfaffian = pf;
    term.sqrt_det = std::exp(cd(0, acc / 2));
    cd ratio = pf / term.sqrt_det;
    term.imag_residue = std::abs(ratio.imag());
    if (term.imag_residue > 1e-6)
      numerical_error("BranchTrackingFailed", "pf / sqrt(det) is not real",
                      {{"k", {tr.k[0], tr.k[1], tr.k[2]}}, {"imag", ratio.imag()}});
    term.ratio = ratio.real() >= 0 ? 1.0 : -1.0;
    r.nu *= int(term.ratio);
    r.terms.push_back(term);
  }
  return r;
}

int kane_mele_nu(const SewingField& field) { return kane_mele_details(field).nu; }

StrongWeak strong_and_weak_indices_3d(const SewingField& field) {
  if (field.grid.dim != 3) validation_error("InvalidGrid", "strong and weak indices need a 3D grid");
  StrongWeak sw;
  sw.nu0 = kane_mele_nu(field);
  const auto trims = trim_points(field.grid);
  for (int a = 0; a < 3; ++a) {
    std::vector<bool> use(trims.size());
    for (std::size_t t = 0; t < trims.size(); ++t) use[t] = trims[t].at_pi[a];
    sw.weak[a] = kane_mele_details(field, use).nu;
  }
  return sw;
}

StrongWeak strong_and_weak_indices_3d(const BlochFamily& model, const MomentumGrid& grid) {
  return strong_and_weak_indices_3d(sewing_field(model, grid));
}

WannierFlow wannier_center_flow(const BlochFamily& model, const MomentumGrid& grid) {
  if (model.dim != 2 || grid.dim != 2)
    validation_error("InvalidGrid", "Wannier-center flow needs a 2D model (slice 3D models first)");
  const int n1 = grid.sizes[0], n2 = grid.sizes[1];
  WannierFlow wf;
  for (int m2 = n2 / 2; m2 <= n2; ++m2) {
    const double k2 = -kPi + kTwoPi * m2 / n2;
    std::vector<CMatrix> fr(n1);
    for (int j = 0; j < n1; ++j) {
      EigenSystem es = eigh(model.evaluate(KVec(-kPi + kTwoPi * j / n1, k2, 0.0)));
      fr[j] = es.vectors.leftCols(model.occupied);
    }
    CMatrix w = CMatrix::Identity(model.occupied, model.occupied);
    for (int j = 0; j < n1; ++j) w = w * (fr[j].adjoint() * fr[(j + 1) % n1]);
    std::vector<double> ph = unitary_phases(polar_unitary(w));
    double best_gap = -1.0, mid = 0.0;
    for (std::size_t i = 0; i < ph.size(); ++i) {
      double lo = ph[i];
      double hi = i + 1 < ph.size() ? ph[i + 1] : ph[0] + kTwoPi;
      if (hi - lo > best_gap) {
        best_gap = hi - lo;
        mid = wrap_angle(0.5 * (lo + hi));
      }
    }
    if (best_gap < 0.05)
      numerical_error("WilsonLoopDegenerate", "Wannier centers fill the circle; no gap to track",
                      {{"k2", k2}, {"largest_gap", best_gap}});
    std::vector<double> c;
    for (double p : ph) c.push_back(p / kTwoPi);
    wf.k2.push_back(kTwoPi * (m2 - n2 / 2) / n2);
    wf.centers.push_back(c);
    wf.gap_midpoint.push_back(mid / kTwoPi);
  }
  // Count centers of slice s+1 inside the arc swept by the gap midpoint from s to s+1.
  for (std::size_t s = 0; s + 1 < wf.centers.size(); ++s) {
    double z0 = wf.gap_midpoint[s] * kTwoPi, z1 = wf.gap_midpoint[s + 1] * kTwoPi;
    double sweep = wrap_angle(z1 - z0);
    for (double x : wf.centers[s + 1]) {
      double rel = wrap_angle(x * kTwoPi - z0);
      if (sweep > 0 ? (rel > 0 && rel <= sweep) : (rel < 0 && rel >= sweep)) ++wf.crossings;
    }
  }
  wf.verdict = wf.crossings % 2 ? -1 : 1;
  return wf;
}

std::string WannierFlow::to_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "k2,gap_midpoint";
  std::size_t nc = centers.empty() ? 0 : centers[0].size();
  for (std::size_t i = 0; i < nc; ++i) os << ",center" << i;
  os << "\n";
  for (std::size_t s = 0; s < k2.size(); ++s) {
    os << k2[s] << "," << gap_midpoint[s];
    for (double c : centers[s]) os << "," << c;
    os << "\n";
  }
  return os.str();
}

json WannierFlow::to_json() const {
  return {{"k2", k2}, {"centers", centers}, {"gap_midpoint", gap_midpoint}, {"crossings", crossings},
          {"verdict", verdict}};
}

}  // namespace topo
