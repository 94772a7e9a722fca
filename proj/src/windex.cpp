#include "topo/windex.hpp"

#include <cmath>

#include <Eigen/SVD>

namespace topo {

namespace {

void check_unitary_field(const UnitaryField& g) {
  if (g.g.size() != g.grid.count()) validation_error("InvalidInput", "field size does not match its grid");
  for (std::size_t f = 0; f < g.g.size(); ++f) {
    double d = unitary_deviation(g.g[f]);
    if (d > 1e-8) validation_error("NotUnitary", "field value is not unitary", {{"index", f}, {"deviation", d}});
  }
}

// Spectral distance of g(k)^* g(k + e) from the identity must stay below 1.9.
void check_branch(const UnitaryField& g) {
  const MomentumGrid& gr = g.grid;
  const Eigen::Index n = g.g[0].rows();
  for (std::size_t f = 0; f < gr.count(); ++f)
    for (int a = 0; a < gr.dim; ++a) {
      CMatrix o = g.g[f].adjoint() * g.g[gr.shift(f, a, 1)] - CMatrix::Identity(n, n);
      double d = Eigen::JacobiSVD<CMatrix>(o).singularValues()(0);
      if (d > 1.9) {
        KVec k = gr.point(f);
        numerical_error("BranchUnsafe", "neighbouring values too far apart",
                        {{"k", {k[0], k[1], k[2]}}, {"axis", a}, {"distance", d}});
      }
    }
}

double phase_sum_1d(const UnitaryField& g) {
  check_unitary_field(g);
  check_branch(g);
  std::vector<double> steps;
  for (std::size_t f = 0; f < g.grid.count(); ++f)
    for (double p : unitary_phases(polar_unitary(g.g[f].adjoint() * g.g[g.grid.shift(f, 0, 1)])))
      steps.push_back(p);
  return pairwise_sum(steps);
}

}  // namespace

int winding1d(const UnitaryField& g) {
  if (g.grid.dim != 1) validation_error("InvalidGrid", "winding1d needs a 1D field");
  double raw = phase_sum_1d(g) / kTwoPi;
  int n = int(std::lround(raw));
  if (std::abs(raw - n) > 1e-6) numerical_error("BranchUnsafe", "phase sum is not integral", {{"raw", raw}});
  return n;
}

WindingResult winding3d(const UnitaryField& g, bool check_residue) {
  const MomentumGrid& gr = g.grid;
  if (gr.dim != 3) validation_error("InvalidGrid", "winding3d needs a 3D field");
  for (int a = 0; a < 3; ++a)
    if (gr.sizes[a] < 6) validation_error("InvalidGrid", "winding3d needs at least 6 points per axis");
  check_unitary_field(g);
  check_branch(g);
  auto at = [&](std::size_t f) -> const CMatrix& { return g.g[f]; };
  std::vector<double> dens(gr.count());
  for (std::size_t f = 0; f < gr.count(); ++f) {
    std::array<CMatrix, 3> a;
    for (int ax = 0; ax < 3; ++ax) a[ax] = g.g[f].adjoint() * central_diff(gr, f, ax, at);
    cd s = 0.0;
    for (const auto& p : kPerms3) s += p.sign * (a[p.i] * a[p.j] * a[p.k]).trace();
    dens[f] = s.real();
  }
  const double vol = (kTwoPi / gr.sizes[0]) * (kTwoPi / gr.sizes[1]) * (kTwoPi / gr.sizes[2]);
  WindingResult r;
  r.value = pairwise_sum(dens) * vol / (24.0 * kPi * kPi);
  r.rounded = int(std::lround(r.value));
  r.residue = std::abs(r.value - r.rounded);
  if (check_residue && r.residue > 0.1)
    numerical_error("ResidueTooLarge", "3D winding quadrature is not close to an integer",
                    {{"raw", r.value}, {"residue", r.residue}});
  return r;
}

BoundaryIndex boundary_index_2d(const SewingField& s) {
  const MomentumGrid& g = s.grid;
  if (g.dim != 2) validation_error("InvalidGrid", "boundary_index_2d needs a 2D sewing field");
  const std::vector<double> phi = det_gauge_phases(s);
  auto det_phase = [&](std::size_t f) { return std::arg(s.w[f].determinant()) - phi[f] - phi[g.neg(f)]; };
  auto pf_phase = [&](std::size_t f) {
    CMatrix w = s.w[f];
    cd pf = pfaffian(0.5 * (w - w.transpose()));
    if (std::abs(pf) < 1e-6)
      numerical_error("PfaffianNearZero", "Pfaffian of the sewing matrix vanishes", {{"magnitude", std::abs(pf)}});
    return std::arg(pf) - phi[f];
  };

  BoundaryIndex out;
  for (int c = 0; c < 2; ++c) {
    std::array<int, 3> m{g.trim_index(0, false), g.trim_index(1, c == 1), 0};
    const std::size_t start = g.flat(m);
    double prev = det_phase(start), delta = 0.0;
    for (int step = 0; step < g.sizes[0] / 2; ++step) {
      m[0] -= 1;
      double cur = det_phase(g.flat(m));
      double d = wrap_angle(cur - prev);
      if (std::abs(d) > kPi / 2)
        numerical_error("BranchUnsafe", "det w jumps by more than pi/2 along a boundary circle",
                        {{"circle_k2", c ? kPi : 0.0}, {"step", d}});
      delta += d;
      prev = cur;
    }
    const std::size_t end = g.flat(m);
    double raw = (delta - 2.0 * wrap_angle(pf_phase(end) - pf_phase(start))) / kTwoPi;
    int n = int(std::lround(raw));
    out.residue = std::max(out.residue, std::abs(raw - n));
    if (std::abs(raw - n) > 1e-6)
      numerical_error("BranchUnsafe", "boundary circle phase is not integral", {{"raw", raw}});
    (c == 0 ? out.n_south : out.n_north) = n;
  }
  out.value = (std::abs(out.n_south + out.n_north) % 2) ? -1 : 1;
  return out;
}

double odd_chern_character(const UnitaryField& g, int degree) {
  if (degree != 1 && degree != 3)
    validation_error("UnsupportedDegree", "only degrees 1 and 3 are implemented", {{"degree", degree}});
  if (g.grid.dim != degree) validation_error("InvalidInput", "field dimension must equal the form degree");
  if (degree == 1) return phase_sum_1d(g);
  return winding3d(g, false).value * 4.0 * kPi * kPi;
}

CMatrix su2_bump_map(const KVec& k, double radius) {
  auto integral = [](double t) {
    double t2 = t * t;
    return t * (1.0 + t2 * (-4.0 / 3.0 + t2 * (6.0 / 5.0 + t2 * (-4.0 / 7.0 + t2 / 9.0))));
  };
  // h(t) is the normalized integral of (1 - t^2)^4: odd near 0 and flat to fourth order at 1.
  const double r = k.norm();
  const double t = std::min(r / radius, 1.0);
  const double phi = kPi * integral(t) / integral(1.0);
  Eigen::Vector3d x = r > 1e-14 ? Eigen::Vector3d(k / r) : Eigen::Vector3d::Zero();
  const double s = std::sin(phi);
  cd beta(std::cos(phi), s * x[2]);
  cd alpha(s * x[1], s * x[0]);
  CMatrix g(2, 2);
  g << beta, alpha, -std::conj(alpha), std::conj(beta);
  return g;
}

UnitaryField periodized_su2_map(const MomentumGrid& grid, double radius) {
  if (grid.dim != 3) validation_error("InvalidGrid", "the SU(2) map lives on a 3D grid");
  UnitaryField u{grid, std::vector<CMatrix>(grid.count())};
  for (std::size_t f = 0; f < grid.count(); ++f) u.g[f] = su2_bump_map(grid.point(f), radius);
  return u;
}

}  // namespace topo
