#include "topo/berry.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace topo {

OccupiedFrame occupied_frame(const BlochFamily& model, const MomentumGrid& grid, double gap_tol) {
  if (grid.dim != model.dim)
    validation_error("InvalidGrid", "grid dimension differs from model dimension",
                     {{"grid_dim", grid.dim}, {"model_dim", model.dim}});
  OccupiedFrame fr;
  fr.grid = grid;
  fr.bands = model.bands;
  fr.occupied = model.occupied;
  fr.frames.resize(grid.count());
  fr.min_gap = INFINITY;
  for (std::size_t f = 0; f < grid.count(); ++f) {
    KVec k = grid.point(f);
    EigenSystem es = eigh(model.evaluate(k));
    double gap = es.values.cwiseAbs().minCoeff();
    fr.min_gap = std::min(fr.min_gap, gap);
    if (gap < gap_tol)
      numerical_error("GapClosed", "spectrum touches the Fermi level",
                      {{"k", {k[0], k[1], k[2]}}, {"min_abs_energy", gap}});
    int neg = int((es.values.array() < 0.0).count());
    if (neg != model.occupied)
      validation_error("OccupationMismatch", "number of negative bands differs from declared occupation",
                       {{"k", {k[0], k[1], k[2]}}, {"negative", neg}, {"occupied", model.occupied}});
    fr.frames[f] = es.vectors.leftCols(model.occupied);
  }
  return fr;
}

OccupiedFrame regauge(const OccupiedFrame& frame, const std::vector<CMatrix>& v) {
  if (v.size() != frame.frames.size()) validation_error("InvalidInput", "gauge field size mismatch");
  OccupiedFrame out = frame;
  for (std::size_t f = 0; f < v.size(); ++f) out.frames[f] = frame.frames[f] * v[f];
  return out;
}

namespace {

void check_plane(const MomentumGrid& g, const Plane& p) {
  if (g.dim < 2) validation_error("InvalidGrid", "Chern number needs a 2D grid or slice");
  if (p.axis_i == p.axis_j || p.axis_i < 0 || p.axis_j < 0 || p.axis_i >= g.dim || p.axis_j >= g.dim)
    validation_error("InvalidInput", "bad plane axes");
}

cd link(const OccupiedFrame& fr, std::size_t f, int axis) {
  return (fr.frames[f].adjoint() * fr.frames[fr.grid.shift(f, axis, 1)]).determinant();
}

// Plaquette phases of the plane in row-major (m_i, m_j) order.
std::vector<double> plaquettes(const OccupiedFrame& fr, const Plane& p, double* min_link) {
  const MomentumGrid& g = fr.grid;
  check_plane(g, p);
  const int third = 3 - p.axis_i - p.axis_j;
  const int ni = g.sizes[p.axis_i], nj = g.sizes[p.axis_j];
  std::vector<double> out(std::size_t(ni) * nj);
  double ml = INFINITY;
  for (int a = 0; a < ni; ++a)
    for (int b = 0; b < nj; ++b) {
      std::array<int, 3> m{0, 0, 0};
      m[p.axis_i] = a;
      m[p.axis_j] = b;
      if (g.dim == 3) m[third] = p.slice;
      std::size_t f = g.flat(m);
      cd u1 = link(fr, f, p.axis_i);
      cd u2 = link(fr, g.shift(f, p.axis_i, 1), p.axis_j);
      cd u3 = link(fr, g.shift(f, p.axis_j, 1), p.axis_i);
      cd u4 = link(fr, f, p.axis_j);
      ml = std::min({ml, std::abs(u1), std::abs(u2), std::abs(u3), std::abs(u4)});
      out[std::size_t(a) * nj + b] = std::arg(u1 * u2 * std::conj(u3) * std::conj(u4));
    }
  if (min_link) *min_link = ml;
  if (ml < 1e-8) numerical_error("GridTooCoarse", "link overlap determinant vanishes", {{"min_link", ml}});
  return out;
}

}  // namespace

ChernResult chern_details(const OccupiedFrame& frame, Plane plane) {
  ChernResult r;
  auto ph = plaquettes(frame, plane, &r.min_link);
  for (double x : ph) r.max_plaquette = std::max(r.max_plaquette, std::abs(x));
  if (r.max_plaquette > 0.95 * kPi)
    numerical_error("GridTooCoarse", "plaquette phase too close to the branch cut",
                    {{"max_plaquette", r.max_plaquette}});
  r.raw = pairwise_sum(ph) / kTwoPi;
  r.chern = int(std::lround(r.raw));
  // The sum telescopes to 2 pi times an integer; anything else is a bug, not noise.
  if (std::abs(r.raw - r.chern) > 1e-6)
    numerical_error("GridTooCoarse", "plaquette sum is not integral", {{"raw", r.raw}});
  return r;
}

int chern_number(const OccupiedFrame& frame, Plane plane) { return chern_details(frame, plane).chern; }

CurvatureField berry_curvature_field(const OccupiedFrame& frame, Plane plane) {
  CurvatureField c;
  c.grid = frame.grid;
  c.plane = plane;
  c.values = plaquettes(frame, plane, nullptr);
  for (double x : c.values)
    if (std::abs(x) > 0.95 * kPi)
      numerical_error("GridTooCoarse", "plaquette phase too close to the branch cut", {{"plaquette", x}});
  return c;
}

std::string CurvatureField::to_csv() const {
  std::ostringstream os;
  os.precision(12);
  os << "k" << plane.axis_i + 1 << ",k" << plane.axis_j + 1 << ",value\n";
  const int ni = grid.sizes[plane.axis_i], nj = grid.sizes[plane.axis_j];
  for (int a = 0; a < ni; ++a)
    for (int b = 0; b < nj; ++b)
      os << -kPi + kTwoPi * a / ni << "," << -kPi + kTwoPi * b / nj << "," << values[std::size_t(a) * nj + b]
         << "\n";
  return os.str();
}

nlohmann::json CurvatureField::to_json() const {
  return {{"axes", {plane.axis_i, plane.axis_j}},
          {"sizes", {grid.sizes[plane.axis_i], grid.sizes[plane.axis_j]}},
          {"values", values}};
}

namespace {

CMatrix inv_sqrt_psd(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
  RVector d = es.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * d.cast<cd>().asDiagonal() * es.eigenvectors().adjoint();
}

double min_link_det(const OccupiedFrame& fr) {
  double m = INFINITY;
  for (std::size_t f = 0; f < fr.grid.count(); ++f)
    for (int a = 0; a < fr.grid.dim; ++a) m = std::min(m, std::abs(link(fr, f, a)));
  return m;
}

}  // namespace

OccupiedFrame smooth_gauge(const OccupiedFrame& frame, GaugeReport* report, int sweeps) {
  const MomentumGrid& g = frame.grid;
  const int n = frame.bands, occ = frame.occupied;
  const std::size_t count = g.count();
  std::vector<CMatrix> proj(count);
  for (std::size_t f = 0; f < count; ++f) proj[f] = frame.frames[f] * frame.frames[f].adjoint();

  // Trial subspaces: leading eigenvectors of random combinations of a few projectors.
  std::mt19937_64 rng(20240611);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::size_t> pick(0, count - 1);
  CMatrix best;
  double best_score = -1.0;
  for (int trial = 0; trial < 512; ++trial) {
    CMatrix mix = CMatrix::Zero(n, n);
    int terms = 1 + trial % 3;
    for (int t = 0; t < terms; ++t) mix += normal(rng) * proj[pick(rng)];
    Eigen::SelfAdjointEigenSolver<CMatrix> es(mix);
    CMatrix chi = es.eigenvectors().rightCols(occ);
    double score = INFINITY;
    for (std::size_t f = 0; f < count && score > best_score; ++f)
      score = std::min(score, std::abs((chi.adjoint() * proj[f] * chi).determinant()));
    if (score > best_score) {
      best_score = score;
      best = chi;
    }
  }
  if (best_score < 1e-3)
    numerical_error("GaugeConstructionFailed", "no trial subspace overlaps the occupied space everywhere",
                    {{"best_overlap", best_score}});

  OccupiedFrame out = frame;
  for (std::size_t f = 0; f < count; ++f) {
    CMatrix pc = proj[f] * best;
    out.frames[f] = pc * inv_sqrt_psd(best.adjoint() * pc);
  }

  std::vector<CMatrix> next(count);
  for (int s = 0; s < sweeps; ++s) {
    for (std::size_t f = 0; f < count; ++f) {
      CMatrix m = CMatrix::Zero(occ, occ);
      for (int a = 0; a < g.dim; ++a)
        for (int step : {1, -1}) m += out.frames[f].adjoint() * out.frames[g.shift(f, a, step)];
      next[f] = out.frames[f] * polar_unitary(m);
    }
    out.frames.swap(next);
  }
  double ml = min_link_det(out);
  if (report) *report = GaugeReport{best_score, ml, sweeps};
  if (ml < 1e-3)
    numerical_error("GaugeConstructionFailed", "relaxed gauge still has near-singular link overlaps",
                    {{"min_link", ml}});
  return out;
}

double chern_simons(const OccupiedFrame& frame) {
  const MomentumGrid& g = frame.grid;
  if (g.dim != 3) validation_error("InvalidGrid", "Chern-Simons integral needs a 3D grid");
  for (int a = 0; a < 3; ++a)
    if (g.sizes[a] < 6) validation_error("InvalidGrid", "Chern-Simons quadrature needs at least 6 points per axis");
  auto at = [&](std::size_t f) -> const CMatrix& { return frame.frames[f]; };
  std::vector<double> dens(g.count());
  for (std::size_t f = 0; f < g.count(); ++f) {
    std::array<CMatrix, 3> d, a;
    for (int ax = 0; ax < 3; ++ax) {
      d[ax] = central_diff(g, f, ax, at);
      a[ax] = frame.frames[f].adjoint() * d[ax];
    }
    // eps^{ijk} tr(A_i d_j A_k) only keeps tr(A_i (d_j psi)^* d_k psi); the
    // second-derivative piece is symmetric in (j, k).
    cd s = 0.0;
    for (const auto& p : kPerms3)
      s += p.sign * (a[p.i] * (d[p.j].adjoint() * d[p.k]) + (2.0 / 3.0) * a[p.i] * a[p.j] * a[p.k]).trace();
    dens[f] = s.real();
  }
  const double vol = (kTwoPi / g.sizes[0]) * (kTwoPi / g.sizes[1]) * (kTwoPi / g.sizes[2]);
  return -pairwise_sum(dens) * vol / (8.0 * kPi * kPi);
}

P3Result polarization_p3(const OccupiedFrame& frame) {
  P3Result r;
  OccupiedFrame smooth = smooth_gauge(frame, &r.gauge);
  r.raw = chern_simons(smooth);
  r.mod1 = r.raw - std::floor(r.raw);
  if (r.mod1 >= 1.0) r.mod1 = 0.0;
  r.distance_to_zero = std::min(r.mod1, 1.0 - r.mod1);
  r.distance_to_half = std::abs(r.mod1 - 0.5);
  return r;
}

double delta_p3(const OccupiedFrame& frame, const UnitaryField& gauge) {
  if (gauge.g.size() != frame.frames.size()) validation_error("InvalidInput", "gauge field size mismatch");
  for (const auto& m : gauge.g)
    if (m.rows() != frame.occupied || m.cols() != frame.occupied)
      validation_error("InvalidInput", "gauge matrices must be occupied x occupied");
  OccupiedFrame smooth = smooth_gauge(frame);
  return chern_simons(regauge(smooth, gauge.g)) - chern_simons(smooth);
}

}  // namespace topo
