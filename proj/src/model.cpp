#include "topo/model.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <set>

namespace topo {

using nlohmann::json;

MomentumGrid MomentumGrid::make(int dim, std::array<int, 3> sizes) {
  if (dim < 1 || dim > 3) validation_error("InvalidGrid", "dimension must be 1, 2 or 3", {{"dim", dim}});
  MomentumGrid g;
  g.dim = dim;
  for (int a = 0; a < 3; ++a) {
    if (a >= dim) {
      g.sizes[a] = 1;
      continue;
    }
    if (sizes[a] < 2 || sizes[a] % 2)
      validation_error("InvalidGrid", "grid sizes must be even and at least 2",
                       {{"axis", a}, {"size", sizes[a]}});
    g.sizes[a] = sizes[a];
  }
  return g;
}

std::array<int, 3> MomentumGrid::multi(std::size_t flat) const {
  std::array<int, 3> m{};
  m[2] = int(flat % sizes[2]);
  flat /= sizes[2];
  m[1] = int(flat % sizes[1]);
  m[0] = int(flat / sizes[1]);
  return m;
}

std::size_t MomentumGrid::flat(std::array<int, 3> m) const {
  for (int a = 0; a < 3; ++a) m[a] = ((m[a] % sizes[a]) + sizes[a]) % sizes[a];
  return (std::size_t(m[0]) * sizes[1] + m[1]) * sizes[2] + m[2];
}

KVec MomentumGrid::point(std::size_t f) const {
  auto m = multi(f);
  KVec k = KVec::Zero();
  for (int a = 0; a < dim; ++a) k[a] = -kPi + kTwoPi * m[a] / sizes[a];
  return k;
}

std::size_t MomentumGrid::neg(std::size_t f) const {
  auto m = multi(f);
  for (int a = 0; a < 3; ++a) m[a] = (sizes[a] - m[a]) % sizes[a];
  return flat(m);
}

std::size_t MomentumGrid::shift(std::size_t f, int axis, int step) const {
  auto m = multi(f);
  m[axis] += step;
  return flat(m);
}

json MomentumGrid::describe() const {
  return {{"dim", dim}, {"sizes", std::vector<int>(sizes.begin(), sizes.begin() + dim)}};
}

std::vector<Trim> trim_points(const MomentumGrid& grid) {
  std::vector<Trim> out;
  const int d = grid.dim;
  for (int bits = 0; bits < (1 << d); ++bits) {
    Trim t;
    std::array<int, 3> m{0, 0, 0};
    for (int a = 0; a < d; ++a) {
      t.at_pi[a] = (bits >> (d - 1 - a)) & 1;
      t.k[a] = t.at_pi[a] ? kPi : 0.0;
      m[a] = grid.trim_index(a, t.at_pi[a]);
    }
    t.flat = grid.flat(m);
    out.push_back(t);
  }
  return out;
}

TimeReversal TimeReversal::make(const CMatrix& u) {
  if (u.rows() != u.cols() || u.rows() == 0)
    validation_error("InvalidTimeReversal", "unitary part must be a nonempty square matrix");
  double du = unitary_deviation(u);
  if (du > 1e-10) validation_error("InvalidTimeReversal", "unitary part is not unitary", {{"deviation", du}});
  CMatrix sq = u * u.conjugate() + CMatrix::Identity(u.rows(), u.cols());
  double ds = sq.cwiseAbs().maxCoeff();
  if (ds > 1e-12) validation_error("InvalidTimeReversal", "Theta^2 != -1", {{"deviation", ds}});
  return TimeReversal{u};
}

TimeReversal TimeReversal::standard(int bands) {
  if (bands % 2) validation_error("InvalidTimeReversal", "i sigma_2 needs an even band count");
  CMatrix isy(2, 2);
  isy << 0, 1, -1, 0;
  CMatrix u = Eigen::kroneckerProduct(isy, CMatrix::Identity(bands / 2, bands / 2));
  return TimeReversal{u};
}

TrsReport check_trs(const BlochFamily& model, const MomentumGrid& grid) {
  if (!model.time_reversal) validation_error("NoTimeReversal", "model carries no time reversal operator");
  TrsReport r;
  for (std::size_t f = 0; f < grid.count(); ++f) {
    CMatrix lhs = model.time_reversal->conjugate(model.evaluate(grid.point(f)));
    CMatrix rhs = model.evaluate(grid.point(grid.neg(f)));
    r.max_deviation = std::max(r.max_deviation, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  r.pass = r.max_deviation <= 1e-10;
  return r;
}

double min_abs_energy(const BlochFamily& model, const MomentumGrid& grid) {
  double g = INFINITY;
  for (std::size_t f = 0; f < grid.count(); ++f) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(model.evaluate(grid.point(f)), Eigen::EigenvaluesOnly);
    g = std::min(g, es.eigenvalues().cwiseAbs().minCoeff());
  }
  return g;
}

namespace {

const CMatrix& pauli(int i) {
  static const std::array<CMatrix, 4> s = [] {
    std::array<CMatrix, 4> p;
    for (auto& m : p) m = CMatrix::Zero(2, 2);
    p[0] << 1, 0, 0, 1;
    p[1] << 0, 1, 1, 0;
    p[2] << 0, cd(0, -1), cd(0, 1), 0;
    p[3] << 1, 0, 0, -1;
    return p;
  }();
  return s[i];
}

CMatrix kron(const CMatrix& a, const CMatrix& b) { return Eigen::kroneckerProduct(a, b); }

class ParamReader {
 public:
  ParamReader(const std::string& model, const Params& p) : model_(model), p_(p) {}

  double get(const std::string& key, double def) {
    allowed_.insert(key);
    auto it = p_.find(key);
    double v = it == p_.end() ? def : it->second;
    if (!std::isfinite(v)) validation_error("InvalidParams", model_ + ": parameter '" + key + "' is not finite");
    return v;
  }

  void finish() const {
    for (const auto& [k, v] : p_)
      if (!allowed_.count(k) && k != "shift")
        validation_error("InvalidParams", model_ + ": unknown parameter '" + k + "'", {{"param", k}});
  }

 private:
  std::string model_;
  const Params& p_;
  std::set<std::string> allowed_;
};

int as_int(double v, const std::string& what) {
  if (v != std::floor(v)) validation_error("InvalidParams", what + " must be an integer");
  return int(v);
}

BlochFamily hopf(ParamReader& r) {
  double m = r.get("m", 1.0);
  if (std::abs(m) < 1e-9 || std::abs(std::abs(m) - 2.0) < 1e-9)
    validation_error("InvalidParams", "hopf-two-band: m must avoid 0 and +-2 (gap closes)");
  BlochFamily f;
  f.name = "hopf-two-band";
  f.dim = 2;
  f.bands = 2;
  f.occupied = 1;
  f.hopping_range = {1, 1, 0};
  // The occupied projector is p(x,y,z) = 1/2 [[1+z, x+iy],[x-iy, 1-z]] with (x,y,z)
  // the unit vector of a degree-one map T^2 -> S^2; H = 1 - 2p is spectrally flat.
  f.evaluate = [m](const KVec& k) {
    Eigen::Vector3d d(std::sin(k[0]), std::sin(k[1]), m - std::cos(k[0]) - std::cos(k[1]));
    d.normalize();
    CMatrix p(2, 2);
    p << 1.0 + d[2], cd(d[0], d[1]), cd(d[0], -d[1]), 1.0 - d[2];
    p *= 0.5;
    return CMatrix(CMatrix::Identity(2, 2) - 2.0 * p);
  };
  return f;
}

BlochFamily kane_mele(ParamReader& r) {
  double t = r.get("t", 1.0), lso = r.get("lso", 0.06), lv = r.get("lv", 0.1), lr = r.get("lr", 0.0);
  BlochFamily f;
  f.name = "kane-mele";
  f.dim = 2;
  f.bands = 4;
  f.occupied = 2;
  f.hopping_range = {1, 1, 0};
  f.time_reversal = TimeReversal::standard(4);
  // Honeycomb with a1 = (1,0), a2 = (1/2, sqrt3/2); the three B neighbours of A
  // sit in cells 0, -a1, -a2 with bond directions below. Basis spin (x) sublattice.
  const double s3 = std::sqrt(3.0) / 2.0;
  const std::array<Eigen::Vector2d, 3> bond{Eigen::Vector2d(s3, 0.5), Eigen::Vector2d(-s3, 0.5),
                                            Eigen::Vector2d(0.0, -1.0)};
  f.evaluate = [=](const KVec& k) {
    const double k1 = k[0], k2 = k[1];
    const std::array<cd, 3> phase{1.0, std::exp(cd(0, -k1)), std::exp(cd(0, -k2))};
    cd g = t * (phase[0] + phase[1] + phase[2]);
    double fso = 2.0 * (std::sin(k1) - std::sin(k2) - std::sin(k1 - k2));
    CMatrix h = CMatrix::Zero(4, 4);
    for (int s = 0; s < 2; ++s) {
      double sgn = s == 0 ? 1.0 : -1.0;
      int o = 2 * s;
      h(o, o) = lv + sgn * lso * fso;
      h(o + 1, o + 1) = -lv - sgn * lso * fso;
      h(o, o + 1) = g;
      h(o + 1, o) = std::conj(g);
    }
    if (lr != 0.0) {
      // i lambda_R (s x d)_z on each A-B bond, spin blocks coupled.
      CMatrix ab = CMatrix::Zero(2, 2);
      for (int j = 0; j < 3; ++j)
        ab += cd(0, lr) * (pauli(1) * bond[j].y() - pauli(2) * bond[j].x()) * phase[j];
      CMatrix rb = kron(ab, (CMatrix(2, 2) << 0, 1, 0, 0).finished());
      h += rb + rb.adjoint();
    }
    return h;
  };
  return f;
}

BlochFamily bhz(ParamReader& r) {
  double a = r.get("a", 1.0), b = r.get("b", 1.0), m = r.get("m", 1.0);
  BlochFamily f;
  f.name = "bhz";
  f.dim = 2;
  f.bands = 4;
  f.occupied = 2;
  f.hopping_range = {1, 1, 0};
  f.time_reversal = TimeReversal::standard(4);
  auto up = [=](double kx, double ky) {
    return CMatrix(a * std::sin(kx) * pauli(1) + a * std::sin(ky) * pauli(2) +
                   (m - 2.0 * b * (2.0 - std::cos(kx) - std::cos(ky))) * pauli(3));
  };
  f.evaluate = [up](const KVec& k) {
    CMatrix h = CMatrix::Zero(4, 4);
    h.topLeftCorner(2, 2) = up(k[0], k[1]);
    h.bottomRightCorner(2, 2) = up(-k[0], -k[1]).conjugate();
    return h;
  };
  return f;
}

BlochFamily fu_kane_mele(ParamReader& r) {
  double t = r.get("t", 1.0), dt = r.get("dt", 0.5), lso = r.get("lso", 0.125);
  BlochFamily f;
  f.name = "fu-kane-mele-3d";
  f.dim = 3;
  f.bands = 4;
  f.occupied = 2;
  f.hopping_range = {1, 1, 1};
  f.time_reversal = TimeReversal::standard(4);
  // Diamond lattice in reduced coordinates, H = sum_a d_a Gamma_a with
  // Gamma_{1,2} = 1 (x) tau_{x,y} and Gamma_{3,4,5} = s_{x,y,z} (x) tau_z.
  static const std::array<CMatrix, 5> gam{kron(pauli(0), pauli(1)), kron(pauli(0), pauli(2)),
                                          kron(pauli(1), pauli(3)), kron(pauli(2), pauli(3)),
                                          kron(pauli(3), pauli(3))};
  f.evaluate = [=](const KVec& k) {
    const double k1 = k[0], k2 = k[1], k3 = k[2];
    std::array<double, 5> d{
        t + dt + t * (std::cos(k1) + std::cos(k2) + std::cos(k3)),
        t * (std::sin(k1) + std::sin(k2) + std::sin(k3)),
        lso * (std::sin(k2) - std::sin(k3) - std::sin(k2 - k1) + std::sin(k3 - k1)),
        lso * (std::sin(k3) - std::sin(k1) - std::sin(k3 - k2) + std::sin(k1 - k2)),
        lso * (std::sin(k1) - std::sin(k2) - std::sin(k1 - k3) + std::sin(k2 - k3))};
    CMatrix h = CMatrix::Zero(4, 4);
    for (int i = 0; i < 5; ++i) h += d[i] * gam[i];
    return h;
  };
  return f;
}

BlochFamily kitaev_chain(ParamReader& r) {
  double t = r.get("t", 1.0), mu = r.get("mu", 0.5), delta = r.get("delta", 0.5);
  BlochFamily f;
  f.name = "kitaev-chain";
  f.dim = 1;
  f.bands = 4;
  f.occupied = 2;
  f.hopping_range = {1, 0, 0};
  f.time_reversal = TimeReversal::standard(4);
  // Spinful doubling of the BdG chain h_K = (-2t cos k - mu) tau_z + 2 Delta sin k tau_y,
  // which satisfies conj(h_K(k)) = h_K(-k).
  f.evaluate = [=](const KVec& k) {
    CMatrix hk = (-2.0 * t * std::cos(k[0]) - mu) * pauli(3) + 2.0 * delta * std::sin(k[0]) * pauli(2);
    return kron(pauli(0), hk);
  };
  return f;
}

BlochFamily atomic_limit(ParamReader& r) {
  int n = as_int(r.get("n", 4), "atomic-limit: n");
  int dim = as_int(r.get("dim", 2), "atomic-limit: dim");
  double gap = r.get("gap", 1.0);
  if (n < 4 || n % 4) validation_error("InvalidParams", "atomic-limit: n must be a positive multiple of 4");
  if (dim < 1 || dim > 3) validation_error("InvalidParams", "atomic-limit: dim must be 1, 2 or 3");
  if (!(gap > 0)) validation_error("InvalidParams", "atomic-limit: gap must be positive");
  BlochFamily f;
  f.name = "atomic-limit";
  f.dim = dim;
  f.bands = n;
  f.occupied = n / 2;
  f.time_reversal = TimeReversal::standard(n);
  RVector orb(n / 2);
  for (int i = 0; i < n / 2; ++i) orb[i] = i < n / 4 ? -gap : gap;
  CMatrix h = kron(pauli(0), CMatrix(orb.cast<cd>().asDiagonal()));
  f.evaluate = [h](const KVec&) { return h; };
  return f;
}

}  // namespace

std::vector<std::string> builtin_names() {
  return {"hopf-two-band", "kane-mele", "bhz", "fu-kane-mele-3d", "kitaev-chain", "atomic-limit"};
}

BlochFamily builtin(const std::string& name, const Params& params) {
  ParamReader r(name, params);
  BlochFamily f;
  if (name == "hopf-two-band") f = hopf(r);
  else if (name == "kane-mele") f = kane_mele(r);
  else if (name == "bhz") f = bhz(r);
  else if (name == "fu-kane-mele-3d") f = fu_kane_mele(r);
  else if (name == "kitaev-chain") f = kitaev_chain(r);
  else if (name == "atomic-limit") f = atomic_limit(r);
  else validation_error("UnknownModel", "no builtin model named '" + name + "'", {{"model", name}});
  r.finish();
  auto it = params.find("shift");
  if (it != params.end() && it->second != 0.0) {
    double e = it->second;
    auto inner = f.evaluate;
    int n = f.bands;
    f.evaluate = [inner, e, n](const KVec& k) { return CMatrix(inner(k) - e * CMatrix::Identity(n, n)); };
  }
  return f;
}

BlochFamily direct_sum(const BlochFamily& a, const BlochFamily& b) {
  if (a.dim != b.dim) validation_error("InvalidParams", "direct_sum needs equal lattice dimensions");
  BlochFamily f;
  f.name = a.name + "+" + b.name;
  f.dim = a.dim;
  f.bands = a.bands + b.bands;
  f.occupied = a.occupied + b.occupied;
  for (int i = 0; i < 3; ++i) f.hopping_range[i] = std::max(a.hopping_range[i], b.hopping_range[i]);
  auto ea = a.evaluate, eb = b.evaluate;
  int na = a.bands, nb = b.bands;
  auto blockdiag = [na, nb](const CMatrix& x, const CMatrix& y) {
    CMatrix h = CMatrix::Zero(na + nb, na + nb);
    h.topLeftCorner(na, na) = x;
    h.bottomRightCorner(nb, nb) = y;
    return h;
  };
  f.evaluate = [=](const KVec& k) { return blockdiag(ea(k), eb(k)); };
  if (a.time_reversal && b.time_reversal)
    f.time_reversal = TimeReversal{blockdiag(a.time_reversal->unitary, b.time_reversal->unitary)};
  return f;
}

BlochFamily stack_layers(const BlochFamily& layer) {
  if (layer.dim != 2) validation_error("InvalidParams", "stack_layers needs a 2D layer model");
  BlochFamily f = layer;
  f.name = "stacked-" + layer.name;
  f.dim = 3;
  f.hopping_range[2] = 0;
  auto inner = layer.evaluate;
  f.evaluate = [inner](const KVec& k) { return inner(KVec(k[0], k[1], 0.0)); };
  return f;
}

BlochFamily fix_momentum(const BlochFamily& model, int axis, double kfix) {
  if (axis < 0 || axis >= model.dim || model.dim < 2)
    validation_error("InvalidParams", "fix_momentum: axis out of range");
  BlochFamily f = model;
  f.name = model.name + "@k" + std::to_string(axis);
  f.dim = model.dim - 1;
  for (int a = axis; a < 2; ++a) f.hopping_range[a] = model.hopping_range[a + 1];
  f.hopping_range[2] = 0;
  double w = wrap_angle(kfix);
  bool invariant = std::abs(w) < 1e-14 || std::abs(std::abs(w) - kPi) < 1e-14;
  if (!invariant) f.time_reversal.reset();
  auto inner = model.evaluate;
  f.evaluate = [inner, axis, kfix](const KVec& k) {
    KVec full = KVec::Zero();
    for (int a = 0, j = 0; a < 3; ++a) full[a] = a == axis ? kfix : (j < 2 ? k[j++] : 0.0);
    return inner(full);
  };
  return f;
}

BlochFamily add_zeeman(const BlochFamily& model, double field) {
  if (model.bands % 2) validation_error("InvalidParams", "add_zeeman needs an even band count");
  BlochFamily f = model;
  f.name = model.name + "+zeeman";
  CMatrix z = field * kron(pauli(3), CMatrix::Identity(model.bands / 2, model.bands / 2));
  auto inner = model.evaluate;
  f.evaluate = [inner, z](const KVec& k) { return CMatrix(inner(k) + z); };
  return f;
}

RibbonFamily ribbonize(const BlochFamily& model, int open_axis, int width, bool periodic) {
  if (width < 8) validation_error("InvalidParams", "ribbon width must be at least 8", {{"width", width}});
  if (open_axis < 0 || open_axis >= model.dim)
    validation_error("InvalidParams", "open axis out of range", {{"open_axis", open_axis}});
  const int range = model.hopping_range[open_axis];
  if (2 * range + 1 > width)
    validation_error("InvalidParams", "ribbon narrower than the hopping range");
  const int samples = std::max(8, 2 * range + 6);
  const int n = model.bands;
  std::vector<int> par;
  for (int a = 0; a < model.dim; ++a)
    if (a != open_axis) par.push_back(a);

  auto inner = model.evaluate;
  // Fourier coefficients T_r with H(k) = sum_r T_r e^{i k r} along the open axis.
  auto hoppings = [=](const KVec& kpar, bool check) {
    KVec k = KVec::Zero();
    for (std::size_t j = 0; j < par.size(); ++j) k[par[j]] = kpar[j];
    std::vector<CMatrix> hs;
    for (int j = 0; j < samples; ++j) {
      k[open_axis] = kTwoPi * j / samples;
      hs.push_back(inner(k));
    }
    std::vector<CMatrix> t(samples, CMatrix::Zero(n, n));
    for (int ri = 0; ri < samples; ++ri) {
      int r = ri - samples / 2;
      for (int j = 0; j < samples; ++j) t[ri] += hs[j] * std::exp(cd(0, -kTwoPi * r * j / samples));
      t[ri] /= double(samples);
      if (check && std::abs(r) > range) {
        double mag = t[ri].cwiseAbs().maxCoeff();
        if (mag > 1e-10)
          validation_error("HoppingRangeTooLong", "Fourier coefficient beyond the declared hopping range",
                           {{"r", r}, {"magnitude", mag}, {"declared_range", range}});
      }
    }
    return t;
  };
  hoppings(KVec::Zero(), true);
  hoppings(KVec(0.37, 0.71, 0.0), true);

  RibbonFamily rb;
  rb.width = width;
  rb.block = n;
  rb.open_axis = open_axis;
  rb.par_dim = int(par.size());
  rb.periodic = periodic;
  rb.evaluate = [=](const KVec& kpar) {
    auto t = hoppings(kpar, false);
    CMatrix h = CMatrix::Zero(width * n, width * n);
    for (int r = -range; r <= range; ++r) {
      const CMatrix& tr = t[r + samples / 2];
      for (int i = 0; i < width; ++i) {
        int j = i + r;
        if (j < 0 || j >= width) {
          if (!periodic) continue;
          j = ((j % width) + width) % width;
        }
        h.block(i * n, j * n, n, n) += tr;
      }
    }
    return CMatrix(0.5 * (h + h.adjoint()));
  };
  if (model.time_reversal) {
    CMatrix u = CMatrix::Zero(width * n, width * n);
    for (int i = 0; i < width; ++i) u.block(i * n, i * n, n, n) = model.time_reversal->unitary;
    rb.time_reversal = TimeReversal{u};
  }
  // Scan sizes divisible by 6 so the grid holds the hexagonal K points as well as 0 and pi.
  int scan = model.dim == 3 ? 24 : (model.dim == 2 ? 72 : 258);
  rb.bulk_gap = min_abs_energy(model, MomentumGrid::uniform(model.dim, scan));
  return rb;
}

nlohmann::json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

CMatrix matrix_from_json(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) validation_error("SchemaError", "expected a nonempty matrix", {{"path", path}});
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  CMatrix m;
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& row = j[r];
    std::string rp = path + "/" + std::to_string(r);
    if (!row.is_array() || row.empty()) validation_error("SchemaError", "expected a matrix row", {{"path", rp}});
    if (r == 0) {
      cols = row.size();
      m = CMatrix::Zero(rows, cols);
    } else if (row.size() != cols) {
      validation_error("SchemaError", "ragged matrix", {{"path", rp}});
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const auto& e = row[c];
      std::string ep = rp + "/" + std::to_string(c);
      if (e.is_number()) {
        m(r, c) = e.get<double>();
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        m(r, c) = cd(e[0].get<double>(), e[1].get<double>());
      } else {
        validation_error("SchemaError", "matrix entry must be [re, im]", {{"path", ep}});
      }
    }
  }
  return m;
}

BlochFamily load_model(const json& doc) {
  auto need_int = [&](const char* key) {
    if (!doc.contains(key) || !doc[key].is_number_integer())
      validation_error("SchemaError", std::string("missing or non-integer '") + key + "'",
                       {{"path", std::string("/") + key}});
    return doc[key].get<int>();
  };
  if (!doc.is_object()) validation_error("SchemaError", "model document must be an object", {{"path", "/"}});
  const int dim = need_int("dim"), bands = need_int("bands"), occupied = need_int("occupied");
  if (dim < 1 || dim > 3) validation_error("SchemaError", "dim must be 1, 2 or 3", {{"path", "/dim"}});
  if (bands < 1) validation_error("SchemaError", "bands must be positive", {{"path", "/bands"}});
  if (occupied < 0 || occupied > bands)
    validation_error("SchemaError", "occupied must lie in [0, bands]", {{"path", "/occupied"}});
  if (!doc.contains("terms") || !doc["terms"].is_array())
    validation_error("SchemaError", "missing 'terms' array", {{"path", "/terms"}});

  struct Term {
    Eigen::Vector3d r;
    CMatrix m;
  };
  std::vector<Term> terms;
  CMatrix onsite = CMatrix::Zero(bands, bands);
  std::array<int, 3> range{0, 0, 0};
  for (std::size_t i = 0; i < doc["terms"].size(); ++i) {
    const auto& t = doc["terms"][i];
    std::string p = "/terms/" + std::to_string(i);
    if (!t.is_object() || !t.contains("R") || !t["R"].is_array() || int(t["R"].size()) != dim)
      validation_error("SchemaError", "term needs an integer vector R of length dim", {{"path", p + "/R"}});
    Eigen::Vector3d r = Eigen::Vector3d::Zero();
    for (int a = 0; a < dim; ++a) {
      if (!t["R"][a].is_number_integer())
        validation_error("SchemaError", "R entries must be integers", {{"path", p + "/R/" + std::to_string(a)}});
      int v = t["R"][a].get<int>();
      r[a] = v;
      range[a] = std::max(range[a], std::abs(v));
    }
    if (!t.contains("matrix")) validation_error("SchemaError", "term without matrix", {{"path", p + "/matrix"}});
    CMatrix m = matrix_from_json(t["matrix"], p + "/matrix");
    if (m.rows() != bands || m.cols() != bands)
      validation_error("SchemaError", "term matrix must be bands x bands", {{"path", p + "/matrix"}});
    if (r.isZero()) onsite += m;
    else terms.push_back({r, m});
  }
  double dev = hermitian_deviation(onsite);
  if (dev > 1e-12) validation_error("NonHermitianInput", "on-site (R = 0) terms are not Hermitian", {{"deviation", dev}});

  BlochFamily f;
  f.name = doc.value("name", std::string("custom"));
  f.dim = dim;
  f.bands = bands;
  f.occupied = occupied;
  f.hopping_range = range;
  const double shift = doc.value("fermi_shift", 0.0);
  f.evaluate = [terms, onsite, shift, bands](const KVec& k) {
    CMatrix h = onsite - shift * CMatrix::Identity(bands, bands);
    for (const auto& t : terms) {
      cd ph = std::exp(cd(0, k.dot(t.r)));
      h += t.m * ph + t.m.adjoint() * std::conj(ph);
    }
    return h;
  };
  if (doc.contains("time_reversal") && !doc["time_reversal"].is_null()) {
    CMatrix u = matrix_from_json(doc["time_reversal"], "/time_reversal");
    if (u.rows() != bands || u.cols() != bands)
      validation_error("SchemaError", "time_reversal must be bands x bands", {{"path", "/time_reversal"}});
    f.time_reversal = TimeReversal::make(u);
    if (occupied % 2)
      validation_error("InvalidParams", "occupied band count must be even for a time-reversal invariant model");
  }
  return f;
}

json model_to_json(const BlochFamily& model) {
  const int d = model.dim, n = model.bands;
  std::array<int, 3> m{1, 1, 1};
  for (int a = 0; a < d; ++a) m[a] = 2 * model.hopping_range[a] + 2;
  const MomentumGrid g = [&] {
    MomentumGrid gg;
    gg.dim = d;
    gg.sizes = m;
    return gg;
  }();
  std::vector<CMatrix> hs(g.count());
  std::vector<Eigen::Vector3d> ks(g.count());
  for (std::size_t f = 0; f < g.count(); ++f) {
    auto mi = g.multi(f);
    for (int a = 0; a < 3; ++a) ks[f][a] = a < d ? kTwoPi * mi[a] / m[a] : 0.0;
    hs[f] = model.evaluate(ks[f]);
  }
  json terms = json::array();
  const std::array<int, 3> r0{-model.hopping_range[0] - 1, d > 1 ? -model.hopping_range[1] - 1 : 0,
                              d > 2 ? -model.hopping_range[2] - 1 : 0};
  for (int r1 = r0[0]; r1 <= -r0[0]; ++r1)
    for (int r2 = r0[1]; r2 <= -r0[1]; ++r2)
      for (int r3 = r0[2]; r3 <= -r0[2]; ++r3) {
        std::array<int, 3> r{r1, r2, r3};
        CMatrix t = CMatrix::Zero(n, n);
        for (std::size_t f = 0; f < g.count(); ++f)
          t += hs[f] * std::exp(cd(0, -(ks[f][0] * r1 + ks[f][1] * r2 + ks[f][2] * r3)));
        t /= double(g.count());
        bool beyond = false;
        for (int a = 0; a < d; ++a) beyond |= std::abs(r[a]) > model.hopping_range[a];
        double mag = t.cwiseAbs().maxCoeff();
        if (beyond) {
          if (mag > 1e-10)
            validation_error("HoppingRangeTooLong", "model has hoppings beyond its declared range",
                             {{"magnitude", mag}});
          continue;
        }
        // Keep R = 0 and the lexicographically positive half; the loader adds conjugates.
        int sign = 0;
        for (int a = 0; a < d && sign == 0; ++a) sign = (r[a] > 0) - (r[a] < 0);
        if (sign < 0 || mag < 1e-14) continue;
        json rv = json::array();
        for (int a = 0; a < d; ++a) rv.push_back(r[a]);
        terms.push_back({{"R", rv}, {"matrix", matrix_to_json(t)}});
      }
  json doc = {{"name", model.name}, {"dim", d}, {"bands", n}, {"occupied", model.occupied}, {"terms", terms}};
  doc["time_reversal"] = model.time_reversal ? matrix_to_json(model.time_reversal->unitary) : json(nullptr);
  return doc;
}

}  // namespace topo
