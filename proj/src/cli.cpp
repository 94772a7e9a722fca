#include "topo/cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "topo/berry.hpp"
#include "topo/error.hpp"
#include "topo/ktable.hpp"
#include "topo/nctorus.hpp"
#include "topo/spectral.hpp"
#include "topo/windex.hpp"
#include "topo/z2.hpp"

namespace topo::cli {

using nlohmann::json;

namespace {

const std::vector<std::string> kCommands = {"chern",         "z2",          "z2-3d",  "cs-index",  "boundary-index",
                                            "spectral-flow", "edge-parity", "kgroup", "nc-index", "audit"};

struct Options {
  std::string command;
  std::string model, model_file, grid, out = "json", sweep, plane, lambda, space = "pt", theta, fourier;
  std::vector<std::string> params;
  int width = 24;
  double level = std::numeric_limits<double>::quiet_NaN();
  std::optional<int> ko, kr, kq;
  int dim = 0, nc_dim = 1, winding = 1, degree = 1, cutoff = 0;
  bool reduced = false, strong = false;
};

struct Outcome {
  json result = json::object();
  json checks = json::array();
  std::string csv;
};

json check(const std::string& name, bool pass, json detail = json::object()) {
  detail["name"] = name;
  detail["pass"] = pass;
  return detail;
}

double parse_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || !std::isfinite(v))
    validation_error("InvalidParams", "not a number: " + s, {{"field", what}});
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) parts.push_back(item);
  return parts;
}

Params parse_params(const std::vector<std::string>& items, const std::vector<std::string>& extras) {
  Params p;
  for (const auto& group : items)
    for (const auto& kv : split(group, ',')) {
      auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0) validation_error("InvalidParams", "expected key=value, got " + kv);
      p[kv.substr(0, eq)] = parse_number(kv.substr(eq + 1), kv.substr(0, eq));
    }
  // Unrecognised --key value pairs are model parameters and override --params.
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& a = extras[i];
    if (a.rfind("--", 0) != 0 || a.size() < 3) validation_error("InvalidInput", "unexpected argument " + a);
    std::string key = a.substr(2), value;
    if (auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) validation_error("InvalidParams", "missing value for --" + key);
      value = extras[++i];
    }
    p[key] = parse_number(value, key);
  }
  return p;
}

struct Sweep {
  std::string param;
  std::vector<double> values;
};

std::optional<Sweep> parse_sweep(const std::string& s) {
  if (s.empty()) return std::nullopt;
  auto eq = s.find('=');
  auto parts = eq == std::string::npos ? std::vector<std::string>{} : split(s.substr(eq + 1), ':');
  if (eq == 0 || parts.size() != 3) validation_error("InvalidSweep", "expected param=a:b:n", {{"sweep", s}});
  double a = parse_number(parts[0], "sweep"), b = parse_number(parts[1], "sweep");
  double n = parse_number(parts[2], "sweep");
  if (n < 1 || n > 10000 || n != std::floor(n)) validation_error("InvalidSweep", "point count must be 1..10000");
  Sweep sw{s.substr(0, eq), {}};
  for (int i = 0; i < int(n); ++i) sw.values.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
  return sw;
}

MomentumGrid parse_grid(const std::string& s, int dim) {
  if (dim < 1 || dim > 3) validation_error("InvalidGrid", "model dimension must be 1, 2 or 3");
  if (s.empty()) return MomentumGrid::uniform(dim, dim == 3 ? 16 : 24);
  auto parts = split(s, ',');
  std::array<int, 3> n{1, 1, 1};
  if (parts.size() == 1) {
    for (int a = 0; a < dim; ++a) n[a] = int(parse_number(parts[0], "grid"));
  } else if (int(parts.size()) == dim) {
    for (int a = 0; a < dim; ++a) n[a] = int(parse_number(parts[a], "grid"));
  } else {
    validation_error("InvalidGrid", "grid needs 1 or " + std::to_string(dim) + " sizes", {{"grid", s}});
  }
  return MomentumGrid::make(dim, n);
}

Plane parse_plane(const std::string& s, int dim) {
  if (dim < 2) validation_error("InvalidInput", "Chern numbers need a 2D or 3D model");
  if (s.empty()) return {};
  auto parts = split(s, ',');
  if (parts.size() < 2 || parts.size() > 3) validation_error("InvalidInput", "plane is i,j[,slice]");
  Plane p{int(parse_number(parts[0], "plane")), int(parse_number(parts[1], "plane")),
          parts.size() == 3 ? int(parse_number(parts[2], "plane")) : 0};
  if (p.axis_i == p.axis_j || p.axis_i < 0 || p.axis_j < 0 || p.axis_i >= dim || p.axis_j >= dim)
    validation_error("InvalidInput", "plane axes must be distinct model axes");
  return p;
}

// Target fixed point of the boundary path: pi on every flagged periodic axis.
KVec boundary_target(const std::string& s, int dim) {
  KVec to = KVec::Zero();
  if (s.empty()) {
    for (int a = 0; a < dim - 1; ++a) to[a] = kPi;
    return to;
  }
  auto parts = split(s, ',');
  if (int(parts.size()) != dim - 1) validation_error("InvalidInput", "lambda needs one 0/1 flag per boundary axis");
  bool any = false;
  for (int a = 0; a < dim - 1; ++a) {
    if (parts[a] != "0" && parts[a] != "1") validation_error("InvalidInput", "lambda flags are 0 or 1");
    to[a] = parts[a] == "1" ? kPi : 0.0;
    any |= parts[a] == "1";
  }
  if (!any) validation_error("InvalidInput", "lambda must differ from the origin");
  return to;
}

void require_dim(const BlochFamily& m, int dim, const std::string& cmd) {
  if (m.dim != dim)
    validation_error("InvalidInput", cmd + " needs a " + std::to_string(dim) + "D model", {{"model_dim", m.dim}});
}

void require_trs(const BlochFamily& m) {
  if (!m.time_reversal) validation_error("NoTimeReversal", "model has no time-reversal symmetry");
}

void add_trs_check(Outcome& o, const BlochFamily& m, const MomentumGrid& g) {
  if (!m.time_reversal) return;
  TrsReport r = check_trs(m, g);
  o.checks.push_back(check("time_reversal", r.pass, {{"deviation", r.max_deviation}}));
}

void add_ledger(Outcome& o, const SewingField& f) {
  const json ledger = f.ledger();
  for (const auto& [name, entry] : ledger.items())
    o.checks.push_back(check("sewing_" + name, entry["pass"], {{"deviation", entry["deviation"]}}));
}

json complex_json(cd z) { return json::array({z.real(), z.imag()}); }

json nu_json(const NuResult& d) {
  json terms = json::array();
  double residue = 0.0;
  for (const auto& t : d.terms) {
    terms.push_back({{"k", std::vector<double>(t.trim.k.data(), t.trim.k.data() + 3)},
                     {"pfaffian", complex_json(t.pfaffian)},
                     {"sqrt_det", complex_json(t.sqrt_det)},
                     {"ratio", t.ratio},
                     {"imag_residue", t.imag_residue}});
    residue = std::max(residue, t.imag_residue);
  }
  return {{"nu", d.nu}, {"max_step", d.max_step}, {"residue", residue}, {"trim_terms", terms}};
}

// Surface fixed point of a slab open along axis 0 is the image of the two bulk fixed points
// that differ only in k_0; the crossing parity between two surface points is the product of
// the bulk Pfaffian signs over the four bulk points above them.
std::vector<bool> surface_mask(const MomentumGrid& g, const KVec& to) {
  std::vector<bool> use;
  for (const auto& t : trim_points(g)) {
    bool origin = true, target = true;
    for (int a = 1; a < g.dim; ++a) {
      origin &= !t.at_pi[a];
      target &= t.at_pi[a] == (to[a - 1] != 0.0);
    }
    use.push_back(origin || target);
  }
  return use;
}

Outcome do_chern(const BlochFamily& m, const MomentumGrid& g, const Options& o) {
  Plane pl = parse_plane(o.plane, m.dim);
  OccupiedFrame f = occupied_frame(m, g);
  ChernResult c = chern_details(f, pl);
  Outcome out;
  out.result = {{"c1", c.chern},
                {"raw", c.raw},
                {"residue", std::abs(c.raw - c.chern)},
                {"max_plaquette", c.max_plaquette},
                {"min_link", c.min_link},
                {"min_gap", f.min_gap},
                {"plane", {pl.axis_i, pl.axis_j, pl.slice}}};
  out.csv = berry_curvature_field(f, pl).to_csv();
  add_trs_check(out, m, g);
  return out;
}

Outcome do_z2(const BlochFamily& m, const MomentumGrid& g, const Options&) {
  require_dim(m, 2, "z2");
  require_trs(m);
  Outcome out;
  SewingField f = sewing_field(m, g);
  NuResult d = kane_mele_details(f);
  WannierFlow wf = wannier_center_flow(m, g);
  out.result = nu_json(d);
  out.result["wannier"] = {{"crossings", wf.crossings}, {"verdict", wf.verdict}};
  out.csv = wf.to_csv();
  add_trs_check(out, m, g);
  add_ledger(out, f);
  out.checks.push_back(check("pfaffian_vs_wannier", d.nu == wf.verdict, {{"nu", d.nu}, {"wannier", wf.verdict}}));
  return out;
}

Outcome do_z2_3d(const BlochFamily& m, const MomentumGrid& g, const Options&) {
  require_dim(m, 3, "z2-3d");
  require_trs(m);
  Outcome out;
  SewingField f = sewing_field(m, g);
  StrongWeak sw = strong_and_weak_indices_3d(f);
  NuResult d = kane_mele_details(f);
  auto bit = [](int s) { return s < 0 ? 1 : 0; };
  std::string label = "(" + std::to_string(bit(sw.nu0)) + ";" + std::to_string(bit(sw.weak[0])) +
                      std::to_string(bit(sw.weak[1])) + std::to_string(bit(sw.weak[2])) + ")";
  out.result = nu_json(d);
  out.result.erase("nu");
  out.result["nu0"] = sw.nu0;
  out.result["weak"] = sw.weak;
  out.result["label"] = label;
  add_trs_check(out, m, g);
  add_ledger(out, f);
  return out;
}

struct CsIndex {
  WindingResult winding;
  double cs = 0.0;
  GaugeReport gauge;
  SewingField field;
};

CsIndex cs_index(const BlochFamily& m, const MomentumGrid& g) {
  CsIndex r;
  OccupiedFrame frame = smooth_gauge(occupied_frame(m, g), &r.gauge);
  r.field = sewing_field(frame, *m.time_reversal);
  r.winding = winding3d(UnitaryField{g, r.field.w});
  r.cs = chern_simons(frame);
  return r;
}

Outcome do_cs_index(const BlochFamily& m, const MomentumGrid& g, const Options&) {
  require_dim(m, 3, "cs-index");
  require_trs(m);
  CsIndex c = cs_index(m, g);
  Outcome out;
  double mod1 = c.cs - std::floor(c.cs);
  out.result = {{"winding", c.winding.to_json()},
                {"nu", c.winding.rounded % 2 ? -1 : 1},
                {"p3", {{"raw", c.cs}, {"mod1", mod1}}},
                {"gauge", {{"trial_overlap", c.gauge.trial_overlap}, {"min_link", c.gauge.min_link},
                           {"sweeps", c.gauge.sweeps}}}};
  add_trs_check(out, m, g);
  add_ledger(out, c.field);
  return out;
}

Outcome do_boundary(const BlochFamily& m, const MomentumGrid& g, const Options&) {
  require_dim(m, 2, "boundary-index");
  require_trs(m);
  Outcome out;
  SewingField f = sewing_field(m, g);
  out.result = boundary_index_2d(f).to_json();
  add_trs_check(out, m, g);
  add_ledger(out, f);
  return out;
}

RibbonFamily ribbon_for(const BlochFamily& m, const Options& o) {
  if (m.dim < 2) validation_error("InvalidInput", "edge computations need a 2D or 3D model");
  return ribbonize(m, 0, o.width);
}

Outcome do_spectral_flow(const BlochFamily& m, const MomentumGrid&, const Options& o) {
  RibbonFamily rb = ribbon_for(m, o);
  KVec to = boundary_target(o.lambda, m.dim);
  double level = std::isnan(o.level) ? 0.1 * rb.bulk_gap : o.level;
  FlowResult fr = spectral_flow({[&](double t) { return rb.evaluate(t * to); }, false, 64}, level);
  Outcome out;
  out.result = fr.to_json();
  out.result["level"] = level;
  out.result["bulk_gap"] = rb.bulk_gap;
  out.result["width"] = o.width;
  return out;
}

Outcome do_edge_parity(const BlochFamily& m, const MomentumGrid&, const Options& o) {
  require_trs(m);
  RibbonFamily rb = ribbon_for(m, o);
  EdgeCrossings ec = edge_crossings(rb, KVec::Zero(), boundary_target(o.lambda, m.dim));
  Outcome out;
  out.result = ec.to_json();
  out.result["width"] = o.width;
  out.csv = ribbon_spectrum_csv(rb, 128);
  return out;
}

Outcome do_audit(const BlochFamily& m, const MomentumGrid& g, const Options& o) {
  require_trs(m);
  if (m.dim != 2 && m.dim != 3) validation_error("InvalidInput", "audit needs a 2D or 3D model");
  Outcome out;
  add_trs_check(out, m, g);
  SewingField f = sewing_field(m, g);
  add_ledger(out, f);
  NuResult d = kane_mele_details(f);
  out.result["nu"] = d.nu;
  out.result["nu_residue"] = nu_json(d)["residue"];
  RibbonFamily rb = ribbonize(m, 0, o.width);
  if (m.dim == 2) {
    WannierFlow wf = wannier_center_flow(m, g);
    BoundaryIndex bi = boundary_index_2d(f);
    EdgeCrossings ec = edge_crossings(rb, KVec::Zero(), boundary_target("", 2));
    ChernResult c = chern_details(occupied_frame(m, g));
    out.result["wannier"] = wf.verdict;
    out.result["boundary_index"] = bi.to_json();
    out.result["edge"] = ec.to_json();
    out.result["chern"] = {{"c1", c.chern}, {"raw", c.raw}};
    out.checks.push_back(check("pfaffian_vs_wannier", d.nu == wf.verdict, {{"lhs", d.nu}, {"rhs", wf.verdict}}));
    out.checks.push_back(check("nu_vs_topological_index", d.nu == bi.value, {{"lhs", d.nu}, {"rhs", bi.value}}));
    int edge_sign = ec.parity ? -1 : 1;
    out.checks.push_back(check("nu_vs_edge_parity", d.nu == edge_sign, {{"lhs", d.nu}, {"rhs", edge_sign}}));
    out.checks.push_back(check("chern_vanishes", c.chern == 0, {{"c1", c.chern}}));
  } else {
    CsIndex cs = cs_index(m, g);
    int wsign = cs.winding.rounded % 2 ? -1 : 1;
    out.result["winding"] = cs.winding.to_json();
    out.checks.push_back(check("nu_vs_winding", d.nu == wsign, {{"lhs", d.nu}, {"rhs", wsign}}));
    json edges = json::array();
    for (const std::string lam : {"1,1", "1,0"}) {
      KVec to = boundary_target(lam, 3);
      EdgeCrossings ec = edge_crossings(rb, KVec::Zero(), to);
      int bulk = kane_mele_details(f, surface_mask(g, to)).nu;
      int edge_sign = ec.parity ? -1 : 1;
      json e = ec.to_json();
      e["lambda"] = lam;
      edges.push_back(e);
      out.checks.push_back(check("surface_parity_" + lam, bulk == edge_sign, {{"lhs", bulk}, {"rhs", edge_sign}}));
    }
    out.result["surface"] = edges;
  }
  return out;
}

Outcome do_kgroup(const Options& o) {
  int given = int(o.ko.has_value()) + int(o.kr.has_value()) + int(o.kq.has_value());
  if (given != 1) validation_error("InvalidInput", "give exactly one of --ko, --kr, --kq");
  Space x = Space::parse(o.space, o.dim);
  std::string theory;
  int degree = 0;
  AbelianGroup grp;
  if (o.ko) {
    if (x.kind != SpaceKind::Point) validation_error("InvalidSpace", "KO is tabulated for the point only");
    theory = "KO";
    degree = *o.ko;
    grp = o.reduced ? AbelianGroup{} : ko_point(-degree);
  } else {
    theory = o.kr ? "KR" : "KQ";
    degree = o.kr ? *o.kr : *o.kq;
    int j = o.kr ? -degree : 4 - degree;  // KQ^n = KR^{n-4}
    grp = o.reduced ? reduced_kr(j, x) : kr(j, x);
    if (o.strong) {
      if (x.kind != SpaceKind::Torus) validation_error("InvalidSpace", "strong summand is defined for tori");
      grp = strong_summand(j, x.dim);
    }
  }
  Outcome out;
  out.result = {{"label", group_label(theory, degree, x, o.reduced) + (o.strong ? " [strong]" : "")},
                {"value", grp.to_string()},
                {"group", grp.to_json()}};
  return out;
}

double max_abs_deviation(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

json algebra_checks(int p, int q) {
  ClockShiftRep rep = ClockShiftRep::make(p, q);
  auto [x, y] = fixed_point_generators(p, q);
  CMatrix X = x.represent(rep), Y = y.represent(rep);
  return {{"theta", std::to_string(p) + "/" + std::to_string(q)},
          {"commutation_deviation", max_abs_deviation(rep.U * rep.V, rep.omega() * rep.V * rep.U)},
          {"theta_x_deviation", max_abs_deviation(theta_action(x).represent(rep), X)},
          {"theta_y_deviation", max_abs_deviation(theta_action(y).represent(rep), Y)},
          {"x_adjoint_plus_y_deviation", max_abs_deviation(X.adjoint(), -Y)},
          {"x_unitarity_deviation", unitary_deviation(X)},
          {"theta_x_exact", theta_action(x) == x},
          {"theta_y_exact", theta_action(y) == y},
          {"x_adjoint_exact", x.adjoint() == y * -1.0}};
}

FourierLoop read_loop(const std::string& path) {
  std::ifstream in(path);
  if (!in) validation_error("InvalidInput", "cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    validation_error("SchemaError", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) validation_error("SchemaError", "loop file must be a list of {n, matrix}");
  FourierLoop u;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& t = doc[i];
    std::string where = "/" + std::to_string(i);
    if (!t.is_object() || !t.contains("n") || !t.contains("matrix"))
      validation_error("SchemaError", "each entry needs n and matrix", {{"path", where}});
    int n = t["n"].is_array() ? t["n"].at(0).get<int>() : t["n"].get<int>();
    CMatrix c = matrix_from_json(t["matrix"], where + "/matrix");
    if (c.rows() != 1 || c.cols() != 1) validation_error("SchemaError", "1D loops are scalar", {{"path", where}});
    u[n] += c(0, 0);
  }
  return u;
}

Outcome do_nc_index(const Options& o) {
  Outcome out;
  if (!o.theta.empty()) {
    auto pq = split(o.theta, '/');
    if (pq.size() != 2) validation_error("InvalidInput", "theta is p/q");
    json a = algebra_checks(int(parse_number(pq[0], "theta")), int(parse_number(pq[1], "theta")));
    out.result["algebra"] = a;
    bool exact = a["theta_x_exact"] && a["theta_y_exact"] && a["x_adjoint_exact"];
    double dev = std::max({a["commutation_deviation"].get<double>(), a["theta_x_deviation"].get<double>(),
                           a["theta_y_deviation"].get<double>(), a["x_adjoint_plus_y_deviation"].get<double>()});
    out.checks.push_back(check("fixed_point_identities", exact && dev < 1e-12, {{"deviation", dev}}));
    if (o.fourier.empty() && o.cutoff == 0) return out;
  }
  if (o.nc_dim == 1) {
    FourierLoop u = o.fourier.empty() ? FourierLoop{{o.winding, 1.0}} : read_loop(o.fourier);
    int N = o.cutoff ? o.cutoff : 256;
    ToeplitzResult t = toeplitz_index(u, N);
    out.result["toeplitz"] = t.to_json();
    out.result["pairing"] = nc_index_pairing_1d(u, N).to_json();
    out.checks.push_back(check("pairing_vs_toeplitz", out.result["pairing"]["rounded"] == t.index));
  } else if (o.nc_dim == 3) {
    if (o.degree < -2 || o.degree > 2) validation_error("InvalidInput", "degree must be in -2..2");
    int d = o.degree;
    auto g = [d](const KVec& k) -> CMatrix {
      CMatrix m = su2_bump_map(k);
      CMatrix r = CMatrix::Identity(2, 2);
      for (int i = 0; i < std::abs(d); ++i) r = r * (d > 0 ? m : CMatrix(m.adjoint()));
      return r;
    };
    out.result["pairing"] = nc_index_pairing_3d(g, o.cutoff ? o.cutoff : 4).to_json();
    out.result["degree"] = d;
  } else {
    validation_error("InvalidInput", "nc-index supports --nc-dim 1 or 3");
  }
  return out;
}

// Scalar leaves of nested objects as "a.b" columns; arrays are left to the JSON report.
void scalar_leaves(const json& j, const std::string& prefix, json& out) {
  for (const auto& [k, val] : j.items()) {
    std::string key = prefix.empty() ? k : prefix + "." + k;
    if (val.is_object()) scalar_leaves(val, key, out);
    else if (val.is_primitive()) out[key] = val;
  }
}

std::string flatten_csv(std::vector<std::pair<json, json>> rows, const std::string& param) {
  for (auto& [v, r] : rows) {
    json flat = json::object();
    scalar_leaves(r, "", flat);
    r = flat;
  }
  std::vector<std::string> keys;
  for (const auto& [v, r] : rows)
    for (const auto& [k, val] : r.items())
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  std::ostringstream os;
  if (!param.empty()) os << param << (keys.empty() ? "" : ",");
  for (std::size_t i = 0; i < keys.size(); ++i) os << (i ? "," : "") << keys[i];
  os << "\n";
  for (const auto& [v, r] : rows) {
    if (!param.empty()) os << v.dump() << (keys.empty() ? "" : ",");
    for (std::size_t i = 0; i < keys.size(); ++i) os << (i ? "," : "") << (r.contains(keys[i]) ? r[keys[i]].dump() : "");
    os << "\n";
  }
  return os.str();
}

json error_json(const Error& e) {
  return {{"kind", e.kind()},
          {"class", e.error_class() == ErrorClass::Validation ? "validation" : "numerical"},
          {"detail", e.what()},
          {"data", e.data()}};
}

int exit_code(const Error& e) { return e.error_class() == ErrorClass::Validation ? 2 : 3; }

// Turns a JSON config into flag tokens placed before the command line, so flags win.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) validation_error("InvalidInput", "cannot open config " + path);
  json cfg;
  try {
    cfg = json::parse(in);
  } catch (const json::exception& e) {
    validation_error("SchemaError", std::string("invalid config JSON: ") + e.what());
  }
  if (!cfg.is_object()) validation_error("SchemaError", "config must be a JSON object");
  std::vector<std::string> t;
  for (const auto& [k, v] : cfg.items()) {
    if (k == "params") {
      if (!v.is_object()) validation_error("SchemaError", "params must be an object", {{"path", "/params"}});
      for (const auto& [pk, pv] : v.items()) {
        if (!pv.is_number()) validation_error("SchemaError", "parameter values are numbers", {{"path", "/params/" + pk}});
        t.push_back("--params");
        t.push_back(pk + "=" + pv.dump());
      }
    } else if (v.is_boolean()) {
      if (v.get<bool>()) t.push_back("--" + k);
    } else if (v.is_array()) {
      std::string joined;
      for (const auto& e : v) joined += (joined.empty() ? "" : ",") + (e.is_string() ? e.get<std::string>() : e.dump());
      t.push_back("--" + k);
      t.push_back(joined);
    } else {
      t.push_back("--" + k);
      t.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    }
  }
  return t;
}

}  // namespace

std::string strip_timing(const std::string& report) {
  try {
    json j = json::parse(report);
    j.erase("wall_time_s");
    return j.dump();
  } catch (const json::exception&) {
    return report;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  auto t0 = std::chrono::steady_clock::now();
  json report = {{"report_version", 1}, {"command", args}};
  auto emit = [&](int code) {
    report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << report.dump(2) << "\n";
    return code;
  };

  Options o;
  std::vector<std::string> extras;
  try {
    if (args.empty() || std::find(kCommands.begin(), kCommands.end(), args[0]) == kCommands.end()) {
      std::string list;
      for (const auto& c : kCommands) list += (list.empty() ? "" : ", ") + c;
      validation_error("UnknownCommand", "first argument must be one of: " + list);
    }
    o.command = args[0];
    std::vector<std::string> tokens;
    for (std::size_t i = 1; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) {
        auto c = config_tokens(args[++i]);
        tokens.insert(tokens.begin(), c.begin(), c.end());
      } else if (args[i].rfind("--config=", 0) == 0) {
        auto c = config_tokens(args[i].substr(9));
        tokens.insert(tokens.begin(), c.begin(), c.end());
      } else {
        tokens.push_back(args[i]);
      }
    }

    CLI::App app{"topological invariants of band insulators", "topoinv " + o.command};
    app.allow_extras();
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.add_option("--model", o.model, "builtin model name");
    app.add_option("--model-file", o.model_file, "JSON model description");
    app.add_option("--grid", o.grid, "N or N,N[,N]");
    app.add_option("--params", o.params, "key=value[,key=value]")->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    app.add_option("--out", o.out, "json | csv | text")->check(CLI::IsMember({"json", "csv", "text"}));
    app.add_option("--sweep", o.sweep, "param=a:b:n");
    app.add_option("--plane", o.plane, "Chern plane i,j[,slice]");
    app.add_option("--width", o.width, "ribbon width in unit cells");
    app.add_option("--level", o.level, "energy level for spectral flow");
    app.add_option("--lambda", o.lambda, "boundary fixed point as 0/1 flags");
    app.add_option("--ko", o.ko, "KO degree");
    app.add_option("--kr", o.kr, "KR degree");
    app.add_option("--kq", o.kq, "KQ degree");
    app.add_option("--space", o.space, "pt | torus | sphere");
    app.add_option("--dim", o.dim, "dimension of the space");
    app.add_flag("--reduced", o.reduced, "reduced group");
    app.add_flag("--strong", o.strong, "strong summand only");
    app.add_option("--theta", o.theta, "p/q for NC torus checks");
    app.add_option("--nc-dim", o.nc_dim, "1 or 3");
    app.add_option("--winding", o.winding, "winding of the 1D test loop");
    app.add_option("--degree", o.degree, "degree of the 3D test map");
    app.add_option("--cutoff", o.cutoff, "Fourier cutoff N");
    app.add_option("--fourier", o.fourier, "JSON Fourier coefficients of a 1D loop");
    try {
      std::vector<std::string> rev(tokens.rbegin(), tokens.rend());
      app.parse(rev);
    } catch (const CLI::CallForHelp&) {
      out << app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      validation_error("InvalidArguments", e.what());
    }
    extras = app.remaining();
    report["subcommand"] = o.command;
    if (o.out == "text" && o.command != "kgroup") validation_error("InvalidInput", "text output is for kgroup only");

    if (o.command == "kgroup" || o.command == "nc-index") {
      if (!o.sweep.empty() || !extras.empty() || !o.model.empty())
        validation_error("InvalidInput", o.command + " takes no model, parameters or sweep");
      Outcome r = o.command == "kgroup" ? do_kgroup(o) : do_nc_index(o);
      report["result"] = r.result;
      report["checks"] = r.checks;
      if (o.out == "text") {
        out << r.result["label"].get<std::string>() << " = " << r.result["value"].get<std::string>() << "\n";
        return 0;
      }
      bool ok = true;
      for (const auto& c : r.checks) ok &= c["pass"].get<bool>();
      if (o.out == "csv") {
        out << flatten_csv({{json(), r.result}}, "");
        return ok ? 0 : 3;
      }
      return emit(ok ? 0 : 3);
    }

    Params base = parse_params(o.params, extras);
    std::optional<json> model_doc;
    if (!o.model_file.empty()) {
      if (!o.model.empty()) validation_error("InvalidInput", "give --model or --model-file, not both");
      if (!base.empty()) validation_error("InvalidParams", "parameters only apply to builtin models");
      std::ifstream in(o.model_file);
      if (!in) validation_error("InvalidInput", "cannot open " + o.model_file);
      try {
        model_doc = json::parse(in);
      } catch (const json::exception& e) {
        validation_error("SchemaError", std::string("invalid model JSON: ") + e.what());
      }
    } else if (o.model.empty()) {
      validation_error("MissingModel", "give --model NAME or --model-file FILE");
    }
    auto make_model = [&](const Params& p) { return model_doc ? load_model(*model_doc) : builtin(o.model, p); };

    using Fn = Outcome (*)(const BlochFamily&, const MomentumGrid&, const Options&);
    const std::map<std::string, Fn> table = {{"chern", do_chern},
                                             {"z2", do_z2},
                                             {"z2-3d", do_z2_3d},
                                             {"cs-index", do_cs_index},
                                             {"boundary-index", do_boundary},
                                             {"spectral-flow", do_spectral_flow},
                                             {"edge-parity", do_edge_parity},
                                             {"audit", do_audit}};
    Fn fn = table.at(o.command);
    BlochFamily m0 = make_model(base);
    MomentumGrid grid = parse_grid(o.grid, m0.dim);
    report["model"] = {{"name", m0.name},
                       {"source", model_doc ? "file" : "builtin"},
                       {"params", base},
                       {"dim", m0.dim},
                       {"bands", m0.bands},
                       {"occupied", m0.occupied},
                       {"time_reversal", m0.time_reversal.has_value()}};
    report["grid"] = grid.describe();

    auto sweep = parse_sweep(o.sweep);
    if (!sweep) {
      Outcome r = fn(m0, grid, o);
      report["result"] = r.result;
      report["checks"] = r.checks;
      bool ok = true;
      for (const auto& c : r.checks) ok &= c["pass"].get<bool>();
      if (o.out == "csv") {
        out << (r.csv.empty() ? flatten_csv({{json(), r.result}}, "") : r.csv);
        return ok ? 0 : 3;
      }
      return emit(ok ? 0 : 3);
    }

    if (model_doc) validation_error("InvalidSweep", "sweeps apply to builtin models");
    report["sweep"] = {{"param", sweep->param}, {"values", sweep->values}};
    json points = json::array();
    std::vector<std::pair<json, json>> rows;
    int code = 0;
    for (double v : sweep->values) {
      Params p = base;
      p[sweep->param] = v;
      json pt = {{"value", v}};
      try {
        Outcome r = fn(make_model(p), grid, o);
        pt["result"] = r.result;
        pt["checks"] = r.checks;
        for (const auto& c : r.checks)
          if (!c["pass"].get<bool>()) code = std::max(code, 3);
        rows.emplace_back(v, r.result);
      } catch (const Error& e) {
        pt["error"] = error_json(e);
        code = std::max(code, exit_code(e));
        rows.emplace_back(v, json{{"error", e.kind()}});
      }
      points.push_back(pt);
    }
    report["points"] = points;
    if (o.out == "csv") {
      out << flatten_csv(rows, sweep->param);
      return code;
    }
    return emit(code);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    report["error"] = error_json(e);
    return emit(exit_code(e));
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    report["error"] = {{"kind", "InternalError"}, {"class", "numerical"}, {"detail", e.what()}};
    return emit(3);
  }
}

}  // namespace topo::cli
