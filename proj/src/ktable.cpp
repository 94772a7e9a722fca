#include "topo/ktable.hpp"

#include <array>

#include "topo/error.hpp"

namespace topo {

std::string AbelianGroup::to_string() const {
  auto term = [](int n, const char* g) { return n == 1 ? std::string(g) : std::to_string(n) + g; };
  std::string s;
  if (free > 0) s = term(free, "Z");
  if (torsion2 > 0) s += (s.empty() ? "" : " + ") + term(torsion2, "Z2");
  return s.empty() ? "0" : s;
}

Space Space::parse(const std::string& kind, int dim) {
  if (kind == "pt" || kind == "point") return {SpaceKind::Point, 0};
  if (dim < 0 || dim > 64) validation_error("InvalidSpace", "dimension out of range", {{"dim", dim}});
  if (kind == "torus") return {SpaceKind::Torus, dim};
  if (kind == "sphere") {
    if (dim < 1) validation_error("InvalidSpace", "S^{1,d} needs d >= 1");
    return {SpaceKind::Sphere, dim};
  }
  validation_error("InvalidSpace", "only pt, torus and sphere are supported", {{"space", kind}});
}

std::string Space::label() const {
  switch (kind) {
    case SpaceKind::Point: return "pt";
    case SpaceKind::Torus: return "T^" + std::to_string(dim);
    case SpaceKind::Sphere: return "S^{1," + std::to_string(dim) + "}";
  }
  return "";
}

AbelianGroup ko_point(int i) {
  static const std::array<AbelianGroup, 8> row{{{1, 0}, {0, 1}, {0, 1}, {0, 0}, {1, 0}, {0, 0}, {0, 0}, {0, 0}}};
  return row[((i % 8) + 8) % 8];
}

namespace {

long binomial(int n, int k) {
  long c = 1;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

AbelianGroup torus_sum(int j, int d, int k0) {
  AbelianGroup g;
  for (int k = k0; k <= d; ++k) g = g + ko_point(j - k) * int(binomial(d, k));
  return g;
}

}  // namespace

AbelianGroup kr_torus(int j, int d) {
  if (d < 0) validation_error("InvalidSpace", "torus dimension must be nonnegative");
  return torus_sum(j, d, 0);
}

AbelianGroup kr_sphere(int j, int d) {
  if (d < 1) validation_error("InvalidSpace", "S^{1,d} needs d >= 1");
  return ko_point(j) + ko_point(j - d);
}

AbelianGroup kr(int j, const Space& x) {
  switch (x.kind) {
    case SpaceKind::Point: return ko_point(j);
    case SpaceKind::Torus: return kr_torus(j, x.dim);
    case SpaceKind::Sphere: return kr_sphere(j, x.dim);
  }
  return {};
}

AbelianGroup kq(int n, const Space& x) { return kr(4 - n, x); }

AbelianGroup reduced_kr(int j, const Space& x) {
  switch (x.kind) {
    case SpaceKind::Point: return {};
    case SpaceKind::Torus: return torus_sum(j, x.dim, 1);
    case SpaceKind::Sphere: return ko_point(j - x.dim);
  }
  return {};
}

AbelianGroup reduced_kq(int n, const Space& x) { return reduced_kr(4 - n, x); }

AbelianGroup strong_summand(int j, int d) {
  if (d < 0) validation_error("InvalidSpace", "torus dimension must be nonnegative");
  return ko_point(j - d);
}

std::string group_label(const std::string& theory, int degree, const Space& x, bool reduced) {
  std::string s = reduced ? "~" + theory : theory;
  if (degree != 0) s += "^{" + std::to_string(degree) + "}";
  return s + "(" + x.label() + ")";
}

}  // namespace topo
