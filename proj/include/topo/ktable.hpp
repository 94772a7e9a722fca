#pragma once

#include <string>

#include "json.hpp"

namespace topo {

// a Z + b Z2
struct AbelianGroup {
  int free = 0;
  int torsion2 = 0;
  bool operator==(const AbelianGroup&) const = default;
  AbelianGroup operator+(const AbelianGroup& o) const { return {free + o.free, torsion2 + o.torsion2}; }
  AbelianGroup operator*(int n) const { return {free * n, torsion2 * n}; }
  std::string to_string() const;  // "3Z + Z2", "0"
  nlohmann::json to_json() const { return {{"free", free}, {"torsion2", torsion2}}; }
};

enum class SpaceKind { Point, Torus, Sphere };

// pt, T^d, or the involutive sphere S^{1,d}
struct Space {
  SpaceKind kind = SpaceKind::Point;
  int dim = 0;
  static Space parse(const std::string& kind, int dim);  // "pt" | "torus" | "sphere"
  std::string label() const;                              // "pt", "T^3", "S^{1,2}"
};

AbelianGroup ko_point(int i);           // KO^{-i}(pt)
AbelianGroup kr_torus(int j, int d);    // KR^{-j}(T^d)
AbelianGroup kr_sphere(int j, int d);   // KR^{-j}(S^{1,d})
AbelianGroup kr(int j, const Space& x);
AbelianGroup kq(int n, const Space& x);  // KQ^n = KR^{n-4}
// Drops the basepoint summand KO^{-j}(pt).
AbelianGroup reduced_kr(int j, const Space& x);
AbelianGroup reduced_kq(int n, const Space& x);
// Summand of the fixed point of top codimension: KO^{d-j}(pt).
AbelianGroup strong_summand(int j, int d);

// "KQ^{-1}(T^3)"; theory is "KO", "KR" or "KQ", degree is the superscript.
std::string group_label(const std::string& theory, int degree, const Space& x, bool reduced);

}  // namespace topo
