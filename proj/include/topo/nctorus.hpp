#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>

#include "topo/model.hpp"

namespace topo {

// Clock and shift matrices at theta = p/q: U = diag(omega^j), V e_j = e_{j+1}, so UV = omega VU.
struct ClockShiftRep {
  int p = 1;
  int q = 1;
  CMatrix U, V;
  static ClockShiftRep make(int p, int q);
  cd omega() const;
};

// Finite sum of w zeta^r U^m V^n with real weights w and zeta = e^{i pi / (2q)}.
// Phases are kept as exact integers so the algebra identities hold term by term; terms are
// normal ordered (U before V) and r is reduced to [0, 2q) by absorbing zeta^{2q} = -1.
class NCElement {
 public:
  using Key = std::array<int, 3>;  // m, n, r

  NCElement(int p, int q);
  static NCElement monomial(int p, int q, int m, int n, int r = 0, double weight = 1.0);
  static NCElement u(int p, int q) { return monomial(p, q, 1, 0); }
  static NCElement v(int p, int q) { return monomial(p, q, 0, 1); }

  int p() const { return p_; }
  int q() const { return q_; }
  const std::map<Key, double>& terms() const { return terms_; }

  NCElement operator+(const NCElement& o) const;
  NCElement operator-(const NCElement& o) const;
  NCElement operator*(const NCElement& o) const;
  NCElement operator*(double s) const;
  NCElement adjoint() const;
  bool operator==(const NCElement& o) const { return p_ == o.p_ && q_ == o.q_ && terms_ == o.terms_; }

  CMatrix represent(const ClockShiftRep& rep) const;
  std::string to_string() const;

 private:
  void add(int m, int n, int r, double w);
  int p_, q_;
  std::map<Key, double> terms_;
};

// Antilinear, multiplicative: Theta(u) = v^*, Theta(v) = -u^*.
NCElement theta_action(const NCElement& a);

struct FixedPointGenerators {
  NCElement x, y;
};
// x = i e^{i pi theta} u v^*, y = i e^{-i pi theta} v u^*.
FixedPointGenerators fixed_point_generators(int p, int q);

// Scalar loop on the circle as Fourier coefficients: u(t) = sum c_n e^{i n t}.
using FourierLoop = std::map<int, cd>;

cd loop_value(const FourierLoop& u, double t);
int loop_support(const FourierLoop& u);  // max |n| with c_n != 0

// Fourier modes -N..N with F = sign(n), sign(0) = +1, and P = (1 - F)/2.
struct TruncatedFredholmModule {
  int cutoff = 0;
  CMatrix F, P;
  static TruncatedFredholmModule make(int cutoff);
  int mode_index(int n) const { return n + cutoff; }
};

CMatrix multiplication_operator(const FourierLoop& u, const TruncatedFredholmModule& mod);

struct ToeplitzResult {
  int index = 0;
  int kernel = 0;
  int cokernel = 0;
  double smallest_kept = 0.0;  // smallest singular value above the threshold
  nlohmann::json to_json() const;
};
// dim ker - dim coker of P u P on the negative modes. Modes within the Fourier support of
// the cutoff are excluded from the domain so the truncation does not create spurious kernel.
// Throws NumericallySingular, CutoffTooSmall.
ToeplitzResult toeplitz_index(const FourierLoop& u, int cutoff);

struct PairingResult {
  double raw = 0.0;
  double calibrated = 0.0;
  int rounded = 0;
  double residue = 0.0;
  int cutoff = 0;
  nlohmann::json to_json() const;
};

// raw = Tr(w^{-1}[F, w]), calibrated = raw / 2. Throws ResidueTooLarge (> 0.1), NotUnitary.
PairingResult nc_index_pairing_1d(const FourierLoop& w, int cutoff);

// raw = Tr[(w^{-1}[F, w])^3] over the box |n_i| <= N on Z^3 (x) C^2 (Dirac spinor) (x) C^2,
// with F = sigma.n/|n|, F(0) = +1, and w the multiplication by the SU(2)-valued map g.
// calibrated = -raw / 8. The lattice in n-space is a torus large enough that w, sampled on
// the dual momentum grid, is exactly unitary. Throws ResidueTooLarge (> 0.25).
PairingResult nc_index_pairing_3d(const std::function<CMatrix(const KVec&)>& g, int cutoff,
                                  bool check_residue = true);

}  // namespace topo
