#include "topo/nctorus.hpp"

#include <fftw3.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "topo/error.hpp"

namespace topo {

using nlohmann::json;

namespace {

int mod(int a, int n) { return ((a % n) + n) % n; }

// e^{i pi r / (2q)} without accumulating error in r
cd zeta_power(int r, int q) { return std::polar(1.0, kPi * mod(r, 4 * q) / (2.0 * q)); }

void check_theta(int p, int q) {
  if (q < 1) validation_error("InvalidInput", "theta = p/q needs q >= 1", {{"q", q}});
  if (std::gcd(p, q) != 1) validation_error("InvalidInput", "p and q must be coprime", {{"p", p}, {"q", q}});
}

}  // namespace

ClockShiftRep ClockShiftRep::make(int p, int q) {
  check_theta(p, q);
  ClockShiftRep r{p, q, CMatrix::Zero(q, q), CMatrix::Zero(q, q)};
  for (int j = 0; j < q; ++j) {
    r.U(j, j) = std::polar(1.0, kTwoPi * mod(p * j, q) / q);
    r.V((j + 1) % q, j) = 1.0;
  }
  return r;
}

cd ClockShiftRep::omega() const { return std::polar(1.0, kTwoPi * mod(p, q) / q); }

NCElement::NCElement(int p, int q) : p_(p), q_(q) { check_theta(p, q); }

NCElement NCElement::monomial(int p, int q, int m, int n, int r, double weight) {
  NCElement e(p, q);
  e.add(m, n, r, weight);
  return e;
}

void NCElement::add(int m, int n, int r, double w) {
  r = mod(r, 4 * q_);
  if (r >= 2 * q_) {
    r -= 2 * q_;
    w = -w;
  }
  Key key{m, n, r};
  double& slot = terms_[key];
  slot += w;
  if (slot == 0.0) terms_.erase(key);
}

NCElement NCElement::operator+(const NCElement& o) const {
  NCElement s = *this;
  for (const auto& [k, w] : o.terms_) s.add(k[0], k[1], k[2], w);
  return s;
}

NCElement NCElement::operator-(const NCElement& o) const { return *this + o * -1.0; }

NCElement NCElement::operator*(double s) const {
  NCElement out(p_, q_);
  for (const auto& [k, w] : terms_) out.add(k[0], k[1], k[2], w * s);
  return out;
}

// V^b U^c = omega^{-bc} U^c V^b, and omega = zeta^{4p}.
NCElement NCElement::operator*(const NCElement& o) const {
  if (p_ != o.p_ || q_ != o.q_) validation_error("InvalidInput", "elements of different NC tori");
  NCElement out(p_, q_);
  for (const auto& [a, wa] : terms_)
    for (const auto& [b, wb] : o.terms_)
      out.add(a[0] + b[0], a[1] + b[1], a[2] + b[2] - 4 * p_ * a[1] * b[0], wa * wb);
  return out;
}

NCElement NCElement::adjoint() const {
  NCElement out(p_, q_);
  for (const auto& [k, w] : terms_) out.add(-k[0], -k[1], -k[2] - 4 * p_ * k[0] * k[1], w);
  return out;
}

CMatrix NCElement::represent(const ClockShiftRep& rep) const {
  if (rep.p != p_ || rep.q != q_) validation_error("InvalidInput", "representation of a different NC torus");
  CMatrix out = CMatrix::Zero(q_, q_);
  for (const auto& [k, w] : terms_) {
    // U^m V^n e_j = omega^{(j+n) m} e_{j+n}
    for (int j = 0; j < q_; ++j) {
      int t = mod(j + k[1], q_);
      out(t, j) += w * zeta_power(k[2] + 4 * p_ * mod(t * k[0], q_), q_);
    }
  }
  return out;
}

std::string NCElement::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, w] : terms_) {
    os << (first ? "" : " + ") << w << "*z^" << k[2] << "*U^" << k[0] << "V^" << k[1];
    first = false;
  }
  os << " (z = e^{i pi/" << 2 * q_ << "})";
  return os.str();
}

// Theta(U^m V^n) = (V^*)^m (-U^*)^n = (-1)^n omega^{-mn} U^{-n} V^{-m}; antilinear on zeta^r.
NCElement theta_action(const NCElement& a) {
  const int p = a.p(), q = a.q();
  NCElement out(p, q);
  for (const auto& [k, w] : a.terms()) {
    int sign_r = (mod(k[1], 2) ? 2 * q : 0);
    out = out + NCElement::monomial(p, q, -k[1], -k[0], -k[2] + sign_r - 4 * p * k[0] * k[1], w);
  }
  return out;
}

FixedPointGenerators fixed_point_generators(int p, int q) {
  // i = zeta^q and e^{i pi theta} = zeta^{2p}; v u^* = omega U^* V.
  NCElement x = NCElement::monomial(p, q, 1, -1, q + 2 * p);
  NCElement y = NCElement::monomial(p, q, 0, 1, q - 2 * p) * NCElement::monomial(p, q, -1, 0);
  return {x, y};
}

cd loop_value(const FourierLoop& u, double t) {
  cd s = 0.0;
  for (const auto& [n, c] : u) s += c * std::polar(1.0, n * t);
  return s;
}

int loop_support(const FourierLoop& u) {
  int s = 0;
  for (const auto& [n, c] : u)
    if (c != 0.0) s = std::max(s, std::abs(n));
  return s;
}

TruncatedFredholmModule TruncatedFredholmModule::make(int cutoff) {
  if (cutoff < 1) validation_error("InvalidInput", "cutoff must be positive");
  const int d = 2 * cutoff + 1;
  TruncatedFredholmModule m{cutoff, CMatrix::Zero(d, d), CMatrix::Zero(d, d)};
  for (int n = -cutoff; n <= cutoff; ++n) {
    int i = m.mode_index(n);
    m.F(i, i) = n < 0 ? -1.0 : 1.0;
    m.P(i, i) = n < 0 ? 1.0 : 0.0;
  }
  return m;
}

CMatrix multiplication_operator(const FourierLoop& u, const TruncatedFredholmModule& mod) {
  const int N = mod.cutoff;
  CMatrix M = CMatrix::Zero(2 * N + 1, 2 * N + 1);
  for (int n = -N; n <= N; ++n)
    for (const auto& [j, c] : u)
      if (std::abs(n + j) <= N) M(mod.mode_index(n + j), mod.mode_index(n)) += c;
  return M;
}

json ToeplitzResult::to_json() const {
  return {{"index", index}, {"kernel", kernel}, {"cokernel", cokernel}, {"smallest_kept", smallest_kept}};
}

namespace {

// Kernel dimension of the map from negative modes n >= -N + s into all negative modes.
int compressed_kernel(const FourierLoop& u, int N, int s, double& smallest_kept) {
  TruncatedFredholmModule mod = TruncatedFredholmModule::make(N);
  CMatrix M = multiplication_operator(u, mod);
  const int rows = N, cols = N - s;
  CMatrix T = M.block(mod.mode_index(-N), mod.mode_index(-N + s), rows, cols);
  Eigen::BDCSVD<CMatrix> svd(T);  // singular values only; Jacobi is too slow at N = 256
  const RVector& sv = svd.singularValues();
  int kernel = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] < 1e-8) {
      ++kernel;
    } else if (sv[i] <= 1e-4) {
      numerical_error("NumericallySingular", "singular value in the ambiguous band [1e-8, 1e-4]",
                      {{"singular_value", sv[i]}, {"cutoff", N}});
    } else {
      smallest_kept = std::min(smallest_kept, sv[i]);
    }
  }
  return kernel;
}

}  // namespace

ToeplitzResult toeplitz_index(const FourierLoop& u, int cutoff) {
  const int s = loop_support(u);
  if (cutoff < std::max(4 * s, 4))
    validation_error("CutoffTooSmall", "cutoff must be at least four times the Fourier support",
                     {{"cutoff", cutoff}, {"support", s}});
  for (int i = 0; i < 256; ++i)
    if (std::abs(loop_value(u, kTwoPi * i / 256)) < 1e-6)
      validation_error("LoopVanishes", "symbol vanishes on the circle", {{"t", kTwoPi * i / 256}});
  FourierLoop ustar;
  for (const auto& [n, c] : u) ustar[-n] = std::conj(c);
  ToeplitzResult r;
  r.smallest_kept = std::numeric_limits<double>::infinity();
  r.kernel = compressed_kernel(u, cutoff, s, r.smallest_kept);
  r.cokernel = compressed_kernel(ustar, cutoff, s, r.smallest_kept);
  r.index = r.kernel - r.cokernel;
  return r;
}

json PairingResult::to_json() const {
  return {{"raw", raw}, {"calibrated", calibrated}, {"rounded", rounded}, {"residue", residue}, {"cutoff", cutoff}};
}

namespace {

void finish(PairingResult& r, double threshold, bool check) {
  r.rounded = int(std::lround(r.calibrated));
  r.residue = std::abs(r.calibrated - r.rounded);
  if (check && r.residue > threshold)
    numerical_error("ResidueTooLarge", "pairing is not close to an integer at this cutoff", r.to_json());
}

}  // namespace

PairingResult nc_index_pairing_1d(const FourierLoop& w, int cutoff) {
  const int s = loop_support(w);
  if (cutoff < std::max(4 * s, 4))
    validation_error("CutoffTooSmall", "cutoff must be at least four times the Fourier support",
                     {{"cutoff", cutoff}, {"support", s}});
  for (int i = 0; i < 256; ++i)
    if (std::abs(std::abs(loop_value(w, kTwoPi * i / 256)) - 1.0) > 1e-10)
      validation_error("NotUnitary", "loop is not unitary on the circle");
  // For a unitary symbol (w^* F w - F)_{nn} = sum_j |c_j|^2 (F(n + j) - F(n)), which vanishes
  // unless |n| < s, so summing diagonal entries over |n| <= N - s is exact.
  TruncatedFredholmModule mod = TruncatedFredholmModule::make(cutoff);
  CMatrix W = multiplication_operator(w, mod);
  CMatrix Y = W.adjoint() * mod.F * W - mod.F;
  PairingResult r;
  r.cutoff = cutoff;
  for (int n = -cutoff + s; n <= cutoff - s; ++n) r.raw += Y(mod.mode_index(n), mod.mode_index(n)).real();
  r.calibrated = 0.5 * r.raw;
  finish(r, 0.1, true);
  return r;
}

namespace {

// w^*[F, w] on the box, as a matrix-free operator on 4 components (spinor s, aux a) per site
// of the periodic lattice Z_L^3.
class Commutator3d {
 public:
  Commutator3d(const std::function<CMatrix(const KVec&)>& g, int N) : N_(N), L_(2 * N + 8) {
    const std::size_t sites = std::size_t(L_) * L_ * L_;
    g_.resize(sites);
    F_.resize(sites);
    for (std::size_t i = 0; i < sites; ++i) {
      auto c = coords(i);
      KVec k;
      Eigen::Vector3d n;
      for (int a = 0; a < 3; ++a) {
        k[a] = kTwoPi * c[a] / L_;
        if (k[a] > kPi) k[a] -= kTwoPi;
        n[a] = c[a] <= L_ / 2 ? c[a] : c[a] - L_;
      }
      g_[i] = g(k);
      if (g_[i].rows() != 2 || g_[i].cols() != 2)
        validation_error("InvalidInput", "3D pairing expects a 2x2 unitary map");
      double r = n.norm();
      Eigen::Matrix2cd f = Eigen::Matrix2cd::Identity();
      if (r > 0) {
        f << n[2], cd(n[0], -n[1]), cd(n[0], n[1]), -n[2];
        f /= r;
      }
      F_[i] = f;
    }
    buf_ = fftw_alloc_complex(sites * 4);
    int dims[3] = {L_, L_, L_};
    // FFTW_ESTIMATE keeps the plan, and therefore the rounding, identical from run to run.
    fwd_ = fftw_plan_many_dft(3, dims, 4, buf_, nullptr, 4, 1, buf_, nullptr, 4, 1, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_many_dft(3, dims, 4, buf_, nullptr, 4, 1, buf_, nullptr, 4, 1, FFTW_BACKWARD, FFTW_ESTIMATE);
    for (std::size_t i = 0; i < sites; ++i) {
      auto c = coords(i);
      auto in_box = [&](int x) { return x <= N_ || x >= L_ - N_; };
      if (in_box(c[0]) && in_box(c[1]) && in_box(c[2])) box_.push_back(i);
    }
  }
  ~Commutator3d() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  Commutator3d(const Commutator3d&) = delete;
  Commutator3d& operator=(const Commutator3d&) = delete;

  const std::vector<std::size_t>& box() const { return box_; }
  std::size_t sites() const { return g_.size(); }

  // out = P (w^* F w - F) P in, with in supported on the box.
  void apply(const std::vector<cd>& in, std::vector<cd>& out) {
    const std::size_t sites = g_.size();
    const double norm = 1.0 / double(sites);
    cd* b = reinterpret_cast<cd*>(buf_);
    std::copy(in.begin(), in.end(), b);
    fftw_execute(bwd_);  // psi(k) = sum_n psi_n e^{ikn}
    for (std::size_t i = 0; i < sites; ++i) mul_aux(b + 4 * i, g_[i], false);
    fftw_execute(fwd_);
    for (std::size_t i = 0; i < sites; ++i) mul_spin(b + 4 * i, F_[i], norm);
    fftw_execute(bwd_);
    for (std::size_t i = 0; i < sites; ++i) mul_aux(b + 4 * i, g_[i], true);
    fftw_execute(fwd_);
    std::fill(out.begin(), out.end(), cd(0.0));
    for (std::size_t i : box_) {
      cd fin[4] = {in[4 * i], in[4 * i + 1], in[4 * i + 2], in[4 * i + 3]};
      mul_spin(fin, F_[i], 1.0);
      for (int c = 0; c < 4; ++c) out[4 * i + c] = b[4 * i + c] * norm - fin[c];
    }
  }

 private:
  std::array<int, 3> coords(std::size_t i) const {
    return {int(i / (std::size_t(L_) * L_)), int((i / L_) % L_), int(i % L_)};
  }
  // component index 2 s + a
  static void mul_aux(cd* v, const CMatrix& g, bool adjoint) {
    for (int s = 0; s < 2; ++s) {
      cd a0 = v[2 * s], a1 = v[2 * s + 1];
      if (adjoint) {
        v[2 * s] = std::conj(g(0, 0)) * a0 + std::conj(g(1, 0)) * a1;
        v[2 * s + 1] = std::conj(g(0, 1)) * a0 + std::conj(g(1, 1)) * a1;
      } else {
        v[2 * s] = g(0, 0) * a0 + g(0, 1) * a1;
        v[2 * s + 1] = g(1, 0) * a0 + g(1, 1) * a1;
      }
    }
  }
  static void mul_spin(cd* v, const Eigen::Matrix2cd& f, double scale) {
    for (int a = 0; a < 2; ++a) {
      cd s0 = v[a], s1 = v[2 + a];
      v[a] = scale * (f(0, 0) * s0 + f(0, 1) * s1);
      v[2 + a] = scale * (f(1, 0) * s0 + f(1, 1) * s1);
    }
  }

  int N_, L_;
  std::vector<CMatrix> g_;
  std::vector<Eigen::Matrix2cd> F_;
  std::vector<std::size_t> box_;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr, bwd_ = nullptr;
};

}  // namespace

PairingResult nc_index_pairing_3d(const std::function<CMatrix(const KVec&)>& g, int cutoff, bool check_residue) {
  if (cutoff < 1 || cutoff > 16) validation_error("InvalidInput", "3D cutoff must lie in 1..16", {{"cutoff", cutoff}});
  Commutator3d Y(g, cutoff);
  const std::size_t n = Y.sites() * 4;
  std::vector<cd> e(n, 0.0), ye(n), yye(n);
  // PYP is Hermitian, so <e, (PYP)^3 e> = <PYP e, PYP (PYP e)>.
  double raw = 0.0;
  for (std::size_t site : Y.box())
    for (int c = 0; c < 4; ++c) {
      e[4 * site + c] = 1.0;
      Y.apply(e, ye);
      Y.apply(ye, yye);
      e[4 * site + c] = 0.0;
      cd t = 0.0;
      for (std::size_t i : Y.box())
        for (int d = 0; d < 4; ++d) t += std::conj(ye[4 * i + d]) * yye[4 * i + d];
      raw += t.real();
    }
  PairingResult r;
  r.raw = raw;
  r.cutoff = cutoff;
  r.calibrated = -raw / 8.0;
  finish(r, 0.25, check_residue);
  return r;
}

}  // namespace topo
