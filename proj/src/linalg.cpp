#include "topo/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace topo {

double default_tol(const CMatrix& a) {
  double nrm = a.size() ? a.norm() : 0.0;
  return 1e-9 * std::max(1.0, nrm);
}

double hermitian_deviation(const CMatrix& a) {
  if (a.rows() != a.cols()) return INFINITY;
  return a.size() ? (a - a.adjoint()).cwiseAbs().maxCoeff() : 0.0;
}

double unitary_deviation(const CMatrix& a) {
  if (a.rows() != a.cols()) return INFINITY;
  if (!a.size()) return 0.0;
  CMatrix d = a.adjoint() * a - CMatrix::Identity(a.rows(), a.cols());
  return d.cwiseAbs().maxCoeff();
}

double skew_deviation(const CMatrix& a) {
  if (a.rows() != a.cols()) return INFINITY;
  return a.size() ? (a + a.transpose()).cwiseAbs().maxCoeff() : 0.0;
}

static double pick_tol(const CMatrix& a, double tol) { return tol < 0 ? default_tol(a) : tol; }

bool is_hermitian(const CMatrix& a, double tol) { return hermitian_deviation(a) <= pick_tol(a, tol); }
bool is_unitary(const CMatrix& a, double tol) { return unitary_deviation(a) <= pick_tol(a, tol); }
bool is_skew_symmetric(const CMatrix& a, double tol) { return skew_deviation(a) <= pick_tol(a, tol); }

EigenSystem eigh(const CMatrix& h) {
  double dev = hermitian_deviation(h);
  if (!(dev <= default_tol(h)))
    validation_error("NonHermitian", "matrix is not Hermitian", {{"deviation", dev}});
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  EigenSystem out{es.eigenvalues(), es.eigenvectors()};
  for (Eigen::Index c = 0; c < out.vectors.cols(); ++c) {
    auto col = out.vectors.col(c);
    double big = col.cwiseAbs().maxCoeff();
    // First entry within rounding of the maximum, so near-ties resolve the same way every run.
    Eigen::Index at = 0;
    while (std::abs(col(at)) < big * (1.0 - 1e-9)) ++at;
    cd ph = std::conj(col(at)) / std::abs(col(at));
    col *= ph;
    col(at) = cd(col(at).real(), 0.0);
  }
  return out;
}

cd pfaffian(const CMatrix& a_in) {
  const Eigen::Index n = a_in.rows();
  if (n != a_in.cols()) validation_error("NotSkewSymmetric", "matrix is not square");
  if (n % 2) validation_error("OddDimension", "Pfaffian needs even dimension", {{"dim", n}});
  double dev = skew_deviation(a_in);
  if (!(dev <= default_tol(a_in)))
    validation_error("NotSkewSymmetric", "matrix is not skew-symmetric", {{"deviation", dev}});
  if (n == 0) return 1.0;

  CMatrix a = a_in;
  cd pf = 1.0;
  for (Eigen::Index k = 0; k + 1 < n; k += 2) {
    Eigen::Index kp;
    a.col(k).tail(n - k - 1).cwiseAbs().maxCoeff(&kp);
    kp += k + 1;
    if (kp != k + 1) {
      a.row(k + 1).swap(a.row(kp));
      a.col(k + 1).swap(a.col(kp));
      pf = -pf;
    }
    if (a(k + 1, k) == cd(0.0)) return 0.0;
    pf *= a(k, k + 1);
    if (k + 2 < n) {
      const Eigen::Index m = n - k - 2;
      CVector tau = a.row(k).tail(m).transpose() / a(k, k + 1);
      CVector col = a.col(k + 1).tail(m);
      a.bottomRightCorner(m, m) += tau * col.transpose() - col * tau.transpose();
    }
  }
  return pf;
}

int pfaffian_sign(const CMatrix& a, double min_magnitude) {
  cd pf = pfaffian(a);
  if (std::abs(pf) <= min_magnitude)
    numerical_error("PfaffianNearZero", "Pfaffian too small to carry a sign", {{"magnitude", std::abs(pf)}});
  return pf.real() >= 0 ? 1 : -1;
}

std::vector<double> unitary_phases(const CMatrix& u) {
  Eigen::ComplexEigenSolver<CMatrix> es(u, false);
  std::vector<double> out;
  out.reserve(u.rows());
  for (Eigen::Index i = 0; i < u.rows(); ++i) out.push_back(std::arg(es.eigenvalues()(i)));
  std::sort(out.begin(), out.end());
  return out;
}

CMatrix polar_unitary(const CMatrix& m) {
  Eigen::JacobiSVD<CMatrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

double wrap_angle(double a) {
  double r = std::remainder(a, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

}  // namespace topo
