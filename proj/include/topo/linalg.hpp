#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "topo/error.hpp"

namespace topo {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

struct EigenSystem {
  RVector values;   // ascending
  CMatrix vectors;  // columns, largest-modulus entry real positive
};

// Default structural tolerance: 1e-9 * max(1, ||A||).
double default_tol(const CMatrix& a);

double hermitian_deviation(const CMatrix& a);
double unitary_deviation(const CMatrix& a);
double skew_deviation(const CMatrix& a);

bool is_hermitian(const CMatrix& a, double tol = -1.0);
bool is_unitary(const CMatrix& a, double tol = -1.0);
bool is_skew_symmetric(const CMatrix& a, double tol = -1.0);

// Throws NonHermitian when the input fails the symmetry check.
EigenSystem eigh(const CMatrix& h);

// Parlett-Reid style tridiagonalization with partial pivoting.
// Throws OddDimension / NotSkewSymmetric.
cd pfaffian(const CMatrix& a);

// Sign of a real Pfaffian. Throws PfaffianNearZero when |pf| <= min_magnitude.
int pfaffian_sign(const CMatrix& a, double min_magnitude = 1e-10);

// Eigenphases of a unitary matrix, each in (-pi, pi].
std::vector<double> unitary_phases(const CMatrix& u);

// Closest unitary in Frobenius norm (polar factor).
CMatrix polar_unitary(const CMatrix& m);

// Sum with a fixed pairwise tree so results do not depend on evaluation order.
double pairwise_sum(const double* x, std::size_t n);
inline double pairwise_sum(const std::vector<double>& x) { return pairwise_sum(x.data(), x.size()); }

// Principal value of an angle difference, in (-pi, pi].
double wrap_angle(double a);

}  // namespace topo
