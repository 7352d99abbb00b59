#pragma once
// Dense helpers on top of Eigen types. Matrix products in the exponentials
// route through qrsim::kernels.

#include <Eigen/Dense>
#include <complex>

namespace qrsim::linalg {

using cxd = std::complex<double>;

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);
Eigen::MatrixXd kron_real(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

double fro_norm(const Eigen::MatrixXcd& a);

// A*B - B*A
Eigen::MatrixXcd commutator(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

// (A + A^dag)/2 in place
void hermitize(Eigen::MatrixXcd& a);

// exp(factor * H) for Hermitian H, via eigendecomposition
Eigen::MatrixXcd expm_hermitian(const Eigen::MatrixXcd& h, cxd factor);

// exp(-i H t) for Hermitian H
Eigen::MatrixXcd unitary_of(const Eigen::MatrixXcd& h, double t);

// exp(A) for a general square matrix: Pade-13 with scaling and squaring
Eigen::MatrixXcd expm(const Eigen::MatrixXcd& a);

// C = A*B through the kernel path
Eigen::MatrixXcd mul(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

} // namespace qrsim::linalg
